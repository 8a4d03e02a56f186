#include "fgp/rng.hpp"

#include "fgp/normal.hpp"

namespace fgp {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

PathRng::PathRng(std::uint64_t seed, std::uint64_t stream)
    : state_(mix64(mix64(seed) + stream * kGolden)) {}

std::uint64_t PathRng::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double PathRng::next_uniform() {
    // 53 mantissa bits, offset by half an ulp so 0 is unreachable.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double PathRng::next_gaussian() {
    return normal_quantile(next_uniform());
}

} // namespace fgp
