#pragma once

#include <cstdint>

namespace fgp {

// Counter-based SplitMix64 stream, keyed by (seed, stream). One stream per
// simulated path means paths can be generated in any order, in parallel,
// without overlap, and adding paths never perturbs existing ones.
//
// Gaussian draws are pinned to the inverse-CDF method (AS 241) so that a
// path is a pure, bit-exact function of (model, grid, seed, stream).
class PathRng {
  public:
    explicit PathRng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();

    // Uniform strictly inside (0,1).
    double next_uniform();

    double next_gaussian();

  private:
    std::uint64_t state_;
};

} // namespace fgp
