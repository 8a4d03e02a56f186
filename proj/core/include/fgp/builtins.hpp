#pragma once

#include <optional>
#include <vector>

#include "json.hpp"

#include "fgp/generating_function.hpp"
#include "fgp/matrix.hpp"

namespace fgp::builtins {

// Weighted geometric mean x_1^{p_1} ... x_n^{p_n}; requires sum p_i = 1.
// Generates the constant-weighted portfolio pi = p.
GeneratingFunction geometric_mean(std::vector<double> p);

// Geometric mean times exp(g* t), with the excess growth rate g* computed
// from the supplied constant covariance at weights p. Replicable for price
// processes with that covariance.
GeneratingFunction corrected_geometric_mean(std::vector<double> p, const Matrix& sigma);

// (x_1^p + ... + x_n^p)^{1/p} for p in (0,1).
GeneratingFunction diversity(int n, double p);

// sum_i x_i + sum_{i != j} e^{s_i^2(t-T)/8} e^{s_j^2(t-T)/8} sqrt(x_i x_j);
// solves the claim PDE for diagonal constant covariance with terminal value
// (sqrt(x_1) + ... + sqrt(x_n))^2.
GeneratingFunction sqrt_claim(std::vector<double> sigma, double expiry);

// z log z - sum x_i log x_i with z = sum x_i (the simplex entropy lifted to
// the positive orthant); needs n >= 2.
GeneratingFunction extended_entropy(int n);

// N(z0) x + (1 - N(z1)) K, the strictly positive Black-Scholes claim with
// terminal value x v K (rate folded to zero).
GeneratingFunction shifted_bs_claim(double strike, double sigma, double expiry);

// Degree-1 lift of the shifted claim: N(z0h) x + (1 - N(z1h)) K x0 over
// arguments (x0, x).
GeneratingFunction homogenized_bs_call(double strike, double sigma, double expiry);

// sum_i e^{(p_i - p_i^2) s_i^2 (t-T)/2} x_i^{p_i}; solves the claim PDE for
// diagonal constant covariance with terminal value sum x_i^{p_i}.
GeneratingFunction power_sum_claim(std::vector<double> p, std::vector<double> sigma, double expiry);

// x_1 v x_2. Non-smooth: value and closed-form indicator weights only,
// ties resolved to asset 1.
GeneratingFunction pairwise_max();

// N(z0) x - N(z1) K e^{r(t-T)}. Positive only for t < expiry; kept for PDE
// cross-checks against the classical closed form.
GeneratingFunction bs_call_claim(double strike, double rate, double sigma, double expiry);

// Raw Gibbs-Shannon entropy -sum x_i log x_i, positive near the unit
// simplex; input for extend_simplex_function.
GeneratingFunction simplex_entropy(int n);

// Optional market context used to fill descriptor fields that the claim
// shares with the experiment (per-asset vols, horizon).
struct BuiltinContext {
    std::optional<Matrix> covariance;
    std::optional<double> horizon;
};

// Construct a builtin from {"kind": ..., ...} descriptors. The name set is
// part of the CLI contract: geometric_mean, corrected_geometric_mean,
// diversity, sqrt_claim, entropy, shifted_bs_claim, homogenized_call,
// power_sum, max, bs_call.
GeneratingFunction from_json(const nlohmann::json& spec, const BuiltinContext& ctx = {});

} // namespace fgp::builtins
