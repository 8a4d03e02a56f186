#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fgp/generating_function.hpp"
#include "fgp/market.hpp"

namespace fgp {

struct WeightVector {
    double t = 0.0;
    double riskless = 0.0;        // pi_0
    std::vector<double> risky;    // pi_1..pi_n

    double sum() const {
        double s = riskless;
        for (double w : risky) s += w;
        return s;
    }
};

struct EngineOptions {
    // |pi_i| past this bound is an error, never a clamp.
    double weight_bound = 1e3;
    // Default initialization Z_pi(0) = V(X(0), 0).
    std::optional<double> initial_log_value;
};

// Weights, log value, analytic drift and residual drift along one path.
// Node k < M carries the weights held over [t_k, t_{k+1}); node M repeats
// the final holding for serialization.
struct PortfolioTrajectory {
    std::vector<double> times;
    std::vector<WeightVector> weights;
    std::vector<double> log_value;        // log Z_pi
    std::vector<double> log_generating;   // log V(X(t), t)
    std::vector<double> drift_analytic;   // Phi, NaN-filled when unavailable
    std::vector<double> drift_residual;   // Phi-hat
    std::vector<double> excess_growth;    // gamma*_pi at the left node
    bool analytic_drift_valid = false;

    int nodes() const { return static_cast<int>(times.size()); }

    // max_k |log Z - log V - Phi| net of the initial offset; pure
    // discretization error, shrinking ~O(dt) under refinement
    double max_decomposition_gap() const;

    // header t,pi0,pi1..pin,logZ,phi_analytic,phi_residual,egr
    void write_csv(std::ostream& os) const;
};

// Theorem-1 weights w_i = x_i D_i f / f over f's arguments, with the
// riskless complement pi_0 = 1 - sum w_i. For degree-1 functions pi_0 is
// forced to exactly 0; residual finite-difference noise in the sum is
// folded into the largest-|w| slot (closed-form weights are kept as-is).
WeightVector weights_at(const GeneratingFunction& f, std::span<const double> x, double t,
                        double weight_bound = 1e3);

double excess_growth(const WeightVector& w, const CovarianceView& cov, double t);

// Left-point Euler integration of d log Z = sum pi_i d log X_i + gamma* dt
// along the path, with the analytic drift accumulated from the generating
// function's derivatives and the residual drift taken from the definition.
// f may take the risky prices (arity n) or the full argument vector
// (X_0, X) (arity n+1, riskless slot first).
PortfolioTrajectory integrate_value(const GeneratingFunction& f, const PricePath& path,
                                    const CovarianceView& cov, const EngineOptions& opts = {});

// Arithmetic-form value series Z_{k+1} = Z_k (1 + sum pi_i dX_i/X_i) using
// the same weights; cross-check for the logarithmic integration.
std::vector<double> integrate_value_arithmetic(const GeneratingFunction& f, const PricePath& path,
                                               const EngineOptions& opts = {});

double decomposition_check(const GeneratingFunction& f, const PricePath& path,
                           const CovarianceView& cov, const EngineOptions& opts = {});

// Residual drift series for the pairwise max on a 2-asset path. The drift
// is minus the accumulated local time, so the series must be non-increasing
// up to discretization noise.
std::vector<double> local_time_drift_check(const GeneratingFunction& max_fn, const PricePath& path,
                                           const CovarianceView& cov);

} // namespace fgp
