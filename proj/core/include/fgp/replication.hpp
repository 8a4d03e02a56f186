#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fgp/generating_function.hpp"
#include "fgp/market.hpp"

namespace fgp {

enum class DerivativeBackend { analytic_if_available, finite_difference };

struct PdeSample {
    std::vector<double> x; // one entry per argument of the tested function
    double t = 0.0;
};

// Residual of the generalized Black-Scholes equation
//   1/2 sum sigma_ij x_i x_j D_ij V + D_t V + gamma_0 (sum x_k D_k V - V) = 0
// normalized by V so tolerances are scale-free. The diffusion sum runs over
// the risky arguments; the gamma_0 term runs over every argument and is
// analytically zero for degree-1 functions (computed anyway as a check).
struct PdeResidualReport {
    std::vector<PdeSample> samples;
    std::vector<double> residuals; // normalized by V(x, t)
    double max_abs = 0.0;
    double tolerance = 0.0;
    bool replicable = false;
    bool analytic_backend = false;

    nlohmann::json to_json() const;
};

PdeResidualReport pde_residual(const GeneratingFunction& f, const CovarianceView& cov,
                               double gamma0, std::span<const PdeSample> samples, double tolerance,
                               DerivativeBackend backend = DerivativeBackend::analytic_if_available);

// Classical closed forms. All of them return exact terminal values at
// t = expiry instead of evaluating the singular z formulas.
struct BsQuote {
    double x = 0.0;
    double strike = 0.0;
    double rate = 0.0;
    double sigma = 0.0;
    double t = 0.0;
    double expiry = 0.0;
    double z0 = 0.0;
    double z1 = 0.0;
    double price = 0.0;
    double delta = 0.0;
};

BsQuote bs_call(double x, double strike, double rate, double sigma, double t, double expiry);

// N(z0) x + (1 - N(z1)) K with the rate folded to zero; terminal value x v K.
double bs_shifted_claim(double x, double strike, double sigma, double t, double expiry);

// N(z0h) x + (1 - N(z1h)) K x0; terminal value x v (K x0).
double homogenized_call(double x0, double x, double strike, double sigma, double t, double expiry);

// sum_i e^{(p_i - p_i^2) s_i^2 (t - T)/2} x_i^{p_i}.
double power_sum_solution(std::span<const double> p, std::span<const double> sigma,
                          std::span<const double> x, double t, double expiry);

// Gaussian-convolution solution of the 1-d heat equation
// du/dtau = (sigma^2/2) d2u/dy2 with u(., 0) = terminal: trapezoid on
// z in [y - 10 s, y + 10 s], s = sigma sqrt(tau), 4001 nodes, interval count
// doubled until the relative change is below 1e-8. Serves as an independent
// oracle for the closed forms.
double heat_kernel_solve_1d(const std::function<double(double)>& terminal, double sigma,
                            double tau, double y);

// Single-asset generating function backed by the heat-kernel quadrature in
// the log variable y = log x + sigma^2 t / 2; numeric step-1 fallback for
// claims without a closed form. Derivatives come from the FD fallback.
GeneratingFunction make_quadrature_claim(std::function<double(double)> terminal, double sigma,
                                         double expiry, std::string name);

// European option-pricing problem: terminal value function (builtin
// descriptor evaluated at t = T), driving market, and riskless asset
// normalized to X_0(T) = 1.
struct ClaimProblem {
    nlohmann::json claim_spec;
    MarketModel market;
    double horizon = 0.0;

    void validate() const;
    static ClaimProblem from_json(const nlohmann::json& j);
};

struct ThreeStepOptions {
    double tolerance = 1e-6;    // analytic backend
    double fd_tolerance = 1e-4; // finite-difference backend
    DerivativeBackend backend = DerivativeBackend::analytic_if_available;
    int sample_paths = 2;
    int samples_per_path = 16;
    std::uint64_t seed = 2718;
};

struct ThreeStepResult {
    GeneratingFunction claim_function; // Vhat, arity n+1
    PdeResidualReport step1_report;    // V on discounted samples, gamma_0 = 0
    PdeResidualReport lifted_report;   // Vhat on (X_0, X) samples
};

// Step 1: verify the supplied solution is replicable for the discounted
// market (gamma_0 = 0 equation, terminal value matching the claim).
// Step 2: homogenize. Step 3: verify the lift is replicable for
// (X_0, X_1, ..., X_n). Rejects with diagnostics if step 1 fails.
ThreeStepResult three_step_price(const ClaimProblem& problem, const GeneratingFunction& step1,
                                 const ThreeStepOptions& opts = {});

} // namespace fgp
