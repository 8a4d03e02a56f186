#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "json.hpp"

#include "fgp/matrix.hpp"

namespace fgp {

// Multi-asset Ito market with log dynamics
//   d log X_i = gamma_i dt + sum_l zeta_{i,l} dW_l,        i = 1..n
//   d log X_0 = gamma_0 dt                                 (riskless leg)
// All coefficients are constant in v1; the per-asset containers leave room
// for time-dependent extensions without a schema change.
struct MarketModel {
    int n = 0;                           // risky assets
    int d = 0;                           // Brownian drivers, d >= n
    std::vector<double> growth;          // gamma_i, size n
    Matrix vol;                          // zeta, n x d
    double riskless_rate = 0.0;          // gamma_0
    std::vector<double> initial_prices;  // x(0), size n, strictly positive
    double initial_riskless = 1.0;       // x_0(0), strictly positive

    void validate() const; // ConfigError naming the offending field

    static MarketModel from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Constant covariance sigma_ij = sum_l zeta_il zeta_jl, exposed as a
// function of time so state-dependent versions can slot in later. The
// riskless asset is handled separately by callers (sigma_{i0} = 0).
class CovarianceView {
  public:
    CovarianceView() = default;
    explicit CovarianceView(Matrix sigma);

    int assets() const { return sigma_.rows(); }
    const Matrix& at(double t) const;
    double operator()(int i, int j, double t = 0.0) const { return at(t)(i, j); }

  private:
    Matrix sigma_;
};

// Excess growth rate, gamma*_pi = (sum pi_i sigma_ii - sum pi_i pi_j sigma_ij)/2,
// over the risky assets only.
double excess_growth_rate(std::span<const double> risky_weights, const Matrix& sigma);

struct TimeGrid {
    double horizon = 0.0; // T
    int steps = 0;        // M

    double dt() const { return horizon / steps; }
    double time(int k) const {
        return k == steps ? horizon : horizon * (static_cast<double>(k) / steps);
    }
};

// One discretized realization of (X_0, X_1, ..., X_n) on a uniform grid.
// Log prices are primary (positivity is structural); the Brownian
// increments are retained so a path is reproducible and refinable.
struct PricePath {
    TimeGrid grid;
    Matrix log_prices;             // (M+1) x n
    std::vector<double> riskless;  // M+1, X_0(t_k)
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    Matrix increments;             // M x d, Brownian increments dW

    int assets() const { return log_prices.cols(); }
    int steps() const { return grid.steps; }
    double time(int k) const { return grid.time(k); }
    double log_price(int k, int i) const { return log_prices(k, i); }
    double price(int k, int i) const;
    std::vector<double> prices_at(int k) const; // (X_1..X_n)

    // header t,X0,X1,...,Xn; 17 significant digits so every double
    // round-trips exactly
    void write_csv(std::ostream& os) const;
    static PricePath read_csv(std::istream& is);
};

// Exact-in-distribution log-Euler step: for constant coefficients the
// scheme samples the true Gaussian law of log X, not an approximation.
PricePath simulate_path(const MarketModel& model, const TimeGrid& grid, std::uint64_t seed,
                        std::uint64_t path_index = 0);

CovarianceView covariance(const MarketModel& model);

// Path of (1, X_0^{-1} X_1, ..., X_0^{-1} X_n): log prices shifted by
// -log X_0, riskless leg identically 1.
PricePath discount_path(const PricePath& path);

// Subsample every factor-th node (bit-exact shared nodes) and merge the
// increment rows; the coarse path sees the same Brownian motion.
PricePath coarsen_path(const PricePath& path, int factor);

} // namespace fgp
