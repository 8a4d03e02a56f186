#include "fgp/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "fgp/errors.hpp"

namespace fgp {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void append_g17(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

void check_bound(double w, double bound, const std::string& name, double t) {
    if (!std::isfinite(w) || std::abs(w) > bound)
        throw WeightBoundError(name + ": weight " + std::to_string(w) + " at t=" +
                               std::to_string(t) + " exceeds bound " + std::to_string(bound));
}

// Arguments of f at node k: (X_0, X) when f has the riskless slot,
// otherwise the risky prices alone.
std::vector<double> args_at(const GeneratingFunction& f, const PricePath& path, int k) {
    const int n = path.assets();
    if (f.arity() == n) return path.prices_at(k);
    std::vector<double> a(n + 1);
    a[0] = path.riskless[k];
    for (int i = 0; i < n; ++i) a[i + 1] = path.price(k, i);
    return a;
}

int riskless_offset(const GeneratingFunction& f, const PricePath& path) {
    const int n = path.assets();
    if (f.arity() == n) return 0;
    if (f.arity() == n + 1) return 1;
    throw DomainError(f.name() + ": arity " + std::to_string(f.arity()) +
                      " does not match a " + std::to_string(n) + "-asset path");
}

// Market-level weights (pi_0, pi_1..pi_n) from the argument-level vector.
WeightVector to_market_weights(const WeightVector& w, int offset) {
    if (offset == 0) return w;
    WeightVector out;
    out.t = w.t;
    out.riskless = w.risky[0] + w.riskless;
    out.risky.assign(w.risky.begin() + 1, w.risky.end());
    return out;
}

} // namespace

WeightVector weights_at(const GeneratingFunction& f, std::span<const double> x, double t,
                        double weight_bound) {
    WeightVector w;
    w.t = t;
    if (auto closed = f.closed_form_weights(x, t)) {
        w.risky = std::move(*closed);
    } else {
        const double v = f.value(x, t);
        const auto grad = f.gradient(x, t);
        w.risky.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) w.risky[i] = x[i] * grad[i] / v;
        if (f.homogeneity() == Homogeneity::degree_one) {
            // fold the numerical slack into the dominant slot so the
            // riskless weight is exactly zero, as degree 1 demands
            double s = 0.0;
            std::size_t top = 0;
            for (std::size_t i = 0; i < w.risky.size(); ++i) {
                s += w.risky[i];
                if (std::abs(w.risky[i]) > std::abs(w.risky[top])) top = i;
            }
            w.risky[top] += 1.0 - s;
        }
    }
    if (f.homogeneity() == Homogeneity::degree_one) {
        w.riskless = 0.0;
    } else {
        double s = 0.0;
        for (double wi : w.risky) s += wi;
        w.riskless = 1.0 - s;
    }
    for (double wi : w.risky) check_bound(wi, weight_bound, f.name(), t);
    check_bound(w.riskless, weight_bound, f.name(), t);
    return w;
}

double excess_growth(const WeightVector& w, const CovarianceView& cov, double t) {
    return excess_growth_rate(w.risky, cov.at(t));
}

double PortfolioTrajectory::max_decomposition_gap() const {
    const double offset = log_value.front() - log_generating.front();
    double gap = 0.0;
    for (int k = 0; k < nodes(); ++k)
        gap = std::max(gap,
                       std::abs(log_value[k] - log_generating[k] - drift_analytic[k] - offset));
    return gap;
}

void PortfolioTrajectory::write_csv(std::ostream& os) const {
    const int n = static_cast<int>(weights.front().risky.size());
    std::string line = "t,pi0";
    for (int i = 1; i <= n; ++i) line += ",pi" + std::to_string(i);
    line += ",logZ,phi_analytic,phi_residual,egr\n";
    os << line;
    for (int k = 0; k < nodes(); ++k) {
        line.clear();
        append_g17(line, times[k]);
        line += ',';
        append_g17(line, weights[k].riskless);
        for (double wi : weights[k].risky) {
            line += ',';
            append_g17(line, wi);
        }
        line += ',';
        append_g17(line, log_value[k]);
        line += ',';
        append_g17(line, drift_analytic[k]);
        line += ',';
        append_g17(line, drift_residual[k]);
        line += ',';
        append_g17(line, excess_growth[k]);
        line += '\n';
        os << line;
    }
}

PortfolioTrajectory integrate_value(const GeneratingFunction& f, const PricePath& path,
                                    const CovarianceView& cov, const EngineOptions& opts) {
    const int n = path.assets();
    const int m = path.steps();
    const int offset = riskless_offset(f, path);
    const double dt = path.grid.dt();
    const bool smooth = f.smoothness() == Smoothness::smooth;

    PortfolioTrajectory traj;
    traj.analytic_drift_valid = smooth;
    traj.times.resize(m + 1);
    traj.weights.resize(m + 1);
    traj.log_value.resize(m + 1);
    traj.log_generating.resize(m + 1);
    traj.drift_analytic.assign(m + 1, smooth ? 0.0 : kNan);
    traj.drift_residual.resize(m + 1);
    traj.excess_growth.resize(m + 1);

    const auto args0 = args_at(f, path, 0);
    traj.times[0] = path.time(0);
    traj.log_generating[0] = std::log(f.value(args0, 0.0));
    traj.log_value[0] = opts.initial_log_value.value_or(traj.log_generating[0]);
    traj.drift_residual[0] = 0.0;
    if (smooth) traj.drift_analytic[0] = 0.0;

    for (int k = 0; k < m; ++k) {
        const double t = path.time(k);
        const auto args = args_at(f, path, k);
        const auto w_args = weights_at(f, args, t, opts.weight_bound);
        const auto w = to_market_weights(w_args, offset);
        traj.weights[k] = w;
        traj.weights[k].t = t;
        traj.excess_growth[k] = excess_growth(w, cov, t);

        // left-point Euler for Eq-style log dynamics: weights frozen over
        // [t_k, t_{k+1})
        double dlogz = traj.excess_growth[k] * dt;
        dlogz += w.riskless * (std::log(path.riskless[k + 1]) - std::log(path.riskless[k]));
        for (int i = 0; i < n; ++i)
            dlogz += w.risky[i] * (path.log_prices(k + 1, i) - path.log_prices(k, i));
        traj.log_value[k + 1] = traj.log_value[k] + dlogz;

        if (smooth) {
            const double v = f.value(args, t);
            const Matrix h = f.hessian(args, t);
            const Matrix& sigma = cov.at(t);
            double quad = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    quad += h(i + offset, j + offset) / v * args[i + offset] * args[j + offset] *
                            sigma(i, j);
            const double dtv = f.time_derivative(args, t) / v;
            const double gamma0 =
                (std::log(path.riskless[k + 1]) - std::log(path.riskless[k])) / dt;
            // Theorem-1 drift: the gamma_0 term multiplies the riskless
            // complement of f's own argument weights and vanishes for
            // degree-1 functions
            const double dphi = (-0.5 * quad - dtv + gamma0 * w_args.riskless) * dt;
            traj.drift_analytic[k + 1] = traj.drift_analytic[k] + dphi;
        }

        const double t_next = path.time(k + 1);
        traj.times[k + 1] = t_next;
        traj.log_generating[k + 1] = std::log(f.value(args_at(f, path, k + 1), t_next));
        traj.drift_residual[k + 1] = traj.log_value[k + 1] - traj.log_generating[k + 1] -
                                     (traj.log_value[0] - traj.log_generating[0]);
        if (!std::isfinite(traj.log_value[k + 1]))
            throw SimulationError(f.name() + ": non-finite portfolio value at node " +
                                  std::to_string(k + 1));
    }
    traj.weights[m] = traj.weights[m - 1];
    traj.weights[m].t = path.time(m);
    traj.excess_growth[m] = traj.excess_growth[m - 1];
    return traj;
}

std::vector<double> integrate_value_arithmetic(const GeneratingFunction& f, const PricePath& path,
                                               const EngineOptions& opts) {
    const int n = path.assets();
    const int m = path.steps();
    const int offset = riskless_offset(f, path);

    std::vector<double> z(m + 1);
    const auto args0 = args_at(f, path, 0);
    z[0] = std::exp(opts.initial_log_value.value_or(std::log(f.value(args0, 0.0))));

    for (int k = 0; k < m; ++k) {
        const double t = path.time(k);
        const auto args = args_at(f, path, k);
        const auto w = to_market_weights(weights_at(f, args, t, opts.weight_bound), offset);
        double rel = w.riskless * (path.riskless[k + 1] / path.riskless[k] - 1.0);
        for (int i = 0; i < n; ++i)
            rel += w.risky[i] * (std::exp(path.log_prices(k + 1, i) - path.log_prices(k, i)) - 1.0);
        z[k + 1] = z[k] * (1.0 + rel);
        if (!(z[k + 1] > 0.0) || !std::isfinite(z[k + 1]))
            throw SimulationError(f.name() + ": arithmetic value nonpositive at node " +
                                  std::to_string(k + 1));
    }
    return z;
}

double decomposition_check(const GeneratingFunction& f, const PricePath& path,
                           const CovarianceView& cov, const EngineOptions& opts) {
    if (f.smoothness() != Smoothness::smooth)
        throw DifferentiationError(f.name() + ": decomposition check needs the analytic drift");
    return integrate_value(f, path, cov, opts).max_decomposition_gap();
}

std::vector<double> local_time_drift_check(const GeneratingFunction& max_fn, const PricePath& path,
                                           const CovarianceView& cov) {
    if (path.assets() != 2 || max_fn.arity() != 2)
        throw DomainError("local_time_drift_check: needs a 2-asset path and the max builtin");
    return integrate_value(max_fn, path, cov).drift_residual;
}

} // namespace fgp
