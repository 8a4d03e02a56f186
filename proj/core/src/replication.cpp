#include "fgp/replication.hpp"

#include <cmath>
#include <utility>

#include "fgp/builtins.hpp"
#include "fgp/errors.hpp"
#include "fgp/normal.hpp"

namespace fgp {

namespace {

std::pair<double, double> bs_z(double forward_ratio, double vol) {
    const double z0 = (std::log(forward_ratio) + 0.5 * vol * vol) / vol;
    return {z0, z0 - vol};
}

} // namespace

nlohmann::json PdeResidualReport::to_json() const {
    nlohmann::json samples_json = nlohmann::json::array();
    for (std::size_t k = 0; k < samples.size(); ++k)
        samples_json.push_back({{"x", samples[k].x}, {"t", samples[k].t}, {"residual", residuals[k]}});
    return {{"samples", samples_json},
            {"max_abs_residual", max_abs},
            {"tolerance", tolerance},
            {"backend", analytic_backend ? "analytic" : "finite_difference"},
            {"verdict", replicable ? "replicable" : "not_replicable"}};
}

PdeResidualReport pde_residual(const GeneratingFunction& f, const CovarianceView& cov,
                               double gamma0, std::span<const PdeSample> samples, double tolerance,
                               DerivativeBackend backend) {
    const int arity = f.arity();
    const int n = cov.assets();
    const int offset = arity - n;
    if (offset != 0 && offset != 1)
        throw DomainError(f.name() + ": arity " + std::to_string(arity) +
                          " does not match a " + std::to_string(n) + "-asset covariance");

    const bool analytic =
        backend == DerivativeBackend::analytic_if_available && f.has_analytic_derivatives();

    PdeResidualReport report;
    report.samples.assign(samples.begin(), samples.end());
    report.residuals.reserve(samples.size());
    report.tolerance = tolerance;
    report.analytic_backend = analytic;

    for (const auto& s : samples) {
        const double v = f.value(s.x, s.t);
        const Matrix h = analytic ? f.hessian(s.x, s.t) : hessian_fd(f, s.x, s.t);
        const auto grad = analytic ? f.gradient(s.x, s.t) : gradient_fd(f, s.x, s.t);
        const double dtv = analytic ? f.time_derivative(s.x, s.t) : dt_fd(f, s.x, s.t);

        double diffusion = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                diffusion += cov(i, j, s.t) * s.x[i + offset] * s.x[j + offset] *
                             h(i + offset, j + offset);
        double euler = -v;
        for (int a = 0; a < arity; ++a) euler += s.x[a] * grad[a];

        const double residual = (0.5 * diffusion + dtv + gamma0 * euler) / v;
        report.residuals.push_back(residual);
        report.max_abs = std::max(report.max_abs, std::abs(residual));
    }
    report.replicable = report.max_abs < tolerance;
    return report;
}

BsQuote bs_call(double x, double strike, double rate, double sigma, double t, double expiry) {
    if (!(x > 0.0) || !(strike > 0.0) || !(sigma > 0.0))
        throw DomainError("bs_call: price, strike and sigma must be positive");
    if (!(t <= expiry)) throw DomainError("bs_call: t must not exceed expiry");

    BsQuote q;
    q.x = x;
    q.strike = strike;
    q.rate = rate;
    q.sigma = sigma;
    q.t = t;
    q.expiry = expiry;

    const double tau = expiry - t;
    const double vol = sigma * std::sqrt(tau);
    const double kd = strike * std::exp(rate * (t - expiry));
    if (!(vol > 0.0)) {
        q.price = std::max(x - strike, 0.0);
        q.delta = x > strike ? 1.0 : (x < strike ? 0.0 : 0.5);
        q.z0 = q.z1 = 0.0;
        return q;
    }
    const auto [z0, z1] = bs_z(x / kd, vol);
    q.z0 = z0;
    q.z1 = z1;
    q.price = normal_cdf(z0) * x - normal_cdf(z1) * kd;
    q.delta = normal_cdf(z0);
    return q;
}

double bs_shifted_claim(double x, double strike, double sigma, double t, double expiry) {
    if (!(x > 0.0) || !(strike > 0.0) || !(sigma > 0.0))
        throw DomainError("bs_shifted_claim: price, strike and sigma must be positive");
    if (!(t <= expiry)) throw DomainError("bs_shifted_claim: t must not exceed expiry");
    const double vol = sigma * std::sqrt(expiry - t);
    if (!(vol > 0.0)) return std::max(x, strike);
    const auto [z0, z1] = bs_z(x / strike, vol);
    return normal_cdf(z0) * x + (1.0 - normal_cdf(z1)) * strike;
}

double homogenized_call(double x0, double x, double strike, double sigma, double t, double expiry) {
    if (!(x0 > 0.0)) throw DomainError("homogenized_call: x0 must be positive");
    if (!(x > 0.0) || !(strike > 0.0) || !(sigma > 0.0))
        throw DomainError("homogenized_call: price, strike and sigma must be positive");
    if (!(t <= expiry)) throw DomainError("homogenized_call: t must not exceed expiry");
    const double vol = sigma * std::sqrt(expiry - t);
    if (!(vol > 0.0)) return std::max(x, strike * x0);
    const auto [z0, z1] = bs_z(x / (strike * x0), vol);
    return normal_cdf(z0) * x + (1.0 - normal_cdf(z1)) * strike * x0;
}

double power_sum_solution(std::span<const double> p, std::span<const double> sigma,
                          std::span<const double> x, double t, double expiry) {
    if (p.size() != sigma.size() || p.size() != x.size())
        throw DomainError("power_sum_solution: p, sigma and x must have matching sizes");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double alpha = (p[i] - p[i] * p[i]) * sigma[i] * sigma[i] / 2.0;
        s += std::exp(alpha * (t - expiry)) * std::pow(x[i], p[i]);
    }
    return s;
}

double heat_kernel_solve_1d(const std::function<double(double)>& terminal, double sigma,
                            double tau, double y) {
    if (!(sigma > 0.0)) throw DomainError("heat_kernel_solve_1d: sigma must be positive");
    if (tau < 0.0) throw DomainError("heat_kernel_solve_1d: tau must be nonnegative");

    const double spread = sigma * std::sqrt(tau);
    if (!(spread > 0.0)) return terminal(y); // kernel collapses to a delta

    const double lo = y - 10.0 * spread;
    const double hi = y + 10.0 * spread;
    const double norm = 1.0 / (spread * std::sqrt(2.0 * 3.14159265358979323846));

    auto trapezoid = [&](int intervals) {
        const double step = (hi - lo) / intervals;
        double acc = 0.0;
        for (int k = 0; k <= intervals; ++k) {
            const double z = lo + step * k;
            const double u = (z - y) / spread;
            double w = std::exp(-0.5 * u * u) * terminal(z);
            if (k == 0 || k == intervals) w *= 0.5;
            acc += w;
        }
        return acc * step * norm;
    };

    int intervals = 4000;
    double prev = trapezoid(intervals);
    for (int round = 0; round < 6; ++round) {
        intervals *= 2;
        const double next = trapezoid(intervals);
        const double change = std::abs(next - prev);
        if (change <= 1e-8 * std::max(std::abs(next), 1e-300)) return next;
        prev = next;
    }
    throw QuadratureError("heat_kernel_solve_1d: no convergence after doubling to " +
                          std::to_string(intervals) + " intervals");
}

namespace {

class QuadratureClaimImpl final : public GeneratingFunction::Impl {
  public:
    QuadratureClaimImpl(std::function<double(double)> terminal, double sigma, double expiry,
                        std::string name)
        : terminal_(std::move(terminal)), sigma_(sigma), expiry_(expiry), name_(std::move(name)) {
        if (!(sigma_ > 0.0)) throw ConfigError("quadrature claim: sigma must be positive");
        if (!(expiry_ > 0.0)) throw ConfigError("quadrature claim: expiry must be positive");
    }

    std::string name() const override { return name_; }
    int arity() const override { return 1; }
    Homogeneity homogeneity() const override { return Homogeneity::unknown; }
    double expiry() const override { return expiry_; }

    double value(std::span<const double> x, double t) const override {
        const double y = std::log(x[0]) + 0.5 * sigma_ * sigma_ * t;
        const double tau = expiry_ - t;
        auto payoff = [this](double z) {
            return terminal_(std::exp(z - 0.5 * sigma_ * sigma_ * expiry_));
        };
        return heat_kernel_solve_1d(payoff, sigma_, tau, y);
    }

  private:
    std::function<double(double)> terminal_;
    double sigma_;
    double expiry_;
    std::string name_;
};

std::vector<PdeSample> path_samples(const MarketModel& model, double horizon, int paths,
                                    int per_path, std::uint64_t seed, bool discounted,
                                    bool with_riskless_slot) {
    std::vector<PdeSample> samples;
    const TimeGrid grid{horizon, 64};
    for (int p = 0; p < paths; ++p) {
        PricePath path = simulate_path(model, grid, seed, static_cast<std::uint64_t>(p));
        if (discounted) path = discount_path(path);
        const int stride = std::max(1, grid.steps / per_path);
        for (int k = 0; k < grid.steps; k += stride) {
            PdeSample s;
            s.t = path.time(k);
            if (with_riskless_slot) {
                s.x.push_back(path.riskless[k]);
            }
            for (int i = 0; i < model.n; ++i) s.x.push_back(path.price(k, i));
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

} // namespace

GeneratingFunction make_quadrature_claim(std::function<double(double)> terminal, double sigma,
                                         double expiry, std::string name) {
    return GeneratingFunction(
        std::make_shared<QuadratureClaimImpl>(std::move(terminal), sigma, expiry, std::move(name)));
}

void ClaimProblem::validate() const {
    market.validate();
    if (!(horizon > 0.0)) throw ConfigError("claim_problem.horizon: must be positive");
    const double x0_at_expiry =
        market.initial_riskless * std::exp(market.riskless_rate * horizon);
    if (std::abs(x0_at_expiry - 1.0) > 1e-9)
        throw ConfigError("claim_problem.market: riskless leg must satisfy X0(T) = 1, got X0(T) = " +
                          std::to_string(x0_at_expiry));
}

ClaimProblem ClaimProblem::from_json(const nlohmann::json& j) {
    ClaimProblem p;
    try {
        p.claim_spec = j.at("claim");
        p.market = MarketModel::from_json(j.at("market"));
        p.horizon = j.at("horizon").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("claim_problem: ") + e.what());
    }
    p.validate();
    return p;
}

ThreeStepResult three_step_price(const ClaimProblem& problem, const GeneratingFunction& step1,
                                 const ThreeStepOptions& opts) {
    problem.validate();
    if (step1.arity() != problem.market.n)
        throw PipelineError("three_step_price: step-1 solution has arity " +
                            std::to_string(step1.arity()) + ", market has " +
                            std::to_string(problem.market.n) + " assets");

    const CovarianceView cov = covariance(problem.market);
    const bool analytic = opts.backend == DerivativeBackend::analytic_if_available &&
                          step1.has_analytic_derivatives();
    const double tol = analytic ? opts.tolerance : opts.fd_tolerance;

    // Step 1: replicable for (1, X0^{-1} X1, ..., X0^{-1} Xn)
    const auto discounted = path_samples(problem.market, problem.horizon, opts.sample_paths,
                                         opts.samples_per_path, opts.seed, true, false);
    const auto step1_report = pde_residual(step1, cov, 0.0, discounted, tol, opts.backend);

    // terminal value must match the claim
    {
        const auto terminal = builtins::from_json(
            problem.claim_spec,
            builtins::BuiltinContext{cov.at(0.0), problem.horizon});
        for (const auto& s : discounted) {
            const double want = terminal.value(s.x, problem.horizon);
            const double got = step1.value(s.x, problem.horizon);
            if (std::abs(got - want) > 1e-9 * std::max(1.0, std::abs(want)))
                throw PipelineError("three_step_price: step-1 terminal value " +
                                    std::to_string(got) + " != claim terminal " +
                                    std::to_string(want));
        }
    }

    if (!step1_report.replicable)
        throw PipelineError(
            "three_step_price: step-1 solution is not replicable for the discounted market "
            "(max normalized residual " +
            std::to_string(step1_report.max_abs) + " vs tolerance " + std::to_string(tol) + ")");

    // Step 2: lift to a contingent claim function
    GeneratingFunction lifted = homogenize(step1);

    // Step 3: replicable for (X0, X1, ..., Xn)
    const auto full = path_samples(problem.market, problem.horizon, opts.sample_paths,
                                   opts.samples_per_path, opts.seed, false, true);
    const auto lifted_report =
        pde_residual(lifted, cov, problem.market.riskless_rate, full, tol, opts.backend);
    if (lifted_report.replicable != step1_report.replicable)
        throw PipelineError(
            "three_step_price: replicability of the lift disagrees with step 1 (max residuals " +
            std::to_string(lifted_report.max_abs) + " vs " + std::to_string(step1_report.max_abs) +
            ")");

    return ThreeStepResult{std::move(lifted), step1_report, lifted_report};
}

} // namespace fgp
