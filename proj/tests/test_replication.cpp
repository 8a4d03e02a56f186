#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "fgp/builtins.hpp"
#include "fgp/errors.hpp"
#include "fgp/market.hpp"
#include "fgp/normal.hpp"
#include "fgp/replication.hpp"
#include "fgp/rng.hpp"

using namespace fgp;
namespace bi = fgp::builtins;

namespace {

// frozen oracle: 2 N(0.1) - 1 at twenty digits
constexpr double kAtmCallPrice = 0.079655674554057963;

MarketModel diagonal_market(int n, double sigma, double growth = 0.02, double rate = 0.0) {
    MarketModel m;
    m.n = n;
    m.d = n;
    m.growth.assign(n, growth);
    m.vol = Matrix(n, n);
    for (int i = 0; i < n; ++i) m.vol(i, i) = sigma;
    m.riskless_rate = rate;
    m.initial_prices.assign(n, 1.0);
    m.initial_riskless = 1.0;
    return m;
}

std::vector<PdeSample> sample_grid(int arity, int points, double t_max, std::uint64_t seed) {
    PathRng rng(seed);
    std::vector<PdeSample> samples(points);
    for (auto& s : samples) {
        s.x.resize(arity);
        for (double& xi : s.x) xi = 0.25 * std::pow(16.0, rng.next_uniform());
        s.t = t_max * rng.next_uniform();
    }
    return samples;
}

CovarianceView diag_cov(std::vector<double> sigma) {
    Matrix m(static_cast<int>(sigma.size()), static_cast<int>(sigma.size()));
    for (int i = 0; i < m.rows(); ++i) m(i, i) = sigma[i] * sigma[i];
    return CovarianceView(m);
}

} // namespace

TEST_CASE("square-root claim solves the claim equation, analytically and by differences") {
    const auto f = bi::sqrt_claim({0.2, 0.2, 0.2}, 1.0);
    const auto cov = diag_cov({0.2, 0.2, 0.2});
    const auto samples = sample_grid(3, 50, 0.9, 21);

    const auto analytic = pde_residual(f, cov, 0.0, samples, 1e-6);
    CHECK(analytic.analytic_backend);
    CHECK(analytic.replicable);
    CHECK(analytic.max_abs < 1e-6);

    const auto fd =
        pde_residual(f, cov, 0.0, samples, 1e-4, DerivativeBackend::finite_difference);
    CHECK_FALSE(fd.analytic_backend);
    CHECK(fd.replicable);
    CHECK(fd.max_abs < 1e-4);
}

TEST_CASE("plain geometric mean fails the claim equation under a nonsingular covariance") {
    const auto f = bi::geometric_mean({0.2, 0.3, 0.5});
    const auto cov = diag_cov({0.2, 0.2, 0.2});
    const auto samples = sample_grid(3, 50, 0.9, 22);
    const auto report = pde_residual(f, cov, 0.0, samples, 1e-6);
    CHECK_FALSE(report.replicable);
    double least = 1e9;
    for (double r : report.residuals) least = std::min(least, std::abs(r));
    CHECK(least > 1e-3); // bounded away from zero, not borderline
}

TEST_CASE("the classical call closed form satisfies the classical equation") {
    const double r = 0.05;
    const auto call = bi::bs_call_claim(1.0, r, 0.2, 1.0);
    const auto cov = diag_cov({0.2});
    auto samples = sample_grid(1, 60, 0.9, 23);
    for (auto& s : samples) s.x[0] = 0.5 + 1.5 * (s.x[0] - 0.25) / 3.75; // x in [0.5, 2]
    const auto report = pde_residual(call, cov, r, samples, 1e-6);
    CHECK(report.replicable);
    CHECK(report.max_abs < 1e-6);
}

TEST_CASE("at-the-money quote matches the frozen high-precision value") {
    const BsQuote q = bs_call(1.0, 1.0, 0.0, 0.2, 0.0, 1.0);
    CHECK(q.z0 == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(q.z1 == doctest::Approx(-0.1).epsilon(1e-14));
    CHECK(q.price == doctest::Approx(kAtmCallPrice).epsilon(1e-14));
    CHECK(q.delta == doctest::Approx(0.53982783727702898).epsilon(1e-14));
    CHECK(q.z1 == q.z0 - 0.2);
}

TEST_CASE("deep in-the-money call approaches its intrinsic forward value") {
    const double r = 0.03;
    const BsQuote q = bs_call(100.0, 1.0, r, 0.2, 0.25, 1.0);
    const double intrinsic = 100.0 - std::exp(r * (0.25 - 1.0));
    CHECK(std::abs(q.price - intrinsic) < 1e-10 * 100.0);
    CHECK(q.delta == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("terminal branches return exact payoffs") {
    CHECK(bs_call(1.3, 1.0, 0.05, 0.2, 1.0, 1.0).price == doctest::Approx(0.3));
    CHECK(bs_call(0.7, 1.0, 0.05, 0.2, 1.0, 1.0).price == 0.0);
    CHECK(bs_shifted_claim(0.7, 1.0, 0.2, 1.0, 1.0) == 1.0);
    CHECK(bs_shifted_claim(1.3, 1.0, 0.2, 1.0, 1.0) == 1.3);
    CHECK(homogenized_call(0.9, 0.7, 1.0, 0.2, 1.0, 1.0) == 0.9);
    CHECK(homogenized_call(0.9, 1.3, 1.0, 0.2, 1.0, 1.0) == 1.3);
}

TEST_CASE("the homogenized call at x0 = 1 is the shifted claim, bit for bit") {
    PathRng rng(24);
    for (int trial = 0; trial < 50; ++trial) {
        const double x = 0.25 * std::pow(16.0, rng.next_uniform());
        const double t = 0.95 * rng.next_uniform();
        CHECK(homogenized_call(1.0, x, 1.0, 0.2, t, 1.0) ==
              bs_shifted_claim(x, 1.0, 0.2, t, 1.0));
    }
}

TEST_CASE("call recovery: subtracting K x0 from the lift gives the classical call") {
    const double strike = 1.0;
    const double sigma = 0.2;
    const double r = 0.05;
    PathRng rng(25);
    for (int trial = 0; trial < 50; ++trial) {
        const double x = 0.4 + 2.0 * rng.next_uniform();
        const double t = 0.95 * rng.next_uniform();
        const double x0 = std::exp(r * (t - 1.0));
        const double recovered =
            homogenized_call(x0, x, strike, sigma, t, 1.0) - strike * x0;
        const double direct = bs_call(x, strike, r, sigma, t, 1.0).price;
        CHECK(recovered == doctest::Approx(direct).epsilon(1e-10));
        CHECK(recovered >= 0.0);
    }
}

TEST_CASE("r = 0 call equals the shifted claim minus the strike") {
    PathRng rng(26);
    for (int trial = 0; trial < 30; ++trial) {
        const double x = 0.4 + 2.0 * rng.next_uniform();
        const double t = 0.95 * rng.next_uniform();
        const double call = bs_call(x, 1.0, 0.0, 0.2, t, 1.0).price;
        const double shifted = bs_shifted_claim(x, 1.0, 0.2, t, 1.0);
        CHECK(call == doctest::Approx(shifted - 1.0).epsilon(1e-12));
    }
}

TEST_CASE("delta equals the finite-difference derivative of the price") {
    PathRng rng(27);
    for (int trial = 0; trial < 30; ++trial) {
        const double x = 0.5 + 1.5 * rng.next_uniform();
        const double t = 0.9 * rng.next_uniform();
        const BsQuote q = bs_call(x, 1.0, 0.05, 0.2, t, 1.0);
        const double h = 1e-5 * x;
        const double fd = (bs_call(x + h, 1.0, 0.05, 0.2, t, 1.0).price -
                           bs_call(x - h, 1.0, 0.05, 0.2, t, 1.0).price) /
                          (2.0 * h);
        CHECK(std::abs(q.delta - fd) < 1e-6);
        CHECK(q.delta == normal_cdf(q.z0));
    }
}

TEST_CASE("power sum solution: terminal value, static exponents, single-asset case") {
    const std::vector<double> p{0.5, 2.0};
    const std::vector<double> sigma{0.2, 0.3};
    const std::vector<double> x{1.3, 0.8};
    const double terminal = std::pow(1.3, 0.5) + std::pow(0.8, 2.0);
    CHECK(power_sum_solution(p, sigma, x, 1.0, 1.0) == terminal);

    const std::vector<double> unit_p{0.0, 1.0};
    CHECK(power_sum_solution(unit_p, sigma, x, 0.0, 1.0) ==
          power_sum_solution(unit_p, sigma, x, 1.0, 1.0));

    // n = 1, p = 2, sigma = 0.3, T - t = 1: alpha = (p - p^2) sigma^2 / 2 = -0.09,
    // so the factor is e^{alpha (t - T)} = e^{+0.09}
    const std::vector<double> p1{2.0};
    const std::vector<double> s1{0.3};
    const std::vector<double> x1{1.7};
    CHECK(power_sum_solution(p1, s1, x1, 0.0, 1.0) ==
          doctest::Approx(std::exp(0.09) * 1.7 * 1.7).epsilon(1e-14));
}

TEST_CASE("power sum claim solves the diagonal claim equation") {
    const auto f = bi::power_sum_claim({0.5, 2.0, -0.5}, {0.2, 0.2, 0.2}, 1.0);
    const auto cov = diag_cov({0.2, 0.2, 0.2});
    const auto samples = sample_grid(3, 50, 0.9, 28);
    const auto report = pde_residual(f, cov, 0.0, samples, 1e-6);
    CHECK(report.replicable);
    const auto fd =
        pde_residual(f, cov, 0.0, samples, 1e-4, DerivativeBackend::finite_difference);
    CHECK(fd.replicable);
}

TEST_CASE("heat kernel with tau = 0 returns the terminal sample") {
    const double v = heat_kernel_solve_1d([](double z) { return z * z + 1.0; }, 0.3, 0.0, 1.7);
    CHECK(v == 1.7 * 1.7 + 1.0);
}

TEST_CASE("heat kernel reproduces the exponential moment factors") {
    // E[e^{(y + s sqrt(tau) Z)/2}] = e^{y/2} e^{s^2 tau / 8}
    for (double y : {-1.0, 0.0, 2.0}) {
        const double sigma = 0.25;
        const double tau = 0.7;
        const double quad =
            heat_kernel_solve_1d([](double z) { return std::exp(0.5 * z); }, sigma, tau, y);
        const double closed = std::exp(0.5 * y) * std::exp(sigma * sigma * tau / 8.0);
        CHECK(quad == doctest::Approx(closed).epsilon(1e-6));

        const double quad_full =
            heat_kernel_solve_1d([](double z) { return std::exp(z); }, sigma, tau, y);
        const double closed_full = std::exp(y) * std::exp(sigma * sigma * tau / 2.0);
        CHECK(quad_full == doctest::Approx(closed_full).epsilon(1e-6));
    }
}

TEST_CASE("heat-kernel reconstruction of the square-root claim on a grid") {
    // the two-asset solution decomposes into products of one-dimensional
    // convolutions of e^{z} and e^{z/2} in the log variables
    const double T = 1.0;
    const std::vector<double> sigma{0.2, 0.3};
    const auto closed = bi::sqrt_claim(sigma, T);

    for (int xi = 0; xi < 10; ++xi) {
        const double x1 = 0.25 * std::pow(16.0, xi / 9.0);
        const double x2 = 0.25 * std::pow(16.0, (9 - xi) / 9.0);
        for (int ti = 0; ti < 10; ++ti) {
            const double t = 0.95 * T * ti / 9.0;
            const double tau = T - t;
            double quad = 0.0;
            std::vector<double> half(2);
            for (int i = 0; i < 2; ++i) {
                const double x = (i == 0) ? x1 : x2;
                const double y = std::log(x) + 0.5 * sigma[i] * sigma[i] * t;
                quad += std::exp(-0.5 * sigma[i] * sigma[i] * T) *
                        heat_kernel_solve_1d([](double z) { return std::exp(z); }, sigma[i], tau,
                                             y);
                half[i] = std::exp(-0.25 * sigma[i] * sigma[i] * T) *
                          heat_kernel_solve_1d([](double z) { return std::exp(0.5 * z); },
                                               sigma[i], tau, y);
            }
            quad += 2.0 * half[0] * half[1];
            const std::vector<double> x{x1, x2};
            CHECK(quad == doctest::Approx(closed.value(x, t)).epsilon(1e-4));
        }
    }
}

TEST_CASE("the quadrature-backed claim matches the shifted closed form") {
    const double strike = 1.0;
    const double sigma = 0.2;
    const auto numeric = make_quadrature_claim(
        [strike](double x) { return std::max(x, strike); }, sigma, 1.0, "quadrature_shifted");
    for (double x : {0.5, 0.9, 1.0, 1.4, 2.5}) {
        for (double t : {0.0, 0.4, 0.8}) {
            const std::vector<double> args{x};
            CHECK(numeric.value(args, t) ==
                  doctest::Approx(bs_shifted_claim(x, strike, sigma, t, 1.0)).epsilon(1e-6));
        }
    }
}

TEST_CASE("three-step pricing of the shifted call reproduces the lifted closed form") {
    ClaimProblem problem;
    problem.claim_spec = {{"kind", "shifted_bs_claim"}, {"strike", 1.0}, {"sigma", 0.2}};
    problem.market = diagonal_market(1, 0.2, 0.05, 0.03);
    problem.market.initial_riskless = std::exp(-0.03);
    problem.horizon = 1.0;

    const auto step1 = bi::shifted_bs_claim(1.0, 0.2, 1.0);
    const auto result = three_step_price(problem, step1);
    CHECK(result.step1_report.replicable);
    CHECK(result.lifted_report.replicable);

    const auto& vhat = result.claim_function;
    CHECK(vhat.arity() == 2);
    PathRng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const double x0 = 0.5 + rng.next_uniform();
        const double x = 0.25 * std::pow(16.0, rng.next_uniform());
        const double t = 0.95 * rng.next_uniform();
        const std::vector<double> args{x0, x};
        CHECK(vhat.value(args, t) ==
              doctest::Approx(homogenized_call(x0, x, 1.0, 0.2, t, 1.0)).epsilon(1e-10));
    }
    // terminal value of the lift at x0 = 1 is the shifted payoff x v K
    const std::vector<double> itm{1.0, 1.7};
    const std::vector<double> otm{1.0, 0.6};
    CHECK(vhat.value(itm, 1.0) == 1.7);
    CHECK(vhat.value(otm, 1.0) == 1.0);
}

TEST_CASE("three-step pricing of the power sum matches the paper's lift") {
    ClaimProblem problem;
    problem.claim_spec = {{"kind", "power_sum"},
                          {"p", {0.5, 2.0}},
                          {"sigma", {0.2, 0.3}}};
    problem.market = diagonal_market(2, 0.2, 0.02, 0.0);
    problem.market.vol(1, 1) = 0.3;
    problem.horizon = 1.0;

    const auto step1 = bi::power_sum_claim({0.5, 2.0}, {0.2, 0.3}, 1.0);
    const auto result = three_step_price(problem, step1);
    CHECK(result.step1_report.replicable);
    CHECK(result.lifted_report.replicable);

    const std::vector<double> p{0.5, 2.0};
    const std::vector<double> sigma{0.2, 0.3};
    PathRng rng(32);
    for (int trial = 0; trial < 30; ++trial) {
        const double x0 = 0.5 + rng.next_uniform();
        const std::vector<double> x{0.25 * std::pow(16.0, rng.next_uniform()),
                                    0.25 * std::pow(16.0, rng.next_uniform())};
        const double t = 0.95 * rng.next_uniform();
        double expected = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double alpha = (p[i] - p[i] * p[i]) * sigma[i] * sigma[i] / 2.0;
            expected += std::exp(alpha * (t - 1.0)) * std::pow(x0, 1.0 - p[i]) *
                        std::pow(x[i], p[i]);
        }
        const std::vector<double> args{x0, x[0], x[1]};
        CHECK(result.claim_function.value(args, t) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("three-step pricing of a degree-1 claim is independent of x0") {
    ClaimProblem problem;
    problem.claim_spec = {{"kind", "sqrt_claim"}, {"sigma", {0.2, 0.3}}};
    problem.market = diagonal_market(2, 0.2, 0.02, 0.0);
    problem.market.vol(1, 1) = 0.3;
    problem.horizon = 1.0;

    const auto result = three_step_price(problem, bi::sqrt_claim({0.2, 0.3}, 1.0));
    const std::vector<double> x{1.3, 0.7};
    const double t = 0.4;
    double reference = 0.0;
    for (double x0 : {0.5, 1.0, 2.0}) {
        const std::vector<double> args{x0, x[0], x[1]};
        const double v = result.claim_function.value(args, t);
        if (reference == 0.0) reference = v;
        CHECK(v == doctest::Approx(reference).epsilon(1e-12));
    }
}

TEST_CASE("three-step pricing rejects a non-replicable step-1 input") {
    ClaimProblem problem;
    problem.claim_spec = {{"kind", "geometric_mean"}, {"p", {0.4, 0.6}}};
    problem.market = diagonal_market(2, 0.2, 0.02, 0.0);
    problem.horizon = 1.0;
    CHECK_THROWS_AS(three_step_price(problem, bi::geometric_mean({0.4, 0.6})), PipelineError);
}

TEST_CASE("a claim problem without a unit terminal riskless asset is invalid") {
    ClaimProblem problem;
    problem.claim_spec = {{"kind", "shifted_bs_claim"}, {"strike", 1.0}, {"sigma", 0.2}};
    problem.market = diagonal_market(1, 0.2, 0.05, 0.03); // X0(T) = e^{0.03} != 1
    problem.horizon = 1.0;
    CHECK_THROWS_AS(problem.validate(), ConfigError);
}

TEST_CASE("lifted residuals equal the discounted residuals after normalization") {
    // Lemma-8 algebra: Vhat = x0 V(x/x0) gives R^(x0, x) = x0 R(x/x0), so
    // the V-normalized residuals coincide. Exercised on a deliberately
    // mismatched covariance so both sides are far from zero.
    const auto base = bi::power_sum_claim({0.5, 2.0}, {0.2, 0.3}, 1.0);
    const auto lifted = homogenize(base);
    const auto cov = diag_cov({0.4, 0.25}); // not the claim's own vols
    PathRng rng(33);
    for (int trial = 0; trial < 25; ++trial) {
        const double x0 = 0.5 + rng.next_uniform();
        const std::vector<double> x{0.25 * std::pow(16.0, rng.next_uniform()),
                                    0.25 * std::pow(16.0, rng.next_uniform())};
        const double t = 0.9 * rng.next_uniform();

        const std::vector<PdeSample> lifted_sample{{{x0, x[0], x[1]}, t}};
        const std::vector<PdeSample> base_sample{{{x[0] / x0, x[1] / x0}, t}};
        const auto lifted_report = pde_residual(lifted, cov, 0.17, lifted_sample, 1e-6);
        const auto base_report = pde_residual(base, cov, 0.0, base_sample, 1e-6);
        CHECK(lifted_report.residuals[0] ==
              doctest::Approx(base_report.residuals[0]).epsilon(1e-9));
        CHECK(std::abs(lifted_report.residuals[0]) > 1e-3);
    }
}

TEST_CASE("pde residual report serializes its verdict") {
    const auto f = bi::sqrt_claim({0.2}, 1.0);
    const auto cov = diag_cov({0.2});
    const auto samples = sample_grid(1, 5, 0.9, 34);
    const auto report = pde_residual(f, cov, 0.0, samples, 1e-6);
    const auto j = report.to_json();
    CHECK(j.at("verdict") == "replicable");
    CHECK(j.at("backend") == "analytic");
    CHECK(j.at("samples").size() == 5);
}

TEST_CASE("quadrature diverges loudly when the tails cannot converge") {
    // growth beyond exp(z) overwhelms the truncated window
    CHECK_THROWS_AS(
        heat_kernel_solve_1d([](double z) { return std::exp(z * z); }, 1.0, 2.0, 0.0),
        QuadratureError);
}
