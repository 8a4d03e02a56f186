#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "fgp/builtins.hpp"
#include "fgp/errors.hpp"
#include "fgp/generating_function.hpp"
#include "fgp/matrix.hpp"
#include "fgp/replication.hpp"
#include "fgp/rng.hpp"

using namespace fgp;
namespace bi = fgp::builtins;

namespace {

constexpr double kTwoLogTwo = 1.3862943611198906;

// log-uniform positive grid in [0.25, 4], times in [0, 0.9 * horizon)
struct GridPoint {
    std::vector<double> x;
    double t;
};

std::vector<GridPoint> random_grid(int arity, int points, double horizon, std::uint64_t seed) {
    PathRng rng(seed);
    std::vector<GridPoint> grid(points);
    for (auto& g : grid) {
        g.x.resize(arity);
        for (double& xi : g.x) xi = 0.25 * std::pow(16.0, rng.next_uniform());
        g.t = 0.9 * horizon * rng.next_uniform();
    }
    return grid;
}

// Discrepancies in the dimensionless forms the decomposition actually
// consumes: weights x_i D_i V / V, curvature x_i x_j D_ij V / V, and the
// rate D_t V / V.
double grad_gap(const GeneratingFunction& f, std::span<const double> x, double t) {
    const double v = f.value(x, t);
    const auto a = f.impl().gradient(x, t);
    const auto fd = gradient_fd(f, x, t);
    double gap = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        gap = std::max(gap, std::abs(x[i] * (a[i] - fd[i])) / v);
    return gap;
}

double hess_gap(const GeneratingFunction& f, std::span<const double> x, double t) {
    const double v = f.value(x, t);
    const auto a = f.impl().hessian(x, t);
    const auto fd = hessian_fd(f, x, t);
    double gap = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            gap = std::max(gap, std::abs(x[i] * x[j] * (a(i, j) - fd(i, j))) / v);
    return gap;
}

double dt_gap(const GeneratingFunction& f, std::span<const double> x, double t) {
    const double a = f.impl().time_derivative(x, t);
    const double fd = dt_fd(f, x, t);
    return std::abs(a - fd) / f.value(x, t);
}

// test-only implementations for the operations that take user functions
class BilinearImpl final : public GeneratingFunction::Impl {
  public:
    std::string name() const override { return "bilinear"; }
    int arity() const override { return 2; }
    double value(std::span<const double> x, double) const override { return x[0] * x[1]; }
};

class FirstCoordinateImpl final : public GeneratingFunction::Impl {
  public:
    std::string name() const override { return "first_coordinate"; }
    int arity() const override { return 1; }
    Homogeneity homogeneity() const override { return Homogeneity::degree_one; }
    double value(std::span<const double> x, double) const override { return x[0]; }
};

class ConstantSimplexImpl final : public GeneratingFunction::Impl {
  public:
    ConstantSimplexImpl(int n, double c) : n_(n), c_(c) {}
    std::string name() const override { return "constant"; }
    int arity() const override { return n_; }
    bool has_analytic_derivatives() const override { return true; }
    double value(std::span<const double>, double) const override { return c_; }
    std::vector<double> gradient(std::span<const double>, double) const override {
        return std::vector<double>(n_, 0.0);
    }
    Matrix hessian(std::span<const double>, double) const override { return Matrix(n_, n_); }
    double time_derivative(std::span<const double>, double) const override { return 0.0; }

  private:
    int n_;
    double c_;
};

std::vector<GeneratingFunction> smooth_catalog_n3(double horizon) {
    const std::vector<double> p{0.2, 0.3, 0.5};
    Matrix sigma = Matrix::identity(3);
    for (int i = 0; i < 3; ++i) sigma(i, i) = 0.04;
    return {
        bi::geometric_mean(p),
        bi::corrected_geometric_mean(p, sigma),
        bi::diversity(3, 0.5),
        bi::sqrt_claim({0.2, 0.2, 0.2}, horizon),
        bi::extended_entropy(3),
        bi::power_sum_claim({0.5, 2.0, -0.5}, {0.2, 0.2, 0.2}, horizon),
    };
}

} // namespace

TEST_CASE("extended entropy at (1,1) evaluates to 2 log 2") {
    const auto f = bi::extended_entropy(2);
    const std::vector<double> x{1.0, 1.0};
    CHECK(f.value(x, 0.3) == doctest::Approx(kTwoLogTwo).epsilon(1e-15));
}

TEST_CASE("degenerate geometric mean reduces to the first coordinate") {
    const auto f = bi::geometric_mean({1.0, 0.0});
    const std::vector<double> x{2.7, 9.1};
    CHECK(f.value(x, 0.0) == doctest::Approx(2.7).epsilon(1e-15));
}

TEST_CASE("square-root claim terminal value at (1,1) is 4") {
    const auto f = bi::sqrt_claim({0.2, 0.3}, 1.0);
    const std::vector<double> x{1.0, 1.0};
    CHECK(f.value(x, 1.0) == 4.0);
}

TEST_CASE("finite differences on a bilinear polynomial") {
    const GeneratingFunction f(std::make_shared<BilinearImpl>());
    const std::vector<double> x{2.0, 3.0};
    const auto grad = gradient_fd(f, x, 0.5);
    CHECK(grad[0] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(grad[1] == doctest::Approx(2.0).epsilon(1e-10));
    const auto hess = hessian_fd(f, x, 0.5);
    CHECK(hess(0, 1) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(hess(1, 0) == hess(0, 1));
    CHECK(std::abs(hess(0, 0)) < 1e-6);
    CHECK(std::abs(dt_fd(f, x, 0.5)) < 1e-12);
}

TEST_CASE("analytic and finite-difference gradients agree for diversity") {
    const auto f = bi::diversity(3, 0.5);
    const std::vector<double> x{1.0, 2.0, 3.0};
    const auto a = f.impl().gradient(x, 0.0);
    const auto fd = gradient_fd(f, x, 0.0);
    for (int i = 0; i < 3; ++i)
        CHECK(fd[i] == doctest::Approx(a[i]).epsilon(1e-7));
}

TEST_CASE("analytic and finite-difference time derivative agree for the power sum") {
    const auto f = bi::power_sum_claim({0.5, 2.0, -0.5}, {0.2, 0.25, 0.3}, 1.0);
    const std::vector<double> x{1.2, 0.7, 2.1};
    for (double t : {0.0, 0.4, 0.95, 0.999995}) {
        const double a = f.impl().time_derivative(x, t);
        CHECK(dt_fd(f, x, t) == doctest::Approx(a).epsilon(1e-7));
    }
}

TEST_CASE("analytic derivatives match finite differences across the smooth catalog") {
    for (const auto& f : smooth_catalog_n3(1.0)) {
        CAPTURE(f.name());
        for (const auto& g : random_grid(3, 50, 1.0, 404)) {
            CHECK(grad_gap(f, g.x, g.t) < 1e-6);
            CHECK(hess_gap(f, g.x, g.t) < 1e-6);
            CHECK(dt_gap(f, g.x, g.t) < 1e-6);
        }
    }
    const auto shifted = bi::shifted_bs_claim(1.0, 0.2, 1.0);
    const auto hom = bi::homogenized_bs_call(1.0, 0.2, 1.0);
    for (const auto& g : random_grid(1, 50, 1.0, 405)) {
        CHECK(grad_gap(shifted, g.x, g.t) < 1e-6);
        CHECK(hess_gap(shifted, g.x, g.t) < 1e-6);
        CHECK(dt_gap(shifted, g.x, g.t) < 1e-6);
    }
    for (const auto& g : random_grid(2, 50, 1.0, 406)) {
        CHECK(grad_gap(hom, g.x, g.t) < 1e-6);
        CHECK(hess_gap(hom, g.x, g.t) < 1e-6);
        CHECK(dt_gap(hom, g.x, g.t) < 1e-6);
    }
}

TEST_CASE("euler residual vanishes for degree-1 builtins") {
    const auto f = bi::geometric_mean({0.25, 0.35, 0.4});
    for (const auto& g : random_grid(3, 20, 1.0, 11)) {
        const double v = f.value(g.x, g.t);
        CHECK(std::abs(euler_check(f, g.x, g.t)) / v < 1e-12); // analytic gradient

        // finite-difference route
        const auto fd = gradient_fd(f, g.x, g.t);
        double s = -v;
        for (int i = 0; i < 3; ++i) s += g.x[i] * fd[i];
        CHECK(std::abs(s) / v < 1e-8);
    }
}

TEST_CASE("euler residual is bounded away from zero for the power sum") {
    const auto f = bi::power_sum_claim({0.5, 2.0, -0.5}, {0.2, 0.2, 0.2}, 1.0);
    double worst = 0.0;
    for (const auto& g : random_grid(3, 50, 1.0, 12))
        worst = std::max(worst, std::abs(euler_check(f, g.x, g.t)) / f.value(g.x, g.t));
    CHECK(worst > 1e-3);
}

TEST_CASE("homogenized shifted call satisfies the euler identity in all arguments") {
    const auto hom = bi::homogenized_bs_call(1.0, 0.2, 1.0);
    for (const auto& g : random_grid(2, 30, 1.0, 13)) {
        const double v = hom.value(g.x, g.t);
        CHECK(std::abs(euler_check(hom, g.x, g.t)) / v < 1e-8);
    }
}

TEST_CASE("homogenizing a degree-1 function is the identity in its price arguments") {
    const GeneratingFunction f(std::make_shared<FirstCoordinateImpl>());
    const auto lifted = homogenize(f);
    CHECK(lifted.arity() == 2);
    CHECK(lifted.homogeneity() == Homogeneity::degree_one);
    const std::vector<double> args{0.7, 3.1};
    CHECK(lifted.value(args, 0.2) == doctest::Approx(3.1).epsilon(1e-15));
}

TEST_CASE("homogenized shifted claim matches the closed form") {
    const double strike = 1.0;
    const double sigma = 0.2;
    const auto lifted = homogenize(bi::shifted_bs_claim(strike, sigma, 1.0));
    for (const auto& g : random_grid(2, 40, 1.0, 14)) {
        const double closed = homogenized_call(g.x[0], g.x[1], strike, sigma, g.t, 1.0);
        CHECK(lifted.value(g.x, g.t) == doctest::Approx(closed).epsilon(1e-10));
    }
}

TEST_CASE("the lift scales with degree one") {
    const auto lifted = homogenize(bi::power_sum_claim({0.5, 2.0}, {0.2, 0.3}, 1.0));
    const std::vector<double> base{0.8, 1.4, 0.6};
    const double v = lifted.value(base, 0.4);
    for (double a : {0.5, 2.0, 10.0}) {
        std::vector<double> scaled(base);
        for (double& xi : scaled) xi *= a;
        CHECK(lifted.value(scaled, 0.4) == doctest::Approx(a * v).epsilon(1e-14));
    }
}

TEST_CASE("the lift restricted to x0 = 1 recovers the base function exactly") {
    const auto base = bi::power_sum_claim({0.5, 2.0}, {0.2, 0.3}, 1.0);
    const auto lifted = homogenize(base);
    for (const auto& g : random_grid(2, 20, 1.0, 15)) {
        std::vector<double> args{1.0, g.x[0], g.x[1]};
        CHECK(lifted.value(args, g.t) == base.value(g.x, g.t));
    }
}

TEST_CASE("simplex extension of the entropy is the extended entropy") {
    const auto direct = bi::extended_entropy(3);
    const auto extended = extend_simplex_function(bi::simplex_entropy(3));
    CHECK(extended.homogeneity() == Homogeneity::degree_one);
    for (const auto& g : random_grid(3, 30, 1.0, 16)) {
        CHECK(extended.value(g.x, g.t) ==
              doctest::Approx(direct.value(g.x, g.t)).epsilon(1e-12));
        const auto ga = extended.gradient(g.x, g.t);
        const auto gd = direct.gradient(g.x, g.t);
        for (int i = 0; i < 3; ++i) CHECK(ga[i] == doctest::Approx(gd[i]).epsilon(1e-10));
        const auto ha = extended.hessian(g.x, g.t);
        const auto hd = direct.hessian(g.x, g.t);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(ha(i, j) == doctest::Approx(hd(i, j)).epsilon(1e-9));
    }
}

TEST_CASE("extending a constant simplex function gives c times the total") {
    const auto ext = extend_simplex_function(
        GeneratingFunction(std::make_shared<ConstantSimplexImpl>(3, 2.5)));
    const std::vector<double> x{0.3, 1.1, 2.2};
    CHECK(ext.value(x, 0.0) == doctest::Approx(2.5 * (0.3 + 1.1 + 2.2)).epsilon(1e-15));
}

TEST_CASE("entropy weights on the simplex match the market-weight formula") {
    const auto ext = extend_simplex_function(bi::simplex_entropy(3));
    const std::vector<double> mu{0.2, 0.3, 0.5};
    const double s = -(0.2 * std::log(0.2) + 0.3 * std::log(0.3) + 0.5 * std::log(0.5));
    const double v = ext.value(mu, 0.0);
    const auto grad = ext.gradient(mu, 0.0);
    for (int i = 0; i < 3; ++i) {
        const double weight = mu[i] * grad[i] / v;
        CHECK(weight == doctest::Approx(-mu[i] * std::log(mu[i]) / s).epsilon(1e-12));
    }
}

TEST_CASE("the extension restricted to the simplex equals the base function") {
    const auto base = bi::simplex_entropy(4);
    const auto ext = extend_simplex_function(base);
    PathRng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> mu(4);
        double z = 0.0;
        for (double& m : mu) {
            m = rng.next_uniform() + 0.05;
            z += m;
        }
        for (double& m : mu) m /= z;
        CHECK(ext.value(mu, 0.0) == doctest::Approx(base.value(mu, 0.0)).epsilon(1e-13));
    }
}

TEST_CASE("weights stay within each builtin's declared bound") {
    for (const auto& f : smooth_catalog_n3(1.0)) {
        CAPTURE(f.name());
        const double bound = f.weight_bound();
        for (const auto& g : random_grid(3, 50, 1.0, 505)) {
            const double v = f.value(g.x, g.t);
            const auto grad = f.gradient(g.x, g.t);
            for (int i = 0; i < 3; ++i)
                CHECK(std::abs(g.x[i] * grad[i] / v) <= bound * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("nonpositive inputs raise a domain error") {
    const auto f = bi::extended_entropy(2);
    CHECK_THROWS_AS(f.value(std::vector<double>{1.0, 0.0}, 0.0), DomainError);
    CHECK_THROWS_AS(f.value(std::vector<double>{-1.0, 2.0}, 0.0), DomainError);
    CHECK_THROWS_AS(f.value(std::vector<double>{1.0}, 0.0), DomainError);
    CHECK_THROWS_AS(f.value(std::vector<double>{1.0, 1.0}, -0.5), DomainError);
}

TEST_CASE("a nonpositive value names the builtin in the positivity error") {
    const auto call = bi::bs_call_claim(1.0, 0.0, 0.2, 1.0);
    CHECK_THROWS_WITH_AS(call.value(std::vector<double>{0.5}, 1.0), doctest::Contains("bs_call"),
                         PositivityError);
}

TEST_CASE("derivatives of the non-smooth max are rejected") {
    const auto f = bi::pairwise_max();
    const std::vector<double> x{1.0, 2.0};
    CHECK_THROWS_AS(f.gradient(x, 0.0), DifferentiationError);
    CHECK(f.value(x, 0.0) == 2.0);
    const auto w = f.closed_form_weights(x, 0.0);
    REQUIRE(w.has_value());
    CHECK((*w)[1] == 1.0);
    const auto tie = f.closed_form_weights(std::vector<double>{2.0, 2.0}, 0.0);
    CHECK((*tie)[0] == 1.0); // ties go to asset 1
}

TEST_CASE("derivatives past expiry are rejected, values at expiry are fine") {
    const auto f = bi::shifted_bs_claim(1.0, 0.2, 1.0);
    const std::vector<double> x{1.3};
    CHECK(f.value(x, 1.0) == 1.3);
    CHECK(f.value(std::vector<double>{0.7}, 1.0) == 1.0);
    CHECK_THROWS_AS(f.gradient(x, 1.0), DomainError);
    CHECK_THROWS_AS(f.value(x, 1.1), DomainError);
}

TEST_CASE("builtin parameters are validated at construction") {
    CHECK_THROWS_AS(bi::geometric_mean({0.5, 0.6}), ConfigError);
    CHECK_THROWS_AS(bi::diversity(3, 1.5), ConfigError);
    CHECK_THROWS_AS(bi::diversity(3, 0.0), ConfigError);
    CHECK_THROWS_AS(bi::extended_entropy(1), ConfigError);
    CHECK_THROWS_AS(bi::sqrt_claim({0.2, -0.1}, 1.0), ConfigError);
    CHECK_THROWS_AS(bi::shifted_bs_claim(0.0, 0.2, 1.0), ConfigError);
    CHECK_THROWS_AS(bi::power_sum_claim({0.5}, {0.2, 0.3}, 1.0), ConfigError);
}

TEST_CASE("builtins resolve from json descriptors") {
    const auto f = bi::from_json({{"kind", "diversity"}, {"n", 3}, {"p", 0.5}});
    CHECK(f.name() == "diversity");
    CHECK(f.arity() == 3);

    bi::BuiltinContext ctx;
    ctx.horizon = 2.0;
    Matrix cov = Matrix::identity(2);
    cov(0, 0) = 0.04;
    cov(1, 1) = 0.09;
    ctx.covariance = cov;
    const auto ps = bi::from_json({{"kind", "power_sum"}, {"p", {0.5, 2.0}}}, ctx);
    CHECK(ps.expiry() == 2.0);
    const auto geo = bi::from_json({{"kind", "corrected_geometric_mean"}, {"p", {0.4, 0.6}}}, ctx);
    CHECK(geo.name() == "corrected_geometric_mean");

    CHECK_THROWS_AS(bi::from_json({{"kind", "no_such_builtin"}}), ConfigError);
    CHECK_THROWS_AS(bi::from_json({{"p", {0.5}}}), ConfigError);
    CHECK_THROWS_AS(bi::from_json({{"kind", "power_sum"}, {"p", {0.5, 2.0}}}), ConfigError);
}

TEST_CASE("time-dependent degree-1 builtins stay degree-1 over time") {
    const auto f = bi::sqrt_claim({0.2, 0.3, 0.4}, 2.0);
    for (const auto& g : random_grid(3, 20, 2.0, 19)) {
        const double v = f.value(g.x, g.t);
        std::vector<double> doubled(g.x);
        for (double& xi : doubled) xi *= 2.0;
        CHECK(f.value(doubled, g.t) == doctest::Approx(2.0 * v).epsilon(1e-13));
        CHECK(std::abs(euler_check(f, g.x, g.t)) / v < 1e-12);
    }
}
