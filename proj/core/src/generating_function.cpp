#include "fgp/generating_function.hpp"

#include <cmath>

#include "fgp/errors.hpp"

namespace fgp {

namespace {

double fd_step(double xi, double rel_step) {
    double h = rel_step * std::max(xi, 1.0);
    return std::min(h, 0.5 * xi);
}

void require_finite(double v, const std::string& what) {
    if (!std::isfinite(v)) throw DifferentiationError(what + ": non-finite difference quotient");
}

} // namespace

std::vector<double> GeneratingFunction::Impl::gradient(std::span<const double>, double) const {
    throw DifferentiationError(name() + ": no analytic gradient");
}

Matrix GeneratingFunction::Impl::hessian(std::span<const double>, double) const {
    throw DifferentiationError(name() + ": no analytic hessian");
}

double GeneratingFunction::Impl::time_derivative(std::span<const double>, double) const {
    throw DifferentiationError(name() + ": no analytic time derivative");
}

GeneratingFunction::GeneratingFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {
    if (!impl_) throw ConfigError("generating function: null implementation");
}

void GeneratingFunction::check_domain(std::span<const double> x, double t, bool derivatives) const {
    if (static_cast<int>(x.size()) != arity())
        throw DomainError(name() + ": expected " + std::to_string(arity()) + " price arguments, got " +
                          std::to_string(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] > 0.0) || !std::isfinite(x[i]))
            throw DomainError(name() + ": price argument " + std::to_string(i + 1) +
                              " must be strictly positive");
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError(name() + ": time must be nonnegative");
    const double T = expiry();
    if (derivatives) {
        if (smoothness() == Smoothness::non_smooth)
            throw DifferentiationError(name() + ": derivatives of a non-smooth function");
        if (!(t < T)) throw DomainError(name() + ": derivatives need t < expiry");
    } else if (t > T) {
        throw DomainError(name() + ": time past expiry");
    }
}

double GeneratingFunction::value(std::span<const double> x, double t) const {
    check_domain(x, t, false);
    const double v = impl_->value(x, t);
    if (!(v > 0.0) || !std::isfinite(v))
        throw PositivityError(name() + ": nonpositive value " + std::to_string(v));
    return v;
}

std::vector<double> GeneratingFunction::gradient(std::span<const double> x, double t) const {
    check_domain(x, t, true);
    if (impl_->has_analytic_derivatives()) return impl_->gradient(x, t);
    return gradient_fd(*this, x, t);
}

Matrix GeneratingFunction::hessian(std::span<const double> x, double t) const {
    check_domain(x, t, true);
    if (impl_->has_analytic_derivatives()) return impl_->hessian(x, t);
    return hessian_fd(*this, x, t);
}

double GeneratingFunction::time_derivative(std::span<const double> x, double t) const {
    check_domain(x, t, true);
    if (impl_->has_analytic_derivatives()) return impl_->time_derivative(x, t);
    return dt_fd(*this, x, t);
}

std::optional<std::vector<double>> GeneratingFunction::closed_form_weights(
    std::span<const double> x, double t) const {
    check_domain(x, t, false);
    return impl_->closed_form_weights(x, t);
}

std::vector<double> gradient_fd(const GeneratingFunction& f, std::span<const double> x, double t,
                                double rel_step) {
    const int n = f.arity();
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> grad(n);
    for (int i = 0; i < n; ++i) {
        const double h = fd_step(x[i], rel_step);
        probe[i] = x[i] + h;
        const double up = f.value(probe, t);
        probe[i] = x[i] - h;
        const double dn = f.value(probe, t);
        probe[i] = x[i];
        grad[i] = (up - dn) / (2.0 * h);
        require_finite(grad[i], f.name() + " gradient_fd");
    }
    return grad;
}

Matrix hessian_fd(const GeneratingFunction& f, std::span<const double> x, double t,
                  double rel_step) {
    const int n = f.arity();
    std::vector<double> probe(x.begin(), x.end());
    Matrix h(n, n);
    const double f0 = f.value(x, t);
    for (int i = 0; i < n; ++i) {
        const double hi = fd_step(x[i], rel_step);
        probe[i] = x[i] + hi;
        const double up = f.value(probe, t);
        probe[i] = x[i] - hi;
        const double dn = f.value(probe, t);
        probe[i] = x[i];
        h(i, i) = (up - 2.0 * f0 + dn) / (hi * hi);
        require_finite(h(i, i), f.name() + " hessian_fd");
        for (int j = i + 1; j < n; ++j) {
            const double hj = fd_step(x[j], rel_step);
            probe[i] = x[i] + hi;
            probe[j] = x[j] + hj;
            const double pp = f.value(probe, t);
            probe[j] = x[j] - hj;
            const double pm = f.value(probe, t);
            probe[i] = x[i] - hi;
            const double mm = f.value(probe, t);
            probe[j] = x[j] + hj;
            const double mp = f.value(probe, t);
            probe[i] = x[i];
            probe[j] = x[j];
            const double dij = (pp - pm - mp + mm) / (4.0 * hi * hj);
            require_finite(dij, f.name() + " hessian_fd");
            h(i, j) = dij;
            h(j, i) = dij;
        }
    }
    // (H + H^T)/2; antisymmetric noise is pure error once contracted
    // against a symmetric covariance.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double s = 0.5 * (h(i, j) + h(j, i));
            h(i, j) = s;
            h(j, i) = s;
        }
    return h;
}

double dt_fd(const GeneratingFunction& f, std::span<const double> x, double t, double rel_step) {
    const double h = rel_step * std::max(t, 1.0);
    const double T = f.expiry();
    double d;
    if (t + 2.0 * h < T) {
        if (t - h >= 0.0) {
            d = (f.value(x, t + h) - f.value(x, t - h)) / (2.0 * h);
        } else {
            d = (-3.0 * f.value(x, t) + 4.0 * f.value(x, t + h) - f.value(x, t + 2.0 * h)) /
                (2.0 * h);
        }
    } else {
        // one-sided backward near expiry; never samples at or past T
        d = (3.0 * f.value(x, t) - 4.0 * f.value(x, t - h) + f.value(x, t - 2.0 * h)) / (2.0 * h);
    }
    require_finite(d, f.name() + " dt_fd");
    return d;
}

double euler_check(const GeneratingFunction& f, std::span<const double> x, double t) {
    const auto grad = f.gradient(x, t);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * grad[i];
    return s - f.value(x, t);
}

namespace {

// Vhat(x0, x, t) = x0 * f(x/x0, t). Derivatives follow from the chain rule:
// with u = x/x0,
//   D_i Vhat  = D_i f(u),                 D_0 Vhat  = f(u) - sum u_j D_j f(u)
//   D_ij Vhat = D_ij f(u)/x0,             D_i0 Vhat = -sum_j u_j D_ij f(u)/x0
//   D_00 Vhat = sum_{jk} u_j u_k D_jk f(u)/x0,   D_t Vhat = x0 D_t f(u).
class HomogenizedImpl final : public GeneratingFunction::Impl {
  public:
    explicit HomogenizedImpl(GeneratingFunction base) : base_(std::move(base)) {}

    std::string name() const override { return "homogenized(" + base_.name() + ")"; }
    int arity() const override { return base_.arity() + 1; }
    Smoothness smoothness() const override { return base_.smoothness(); }
    Homogeneity homogeneity() const override { return Homogeneity::degree_one; }
    double expiry() const override { return base_.expiry(); }
    double weight_bound() const override { return base_.weight_bound() + 1.0; }
    bool has_analytic_derivatives() const override { return base_.has_analytic_derivatives(); }

    double value(std::span<const double> x, double t) const override {
        return x[0] * base_.value(scaled(x), t);
    }

    std::vector<double> gradient(std::span<const double> x, double t) const override {
        const auto u = scaled(x);
        const auto g = base_.gradient(u, t);
        const double v = base_.value(u, t);
        std::vector<double> out(x.size());
        double pivot = v;
        for (std::size_t j = 0; j < u.size(); ++j) pivot -= u[j] * g[j];
        out[0] = pivot;
        for (std::size_t i = 0; i < u.size(); ++i) out[i + 1] = g[i];
        return out;
    }

    Matrix hessian(std::span<const double> x, double t) const override {
        const auto u = scaled(x);
        const auto hb = base_.hessian(u, t);
        const int n = base_.arity();
        const double inv_x0 = 1.0 / x[0];
        Matrix h(n + 1, n + 1);
        double quad = 0.0;
        for (int j = 0; j < n; ++j) {
            double rowdot = 0.0;
            for (int k = 0; k < n; ++k) {
                h(j + 1, k + 1) = hb(j, k) * inv_x0;
                rowdot += u[k] * hb(j, k);
            }
            h(0, j + 1) = -rowdot * inv_x0;
            h(j + 1, 0) = h(0, j + 1);
            quad += u[j] * rowdot;
        }
        h(0, 0) = quad * inv_x0;
        return h;
    }

    double time_derivative(std::span<const double> x, double t) const override {
        return x[0] * base_.time_derivative(scaled(x), t);
    }

  private:
    std::vector<double> scaled(std::span<const double> x) const {
        std::vector<double> u(x.size() - 1);
        for (std::size_t i = 0; i + 1 < x.size(); ++i) u[i] = x[i + 1] / x[0];
        return u;
    }

    GeneratingFunction base_;
};

// S~(x, t) = z * s(x/z, t), z = sum x_i. With mu = x/z and
// dmu_j/dx_i = (delta_ij - mu_j)/z:
//   D_i S~  = s + D_i s - sum_j mu_j D_j s                    (Euler lift)
//   D_ik S~ = [D_ik s - sum_j mu_j (D_ij s + D_jk s)
//              + sum_{jl} mu_j mu_l D_jl s] / z
//   D_t S~  = z D_t s.
class SimplexExtensionImpl final : public GeneratingFunction::Impl {
  public:
    explicit SimplexExtensionImpl(GeneratingFunction base) : base_(std::move(base)) {}

    std::string name() const override { return "extended(" + base_.name() + ")"; }
    int arity() const override { return base_.arity(); }
    Smoothness smoothness() const override { return base_.smoothness(); }
    Homogeneity homogeneity() const override { return Homogeneity::degree_one; }
    double expiry() const override { return base_.expiry(); }
    bool has_analytic_derivatives() const override { return base_.has_analytic_derivatives(); }

    double value(std::span<const double> x, double t) const override {
        double z = 0.0;
        for (double xi : x) z += xi;
        return z * base_.value(normalized(x, z), t);
    }

    std::vector<double> gradient(std::span<const double> x, double t) const override {
        double z = 0.0;
        for (double xi : x) z += xi;
        const auto mu = normalized(x, z);
        const auto g = base_.gradient(mu, t);
        const double s = base_.value(mu, t);
        double mudot = 0.0;
        for (std::size_t j = 0; j < mu.size(); ++j) mudot += mu[j] * g[j];
        std::vector<double> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = s + g[i] - mudot;
        return out;
    }

    Matrix hessian(std::span<const double> x, double t) const override {
        double z = 0.0;
        for (double xi : x) z += xi;
        const auto mu = normalized(x, z);
        const auto hb = base_.hessian(mu, t);
        const int n = base_.arity();
        std::vector<double> rowdot(n, 0.0);
        double quad = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) rowdot[i] += mu[j] * hb(i, j);
            quad += mu[i] * rowdot[i];
        }
        Matrix h(n, n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                h(i, k) = (hb(i, k) - rowdot[i] - rowdot[k] + quad) / z;
        return h;
    }

    double time_derivative(std::span<const double> x, double t) const override {
        double z = 0.0;
        for (double xi : x) z += xi;
        return z * base_.time_derivative(normalized(x, z), t);
    }

  private:
    std::vector<double> normalized(std::span<const double> x, double z) const {
        std::vector<double> mu(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) mu[i] = x[i] / z;
        return mu;
    }

    GeneratingFunction base_;
};

} // namespace

GeneratingFunction homogenize(const GeneratingFunction& f) {
    return GeneratingFunction(std::make_shared<HomogenizedImpl>(f));
}

GeneratingFunction extend_simplex_function(const GeneratingFunction& s) {
    return GeneratingFunction(std::make_shared<SimplexExtensionImpl>(s));
}

} // namespace fgp
