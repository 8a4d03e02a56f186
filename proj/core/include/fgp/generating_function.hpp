#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fgp/matrix.hpp"

namespace fgp {

enum class Smoothness { smooth, non_smooth };
enum class Homogeneity { degree_one, inhomogeneous, unknown };

// Relative finite-difference steps: h_i = step * max(x_i, 1), clipped to
// x_i/2 so probes never leave the positive orthant. First derivatives use
// the central-difference optimum near eps^(1/3); second-derivative stencils
// divide by h^2 and need the larger eps^(1/4) scale to keep rounding noise
// below truncation.
inline constexpr double kFdRelStep = 1e-5;
inline constexpr double kFdHessianRelStep = 5e-5;

// A positive C^{2,1} function of prices and time, evaluable with value,
// gradient, Hessian and time derivative. Analytic derivatives are used when
// the implementation provides them; otherwise central finite differences on
// the value. Immutable and freely shareable; all operations are pure.
class GeneratingFunction {
  public:
    class Impl {
      public:
        virtual ~Impl() = default;

        virtual std::string name() const = 0;
        virtual int arity() const = 0;
        virtual double value(std::span<const double> x, double t) const = 0;

        virtual Smoothness smoothness() const { return Smoothness::smooth; }
        virtual Homogeneity homogeneity() const { return Homogeneity::unknown; }
        // Past the expiry only the value is defined; derivatives sample
        // strictly before it.
        virtual double expiry() const { return std::numeric_limits<double>::infinity(); }
        // Declared bound on |x_i D_i V / V|.
        virtual double weight_bound() const { return 1e3; }

        virtual bool has_analytic_derivatives() const { return false; }
        virtual std::vector<double> gradient(std::span<const double> x, double t) const;
        virtual Matrix hessian(std::span<const double> x, double t) const;
        virtual double time_derivative(std::span<const double> x, double t) const;

        // Exact portfolio weights x_i D_i V / V where a closed form exists
        // (constant-weighted and non-differentiable generators).
        virtual std::optional<std::vector<double>> closed_form_weights(std::span<const double> x,
                                                                       double t) const {
            (void)x;
            (void)t;
            return std::nullopt;
        }
    };

    explicit GeneratingFunction(std::shared_ptr<const Impl> impl);

    std::string name() const { return impl_->name(); }
    int arity() const { return impl_->arity(); }
    Smoothness smoothness() const { return impl_->smoothness(); }
    Homogeneity homogeneity() const { return impl_->homogeneity(); }
    double expiry() const { return impl_->expiry(); }
    double weight_bound() const { return impl_->weight_bound(); }
    bool has_analytic_derivatives() const { return impl_->has_analytic_derivatives(); }

    // Checks x > 0 and 0 <= t <= expiry; raises PositivityError rather than
    // clamping if the implementation returns a nonpositive value.
    double value(std::span<const double> x, double t) const;

    // Analytic when available, otherwise the finite-difference fallback.
    // Derivatives require t strictly before expiry and a smooth function.
    std::vector<double> gradient(std::span<const double> x, double t) const;
    Matrix hessian(std::span<const double> x, double t) const;
    double time_derivative(std::span<const double> x, double t) const;

    std::optional<std::vector<double>> closed_form_weights(std::span<const double> x,
                                                           double t) const;

    const Impl& impl() const { return *impl_; }
    std::shared_ptr<const Impl> impl_ptr() const { return impl_; }

  private:
    void check_domain(std::span<const double> x, double t, bool derivatives) const;

    std::shared_ptr<const Impl> impl_;
};

// Central differences with relative step; Hessian symmetrized as
// (H + H^T)/2. The time derivative switches to a second-order one-sided
// stencil within 2h of expiry (backward) and of t = 0 (forward).
std::vector<double> gradient_fd(const GeneratingFunction& f, std::span<const double> x, double t,
                                double rel_step = kFdRelStep);
Matrix hessian_fd(const GeneratingFunction& f, std::span<const double> x, double t,
                  double rel_step = kFdHessianRelStep);
double dt_fd(const GeneratingFunction& f, std::span<const double> x, double t,
             double rel_step = kFdRelStep);

// Degree-one residual sum_i x_i D_i f(x,t) - f(x,t); near zero iff f is
// locally homogeneous of degree 1 along the ray through x.
double euler_check(const GeneratingFunction& f, std::span<const double> x, double t);

// Lift to a contingent claim function of arity n+1 (riskless slot first):
// Vhat(x0, x, t) = x0 * f(x/x0, t). Degree 1 by construction and
// Vhat(1, x, t) = f(x, t) exactly.
GeneratingFunction homogenize(const GeneratingFunction& f);

// Extend a positive C^{2,1} function defined near the unit simplex to the
// positive orthant: S~(x,t) = z * s(x/z, t) with z = sum x_i. Degree 1, and
// S~ restricted to the simplex equals s.
GeneratingFunction extend_simplex_function(const GeneratingFunction& s);

} // namespace fgp
