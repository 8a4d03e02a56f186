#include "fgp/builtins.hpp"

#include <cmath>
#include <string>

#include "fgp/errors.hpp"
#include "fgp/market.hpp"
#include "fgp/normal.hpp"

namespace fgp::builtins {

namespace {

using Impl = GeneratingFunction::Impl;

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

double vector_sum(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

class GeometricMeanImpl : public Impl {
  public:
    explicit GeometricMeanImpl(std::vector<double> p) : p_(std::move(p)) {
        require(!p_.empty(), "geometric_mean.p: must be non-empty");
        require(std::abs(vector_sum(p_) - 1.0) <= 1e-12,
                "geometric_mean.p: exponents must sum to 1");
    }

    std::string name() const override { return "geometric_mean"; }
    int arity() const override { return static_cast<int>(p_.size()); }
    Homogeneity homogeneity() const override { return Homogeneity::degree_one; }
    double weight_bound() const override {
        double b = 0.0;
        for (double pi : p_) b = std::max(b, std::abs(pi));
        return b;
    }
    bool has_analytic_derivatives() const override { return true; }

    double value(std::span<const double> x, double) const override {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += p_[i] * std::log(x[i]);
        return std::exp(s);
    }

    std::vector<double> gradient(std::span<const double> x, double t) const override {
        const double v = value(x, t);
        std::vector<double> g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = p_[i] * v / x[i];
        return g;
    }

    Matrix hessian(std::span<const double> x, double t) const override {
        const double v = value(x, t);
        const int n = arity();
        Matrix h(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double pij = (i == j) ? p_[i] * (p_[i] - 1.0) : p_[i] * p_[j];
                h(i, j) = pij * v / (x[i] * x[j]);
            }
        return h;
    }

    double time_derivative(std::span<const double>, double) const override { return 0.0; }

    std::optional<std::vector<double>> closed_form_weights(std::span<const double>,
                                                           double) const override {
        return p_;
    }

  protected:
    std::vector<double> p_;
};

class CorrectedGeometricMeanImpl final : public GeometricMeanImpl {
  public:
    CorrectedGeometricMeanImpl(std::vector<double> p, const Matrix& sigma)
        : GeometricMeanImpl(std::move(p)) {
        require(sigma.rows() == arity() && sigma.cols() == arity(),
                "corrected_geometric_mean: covariance shape mismatch");
        egr0_ = excess_growth_rate(p_, sigma);
    }

    std::string name() const override { return "corrected_geometric_mean"; }

    double value(std::span<const double> x, double t) const override {
        return std::exp(egr0_ * t) * GeometricMeanImpl::value(x, t);
    }

    // gradient and hessian are inherited: the base formulas scale with the
    // (virtual) value, which already carries the e^{g* t} factor

    double time_derivative(std::span<const double> x, double t) const override {
        return egr0_ * value(x, t);
    }

    double correction_rate() const { return egr0_; }

  private:
    double egr0_ = 0.0;
};

class DiversityImpl final : public Impl {
  public:
    DiversityImpl(int n, double p) : n_(n), p_(p) {
        require(n >= 1, "diversity.n: must be at least 1");
        require(p > 0.0 && p < 1.0, "diversity.p: must lie in (0,1)");
    }

    std::string name() const override { return "diversity"; }
    int arity() const override { return n_; }
    Homogeneity homogeneity() const override { return Homogeneity::degree_one; }
    double weight_bound() const override { return 1.0; }
    bool has_analytic_derivatives() const override { return true; }

    double value(std::span<const double> x, double) const override {
        return std::pow(power_sum(x), 1.0 / p_);
    }

    std::vector<double> gradient(std::span<const double> x, double) const override {
        const double s = power_sum(x);
        const double c = std::pow(s, 1.0 / p_ - 1.0);
        std::vector<double> g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = c * std::pow(x[i], p_ - 1.0);
        return g;
    }

    Matrix hessian(std::span<const double> x, double) const override {
        const double s = power_sum(x);
        const double c2 = std::pow(s, 1.0 / p_ - 2.0);
        const double c1 = std::pow(s, 1.0 / p_ - 1.0);
        Matrix h(n_, n_);
        for (int i = 0; i < n_; ++i) {
            const double xi_pm1 = std::pow(x[i], p_ - 1.0);
            for (int j = 0; j < n_; ++j) {
                if (i == j) {
                    h(i, i) = (1.0 - p_) *
                              (c2 * xi_pm1 * xi_pm1 - c1 * std::pow(x[i], p_ - 2.0));
                } else {
                    h(i, j) = (1.0 - p_) * c2 * xi_pm1 * std::pow(x[j], p_ - 1.0);
                }
            }
        }
        return h;
    }

    double time_derivative(std::span<const double>, double) const override { return 0.0; }

    std::optional<std::vector<double>> closed_form_weights(std::span<const double> x,
                                                           double) const override {
        const double s = power_sum(x);
        std::vector<double> w(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) w[i] = std::pow(x[i], p_) / s;
        return w;
    }

  private:
    double power_sum(std::span<const double> x) const {
        double s = 0.0;
        for (double xi : x) s += std::pow(xi, p_);
        return s;
    }

    int n_;
    double p_;
};

class SqrtClaimImpl final : public Impl {
  public:
    SqrtClaimImpl(std::vector<double> sigma, double expiry)
        : sigma_(std::move(sigma)), expiry_(expiry) {
        require(!sigma_.empty(), "sqrt_claim.sigma: must be non-empty");
        for (double s : sigma_) require(s > 0.0, "sqrt_claim.sigma: entries must be positive");
        require(expiry_ > 0.0, "sqrt_claim.expiry: must be positive");
    }

    std::string name() const override { return "sqrt_claim"; }
    int arity() const override { return static_cast<int>(sigma_.size()); }
    Homogeneity homogeneity() const override { return Homogeneity::degree_one; }
    double expiry() const override { return expiry_; }
    double weight_bound() const override { return 1.0; }
    bool has_analytic_derivatives() const override { return true; }

    double value(std::span<const double> x, double t) const override {
        const auto a = decay(t);
        double lin = 0.0;
        double g = 0.0;
        double diag = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            lin += x[i];
            const double gi = a[i] * std::sqrt(x[i]);
            g += gi;
            diag += gi * gi;
        }
        return lin + g * g - diag;
    }

    std::vector<double> gradient(std::span<const double> x, double t) const override {
        const auto a = decay(t);
        double g = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) g += a[i] * std::sqrt(x[i]);
        std::vector<double> grad(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double sq = std::sqrt(x[i]);
            grad[i] = (1.0 - a[i] * a[i]) + a[i] * g / sq;
        }
        return grad;
    }

    Matrix hessian(std::span<const double> x, double t) const override {
        const auto a = decay(t);
        const int n = arity();
        double g = 0.0;
        for (int i = 0; i < n; ++i) g += a[i] * std::sqrt(x[i]);
        Matrix h(n, n);
        for (int i = 0; i < n; ++i) {
            const double sq_i = std::sqrt(x[i]);
            for (int j = 0; j < n; ++j) {
                if (i == j) {
                    h(i, i) = -a[i] * (g - a[i] * sq_i) / (2.0 * x[i] * sq_i);
                } else {
                    h(i, j) = a[i] * a[j] / (2.0 * sq_i * std::sqrt(x[j]));
                }
            }
        }
        return h;
    }

    double time_derivative(std::span<const double> x, double t) const override {
        const auto a = decay(t);
        double dv = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j < x.size(); ++j) {
                if (i == j) continue;
                dv += (sigma_[i] * sigma_[i] + sigma_[j] * sigma_[j]) / 8.0 * a[i] * a[j] *
                      std::sqrt(x[i] * x[j]);
            }
        return dv;
    }

  private:
    std::vector<double> decay(double t) const {
        std::vector<double> a(sigma_.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            a[i] = std::exp(sigma_[i] * sigma_[i] * (t - expiry_) / 8.0);
        return a;
    }

    std::vector<double> sigma_;
    double expiry_;
};

class ExtendedEntropyImpl final : public Impl {
  public:
    explicit ExtendedEntropyImpl(int n) : n_(n) {
        require(n >= 2, "entropy.n: needs at least two assets");
    }

    std::string name() const override { return "entropy"; }
    int arity() const override { return n_; }
    Homogeneity homogeneity() const override { return Homogeneity::degree_one; }
    double weight_bound() const override { return 1.0; }
    bool has_analytic_derivatives() const override { return true; }

    double value(std::span<const double> x, double) const override {
        const double z = vector_sum(x);
        double s = 0.0;
        for (double xi : x) {
            const double mu = xi / z;
            s -= mu * std::log(mu);
        }
        return z * s;
    }

    std::vector<double> gradient(std::span<const double> x, double) const override {
        const double z = vector_sum(x);
        std::vector<double> g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = -std::log(x[i] / z);
        return g;
    }

    Matrix hessian(std::span<const double> x, double) const override {
        const double z = vector_sum(x);
        Matrix h(n_, n_, 1.0 / z);
        for (int i = 0; i < n_; ++i) h(i, i) = 1.0 / z - 1.0 / x[i];
        return h;
    }

    double time_derivative(std::span<const double>, double) const override { return 0.0; }

  private:
    int n_;
};

class ShiftedBsClaimImpl final : public Impl {
  public:
    ShiftedBsClaimImpl(double strike, double sigma, double expiry)
        : strike_(strike), sigma_(sigma), expiry_(expiry) {
        require(strike > 0.0, "shifted_bs_claim.strike: must be positive");
        require(sigma > 0.0, "shifted_bs_claim.sigma: must be positive");
        require(expiry > 0.0, "shifted_bs_claim.expiry: must be positive");
    }

    std::string name() const override { return "shifted_bs_claim"; }
    int arity() const override { return 1; }
    Homogeneity homogeneity() const override { return Homogeneity::inhomogeneous; }
    double expiry() const override { return expiry_; }
    double weight_bound() const override { return 1.0; }
    bool has_analytic_derivatives() const override { return true; }

    double value(std::span<const double> x, double t) const override {
        const double tau = expiry_ - t;
        const double vol = sigma_ * std::sqrt(tau);
        if (!(vol > 0.0)) return std::max(x[0], strike_);
        const double z0 = z_upper(x[0], vol);
        const double z1 = z0 - vol;
        return normal_cdf(z0) * x[0] + (1.0 - normal_cdf(z1)) * strike_;
    }

    std::vector<double> gradient(std::span<const double> x, double t) const override {
        const double vol = sigma_ * std::sqrt(expiry_ - t);
        return {normal_cdf(z_upper(x[0], vol))};
    }

    Matrix hessian(std::span<const double> x, double t) const override {
        const double sqrt_tau = std::sqrt(expiry_ - t);
        const double vol = sigma_ * sqrt_tau;
        Matrix h(1, 1);
        h(0, 0) = normal_pdf(z_upper(x[0], vol)) / (x[0] * vol);
        return h;
    }

    double time_derivative(std::span<const double> x, double t) const override {
        const double sqrt_tau = std::sqrt(expiry_ - t);
        const double vol = sigma_ * sqrt_tau;
        return -x[0] * sigma_ * normal_pdf(z_upper(x[0], vol)) / (2.0 * sqrt_tau);
    }

  private:
    double z_upper(double x, double vol) const {
        return (std::log(x / strike_) + 0.5 * vol * vol) / vol;
    }

    double strike_;
    double sigma_;
    double expiry_;
};

class PowerSumImpl final : public Impl {
  public:
    PowerSumImpl(std::vector<double> p, std::vector<double> sigma, double expiry)
        : p_(std::move(p)), sigma_(std::move(sigma)), expiry_(expiry) {
        require(!p_.empty(), "power_sum.p: must be non-empty");
        require(p_.size() == sigma_.size(), "power_sum.sigma: size must match p");
        for (double s : sigma_) require(s > 0.0, "power_sum.sigma: entries must be positive");
        require(expiry_ > 0.0, "power_sum.expiry: must be positive");
        degree_one_ = true;
        for (double pi : p_) degree_one_ = degree_one_ && pi == 1.0;
    }

    std::string name() const override { return "power_sum"; }
    int arity() const override { return static_cast<int>(p_.size()); }
    Homogeneity homogeneity() const override {
        return degree_one_ ? Homogeneity::degree_one : Homogeneity::inhomogeneous;
    }
    double expiry() const override { return expiry_; }
    double weight_bound() const override {
        double b = 1.0;
        for (double pi : p_) b = std::max(b, std::abs(pi));
        return b;
    }
    bool has_analytic_derivatives() const override { return true; }

    double value(std::span<const double> x, double t) const override {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += phi(i, t) * std::pow(x[i], p_[i]);
        return s;
    }

    std::vector<double> gradient(std::span<const double> x, double t) const override {
        std::vector<double> g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            g[i] = phi(i, t) * p_[i] * std::pow(x[i], p_[i] - 1.0);
        return g;
    }

    Matrix hessian(std::span<const double> x, double t) const override {
        Matrix h(arity(), arity());
        for (int i = 0; i < arity(); ++i)
            h(i, i) = phi(i, t) * p_[i] * (p_[i] - 1.0) * std::pow(x[i], p_[i] - 2.0);
        return h;
    }

    double time_derivative(std::span<const double> x, double t) const override {
        double dv = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            dv += alpha(i) * phi(i, t) * std::pow(x[i], p_[i]);
        return dv;
    }

  private:
    double alpha(std::size_t i) const {
        return (p_[i] - p_[i] * p_[i]) * sigma_[i] * sigma_[i] / 2.0;
    }
    double phi(std::size_t i, double t) const { return std::exp(alpha(i) * (t - expiry_)); }

    std::vector<double> p_;
    std::vector<double> sigma_;
    double expiry_;
    bool degree_one_ = false;
};

class PairwiseMaxImpl final : public Impl {
  public:
    std::string name() const override { return "max"; }
    int arity() const override { return 2; }
    Smoothness smoothness() const override { return Smoothness::non_smooth; }
    Homogeneity homogeneity() const override { return Homogeneity::degree_one; }
    double weight_bound() const override { return 1.0; }

    double value(std::span<const double> x, double) const override {
        return std::max(x[0], x[1]);
    }

    std::optional<std::vector<double>> closed_form_weights(std::span<const double> x,
                                                           double) const override {
        // ties go to asset 1
        if (x[0] >= x[1]) return std::vector<double>{1.0, 0.0};
        return std::vector<double>{0.0, 1.0};
    }
};

class BsCallClaimImpl final : public Impl {
  public:
    BsCallClaimImpl(double strike, double rate, double sigma, double expiry)
        : strike_(strike), rate_(rate), sigma_(sigma), expiry_(expiry) {
        require(strike > 0.0, "bs_call.strike: must be positive");
        require(sigma > 0.0, "bs_call.sigma: must be positive");
        require(expiry > 0.0, "bs_call.expiry: must be positive");
    }

    std::string name() const override { return "bs_call"; }
    int arity() const override { return 1; }
    Homogeneity homogeneity() const override { return Homogeneity::inhomogeneous; }
    double expiry() const override { return expiry_; }
    bool has_analytic_derivatives() const override { return true; }

    double value(std::span<const double> x, double t) const override {
        const double tau = expiry_ - t;
        const double vol = sigma_ * std::sqrt(tau);
        const double kd = strike_ * std::exp(rate_ * (t - expiry_));
        if (!(vol > 0.0)) return std::max(x[0] - strike_, 0.0);
        const double z0 = (std::log(x[0] / kd) + 0.5 * vol * vol) / vol;
        return normal_cdf(z0) * x[0] - normal_cdf(z0 - vol) * kd;
    }

    std::vector<double> gradient(std::span<const double> x, double t) const override {
        const double vol = sigma_ * std::sqrt(expiry_ - t);
        const double kd = strike_ * std::exp(rate_ * (t - expiry_));
        return {normal_cdf((std::log(x[0] / kd) + 0.5 * vol * vol) / vol)};
    }

    Matrix hessian(std::span<const double> x, double t) const override {
        const double vol = sigma_ * std::sqrt(expiry_ - t);
        const double kd = strike_ * std::exp(rate_ * (t - expiry_));
        Matrix h(1, 1);
        h(0, 0) = normal_pdf((std::log(x[0] / kd) + 0.5 * vol * vol) / vol) / (x[0] * vol);
        return h;
    }

    double time_derivative(std::span<const double> x, double t) const override {
        const double sqrt_tau = std::sqrt(expiry_ - t);
        const double vol = sigma_ * sqrt_tau;
        const double kd = strike_ * std::exp(rate_ * (t - expiry_));
        const double z0 = (std::log(x[0] / kd) + 0.5 * vol * vol) / vol;
        return -x[0] * sigma_ * normal_pdf(z0) / (2.0 * sqrt_tau) -
               rate_ * kd * normal_cdf(z0 - vol);
    }

  private:
    double strike_;
    double rate_;
    double sigma_;
    double expiry_;
};

class SimplexEntropyImpl final : public Impl {
  public:
    explicit SimplexEntropyImpl(int n) : n_(n) {
        require(n >= 2, "simplex_entropy.n: needs at least two assets");
    }

    std::string name() const override { return "simplex_entropy"; }
    int arity() const override { return n_; }
    Homogeneity homogeneity() const override { return Homogeneity::inhomogeneous; }
    bool has_analytic_derivatives() const override { return true; }

    double value(std::span<const double> x, double) const override {
        double s = 0.0;
        for (double xi : x) s -= xi * std::log(xi);
        return s;
    }

    std::vector<double> gradient(std::span<const double> x, double) const override {
        std::vector<double> g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = -std::log(x[i]) - 1.0;
        return g;
    }

    Matrix hessian(std::span<const double> x, double) const override {
        Matrix h(n_, n_);
        for (int i = 0; i < n_; ++i) h(i, i) = -1.0 / x[i];
        return h;
    }

    double time_derivative(std::span<const double>, double) const override { return 0.0; }

  private:
    int n_;
};

std::vector<double> sigma_from_context(const BuiltinContext& ctx, int n, const char* who) {
    if (!ctx.covariance)
        throw ConfigError(std::string(who) + ".sigma: missing and no market covariance available");
    const Matrix& cov = *ctx.covariance;
    require(cov.rows() == n, std::string(who) + ".sigma: market covariance has wrong size");
    std::vector<double> sigma(n);
    for (int i = 0; i < n; ++i) sigma[i] = std::sqrt(cov(i, i));
    return sigma;
}

double expiry_from(const nlohmann::json& spec, const BuiltinContext& ctx, const char* who) {
    if (spec.contains("expiry")) return spec.at("expiry").get<double>();
    if (ctx.horizon) return *ctx.horizon;
    throw ConfigError(std::string(who) + ".expiry: missing and no horizon available");
}

} // namespace

GeneratingFunction geometric_mean(std::vector<double> p) {
    return GeneratingFunction(std::make_shared<GeometricMeanImpl>(std::move(p)));
}

GeneratingFunction corrected_geometric_mean(std::vector<double> p, const Matrix& sigma) {
    return GeneratingFunction(std::make_shared<CorrectedGeometricMeanImpl>(std::move(p), sigma));
}

GeneratingFunction diversity(int n, double p) {
    return GeneratingFunction(std::make_shared<DiversityImpl>(n, p));
}

GeneratingFunction sqrt_claim(std::vector<double> sigma, double expiry) {
    return GeneratingFunction(std::make_shared<SqrtClaimImpl>(std::move(sigma), expiry));
}

GeneratingFunction extended_entropy(int n) {
    return GeneratingFunction(std::make_shared<ExtendedEntropyImpl>(n));
}

GeneratingFunction shifted_bs_claim(double strike, double sigma, double expiry) {
    return GeneratingFunction(std::make_shared<ShiftedBsClaimImpl>(strike, sigma, expiry));
}

GeneratingFunction homogenized_bs_call(double strike, double sigma, double expiry) {
    return homogenize(shifted_bs_claim(strike, sigma, expiry));
}

GeneratingFunction power_sum_claim(std::vector<double> p, std::vector<double> sigma,
                                   double expiry) {
    return GeneratingFunction(std::make_shared<PowerSumImpl>(std::move(p), std::move(sigma), expiry));
}

GeneratingFunction pairwise_max() {
    return GeneratingFunction(std::make_shared<PairwiseMaxImpl>());
}

GeneratingFunction bs_call_claim(double strike, double rate, double sigma, double expiry) {
    return GeneratingFunction(std::make_shared<BsCallClaimImpl>(strike, rate, sigma, expiry));
}

GeneratingFunction simplex_entropy(int n) {
    return GeneratingFunction(std::make_shared<SimplexEntropyImpl>(n));
}

GeneratingFunction from_json(const nlohmann::json& spec, const BuiltinContext& ctx) {
    std::string kind;
    try {
        kind = spec.at("kind").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("claim.kind: missing builtin name");
    }
    try {
        if (kind == "geometric_mean") {
            return geometric_mean(spec.at("p").get<std::vector<double>>());
        }
        if (kind == "corrected_geometric_mean") {
            auto p = spec.at("p").get<std::vector<double>>();
            if (!ctx.covariance)
                throw ConfigError("corrected_geometric_mean: market covariance required");
            return corrected_geometric_mean(std::move(p), *ctx.covariance);
        }
        if (kind == "diversity") {
            return diversity(spec.at("n").get<int>(), spec.at("p").get<double>());
        }
        if (kind == "sqrt_claim") {
            const double expiry = expiry_from(spec, ctx, "sqrt_claim");
            if (spec.contains("sigma"))
                return sqrt_claim(spec.at("sigma").get<std::vector<double>>(), expiry);
            return sqrt_claim(sigma_from_context(ctx, spec.at("n").get<int>(), "sqrt_claim"),
                              expiry);
        }
        if (kind == "entropy") {
            return extended_entropy(spec.at("n").get<int>());
        }
        if (kind == "shifted_bs_claim") {
            return shifted_bs_claim(spec.at("strike").get<double>(), spec.at("sigma").get<double>(),
                                    expiry_from(spec, ctx, "shifted_bs_claim"));
        }
        if (kind == "homogenized_call") {
            return homogenized_bs_call(spec.at("strike").get<double>(),
                                       spec.at("sigma").get<double>(),
                                       expiry_from(spec, ctx, "homogenized_call"));
        }
        if (kind == "power_sum") {
            auto p = spec.at("p").get<std::vector<double>>();
            const double expiry = expiry_from(spec, ctx, "power_sum");
            if (spec.contains("sigma"))
                return power_sum_claim(std::move(p), spec.at("sigma").get<std::vector<double>>(),
                                       expiry);
            auto sigma = sigma_from_context(ctx, static_cast<int>(p.size()), "power_sum");
            return power_sum_claim(std::move(p), std::move(sigma), expiry);
        }
        if (kind == "max") {
            return pairwise_max();
        }
        if (kind == "bs_call") {
            return bs_call_claim(spec.at("strike").get<double>(), spec.value("rate", 0.0),
                                 spec.at("sigma").get<double>(),
                                 expiry_from(spec, ctx, "bs_call"));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("claim(" + kind + "): " + e.what());
    }
    throw ConfigError("claim.kind: unknown builtin '" + kind + "'");
}

} // namespace fgp::builtins
