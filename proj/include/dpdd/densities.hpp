#pragma once

#include <variant>
#include <vector>

#include "dpdd/common.hpp"
#include "dpdd/rng.hpp"

namespace dpdd {

/// Multivariate normal with a cached Cholesky factor.
class Gaussian {
public:
    Gaussian() = default;
    /// Throws InputError unless cov is symmetric positive definite.
    Gaussian(Vector mean, Matrix cov);

    int dim() const { return static_cast<int>(mean_.size()); }
    const Vector& mean() const { return mean_; }
    const Matrix& cov() const { return cov_; }
    double log_pdf(const Eigen::Ref<const Vector>& x) const;
    Vector sample(Philox4x32& rng) const;

private:
    Vector mean_;
    Matrix cov_;
    Matrix chol_;
    double log_norm_ = 0.0;
};

enum class KdeRule { Silverman, KnnVariable };

/// p_s proportional to exp(-(2/sigma^2)(x^4 + x^3/3 - 5x^2/2)), the double-well invariant law.
struct DoubleWellDensity {
    double sigma = 1.4142135623730951;
    double log_z = 0.0;  ///< log of the quadrature normalization constant
};

/// Gaussian-kernel estimate with bandwidth h_{m,j} = base[j] * factor[m].
struct KernelDensity {
    Matrix samples;  ///< d x M
    Vector base;     ///< per-dimension bandwidths
    Vector factor;   ///< per-sample multipliers (all ones for Silverman)
    KdeRule rule = KdeRule::Silverman;
};

/// Evaluable invariant density: a closed form or a kernel estimate.
class StationaryDensity {
public:
    using Spec = std::variant<Gaussian, DoubleWellDensity, KernelDensity>;

    StationaryDensity() = default;
    explicit StationaryDensity(Spec spec);

    int dim() const;
    const Spec& spec() const { return spec_; }
    bool is_analytic() const { return !std::holds_alternative<KernelDensity>(spec_); }

    double log_eval(const Eigen::Ref<const Vector>& x) const;
    double eval(const Eigen::Ref<const Vector>& x) const;
    /// Log density at each column of X (parallel over columns).
    Vector log_eval_many(const Matrix& X) const;
    Vector eval_many(const Matrix& X) const;

private:
    Spec spec_;
};

/// Closed-form double-well invariant density; Z from trapezoid quadrature.
StationaryDensity analytic_doublewell(double sigma);
StationaryDensity analytic_gaussian(Vector mean, Matrix cov);

/// Gaussian KDE. Silverman: h_j = sd_j (4 / ((d+2) M))^{1/(d+4)}. KnnVariable:
/// per-sample bandwidth proportional to the standardized distance to the
/// ceil(sqrt(M))-th neighbour, scaled so the geometric mean matches Silverman.
StationaryDensity kde_fit(const Matrix& samples, KdeRule rule);

struct WeightedGaussian {
    double weight = 1.0;
    Gaussian component;
};

/// Initial law p_0: a Gaussian, a Gaussian mixture, or the stationary density itself.
class InitialDensity {
public:
    struct Stationary {};
    using Mixture = std::vector<WeightedGaussian>;
    using Spec = std::variant<Gaussian, Mixture, Stationary>;

    static InitialDensity gaussian(Vector mean, Matrix cov);
    static InitialDensity mixture(Mixture components);
    static InitialDensity stationary(int dim = 0);

    const Spec& spec() const { return spec_; }
    bool is_stationary() const { return std::holds_alternative<Stationary>(spec_); }
    /// 0 for the stationary alias when constructed without a dimension.
    int dim() const { return dim_; }

    /// log p_0(x); the stationary alias needs the density it stands for.
    double log_eval(const Eigen::Ref<const Vector>& x, const StationaryDensity* ps = nullptr) const;
    double eval(const Eigen::Ref<const Vector>& x, const StationaryDensity* ps = nullptr) const;
    /// Draws one state; the stationary alias cannot be sampled.
    Vector sample(Philox4x32& rng) const;

private:
    explicit InitialDensity(Spec spec, int dim) : spec_(std::move(spec)), dim_(dim) {}
    Spec spec_;
    int dim_ = 0;
};

} // namespace dpdd
