#include "dpdd/densities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dpdd/parallel.hpp"

namespace dpdd {

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double doublewell_exponent(double x, double sigma) {
    return -(2.0 / (sigma * sigma)) * (x * x * x * x + x * x * x / 3.0 - 2.5 * x * x);
}

/// Kernel sum in standardized coordinates, shared by evaluation paths.
struct KdeEvaluator {
    Matrix z;           // samples / base, d x M
    Vector inv_f2;      // 1 / factor^2
    Vector log_f_term;  // -d log factor
    Vector inv_base;
    double constant;    // -sum log base - d/2 log 2pi - log M
    bool uniform;

    explicit KdeEvaluator(const KernelDensity& k) {
        const auto d = k.samples.rows();
        const auto M = k.samples.cols();
        inv_base = k.base.cwiseInverse();
        z = inv_base.asDiagonal() * k.samples;
        inv_f2 = k.factor.array().square().inverse();
        log_f_term = -static_cast<double>(d) * k.factor.array().log();
        uniform = (k.factor.array() == 1.0).all();
        constant = -k.base.array().log().sum() - 0.5 * static_cast<double>(d) * kLog2Pi -
                   std::log(static_cast<double>(M));
    }

    double log_eval(const Eigen::Ref<const Vector>& x, std::vector<double>& buf) const {
        const auto d = z.rows();
        const auto M = z.cols();
        buf.resize(static_cast<std::size_t>(M));
        double best = -std::numeric_limits<double>::infinity();
        for (Eigen::Index m = 0; m < M; ++m) {
            double r2 = 0.0;
            for (Eigen::Index j = 0; j < d; ++j) {
                const double diff = x[j] * inv_base[j] - z(j, m);
                r2 += diff * diff;
            }
            const double e = uniform ? -0.5 * r2 : -0.5 * r2 * inv_f2[m] + log_f_term[m];
            buf[static_cast<std::size_t>(m)] = e;
            best = std::max(best, e);
        }
        if (!std::isfinite(best)) return -std::numeric_limits<double>::infinity();
        double s = 0.0;
        for (Eigen::Index m = 0; m < M; ++m) s += std::exp(buf[static_cast<std::size_t>(m)] - best);
        return best + std::log(s) + constant;
    }
};
} // namespace

Gaussian::Gaussian(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    const auto d = mean_.size();
    if (d == 0) throw InputError("Gaussian needs a nonempty mean");
    if (cov_.rows() != d || cov_.cols() != d) throw InputError("Gaussian covariance has the wrong shape");
    if (!mean_.allFinite() || !cov_.allFinite()) throw InputError("Gaussian parameters must be finite");
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + cov_.cwiseAbs().maxCoeff()))
        throw InputError("Gaussian covariance must be symmetric");
    Eigen::LLT<Matrix> llt(cov_);
    if (llt.info() != Eigen::Success) throw InputError("Gaussian covariance must be positive definite");
    chol_ = llt.matrixL();
    log_norm_ = -0.5 * static_cast<double>(d) * kLog2Pi - chol_.diagonal().array().log().sum();
}

double Gaussian::log_pdf(const Eigen::Ref<const Vector>& x) const {
    if (x.size() != mean_.size()) throw InputError("Gaussian evaluated at a point of the wrong dimension");
    const Vector r = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
    return log_norm_ - 0.5 * r.squaredNorm();
}

Vector Gaussian::sample(Philox4x32& rng) const {
    Vector z(mean_.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
    return mean_ + chol_ * z;
}

StationaryDensity::StationaryDensity(Spec spec) : spec_(std::move(spec)) {}

int StationaryDensity::dim() const {
    return std::visit(
        [](const auto& s) -> int {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Gaussian>) return s.dim();
            else if constexpr (std::is_same_v<T, DoubleWellDensity>) return 1;
            else return static_cast<int>(s.samples.rows());
        },
        spec_);
}

double StationaryDensity::log_eval(const Eigen::Ref<const Vector>& x) const {
    if (x.size() != dim()) throw InputError("stationary density evaluated at a point of the wrong dimension");
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                return s.log_pdf(x);
            } else if constexpr (std::is_same_v<T, DoubleWellDensity>) {
                return doublewell_exponent(x[0], s.sigma) - s.log_z;
            } else {
                std::vector<double> buf;
                return KdeEvaluator(s).log_eval(x, buf);
            }
        },
        spec_);
}

double StationaryDensity::eval(const Eigen::Ref<const Vector>& x) const { return std::exp(log_eval(x)); }

Vector StationaryDensity::log_eval_many(const Matrix& X) const {
    if (X.rows() != dim()) throw InputError("stationary density evaluated at points of the wrong dimension");
    Vector out(X.cols());
    if (const auto* k = std::get_if<KernelDensity>(&spec_)) {
        const KdeEvaluator ev(*k);
        parallel_for(static_cast<std::size_t>(X.cols()), 64, [&](std::size_t b, std::size_t e) {
            std::vector<double> buf;
            for (std::size_t i = b; i < e; ++i) {
                const auto c = static_cast<Eigen::Index>(i);
                out[c] = ev.log_eval(X.col(c), buf);
            }
        });
        return out;
    }
    for (Eigen::Index c = 0; c < X.cols(); ++c) out[c] = log_eval(X.col(c));
    return out;
}

Vector StationaryDensity::eval_many(const Matrix& X) const {
    return log_eval_many(X).array().exp().matrix();
}

StationaryDensity analytic_doublewell(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("double-well sigma must be positive");
    // The quartic dominates beyond |x| ~ (20 sigma^2)^{1/4}; integrate well past it.
    const double half_width = std::max(6.0, 2.0 * std::pow(20.0 * sigma * sigma, 0.25));
    const int n = 40001;
    const double h = 2.0 * half_width / (n - 1);
    double peak = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) peak = std::max(peak, doublewell_exponent(-half_width + i * h, sigma));
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        s += w * std::exp(doublewell_exponent(-half_width + i * h, sigma) - peak);
    }
    return StationaryDensity(DoubleWellDensity{sigma, peak + std::log(s * h)});
}

StationaryDensity analytic_gaussian(Vector mean, Matrix cov) {
    return StationaryDensity(Gaussian(std::move(mean), std::move(cov)));
}

StationaryDensity kde_fit(const Matrix& samples, KdeRule rule) {
    const auto d = samples.rows();
    const auto M = samples.cols();
    if (d < 1) throw InputError("kde_fit: samples have no rows");
    if (M < 10) throw InputError("kde_fit: at least 10 samples are required");
    if (!samples.allFinite()) throw InputError("kde_fit: samples must be finite");

    const Vector mean = samples.rowwise().mean();
    Vector sd(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double var = (samples.row(j).array() - mean[j]).square().sum() / static_cast<double>(M - 1);
        if (!(var > 0.0)) throw InputError("kde_fit: samples have zero variance in dimension " + std::to_string(j + 1));
        sd[j] = std::sqrt(var);
    }
    const double dd = static_cast<double>(d);
    const double silverman = std::pow(4.0 / ((dd + 2.0) * static_cast<double>(M)), 1.0 / (dd + 4.0));

    KernelDensity k;
    k.samples = samples;
    k.base = sd * silverman;
    k.factor = Vector::Ones(M);
    k.rule = rule;
    if (rule == KdeRule::Silverman) return StationaryDensity(std::move(k));

    const auto kth = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(M))));
    const Matrix z = sd.cwiseInverse().asDiagonal() * samples;
    Vector radius(M);
    parallel_for(static_cast<std::size_t>(M), 64, [&](std::size_t b, std::size_t e) {
        std::vector<double> dist(static_cast<std::size_t>(M));
        for (std::size_t i = b; i < e; ++i) {
            const auto m = static_cast<Eigen::Index>(i);
            for (Eigen::Index n = 0; n < M; ++n) dist[static_cast<std::size_t>(n)] = (z.col(n) - z.col(m)).squaredNorm();
            // dist contains the zero self-distance, so position kth is the kth neighbour.
            std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kth), dist.end());
            radius[m] = std::sqrt(dist[kth]);
        }
    });
    const double positive_min = [&] {
        double v = std::numeric_limits<double>::infinity();
        for (Eigen::Index m = 0; m < M; ++m)
            if (radius[m] > 0.0) v = std::min(v, radius[m]);
        return v;
    }();
    if (!std::isfinite(positive_min)) throw InputError("kde_fit: all samples coincide");
    radius = radius.cwiseMax(positive_min);
    const double log_geo = radius.array().log().mean();
    k.factor = (radius.array().log() - log_geo).exp().matrix();
    return StationaryDensity(std::move(k));
}

InitialDensity InitialDensity::gaussian(Vector mean, Matrix cov) {
    Gaussian g(std::move(mean), std::move(cov));
    const int d = g.dim();
    return InitialDensity(std::move(g), d);
}

InitialDensity InitialDensity::mixture(Mixture components) {
    if (components.empty()) throw InputError("mixture needs at least one component");
    const int d = components.front().component.dim();
    double total = 0.0;
    for (const auto& c : components) {
        if (!(c.weight > 0.0)) throw InputError("mixture weights must be positive");
        if (c.component.dim() != d) throw InputError("mixture components differ in dimension");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InputError("mixture weights must sum to 1");
    return InitialDensity(std::move(components), d);
}

InitialDensity InitialDensity::stationary(int dim) { return InitialDensity(Stationary{}, dim); }

double InitialDensity::log_eval(const Eigen::Ref<const Vector>& x, const StationaryDensity* ps) const {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                return s.log_pdf(x);
            } else if constexpr (std::is_same_v<T, Mixture>) {
                double best = -std::numeric_limits<double>::infinity();
                std::vector<double> terms;
                for (const auto& c : s) {
                    terms.push_back(std::log(c.weight) + c.component.log_pdf(x));
                    best = std::max(best, terms.back());
                }
                if (!std::isfinite(best)) return best;
                double acc = 0.0;
                for (double t : terms) acc += std::exp(t - best);
                return best + std::log(acc);
            } else {
                if (!ps) throw InputError("the stationary initial density needs p_s to be evaluated");
                return ps->log_eval(x);
            }
        },
        spec_);
}

double InitialDensity::eval(const Eigen::Ref<const Vector>& x, const StationaryDensity* ps) const {
    return std::exp(log_eval(x, ps));
}

Vector InitialDensity::sample(Philox4x32& rng) const {
    return std::visit(
        [&](const auto& s) -> Vector {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                return s.sample(rng);
            } else if constexpr (std::is_same_v<T, Mixture>) {
                const double u = rng.uniform();
                double acc = 0.0;
                for (const auto& c : s) {
                    acc += c.weight;
                    if (u < acc) return c.component.sample(rng);
                }
                return s.back().component.sample(rng);
            } else {
                throw UnsupportedError("the stationary initial density cannot be sampled directly");
            }
        },
        spec_);
}

} // namespace dpdd
