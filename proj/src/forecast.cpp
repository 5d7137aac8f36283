#include "dpdd/forecast.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dpdd/parallel.hpp"

namespace dpdd {

namespace {
constexpr double kPsFloor = 1e-300;
constexpr std::size_t kReduceBlock = 2048;

/// (1/M) sum_m phi(:, m) w_m with a block-ordered reduction.
CVector weighted_mean(const CMatrix& phi, const Vector& w) {
    const auto N = phi.rows();
    const auto M = static_cast<std::size_t>(phi.cols());
    const std::size_t blocks = chunk_count(M, kReduceBlock);
    std::vector<CVector> partial(blocks, CVector::Zero(N));
    parallel_for(M, kReduceBlock, [&](std::size_t b, std::size_t e) {
        CVector acc = CVector::Zero(N);
        for (std::size_t m = b; m < e; ++m) {
            const auto c = static_cast<Eigen::Index>(m);
            acc += phi.col(c) * w[c];
        }
        partial[b / kReduceBlock] = acc;
    });
    CVector total = CVector::Zero(N);
    for (const auto& p : partial) total += p;
    return total / static_cast<double>(M);
}
} // namespace

Vector importance_weights(const StationaryDensity& ps, const InitialDensity& p0, const Matrix& X) {
    const auto M = X.cols();
    if (p0.dim() != 0 && p0.dim() != X.rows())
        throw InputError("initial density dimension does not match the training states");
    if (ps.dim() != X.rows()) throw InputError("stationary density dimension does not match the training states");
    const Vector log_ps = ps.log_eval_many(X);
    const double log_floor = std::log(kPsFloor);
    for (Eigen::Index m = 0; m < M; ++m) {
        if (!(log_ps[m] >= log_floor)) {
            std::ostringstream msg;
            msg << "p_s(x_" << m << ") = " << std::exp(log_ps[m]) << " is below " << kPsFloor
                << " at training sample " << m << " (x =";
            for (Eigen::Index j = 0; j < X.rows(); ++j) msg << ' ' << X(j, m);
            msg << ')';
            throw DegenerateDataError(msg.str());
        }
    }
    if (p0.is_stationary()) return Vector::Ones(M);
    Vector w(M);
    for (Eigen::Index m = 0; m < M; ++m) w[m] = std::exp(p0.log_eval(X.col(m)) - log_ps[m]);
    return w;
}

CVector coefficients(const CMatrix& phi_train, const StationaryDensity& ps, const InitialDensity& p0,
                     const Matrix& train_X) {
    if (phi_train.cols() != train_X.cols()) throw InputError("coefficients: eigenfunction values do not match samples");
    if (train_X.cols() == 0) throw InputError("coefficients: no training samples");
    return weighted_mean(phi_train, importance_weights(ps, p0, train_X));
}

CVector coefficients(const KoopmanModel& koopman, const StationaryDensity& ps, const InitialDensity& p0,
                     const Matrix& train_X) {
    return coefficients(koopman.eigenfunctions(train_X), ps, p0, train_X);
}

SpectralForecastModel make_forecast_model(KoopmanModel koopman, StationaryDensity ps, const InitialDensity& p0,
                                          Matrix train_X) {
    SpectralForecastModel model;
    model.phi_train = koopman.eigenfunctions(train_X);
    model.c0 = coefficients(model.phi_train, ps, p0, train_X);
    model.koopman = std::move(koopman);
    model.ps = std::move(ps);
    model.train_X = std::move(train_X);
    return model;
}

CVector coefficients_at(const SpectralForecastModel& model, double t, const ForecastOptions& opts) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("forecast time must be finite and nonnegative");
    const auto N = model.c0.size();
    if (model.koopman.lambda.size() != N) throw InputError("model coefficients do not match its spectrum");
    CVector c(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const Complex l = model.koopman.lambda[i];
        if (opts.drop_unstable && l.real() > 1e-6) {
            c[i] = 0.0;
            continue;
        }
        c[i] = t == 0.0 ? model.c0[i] : model.c0[i] * std::exp(l * t);
    }
    return c;
}

namespace {
void check_points(const SpectralForecastModel& model, const Matrix& X) {
    if (X.rows() != model.koopman.dict.dim_state())
        throw InputError("points have dimension " + std::to_string(X.rows()) + ", model expects " +
                         std::to_string(model.koopman.dict.dim_state()));
}

Vector combine(const CVector& c, const CMatrix& phi, const Vector& ps, double* max_imag) {
    const CVector s = (c.transpose() * phi).transpose();
    double imag = 0.0;
    Vector out(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        out[i] = s[i].real() * ps[i];
        imag = std::max(imag, std::abs(s[i].imag() * ps[i]));
    }
    if (max_imag) *max_imag = imag;
    return out;
}
} // namespace

Vector forecast_at_points(const SpectralForecastModel& model, double t, const Matrix& X,
                          const ForecastOptions& opts, double* max_imag) {
    check_points(model, X);
    const CMatrix phi = model.koopman.eigenfunctions(X);
    const Vector ps = model.ps.eval_many(X);
    return combine(coefficients_at(model, t, opts), phi, ps, max_imag);
}

DensityField forecast_density_series(const SpectralForecastModel& model, const std::vector<double>& times,
                                     const Grid& grid, const ForecastOptions& opts) {
    if (grid.dim() != model.koopman.dict.dim_state())
        throw InputError("grid dimension " + std::to_string(grid.dim()) + " does not match model dimension " +
                         std::to_string(model.koopman.dict.dim_state()));
    const Matrix P = grid.points();
    const CMatrix phi = model.koopman.eigenfunctions(P);
    const Vector ps = model.ps.eval_many(P);
    const Vector w = grid.trapezoid_weights();

    DensityField field;
    field.grid = grid;
    field.producer = "dpdd";
    for (double t : times) {
        FieldInfo info;
        Vector v = combine(coefficients_at(model, t, opts), phi, ps, &info.max_imag);
        info.mass = w.dot(v);
        info.min_value = v.minCoeff();
        if (opts.clip_negative) {
            v = v.cwiseMax(0.0);
            const double mass = w.dot(v);
            if (mass > 0.0) {
                info.renorm_factor = 1.0 / mass;
                v *= info.renorm_factor;
            }
        }
        field.push(t, std::move(v), info);
    }
    return field;
}

DensityField forecast_density(const SpectralForecastModel& model, double t, const Grid& grid,
                              const ForecastOptions& opts) {
    return forecast_density_series(model, {t}, grid, opts);
}

double expectation(const SpectralForecastModel& model, const Vector& g_values, double t,
                   const ForecastOptions& opts) {
    if (g_values.size() != model.phi_train.cols())
        throw InputError("observable values do not match the training samples");
    const CVector ghat = weighted_mean(model.phi_train, g_values);
    return (coefficients_at(model, t, opts).transpose() * ghat)(0, 0).real();
}

double expectation(const SpectralForecastModel& model,
                   const std::function<double(const Eigen::Ref<const Vector>&)>& g, double t,
                   const ForecastOptions& opts) {
    Vector vals(model.train_X.cols());
    for (Eigen::Index m = 0; m < vals.size(); ++m) vals[m] = g(model.train_X.col(m));
    return expectation(model, vals, t, opts);
}

int dictionary_degree(const Dictionary& dict) {
    int deg = 0;
    for (const auto& term : dict.terms()) {
        deg = std::max(deg, std::visit(
                                [](const auto& t) -> int {
                                    using T = std::decay_t<decltype(t)>;
                                    if constexpr (std::is_same_v<T, MonomialTerm>) {
                                        int s = 0;
                                        for (int e : t.exponents) s += e;
                                        return s;
                                    } else if constexpr (std::is_same_v<T, HermiteTerm>) {
                                        return t.degree;
                                    } else {
                                        return t.power;
                                    }
                                },
                                term));
    }
    return deg;
}

double MomentSeries::at(double t, int dim, int order) const {
    for (const auto& r : rows)
        if (r.t == t && r.dim == dim && r.order == order) return r.value;
    throw InputError("moment series has no entry for the requested (t, dim, order)");
}

MomentSeries raw_moments(const SpectralForecastModel& model, const std::vector<int>& orders,
                         const std::vector<double>& times, const ForecastOptions& opts) {
    MomentSeries out;
    const int d = static_cast<int>(model.train_X.rows());
    const int degree = dictionary_degree(model.koopman.dict);
    for (int k : orders) {
        if (k < 1) throw InputError("moment orders must be positive");
        if (k > 2 * degree)
            out.warnings.push_back("moment order " + std::to_string(k) +
                                   " exceeds twice the dictionary degree (" + std::to_string(degree) + ")");
    }
    // ghat for every (dim, order) once; the time loop only rescales coefficients.
    std::vector<CVector> ghat;
    for (int j = 0; j < d; ++j)
        for (int k : orders) {
            const Vector g = model.train_X.row(j).array().pow(k).matrix().transpose();
            ghat.push_back(weighted_mean(model.phi_train, g));
        }
    for (double t : times) {
        const CVector c = coefficients_at(model, t, opts);
        std::size_t idx = 0;
        for (int j = 0; j < d; ++j)
            for (int k : orders)
                out.rows.push_back({t, j + 1, k, (c.transpose() * ghat[idx++])(0, 0).real()});
    }
    return out;
}

} // namespace dpdd
