#include "dpdd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dpdd/parallel.hpp"

namespace dpdd {

void FpeConfig::validate() const {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) throw InputError("FP domain needs a < b");
    if (n_cells < 50) throw InputError("FP solver needs at least 50 cells");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("FP time step must be positive");
    if (rannacher_steps < 0) throw InputError("Rannacher step count must be nonnegative");
}

Grid FpeConfig::grid() const {
    const double h = cell_width();
    return Grid({Axis{a + 0.5 * h, b - 0.5 * h, n_cells}});
}

namespace {

void require_scalar(const SdeModel& model) {
    if (model.dim_state != 1) throw UnsupportedError("the Fokker-Planck solver is one-dimensional");
}

double drift1(const SdeModel& model, double x) { return model.drift_at(Vector::Constant(1, x))[0]; }
double diff1(const SdeModel& model, double x) { return 0.5 * model.covariance_at(Vector::Constant(1, x))(0, 0); }

/// Face coefficients J_{i+1/2} = alpha_i p_i + beta_i p_{i+1}.
struct FaceCoefficients {
    Vector alpha;
    Vector beta;
};

FaceCoefficients face_coefficients(const SdeModel& model, const FpeConfig& cfg) {
    const std::size_t n = cfg.n_cells;
    const double h = cfg.cell_width();
    Vector D(n);
    for (std::size_t i = 0; i < n; ++i) D[i] = diff1(model, cfg.a + (i + 0.5) * h);
    FaceCoefficients fc{Vector(n - 1), Vector(n - 1)};
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double bf = drift1(model, cfg.a + (i + 1.0) * h);
        fc.alpha[i] = 0.5 * bf + D[i] / h;
        fc.beta[i] = 0.5 * bf - D[i + 1] / h;
    }
    return fc;
}

/// Tridiagonal generator rows: lower[i] couples i-1, upper[i] couples i+1.
struct Tridiagonal {
    Vector lower, diag, upper;
};

Tridiagonal fp_matrix(const FaceCoefficients& fc, double h) {
    const Eigen::Index n = fc.alpha.size() + 1;
    Tridiagonal A{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        // Flux through face i+1/2 leaves cell i and enters cell i+1.
        A.diag[i] -= fc.alpha[i] / h;
        A.upper[i] -= fc.beta[i] / h;
        A.lower[i + 1] += fc.alpha[i] / h;
        A.diag[i + 1] += fc.beta[i] / h;
    }
    return A;
}

/// Factorization of I - c A for repeated Thomas solves.
class TridiagonalSolver {
public:
    TridiagonalSolver(const Tridiagonal& A, double c) : n_(A.diag.size()), lower_(-c * A.lower), cp_(n_), inv_(n_) {
        double prev_cp = 0.0;
        for (Eigen::Index i = 0; i < n_; ++i) {
            const double denom = 1.0 - c * A.diag[i] - lower_[i] * prev_cp;
            if (!(std::abs(denom) > 1e-300)) throw NumericalError("singular Fokker-Planck system");
            inv_[i] = 1.0 / denom;
            cp_[i] = -c * A.upper[i] * inv_[i];
            prev_cp = cp_[i];
        }
    }

    void solve(Vector& rhs) const {
        for (Eigen::Index i = 0; i < n_; ++i) rhs[i] = (rhs[i] - (i > 0 ? lower_[i] * rhs[i - 1] : 0.0)) * inv_[i];
        for (Eigen::Index i = n_ - 2; i >= 0; --i) rhs[i] -= cp_[i] * rhs[i + 1];
    }

private:
    Eigen::Index n_;
    Vector lower_, cp_, inv_;
};

/// out = p + c A p
void explicit_part(const Tridiagonal& A, double c, const Vector& p, Vector& out) {
    const Eigen::Index n = p.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = A.diag[i] * p[i];
        if (i > 0) v += A.lower[i] * p[i - 1];
        if (i + 1 < n) v += A.upper[i] * p[i + 1];
        out[i] = p[i] + c * v;
    }
}

} // namespace

DensityField fpe_solve_1d(const SdeModel& model, const Vector& p0, const FpeConfig& config,
                          const std::vector<double>& times) {
    require_scalar(model);
    config.validate();
    const auto n = static_cast<Eigen::Index>(config.n_cells);
    if (p0.size() != n) throw InputError("initial density must have one value per cell");
    if (!p0.allFinite() || p0.minCoeff() < 0.0) throw InputError("initial density must be finite and nonnegative");
    const double h = config.cell_width();
    const double mass0 = h * p0.sum();
    if (std::abs(mass0 - 1.0) > 1e-6)
        throw InputError("initial density integrates to " + std::to_string(mass0) + ", expected 1 within 1e-6");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0) || !std::isfinite(times[i])) throw InputError("output times must be nonnegative");
        if (i > 0 && !(times[i] > times[i - 1])) throw InputError("output times must be strictly ascending");
    }

    const Tridiagonal A = fp_matrix(face_coefficients(model, config), h);
    const double dt = config.dt;
    const TridiagonalSolver cn(A, 0.5 * dt);

    DensityField field;
    field.grid = config.grid();
    field.producer = "fpe";
    Vector p = p0;
    Vector work(n);
    long long step = 0;
    double mass = mass0;
    auto emit = [&](double t) {
        FieldInfo info;
        info.mass = h * p.sum();
        info.min_value = p.minCoeff();
        field.push(t, p, info);
    };
    for (double t : times) {
        const long long target = std::llround(t / dt);
        while (step < target) {
            if (step < config.rannacher_steps) {
                // Backward Euler over dt/2 shares the Crank-Nicolson left-hand side.
                cn.solve(p);
                cn.solve(p);
            } else {
                explicit_part(A, 0.5 * dt, p, work);
                cn.solve(work);
                p.swap(work);
            }
            ++step;
            const double m = h * p.sum();
            if (!std::isfinite(m) || std::abs(m - mass) > config.max_mass_drift)
                throw InputError("Fokker-Planck step " + std::to_string(step) + " changed the mass by " +
                                 std::to_string(m - mass) + "; reduce dt or refine the grid");
            mass = m;
        }
        emit(t);
    }
    return field;
}

Vector fpe_stationary_1d(const SdeModel& model, const FpeConfig& config) {
    require_scalar(model);
    config.validate();
    const FaceCoefficients fc = face_coefficients(model, config);
    const auto n = static_cast<Eigen::Index>(config.n_cells);
    Vector logp(n);
    logp[0] = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        if (!(fc.alpha[i] > 0.0) || !(fc.beta[i] < 0.0))
            throw InputError("cell Peclet number exceeds 1 at face " + std::to_string(i) + "; refine the grid");
        logp[i + 1] = logp[i] + std::log(fc.alpha[i] / -fc.beta[i]);
    }
    Vector p = (logp.array() - logp.maxCoeff()).exp().matrix();
    return p / (config.cell_width() * p.sum());
}

Vector fpe_face_flux(const SdeModel& model, const FpeConfig& config, const Vector& p) {
    require_scalar(model);
    config.validate();
    if (p.size() != static_cast<Eigen::Index>(config.n_cells)) throw InputError("density must have one value per cell");
    const FaceCoefficients fc = face_coefficients(model, config);
    return fc.alpha.cwiseProduct(p.head(p.size() - 1)) + fc.beta.cwiseProduct(p.tail(p.size() - 1));
}

Vector fokker_planck_apply(const SdeModel& model, const Grid& grid, const Vector& p) {
    require_scalar(model);
    if (grid.dim() != 1) throw InputError("grid must be one-dimensional");
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (p.size() != n) throw InputError("density size does not match the grid");
    const Axis& ax = grid.axes()[0];
    const double h = ax.spacing();
    Vector f(n), g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = ax.point(static_cast<std::size_t>(i));
        f[i] = drift1(model, x) * p[i];
        g[i] = diff1(model, x) * p[i];
    }
    Vector out = Vector::Zero(n);
    for (Eigen::Index i = 1; i + 1 < n; ++i)
        out[i] = -(f[i + 1] - f[i - 1]) / (2.0 * h) + (g[i + 1] - 2.0 * g[i] + g[i - 1]) / (h * h);
    return out;
}

DensityField ou_analytic(double m0, double v0, const std::vector<double>& times, const Grid& grid, double lambda,
                         double beta) {
    if (grid.dim() != 1) throw InputError("the OU reference is one-dimensional");
    if (v0 < 0.0) throw InputError("initial variance must be nonnegative");
    if (!(lambda > 0.0)) throw InputError("OU rate must be positive");
    const Matrix P = grid.points();
    DensityField field;
    field.grid = grid;
    field.producer = "analytic";
    const double vs = beta * beta / (2.0 * lambda);
    for (double t : times) {
        if (!(t >= 0.0)) throw InputError("times must be nonnegative");
        const double decay = std::exp(-lambda * t);
        const double mean = m0 * decay;
        const double var = v0 * decay * decay + vs * (1.0 - decay * decay);
        if (!(var > 0.0)) throw UnsupportedError("a point initial condition has no density at t = 0");
        const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
        Vector v = (-(P.row(0).array() - mean).square() / (2.0 * var)).exp().matrix().transpose() * norm;
        FieldInfo info;
        info.mass = grid_integral(grid, v);
        field.push(t, std::move(v), info);
    }
    return field;
}

DensityField ou_analytic(double x0, double t, const Grid& grid) { return ou_analytic(x0, 0.0, {t}, grid); }

DensityField doublewell_ps(const Grid& grid, double sigma) {
    if (grid.dim() != 1) throw InputError("the double-well density is one-dimensional");
    if (!(sigma > 0.0)) throw InputError("sigma must be positive");
    const Matrix P = grid.points();
    const auto x = P.row(0).array();
    const Eigen::ArrayXd expo = -(2.0 / (sigma * sigma)) * (x.pow(4) + x.pow(3) / 3.0 - 2.5 * x.square());
    Vector v = (expo - expo.maxCoeff()).exp().matrix().transpose();
    v /= grid_integral(grid, v);
    DensityField field;
    field.grid = grid;
    field.producer = "analytic";
    const double peak = v.maxCoeff();
    if (std::max(v[0], v[v.size() - 1]) > 1e-6 * peak)
        field.warnings.push_back("grid does not cover the double-well support: end value exceeds 1e-6 of the peak");
    FieldInfo info;
    info.mass = 1.0;
    info.min_value = v.minCoeff();
    field.push(0.0, std::move(v), info);
    return field;
}

EnsembleResult ensemble_forecast(const SdeModel& model, const InitialDensity& p0, std::size_t n_particles, double t,
                                 const std::optional<Grid>& grid, std::uint64_t seed, double dt) {
    if (n_particles == 0) throw InputError("ensemble needs at least one particle");
    if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("forecast time must be nonnegative");
    if (!(dt > 0.0)) throw InputError("time step must be positive");
    if (p0.is_stationary()) throw UnsupportedError("the ensemble needs a sampleable initial density");
    if (p0.dim() != model.dim_state) throw InputError("initial density dimension does not match the model");
    if (grid && grid->dim() != model.dim_state) throw InputError("grid dimension does not match the model");
    if (grid && grid->dim() > 2) throw UnsupportedError("ensemble density fields are limited to d <= 2");

    const auto steps = static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
    const double h = steps > 0 ? t / static_cast<double>(steps) : dt;
    const std::uint64_t start_key = seed ^ 0x9e3779b97f4a7c15ull;

    EnsembleResult res;
    res.t = t;
    res.cloud.resize(model.dim_state, static_cast<Eigen::Index>(n_particles));
    parallel_for(n_particles, 256, [&](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j) {
            Philox4x32 start(start_key, j);
            Vector x = p0.sample(start);
            PathStepper stepper(model, h, Scheme::EulerMaruyama, seed, j);
            try {
                stepper.advance(x, steps);
            } catch (const SimulationDivergedError& err) {
                throw SimulationDivergedError(err.step(), "particle " + std::to_string(j) + ": " + err.what());
            }
            res.cloud.col(static_cast<Eigen::Index>(j)) = x;
        }
    });
    if (grid) {
        const StationaryDensity kde = kde_fit(res.cloud, KdeRule::Silverman);
        DensityField field;
        field.grid = *grid;
        field.producer = "ensemble";
        Vector v = kde.eval_many(grid->points());
        FieldInfo info;
        info.mass = grid_integral(*grid, v);
        info.min_value = v.minCoeff();
        field.push(t, std::move(v), info);
        res.field = std::move(field);
    }
    return res;
}

std::vector<double> sample_raw_moments(const Matrix& cloud, const std::vector<int>& orders) {
    if (cloud.cols() == 0) throw InputError("empty particle cloud");
    std::vector<double> out;
    for (Eigen::Index j = 0; j < cloud.rows(); ++j)
        for (int k : orders) {
            if (k < 1) throw InputError("moment orders must be positive");
            out.push_back(cloud.row(j).array().pow(k).mean());
        }
    return out;
}

ErrorReport error_metrics(const DensityField& candidate, const DensityField& reference) {
    if (!(candidate.grid == reference.grid)) throw InputError("density fields are on different grids");
    if (candidate.times.size() != reference.times.size()) throw InputError("density fields have different times");
    const Vector w = reference.grid.trapezoid_weights();
    ErrorReport rep;
    for (std::size_t i = 0; i < candidate.times.size(); ++i) {
        const double t = reference.times[i];
        if (std::abs(candidate.times[i] - t) > 1e-9 * std::max(1.0, std::abs(t)))
            throw InputError("density fields have different times");
        const Vector diff = candidate.values[i] - reference.values[i];
        ErrorReport::PerTime pt;
        pt.t = t;
        const double ref_norm = std::sqrt(w.dot(reference.values[i].cwiseAbs2()));
        const double err_norm = std::sqrt(w.dot(diff.cwiseAbs2()));
        pt.rel_l2 = ref_norm > 0.0 ? err_norm / ref_norm : (err_norm > 0.0 ? INFINITY : 0.0);
        pt.l1 = w.dot(diff.cwiseAbs());
        pt.linf = diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0;
        rep.rel_l2 = std::max(rep.rel_l2, pt.rel_l2);
        rep.l1 = std::max(rep.l1, pt.l1);
        rep.linf = std::max(rep.linf, pt.linf);
        rep.per_time.push_back(pt);
    }
    return rep;
}

} // namespace dpdd
