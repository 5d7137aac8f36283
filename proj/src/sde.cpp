#include "dpdd/sde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dpdd/parallel.hpp"

namespace dpdd {

Vector SdeModel::drift_at(const Vector& x) const {
    if (x.size() != dim_state)
        throw InputError("state has length " + std::to_string(x.size()) + ", model '" + name +
                         "' expects " + std::to_string(dim_state));
    Vector out = Vector::Zero(dim_state);
    drift(x, out);
    return out;
}

Matrix SdeModel::diffusion_at(const Vector& x) const {
    if (x.size() != dim_state)
        throw InputError("state has length " + std::to_string(x.size()) + ", model '" + name +
                         "' expects " + std::to_string(dim_state));
    Matrix out = Matrix::Zero(dim_state, dim_noise);
    diffusion(x, out);
    return out;
}

Matrix SdeModel::covariance_at(const Vector& x) const {
    const Matrix s = diffusion_at(x);
    return s * s.transpose();
}

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("dt must be a positive finite number");
    if (n_steps < 1) throw InputError("n_steps must be at least 1");
}

void SnapshotPairs::validate() const {
    if (X.rows() != Y.rows() || X.cols() != Y.cols())
        throw InputError("snapshot matrices X and Y differ in shape");
    if (X.cols() == 0) throw InputError("snapshot pairs are empty");
    if (!(dt > 0.0)) throw InputError("snapshot interval dt must be positive");
}

const std::vector<std::string>& builtin_model_names() {
    static const std::vector<std::string> names{"double-well", "ou", "turbulence2d", "lorenz63"};
    return names;
}

namespace {

double take(std::map<std::string, double>& params, const std::map<std::string, double>& overrides,
            const std::string& key) {
    auto it = overrides.find(key);
    if (it != overrides.end()) params[key] = it->second;
    return params.at(key);
}

void check_overrides(const std::string& model, const std::map<std::string, double>& params,
                     const std::map<std::string, double>& overrides) {
    for (const auto& [key, value] : overrides) {
        if (!params.count(key)) {
            std::ostringstream msg;
            msg << "model '" << model << "' has no parameter '" << key << "' (valid:";
            for (const auto& [k, v] : params) msg << ' ' << k;
            msg << ')';
            throw InputError(msg.str());
        }
        if (!std::isfinite(value)) throw InputError("parameter '" + key + "' is not finite");
    }
}

SdeModel make_constant_noise(SdeModel m, Matrix sigma) {
    m.dim_noise = static_cast<int>(sigma.cols());
    m.additive_noise = true;
    m.diffusion = [sigma](const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) { out = sigma; };
    m.diffusion_dx = [](const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) { out.setZero(); };
    return m;
}

} // namespace

SdeModel builtin_model(const std::string& requested, const std::map<std::string, double>& overrides) {
    const std::string name = requested == "doublewell" ? "double-well" : requested;
    SdeModel m;
    m.name = name;

    if (name == "double-well") {
        m.params = {{"sigma", std::numbers::sqrt2}};
        check_overrides(name, m.params, overrides);
        const double sigma = take(m.params, overrides, "sigma");
        m.dim_state = 1;
        m.drift = [](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
            const double v = x[0];
            out[0] = -4.0 * v * (v - 1.0) * (v + 1.25);
        };
        return make_constant_noise(std::move(m), Matrix::Constant(1, 1, sigma));
    }
    if (name == "ou") {
        m.params = {{"lambda", 1.0}, {"beta", std::numbers::sqrt2}};
        check_overrides(name, m.params, overrides);
        const double lambda = take(m.params, overrides, "lambda");
        const double beta = take(m.params, overrides, "beta");
        m.dim_state = 1;
        m.drift = [lambda](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
            out[0] = -lambda * x[0];
        };
        return make_constant_noise(std::move(m), Matrix::Constant(1, 1, beta));
    }
    if (name == "turbulence2d") {
        m.params = {{"d", 0.5}, {"Lambda11", 1.0}, {"Lambda12", 0.25}, {"Lambda22", 1.0}};
        check_overrides(name, m.params, overrides);
        const double d = take(m.params, overrides, "d");
        const double l11 = take(m.params, overrides, "Lambda11");
        const double l12 = take(m.params, overrides, "Lambda12");
        const double l22 = take(m.params, overrides, "Lambda22");
        Matrix lambda(2, 2);
        lambda << l11, l12, l12, l22;
        Eigen::SelfAdjointEigenSolver<Matrix> es(lambda);
        if (es.eigenvalues().minCoeff() <= 0.0)
            throw InputError("turbulence2d: Lambda must be positive definite");
        m.dim_state = 2;
        m.drift = [d, l11, l12, l22](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
            const double u = x[0], v = x[1];
            out[0] = 0.5 * u * v - d * l11 * u + (1.0 - d * l12) * v;
            out[1] = -0.5 * u * u + (-1.0 - d * l12) * u - d * l22 * v;
        };
        return make_constant_noise(std::move(m), es.operatorSqrt());
    }
    if (name == "lorenz63") {
        m.params = {{"sigma", 10.0}, {"beta", 8.0 / 3.0}, {"rho", 28.0},
                    {"qx", 0.1},     {"qy", 0.1},         {"qz", 0.1}};
        check_overrides(name, m.params, overrides);
        const double s = take(m.params, overrides, "sigma");
        const double b = take(m.params, overrides, "beta");
        const double r = take(m.params, overrides, "rho");
        Matrix q = Matrix::Zero(3, 3);
        q(0, 0) = take(m.params, overrides, "qx");
        q(1, 1) = take(m.params, overrides, "qy");
        q(2, 2) = take(m.params, overrides, "qz");
        m.dim_state = 3;
        m.initial_state = Vector::Ones(3);
        m.drift = [s, b, r](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
            out[0] = s * (x[1] - x[0]);
            out[1] = x[0] * (r - x[2]) - x[1];
            out[2] = x[0] * x[1] - b * x[2];
        };
        return make_constant_noise(std::move(m), q);
    }

    std::ostringstream msg;
    msg << "unknown model '" << requested << "'; valid models:";
    for (const auto& n : builtin_model_names()) msg << ' ' << n;
    throw InputError(msg.str());
}

namespace {
void check_step_args(const SdeModel& model, const Vector& x, double dt, const Vector& noise) {
    if (x.size() != model.dim_state)
        throw InputError("state has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(model.dim_state));
    if (noise.size() != model.dim_noise)
        throw InputError("noise has length " + std::to_string(noise.size()) + ", expected " +
                         std::to_string(model.dim_noise));
    if (!(dt > 0.0)) throw InputError("dt must be positive");
}

double milstein_correction(const SdeModel& model, const Vector& x, double sigma) {
    Matrix ds(1, 1);
    if (model.diffusion_dx) {
        model.diffusion_dx(x, ds);
        return sigma * ds(0, 0);
    }
    const double h = 1e-6 * std::max(1.0, std::abs(x[0]));
    Vector xp = x, xm = x;
    xp[0] += h;
    xm[0] -= h;
    return sigma * (model.diffusion_at(xp)(0, 0) - model.diffusion_at(xm)(0, 0)) / (2.0 * h);
}
} // namespace

Vector em_step(const SdeModel& model, const Vector& x, double dt, const Vector& noise) {
    check_step_args(model, x, dt, noise);
    return x + model.drift_at(x) * dt + model.diffusion_at(x) * noise;
}

Vector milstein_step(const SdeModel& model, const Vector& x, double dt, const Vector& noise) {
    check_step_args(model, x, dt, noise);
    if (model.dim_state != 1 || model.dim_noise != 1)
        throw UnsupportedError("Milstein scheme is implemented for scalar SDEs only");
    const double sigma = model.diffusion_at(x)(0, 0);
    const double corr = milstein_correction(model, x, sigma);
    Vector out = em_step(model, x, dt, noise);
    out[0] += 0.5 * corr * (noise[0] * noise[0] - dt);
    return out;
}

std::size_t default_burn_in(std::size_t kept_steps) {
    // burn = 0.2 * (burn + kept)  <=>  burn = kept / 4
    return std::max<std::size_t>(10000, (kept_steps + 3) / 4);
}

PathStepper::PathStepper(const SdeModel& model, double dt, Scheme scheme, std::uint64_t seed,
                         std::uint64_t stream)
    : model_(model), dt_(dt), sqrt_dt_(std::sqrt(dt)), scheme_(scheme), rng_(seed, stream),
      drift_(Vector::Zero(model.dim_state)), noise_(Vector::Zero(model.dim_noise)),
      sigma_(Matrix::Zero(model.dim_state, model.dim_noise)), sigma_dx_(Matrix::Zero(1, 1)),
      constant_sigma_(model.additive_noise) {
    if (!model.drift || !model.diffusion) throw InputError("model '" + model.name + "' is incomplete");
    if (scheme == Scheme::Milstein && (model.dim_state != 1 || model.dim_noise != 1))
        throw UnsupportedError("Milstein scheme is implemented for scalar SDEs only");
    if (constant_sigma_) model.diffusion(Vector::Zero(model.dim_state), sigma_);
}

void PathStepper::step(Eigen::Ref<Vector> x) {
    for (Eigen::Index j = 0; j < noise_.size(); ++j) noise_[j] = sqrt_dt_ * rng_.normal();
    model_.drift(x, drift_);
    if (!constant_sigma_) model_.diffusion(x, sigma_);
    if (scheme_ == Scheme::Milstein && !constant_sigma_) {
        const double corr = milstein_correction(model_, x, sigma_(0, 0));
        x[0] += drift_[0] * dt_ + sigma_(0, 0) * noise_[0] + 0.5 * corr * (noise_[0] * noise_[0] - dt_);
        return;
    }
    x.noalias() += dt_ * drift_;
    x.noalias() += sigma_ * noise_;
}

void PathStepper::advance(Eigen::Ref<Vector> x, std::size_t n, std::size_t first_step) {
    for (std::size_t k = 0; k < n; ++k) {
        step(x);
        if (!x.allFinite())
            throw SimulationDivergedError(first_step + k + 1,
                                          "simulation of '" + model_.name + "' diverged at step " +
                                              std::to_string(first_step + k + 1));
    }
}

Matrix simulate_trajectory(const SdeModel& model, const Vector& x0, const SimConfig& config,
                           std::uint64_t stream) {
    if (!(config.dt > 0.0)) throw InputError("dt must be positive");
    if (x0.size() != model.dim_state)
        throw InputError("initial state has length " + std::to_string(x0.size()) + ", expected " +
                         std::to_string(model.dim_state));
    Matrix states(model.dim_state, config.n_steps + 1);
    states.col(0) = x0;
    PathStepper stepper(model, config.dt, config.scheme, config.seed, stream);
    Vector x = x0;
    for (std::size_t k = 0; k < config.n_steps; ++k) {
        stepper.advance(x, 1, k);
        states.col(k + 1) = x;
    }
    return states;
}

SnapshotPairs sample_stationary_pairs(const SdeModel& model, const SimConfig& config, std::size_t M,
                                      SamplingMode mode, std::optional<Vector> x0) {
    if (M < 1) throw InputError("M must be positive");
    if (!(config.dt > 0.0)) throw InputError("dt must be positive");
    Vector start = x0 ? *x0
                      : (model.initial_state.size() == model.dim_state
                             ? model.initial_state
                             : Vector::Zero(model.dim_state));
    if (start.size() != model.dim_state) throw InputError("initial state has the wrong length");

    SnapshotPairs pairs;
    pairs.dt = config.dt;
    pairs.source_seed = config.seed;
    pairs.X.resize(model.dim_state, static_cast<Eigen::Index>(M));
    pairs.Y.resize(model.dim_state, static_cast<Eigen::Index>(M));

    if (mode == SamplingMode::SingleTrajectory) {
        const std::size_t burn = config.burn_in_steps.value_or(default_burn_in(M));
        PathStepper stepper(model, config.dt, config.scheme, config.seed, 0);
        Vector x = start;
        stepper.advance(x, burn, 0);
        for (std::size_t m = 0; m < M; ++m) {
            pairs.X.col(static_cast<Eigen::Index>(m)) = x;
            stepper.advance(x, 1, burn + m);
            pairs.Y.col(static_cast<Eigen::Index>(m)) = x;
        }
        return pairs;
    }

    const std::size_t burn = config.burn_in_steps.value_or(10000);
    parallel_for(M, 256, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            PathStepper stepper(model, config.dt, config.scheme, config.seed, j);
            Vector x = start;
            try {
                stepper.advance(x, burn, 0);
                pairs.X.col(static_cast<Eigen::Index>(j)) = x;
                stepper.advance(x, 1, burn);
            } catch (const SimulationDivergedError& e) {
                throw SimulationDivergedError(e.step(), std::string(e.what()) + " (trajectory " +
                                                            std::to_string(j) + ")");
            }
            pairs.Y.col(static_cast<Eigen::Index>(j)) = x;
        }
    });
    return pairs;
}

} // namespace dpdd
