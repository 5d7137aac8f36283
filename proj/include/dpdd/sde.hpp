#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpdd/common.hpp"
#include "dpdd/rng.hpp"

namespace dpdd {

using DriftFn = std::function<void(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out)>;
using DiffusionFn = std::function<void(const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out)>;

/// Autonomous Ito SDE  dX = b(X) dt + sigma(X) dW  with X in R^d and W in R^s.
struct SdeModel {
    std::string name;
    int dim_state = 0;
    int dim_noise = 0;
    DriftFn drift;
    DiffusionFn diffusion;
    /// d(sigma)/dx for 1-D Milstein; empty means a central difference is used.
    DiffusionFn diffusion_dx;
    std::map<std::string, double> params;
    /// sigma does not depend on the state.
    bool additive_noise = false;
    /// Start of stationary sampling runs; zero when empty.
    Vector initial_state;

    Vector drift_at(const Vector& x) const;
    Matrix diffusion_at(const Vector& x) const;
    /// Sigma * Sigma^T.
    Matrix covariance_at(const Vector& x) const;
};

enum class Scheme { EulerMaruyama, Milstein };
enum class SamplingMode { SingleTrajectory, Ensemble };

struct SimConfig {
    double dt = 0.01;
    std::size_t n_steps = 1;
    /// Unset selects default_burn_in().
    std::optional<std::size_t> burn_in_steps;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::EulerMaruyama;

    void validate() const;
};

/// Column m of Y is column m of X advanced by dt.
struct SnapshotPairs {
    Matrix X;
    Matrix Y;
    double dt = 0.0;
    std::optional<std::uint64_t> source_seed;

    int dim() const { return static_cast<int>(X.rows()); }
    std::size_t size() const { return static_cast<std::size_t>(X.cols()); }
    void validate() const;
};

const std::vector<std::string>& builtin_model_names();

/// One of the four benchmark systems with their standard parameters.
/// Names: double-well (alias doublewell), ou, turbulence2d, lorenz63.
SdeModel builtin_model(const std::string& name,
                       const std::map<std::string, double>& overrides = {});

/// x + b(x) dt + sigma(x) noise, where noise is the Brownian increment.
Vector em_step(const SdeModel& model, const Vector& x, double dt, const Vector& noise);

/// Milstein step; only for scalar SDEs (d = s = 1).
Vector milstein_step(const SdeModel& model, const Vector& x, double dt, const Vector& noise);

/// Burn-in used when SimConfig leaves it unset: max(10^4, 20% of the run).
std::size_t default_burn_in(std::size_t kept_steps);

/// Allocation-free integrator for one path; owns the path's RNG stream.
class PathStepper {
public:
    PathStepper(const SdeModel& model, double dt, Scheme scheme, std::uint64_t seed,
                std::uint64_t stream);

    /// Advances x in place by one step with a fresh Gaussian increment.
    void step(Eigen::Ref<Vector> x);
    /// Advances n steps; throws SimulationDivergedError naming the step index
    /// (counted from first_step) when a component stops being finite.
    void advance(Eigen::Ref<Vector> x, std::size_t n, std::size_t first_step = 0);

private:
    const SdeModel& model_;
    double dt_;
    double sqrt_dt_;
    Scheme scheme_;
    Philox4x32 rng_;
    Vector drift_;
    Vector noise_;
    Matrix sigma_;
    Matrix sigma_dx_;
    bool constant_sigma_;
};

/// States x_0 .. x_n (n = config.n_steps) as columns. Deterministic in (model, config, stream).
Matrix simulate_trajectory(const SdeModel& model, const Vector& x0, const SimConfig& config,
                           std::uint64_t stream = 0);

/// Pairs (x_m, y_m) sampled after burn-in.
///
/// SingleTrajectory: consecutive states of one run. Ensemble: M independent
/// runs (stream = run index), each contributing its final step.
SnapshotPairs sample_stationary_pairs(const SdeModel& model, const SimConfig& config,
                                      std::size_t M, SamplingMode mode,
                                      std::optional<Vector> x0 = std::nullopt);

} // namespace dpdd
