#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpdd/densities.hpp"
#include "dpdd/grid.hpp"
#include "dpdd/sde.hpp"

namespace dpdd {

/// Cell-centred finite-volume setup for the 1-D Fokker-Planck equation with zero-flux walls.
struct FpeConfig {
    double a = -2.5;
    double b = 2.5;
    std::size_t n_cells = 2000;
    double dt = 1e-3;
    /// Leading Crank-Nicolson steps replaced by two backward-Euler half steps each.
    int rannacher_steps = 2;
    /// Mass change per step above which the run is rejected.
    double max_mass_drift = 1e-6;

    void validate() const;
    double cell_width() const { return (b - a) / static_cast<double>(n_cells); }
    /// Axis through the cell centres.
    Grid grid() const;
};

/// Crank-Nicolson solution of dp/dt = -d/dx J, J = b p - d/dx (D p), D = sigma^2 / 2,
/// with J = 0 on both walls. p0 holds cell-centre values. Outputs at the steps nearest the
/// requested times.
DensityField fpe_solve_1d(const SdeModel& model, const Vector& p0, const FpeConfig& config,
                          const std::vector<double>& times);

/// Discrete stationary state: the density with zero flux at every face, unit cell-sum mass.
Vector fpe_stationary_1d(const SdeModel& model, const FpeConfig& config);

/// Discrete flux at the n_cells - 1 interior faces.
Vector fpe_face_flux(const SdeModel& model, const FpeConfig& config, const Vector& p);

/// L* p = -d/dx (b p) + d^2/dx^2 (D p) by central differences at interior nodes of a
/// uniform 1-D grid; the two end values are zero.
Vector fokker_planck_apply(const SdeModel& model, const Grid& grid, const Vector& p);

/// OU density with drift -lambda x and noise beta from N(m0, v0); v0 = 0 is a point start.
/// Mean m0 e^{-lambda t}, variance v0 e^{-2 lambda t} + beta^2 (1 - e^{-2 lambda t}) / (2 lambda).
DensityField ou_analytic(double m0, double v0, const std::vector<double>& times, const Grid& grid,
                         double lambda = 1.0, double beta = 1.4142135623730951);

/// Point-start form: p(x, t | x0) for t > 0.
DensityField ou_analytic(double x0, double t, const Grid& grid);

/// exp(-(2/sigma^2)(x^4 + x^3/3 - 5x^2/2)) normalised by trapezoid quadrature on the grid.
/// Adds a coverage warning when an end value exceeds 1e-6 of the peak.
DensityField doublewell_ps(const Grid& grid, double sigma = 1.4142135623730951);

struct EnsembleResult {
    Matrix cloud;  ///< d x n_particles terminal states
    double t = 0.0;
    std::optional<DensityField> field;
};

/// Propagates n_particles paths from samples of p0 to time t by Euler-Maruyama. Particle j
/// draws its start and its increments from stream j. A grid (d <= 2) adds a Silverman KDE field.
EnsembleResult ensemble_forecast(const SdeModel& model, const InitialDensity& p0, std::size_t n_particles,
                                 double t, const std::optional<Grid>& grid, std::uint64_t seed,
                                 double dt = 0.01);

/// Raw sample moments mean(x_j^k) for each coordinate and order, rows (t, dim, order, value)
/// in the order dim-major then order.
std::vector<double> sample_raw_moments(const Matrix& cloud, const std::vector<int>& orders);

struct ErrorReport {
    struct PerTime {
        double t = 0.0;
        double rel_l2 = 0.0;
        double l1 = 0.0;
        double linf = 0.0;
    };
    /// Aggregates are maxima over times.
    double rel_l2 = 0.0;
    double l1 = 0.0;
    double linf = 0.0;
    std::vector<PerTime> per_time;
};

/// rel_l2 = |p_hat - p|_2 / |p|_2 and l1 under the trapezoid rule, linf pointwise.
ErrorReport error_metrics(const DensityField& candidate, const DensityField& reference);

} // namespace dpdd
