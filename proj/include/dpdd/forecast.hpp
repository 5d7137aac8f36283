#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dpdd/densities.hpp"
#include "dpdd/edmd.hpp"
#include "dpdd/grid.hpp"

namespace dpdd {

/// Koopman spectrum plus invariant density and frozen expansion coefficients.
///
/// p_N(x, t) = Re[ sum_i c0_i exp(lambda_i t) phi_i(x) ] p_s(x).
struct SpectralForecastModel {
    KoopmanModel koopman;
    StationaryDensity ps;
    CVector c0;
    Matrix train_X;
    CMatrix phi_train;  ///< phi_i(x_m) on the training states, N x M
};

/// w_m = p_0(x_m) / p_s(x_m) in log space; exactly 1 when p_0 is the stationary alias.
/// Throws DegenerateDataError naming the sample when p_s(x_m) < 1e-300.
Vector importance_weights(const StationaryDensity& ps, const InitialDensity& p0, const Matrix& X);

/// Importance-sampling estimate c0_i = (1/M) sum_m phi_i(x_m) p_0(x_m) / p_s(x_m).
///
/// Weights are formed in log space. Throws DegenerateDataError naming the
/// sample when p_s(x_m) < 1e-300.
CVector coefficients(const KoopmanModel& koopman, const StationaryDensity& ps, const InitialDensity& p0,
                     const Matrix& train_X);

/// Same estimate with phi already evaluated on train_X.
CVector coefficients(const CMatrix& phi_train, const StationaryDensity& ps, const InitialDensity& p0,
                     const Matrix& train_X);

SpectralForecastModel make_forecast_model(KoopmanModel koopman, StationaryDensity ps,
                                          const InitialDensity& p0, Matrix train_X);

struct ForecastOptions {
    /// Exclude modes with Re(lambda) > 1e-6.
    bool drop_unstable = false;
    /// Zero negative values and rescale to unit grid integral.
    bool clip_negative = false;
};

/// c_i(t) = c0_i exp(lambda_i t); dropped modes contribute zero.
CVector coefficients_at(const SpectralForecastModel& model, double t, const ForecastOptions& opts = {});

/// Density on a grid (d <= 3) at one time.
DensityField forecast_density(const SpectralForecastModel& model, double t, const Grid& grid,
                              const ForecastOptions& opts = {});

/// Density on a grid at several ascending times; eigenfunctions and p_s are evaluated once.
DensityField forecast_density_series(const SpectralForecastModel& model, const std::vector<double>& times,
                                     const Grid& grid, const ForecastOptions& opts = {});

/// Density at arbitrary points (used for scattered output in any dimension).
Vector forecast_at_points(const SpectralForecastModel& model, double t, const Matrix& X,
                          const ForecastOptions& opts = {}, double* max_imag = nullptr);

/// E[g](t) = Re[ sum_i c_i(t) ghat_i ] with ghat_i = (1/M) sum_m g(x_m) phi_i(x_m).
/// g_values holds g at the training states.
double expectation(const SpectralForecastModel& model, const Vector& g_values, double t,
                   const ForecastOptions& opts = {});
double expectation(const SpectralForecastModel& model,
                   const std::function<double(const Eigen::Ref<const Vector>&)>& g, double t,
                   const ForecastOptions& opts = {});

struct MomentSeries {
    struct Row {
        double t = 0.0;
        int dim = 1;  ///< 1-based coordinate index
        int order = 1;
        double value = 0.0;
    };
    std::vector<Row> rows;
    std::vector<std::string> warnings;

    /// Value for (t, dim, order); throws when absent.
    double at(double t, int dim, int order) const;
};

/// E[x_j^k](t) for every coordinate j, order k and time.
MomentSeries raw_moments(const SpectralForecastModel& model, const std::vector<int>& orders,
                         const std::vector<double>& times, const ForecastOptions& opts = {});

/// Highest polynomial degree represented in the dictionary.
int dictionary_degree(const Dictionary& dict);

} // namespace dpdd
