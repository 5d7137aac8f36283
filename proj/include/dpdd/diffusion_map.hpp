#pragma once

#include <string>
#include <vector>

#include "dpdd/densities.hpp"
#include "dpdd/linalg.hpp"
#include "dpdd/forecast.hpp"
#include "dpdd/sde.hpp"

namespace dpdd {

/// Divisor of the generator L = (P - I) / delta.
enum class GeneratorScale {
    Standard,  ///< delta = eps^2 / 2, consistent with the exp(-r^2 / (2 eps^2)) kernel
    Literal,   ///< delta = eps
};

struct DiffusionMapOptions {
    double epsilon = 0.0;  ///< 0 selects auto_bandwidth
    GeneratorScale scale = GeneratorScale::Standard;
    double kernel_cutoff = 1e-12;
    /// Kernel matrices up to this many rows are stored; larger ones are recomputed per product.
    Eigen::Index dense_limit = 12000;
    SymEigOptions eig;
};

/// Diffusion-map basis on stationary samples.
struct DiffusionMapModel {
    Matrix samples;          ///< d x M
    double epsilon = 0.0;
    Vector q_eps;            ///< kernel density estimate sum_j k(x_i, x_j)
    Vector degree;           ///< row sums D of the renormalized kernel
    Vector eigvals;          ///< generator eigenvalues, descending (0 first)
    Matrix eigvecs;          ///< M x k, unit empirical norm
    double generator_scale = 0.0;
    GeneratorScale mode = GeneratorScale::Standard;
    double kernel_cutoff = 1e-12;
    bool converged = false;
    double max_residual = 0.0;
    std::vector<std::string> warnings;

    int size() const { return static_cast<int>(eigvals.size()); }
};

/// 0.25 times the median pairwise distance over an evenly strided subsample of at most 2000 points.
double auto_bandwidth(const Matrix& samples);

/// Kernel exp(-|x-y|^2 / (2 eps^2)), K = k / sqrt(q q^T), P = D^{-1} K, L = (P - I) / delta;
/// returns the k slowest-decaying eigenpairs of L.
DiffusionMapModel diffusion_map(const Matrix& samples, int k, const DiffusionMapOptions& opts = {});

/// Dense Markov matrix P for a fitted model (small M only).
Matrix markov_matrix(const DiffusionMapModel& dm);

enum class LookupMode { Nearest, Exact };

/// Training index of each column of Y: bit-exact match first, then nearest sample
/// (Nearest) or InputError (Exact).
std::vector<Eigen::Index> lookup_samples(const Matrix& samples, const Matrix& Y, LookupMode mode);

/// B_kj = (1/M) sum_m phi_j(x_m) phi_k(y_m).
Matrix df_shift_matrix(const DiffusionMapModel& dm, const SnapshotPairs& pairs, LookupMode mode = LookupMode::Nearest);

struct DfModel {
    DiffusionMapModel dm;
    Matrix B;
    Vector c0_hat;
    double dt = 0.0;
    bool importance_weight = true;
};

DfModel make_df_model(DiffusionMapModel dm, const SnapshotPairs& pairs, LookupMode mode = LookupMode::Nearest);

/// c_j(0) = (1/M) sum_m phi_j(x_m) p_0(x_m) / p_s(x_m); without the weight the
/// divisor p_s is dropped.
Vector df_initial_coefficients(const DiffusionMapModel& dm, const StationaryDensity& ps, const InitialDensity& p0,
                               bool importance_weight = true);

struct DfForecast {
    int n_steps = 0;
    double t = 0.0;
    Vector coeffs;
    Vector density;  ///< at the training samples
};

/// c(n) = B^n c(0) and p = sum_k c_k phi_k p_s at the samples.
DfForecast df_forecast(const DfModel& model, const StationaryDensity& ps, int n_steps);
DfForecast df_forecast(DfModel& model, const StationaryDensity& ps, const InitialDensity& p0, int n_steps,
                       bool importance_weight = true);

/// E[x_j^k] after each step count in `steps`, using model.c0_hat.
MomentSeries df_raw_moments(const DfModel& model, const std::vector<int>& orders, const std::vector<int>& steps);

} // namespace dpdd
