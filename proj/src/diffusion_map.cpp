#include "dpdd/diffusion_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <unordered_map>

#include "dpdd/parallel.hpp"

namespace dpdd {

namespace {

constexpr std::size_t kRowBlock = 256;

/// Kernel rows [r0, r0 + rows) against all samples.
void kernel_rows(const Matrix& X, const Vector& sq, Eigen::Index r0, Eigen::Index rows, double eps, double cutoff,
                 Matrix& out) {
    const Eigen::Index M = X.cols();
    out.resize(rows, M);
    out.noalias() = -2.0 * (X.middleCols(r0, rows).transpose() * X);
    const double scale = -1.0 / (2.0 * eps * eps);
    for (Eigen::Index j = 0; j < M; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double d2 = std::max(0.0, out(i, j) + sq[r0 + i] + sq[j]);
            out(i, j) = d2 * scale;
        }
    for (Eigen::Index i = 0; i < rows; ++i) out(i, r0 + i) = 0.0;
    out = out.array().exp().matrix();
    out = (out.array() < cutoff).select(0.0, out);
}

/// Kernel access in stored or recomputed form.
class KernelMatrix {
public:
    KernelMatrix(const Matrix& X, double eps, double cutoff, Eigen::Index dense_limit)
        : X_(X), eps_(eps), cutoff_(cutoff), sq_(X.colwise().squaredNorm().transpose()) {
        if (X.cols() <= dense_limit) {
            dense_.resize(X.cols(), X.cols());
            for_each_block([&](Eigen::Index r0, const Matrix& blk) { dense_.middleRows(r0, blk.rows()) = blk; });
            stored_ = true;
        }
    }

    /// body(r0, block) for consecutive row blocks, in parallel over blocks.
    template <class Body>
    void for_each_block(Body&& body) const {
        const auto M = static_cast<std::size_t>(X_.cols());
        parallel_for(M, kRowBlock, [&](std::size_t b, std::size_t e) {
            const auto r0 = static_cast<Eigen::Index>(b);
            const auto rows = static_cast<Eigen::Index>(e - b);
            if (stored_) {
                body(r0, Matrix(dense_.middleRows(r0, rows)));
            } else {
                Matrix blk;
                kernel_rows(X_, sq_, r0, rows, eps_, cutoff_, blk);
                body(r0, blk);
            }
        });
    }

    /// out = diag(a) k diag(a) V.
    void scaled_product(const Vector& a, const Matrix& V, Matrix& out) const {
        const Matrix W = a.asDiagonal() * V;
        if (stored_) {
            out.noalias() = dense_ * W;
        } else {
            for_each_block([&](Eigen::Index r0, const Matrix& blk) { out.middleRows(r0, blk.rows()).noalias() = blk * W; });
        }
        out = a.asDiagonal() * out;
    }

private:
    const Matrix& X_;
    double eps_;
    double cutoff_;
    Vector sq_;
    Matrix dense_;
    bool stored_ = false;
};

double generator_divisor(double eps, GeneratorScale scale) {
    return scale == GeneratorScale::Standard ? 0.5 * eps * eps : eps;
}

} // namespace

double auto_bandwidth(const Matrix& samples) {
    const Eigen::Index M = samples.cols();
    if (M < 2) throw InputError("bandwidth selection needs at least two samples");
    const Eigen::Index n = std::min<Eigen::Index>(M, 2000);
    Matrix sub(samples.rows(), n);
    for (Eigen::Index i = 0; i < n; ++i) sub.col(i) = samples.col(i * M / n);
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) dist.push_back((sub.col(i) - sub.col(j)).norm());
    auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    double median = *mid;
    if (dist.size() % 2 == 0) median = 0.5 * (median + *std::max_element(dist.begin(), mid));
    const double eps = 0.25 * median;
    if (!(eps > 0.0)) throw BandwidthError("median pairwise distance is zero; samples are degenerate");
    return eps;
}

DiffusionMapModel diffusion_map(const Matrix& samples, int k, const DiffusionMapOptions& opts) {
    const Eigen::Index M = samples.cols();
    if (samples.rows() < 1) throw InputError("samples must have at least one row");
    if (k < 1) throw InputError("number of eigenpairs must be positive");
    if (M < k + 1) throw InputError("diffusion map needs M >= k + 1 samples (M = " + std::to_string(M) +
                                    ", k = " + std::to_string(k) + ")");
    if (!samples.allFinite()) throw InputError("samples contain non-finite values");
    if (opts.epsilon < 0.0 || !std::isfinite(opts.epsilon)) throw InputError("epsilon must be positive");

    DiffusionMapModel dm;
    dm.samples = samples;
    dm.epsilon = opts.epsilon > 0.0 ? opts.epsilon : auto_bandwidth(samples);
    dm.mode = opts.scale;
    dm.generator_scale = generator_divisor(dm.epsilon, opts.scale);
    dm.kernel_cutoff = opts.kernel_cutoff;

    const KernelMatrix kernel(dm.samples, dm.epsilon, opts.kernel_cutoff, opts.dense_limit);

    // q_i = sum_j k_ij
    dm.q_eps.resize(M);
    kernel.for_each_block([&](Eigen::Index r0, const Matrix& blk) {
        dm.q_eps.segment(r0, blk.rows()) = blk.rowwise().sum();
    });

    // D_i = sum_j k_ij / sqrt(q_i q_j); row spread and off-diagonal mass of P for bandwidth checks
    const Vector qis = dm.q_eps.cwiseSqrt().cwiseInverse();
    dm.degree.resize(M);
    Vector offdiag(M), spread(M);
    kernel.for_each_block([&](Eigen::Index r0, const Matrix& blk) {
        for (Eigen::Index i = 0; i < blk.rows(); ++i) {
            const Eigen::Index r = r0 + i;
            const Vector row = blk.row(i).transpose().cwiseProduct(qis) * qis[r];
            const double D = row.sum();
            dm.degree[r] = D;
            offdiag[r] = (D - row[r]) / D;
            spread[r] = (row.maxCoeff() - row.minCoeff()) / D;
        }
    });
    if (offdiag.maxCoeff() < 1e-12)
        throw BandwidthError("epsilon = " + std::to_string(dm.epsilon) +
                             " is too small: the Markov matrix is numerically the identity");
    if (spread.maxCoeff() < 1e-12)
        throw BandwidthError("epsilon = " + std::to_string(dm.epsilon) +
                             " is too large: Markov matrix rows are uniform");

    // S = D^{-1/2} K D^{-1/2} = diag(a) k diag(a), a = 1 / sqrt(q D)
    const Vector a = (dm.q_eps.cwiseProduct(dm.degree)).cwiseSqrt().cwiseInverse();
    const SymEigResult eig = sym_top_eigs(
        [&](const Matrix& V, Matrix& out) { kernel.scaled_product(a, V, out); }, M, k, opts.eig);
    dm.converged = eig.converged;
    dm.max_residual = eig.max_residual;
    if (!eig.converged)
        dm.warnings.push_back("eigensolver stopped before convergence (max residual " +
                              std::to_string(eig.max_residual) + ")");

    dm.eigvals = (eig.values.array() - 1.0) / dm.generator_scale;
    const Vector dis = dm.degree.cwiseSqrt().cwiseInverse();
    dm.eigvecs.resize(M, k);
    for (int j = 0; j < k; ++j) {
        Vector v = eig.vectors.col(j).cwiseProduct(dis);
        v *= std::sqrt(static_cast<double>(M)) / v.norm();
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0.0) v = -v;
        dm.eigvecs.col(j) = v;
    }
    return dm;
}

Matrix markov_matrix(const DiffusionMapModel& dm) {
    const Eigen::Index M = dm.samples.cols();
    const Vector sq = dm.samples.colwise().squaredNorm().transpose();
    Matrix k;
    kernel_rows(dm.samples, sq, 0, M, dm.epsilon, dm.kernel_cutoff, k);
    const Vector qis = dm.q_eps.cwiseSqrt().cwiseInverse();
    Matrix P = qis.asDiagonal() * k * qis.asDiagonal();
    for (Eigen::Index i = 0; i < M; ++i) P.row(i) /= P.row(i).sum();
    return P;
}

namespace {
struct ColumnKey {
    std::size_t operator()(const std::vector<std::uint64_t>& bits) const {
        std::size_t h = 1469598103934665603ull;
        for (auto b : bits) h = (h ^ b) * 1099511628211ull;
        return h;
    }
};

std::vector<std::uint64_t> column_bits(const Matrix& X, Eigen::Index c) {
    std::vector<std::uint64_t> bits(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double v = X(i, c) == 0.0 ? 0.0 : X(i, c);
        std::memcpy(&bits[static_cast<std::size_t>(i)], &v, sizeof v);
    }
    return bits;
}
} // namespace

std::vector<Eigen::Index> lookup_samples(const Matrix& samples, const Matrix& Y, LookupMode mode) {
    if (samples.rows() != Y.rows()) throw InputError("lookup points have the wrong dimension");
    std::unordered_map<std::vector<std::uint64_t>, Eigen::Index, ColumnKey> index;
    index.reserve(static_cast<std::size_t>(samples.cols()));
    for (Eigen::Index c = 0; c < samples.cols(); ++c) index.emplace(column_bits(samples, c), c);

    std::vector<Eigen::Index> out(static_cast<std::size_t>(Y.cols()), -1);
    std::vector<Eigen::Index> missing;
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
        auto it = index.find(column_bits(Y, c));
        if (it != index.end())
            out[static_cast<std::size_t>(c)] = it->second;
        else
            missing.push_back(c);
    }
    if (!missing.empty() && mode == LookupMode::Exact)
        throw InputError("point " + std::to_string(missing.front()) + " (and " + std::to_string(missing.size() - 1) +
                         " others) does not match any training sample");
    parallel_for(missing.size(), 64, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const Eigen::Index c = missing[i];
            Eigen::Index best = 0;
            (samples.colwise() - Y.col(c)).colwise().squaredNorm().minCoeff(&best);
            out[static_cast<std::size_t>(c)] = best;
        }
    });
    return out;
}

Matrix df_shift_matrix(const DiffusionMapModel& dm, const SnapshotPairs& pairs, LookupMode mode) {
    pairs.validate();
    const Eigen::Index M = pairs.X.cols();
    const auto ix = lookup_samples(dm.samples, pairs.X, mode);
    const auto iy = lookup_samples(dm.samples, pairs.Y, mode);
    Matrix Fx(dm.size(), M), Fy(dm.size(), M);
    for (Eigen::Index m = 0; m < M; ++m) {
        Fx.col(m) = dm.eigvecs.row(ix[static_cast<std::size_t>(m)]).transpose();
        Fy.col(m) = dm.eigvecs.row(iy[static_cast<std::size_t>(m)]).transpose();
    }
    return Fy * Fx.transpose() / static_cast<double>(M);
}

DfModel make_df_model(DiffusionMapModel dm, const SnapshotPairs& pairs, LookupMode mode) {
    DfModel model;
    model.B = df_shift_matrix(dm, pairs, mode);
    model.dm = std::move(dm);
    model.dt = pairs.dt;
    return model;
}

Vector df_initial_coefficients(const DiffusionMapModel& dm, const StationaryDensity& ps, const InitialDensity& p0,
                               bool importance_weight) {
    const Matrix& X = dm.samples;
    Vector w;
    if (importance_weight) {
        w = importance_weights(ps, p0, X);
    } else {
        w.resize(X.cols());
        for (Eigen::Index m = 0; m < X.cols(); ++m) w[m] = p0.eval(X.col(m), &ps);
    }
    return dm.eigvecs.transpose() * w / static_cast<double>(X.cols());
}

DfForecast df_forecast(const DfModel& model, const StationaryDensity& ps, int n_steps) {
    if (n_steps < 0) throw InputError("step count must be nonnegative");
    if (model.c0_hat.size() != model.B.rows()) throw InputError("diffusion forecast has no initial coefficients");
    DfForecast f;
    f.n_steps = n_steps;
    f.t = n_steps * model.dt;
    f.coeffs = model.c0_hat;
    for (int n = 0; n < n_steps; ++n) f.coeffs = model.B * f.coeffs;
    f.density = (model.dm.eigvecs * f.coeffs).cwiseProduct(ps.eval_many(model.dm.samples));
    return f;
}

DfForecast df_forecast(DfModel& model, const StationaryDensity& ps, const InitialDensity& p0, int n_steps,
                       bool importance_weight) {
    model.c0_hat = df_initial_coefficients(model.dm, ps, p0, importance_weight);
    model.importance_weight = importance_weight;
    return df_forecast(model, ps, n_steps);
}

MomentSeries df_raw_moments(const DfModel& model, const std::vector<int>& orders, const std::vector<int>& steps) {
    if (model.c0_hat.size() != model.B.rows()) throw InputError("diffusion forecast has no initial coefficients");
    const Matrix& X = model.dm.samples;
    const auto M = static_cast<double>(X.cols());
    const int d = static_cast<int>(X.rows());
    std::vector<Vector> ghat;
    for (int j = 0; j < d; ++j)
        for (int k : orders) {
            if (k < 1) throw InputError("moment orders must be positive");
            const Vector g = X.row(j).array().pow(k).matrix().transpose();
            ghat.push_back(model.dm.eigvecs.transpose() * g / M);
        }
    std::vector<int> sorted = steps;
    std::sort(sorted.begin(), sorted.end());
    MomentSeries out;
    Vector c = model.c0_hat;
    int at = 0;
    for (int n : sorted) {
        if (n < 0) throw InputError("step count must be nonnegative");
        for (; at < n; ++at) c = model.B * c;
        std::size_t idx = 0;
        for (int j = 0; j < d; ++j)
            for (int k : orders) out.rows.push_back({n * model.dt, j + 1, k, c.dot(ghat[idx++])});
    }
    return out;
}

} // namespace dpdd
