#include "dpdd/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "dpdd/rng.hpp"

namespace dpdd {

namespace {

Matrix random_block(Eigen::Index n, Eigen::Index b, Philox4x32& rng) {
    Matrix V(n, b);
    for (Eigen::Index j = 0; j < b; ++j)
        for (Eigen::Index i = 0; i < n; ++i) V(i, j) = rng.normal();
    return V;
}

/// Orthonormalizes Y against the first `used` columns of Q (two passes) and within itself.
Matrix orthonormalize(const Matrix& Q, Eigen::Index used, Matrix Y, Philox4x32& rng) {
    const Eigen::Index n = Y.rows();
    const Eigen::Index b = Y.cols();
    for (int pass = 0; pass < 2; ++pass) {
        if (used > 0) {
            const auto Qu = Q.leftCols(used);
            Y.noalias() -= Qu * (Qu.transpose() * Y);
        }
        Eigen::HouseholderQR<Matrix> qr(Y);
        const Matrix R = qr.matrixQR().topRows(b).triangularView<Eigen::Upper>();
        Matrix thin = qr.householderQ() * Matrix::Identity(n, b);
        // Directions lost to rank deficiency are refreshed with random vectors.
        const double scale = R.diagonal().cwiseAbs().maxCoeff();
        for (Eigen::Index j = 0; j < b; ++j)
            if (!(std::abs(R(j, j)) > 1e-10 * scale)) thin.col(j) = random_block(n, 1, rng);
        Y = std::move(thin);
    }
    if (used > 0) {
        const auto Qu = Q.leftCols(used);
        Y.noalias() -= Qu * (Qu.transpose() * Y);
    }
    Eigen::HouseholderQR<Matrix> qr(Y);
    return qr.householderQ() * Matrix::Identity(n, b);
}

} // namespace

SymEigResult sym_top_eigs(const SymOperator& apply, Eigen::Index n, int k, const SymEigOptions& opts) {
    if (k < 1) throw InputError("number of eigenpairs must be positive");
    if (k > n) throw InputError("requested more eigenpairs than the operator dimension");

    const Eigen::Index oversample = opts.oversample > 0 ? opts.oversample : std::max(10, k / 10);
    const Eigen::Index b = std::min<Eigen::Index>(k + oversample, n);
    Eigen::Index cap = opts.max_columns > 0 ? opts.max_columns : std::max<Eigen::Index>(2 * b, 120);
    cap = std::min(std::max(cap, 2 * b), n);
    const Eigen::Index nblocks = std::max<Eigen::Index>(1, cap / b);
    const Eigen::Index ncols = std::min(nblocks * b, n);

    Philox4x32 rng(opts.seed, 0);
    Matrix Q(n, ncols);
    Matrix Z(n, ncols);
    Matrix block(n, b);

    Eigen::Index used = 0;
    Matrix start = orthonormalize(Q, 0, random_block(n, b, rng), rng);
    Q.leftCols(b) = start;
    apply(start, block);
    Z.leftCols(b) = block;
    used = b;

    SymEigResult res;
    for (int restart = 0;; ++restart) {
        while (used + b <= ncols) {
            Matrix next = orthonormalize(Q, used, Z.middleCols(used - b, b), rng);
            Q.middleCols(used, b) = next;
            apply(next, block);
            Z.middleCols(used, b) = block;
            used += b;
        }
        if (used < ncols) {
            // Final partial block when n is not a multiple of b.
            const Eigen::Index r = ncols - used;
            Matrix next = orthonormalize(Q, used, Z.middleCols(used - b, r), rng);
            Q.middleCols(used, r) = next;
            Matrix part(n, r);
            apply(next, part);
            Z.middleCols(used, r) = part;
            used = ncols;
        }

        Matrix T = Q.leftCols(used).transpose() * Z.leftCols(used);
        T = 0.5 * (T + T.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Matrix> es(T);
        if (es.info() != Eigen::Success) throw NumericalError("Rayleigh-Ritz eigensolve failed");
        // Descending order.
        const Eigen::Index keep = std::min(b, used);
        Matrix Y(used, keep);
        Vector theta(keep);
        for (Eigen::Index j = 0; j < keep; ++j) {
            theta[j] = es.eigenvalues()[used - 1 - j];
            Y.col(j) = es.eigenvectors().col(used - 1 - j);
        }
        Matrix U = Q.leftCols(used) * Y;
        Matrix SU = Z.leftCols(used) * Y;

        const double scale = std::max(std::abs(theta[0]), 1e-300);
        double worst = 0.0;
        for (int j = 0; j < k; ++j) worst = std::max(worst, (SU.col(j) - theta[j] * U.col(j)).norm());
        res.restarts = restart;
        res.max_residual = worst;
        res.converged = worst <= opts.tol * scale;

        if (res.converged || restart >= opts.max_restarts || ncols == keep) {
            res.values = theta.head(k);
            res.vectors = U.leftCols(k);
            if (ncols == n) res.converged = true;  // full space: Rayleigh-Ritz is exact
            return res;
        }
        Q.leftCols(keep) = U;
        Z.leftCols(keep) = SU;
        used = keep;
    }
}

SymEigResult sym_top_eigs(const Matrix& S, int k, const SymEigOptions& opts) {
    if (S.rows() != S.cols()) throw InputError("matrix must be square");
    if (k < 1 || k > S.rows()) throw InputError("invalid number of eigenpairs");
    if (S.rows() <= 1500) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(S);
        if (es.info() != Eigen::Success) throw NumericalError("dense symmetric eigensolve failed");
        const Eigen::Index n = S.rows();
        SymEigResult res;
        res.values.resize(k);
        res.vectors.resize(n, k);
        for (int j = 0; j < k; ++j) {
            res.values[j] = es.eigenvalues()[n - 1 - j];
            res.vectors.col(j) = es.eigenvectors().col(n - 1 - j);
        }
        res.converged = true;
        return res;
    }
    return sym_top_eigs([&S](const Matrix& V, Matrix& out) { out.noalias() = S.selfadjointView<Eigen::Lower>() * V; },
                        S.rows(), k, opts);
}

} // namespace dpdd
