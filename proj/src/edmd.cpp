#include "dpdd/edmd.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dpdd/parallel.hpp"

namespace dpdd {

namespace {
constexpr std::size_t kGramBlock = 4096;
}

GramPair assemble_grams(const Matrix& PsiX, const Matrix& PsiY) {
    if (PsiX.rows() != PsiY.rows() || PsiX.cols() != PsiY.cols())
        throw InputError("assemble_grams: psi(X) is " + std::to_string(PsiX.rows()) + "x" +
                         std::to_string(PsiX.cols()) + " but psi(Y) is " +
                         std::to_string(PsiY.rows()) + "x" + std::to_string(PsiY.cols()));
    const auto N = PsiX.rows();
    const auto M = static_cast<std::size_t>(PsiX.cols());
    if (M == 0) throw InputError("assemble_grams: no samples");

    const std::size_t blocks = chunk_count(M, kGramBlock);
    std::vector<Matrix> partial_g(blocks, Matrix::Zero(N, N));
    std::vector<Matrix> partial_a(blocks, Matrix::Zero(N, N));
    parallel_for(M, kGramBlock, [&](std::size_t begin, std::size_t end) {
        const auto b = begin / kGramBlock;
        const auto cols = static_cast<Eigen::Index>(end - begin);
        const auto x = PsiX.middleCols(static_cast<Eigen::Index>(begin), cols);
        const auto y = PsiY.middleCols(static_cast<Eigen::Index>(begin), cols);
        partial_g[b].noalias() = x * x.transpose();
        partial_a[b].noalias() = y * x.transpose();
    });

    GramPair out;
    out.M = M;
    out.G = Matrix::Zero(N, N);
    out.A = Matrix::Zero(N, N);
    for (std::size_t b = 0; b < blocks; ++b) {
        out.G += partial_g[b];
        out.A += partial_a[b];
    }
    out.G /= static_cast<double>(M);
    out.A /= static_cast<double>(M);
    out.G = 0.5 * (out.G + out.G.transpose()).eval();
    if (M < static_cast<std::size_t>(N))
        out.warnings.push_back("fewer samples (" + std::to_string(M) + ") than observables (" +
                               std::to_string(N) + ")");
    return out;
}

KoopmanMatrix koopman_matrix(const GramPair& grams, double rtol) {
    const auto N = grams.G.rows();
    if (grams.G.cols() != N || grams.A.rows() != N || grams.A.cols() != N)
        throw InputError("koopman_matrix: G and A must be square and of equal size");
    if (!(rtol >= 0.0)) throw InputError("koopman_matrix: rtol must be nonnegative");
    if (!grams.G.allFinite() || !grams.A.allFinite())
        throw DegenerateDataError("Gram matrices contain non-finite entries");

    Eigen::JacobiSVD<Matrix> svd(grams.G, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double smax = s.size() ? s[0] : 0.0;
    if (!(smax > 0.0)) throw DegenerateDataError("Gram matrix G is identically zero");

    Vector inv = Vector::Zero(s.size());
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s[i] >= rtol * smax && s[i] > 0.0) {
            inv[i] = 1.0 / s[i];
            ++rank;
        }
    }
    const Matrix pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();

    KoopmanMatrix out;
    out.K = grams.A * pinv;
    out.rank = rank;
    out.singular_values = s;
    return out;
}

KoopmanModel eigendecompose(const Matrix& K, double dt, const Dictionary& dict, const Matrix& PsiX,
                            int rank) {
    const auto N = K.rows();
    if (K.cols() != N || N == 0) throw InputError("eigendecompose: K must be square");
    if (!(dt > 0.0)) throw InputError("eigendecompose: dt must be positive");
    if (dict.size() != N) throw InputError("eigendecompose: dictionary size does not match K");
    if (PsiX.rows() != N || PsiX.cols() == 0)
        throw InputError("eigendecompose: psi(X) must have one row per observable");
    if (!K.allFinite()) throw NumericalError("eigendecompose: K has non-finite entries");

    Eigen::EigenSolver<Matrix> es(K.transpose(), true);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of K failed");

    const double M = static_cast<double>(PsiX.cols());
    const Matrix G = PsiX * PsiX.transpose() / M;
    CVector mu = es.eigenvalues();
    CMatrix vecs = es.eigenvectors();  // columns: left eigenvectors of K

    KoopmanDiagnostics diag;
    for (Eigen::Index i = 0; i < N; ++i) {
        CVector xi = vecs.col(i);
        const double norm2 = (xi.adjoint() * G.cast<Complex>() * xi)(0, 0).real();
        if (norm2 > 0.0 && std::isfinite(norm2)) {
            xi /= std::sqrt(norm2);
        } else {
            xi.normalize();
            diag.warnings.push_back("eigenfunction " + std::to_string(i) +
                                    " vanishes on the training data; left unnormalized");
        }
        Eigen::Index big = 0;
        for (Eigen::Index j = 1; j < N; ++j)
            if (std::abs(xi[j]) > std::abs(xi[big])) big = j;
        if (std::abs(xi[big]) > 0.0) xi *= std::conj(xi[big]) / std::abs(xi[big]);
        xi[big] = Complex(xi[big].real(), 0.0);
        vecs.col(i) = xi;
    }

    // The constant observable is invariant: first row of A equals first row of G.
    if (dict.has_constant()) {
        Eigen::Index best = -1;
        double best_dist = 1e-8;
        for (Eigen::Index i = 0; i < N; ++i) {
            CVector e1 = CVector::Zero(N);
            e1[0] = 1.0;
            const double dist = (vecs.col(i) - e1).norm();
            if (dist < best_dist) {
                best_dist = dist;
                best = i;
            }
        }
        if (best >= 0) {
            vecs.col(best).setZero();
            vecs(0, best) = 1.0;
            mu[best] = Complex(K(0, 0), 0.0);
        }
    }

    CVector lambda(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const Complex m = mu[i];
        const double mag = std::abs(m);
        if (mag < DBL_MIN) {
            lambda[i] = Complex(std::log(DBL_MIN) / dt, 0.0);
            diag.warnings.push_back("Koopman eigenvalue " + std::to_string(i) +
                                    " is zero; decay rate floored");
        } else if (m.imag() == 0.0 && m.real() < 0.0) {
            lambda[i] = Complex(std::log(mag) / dt, std::numbers::pi / dt);
            diag.warnings.push_back("Koopman eigenvalue on the negative real axis; Im(lambda) set to pi/dt");
        } else {
            lambda[i] = std::log(m) / dt;
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const Complex la = lambda[a], lb = lambda[b];
        if (la.real() != lb.real()) return la.real() > lb.real();
        if (std::abs(la.imag()) != std::abs(lb.imag())) return std::abs(la.imag()) < std::abs(lb.imag());
        return la.imag() > lb.imag();
    });

    KoopmanModel model;
    model.K = K;
    model.dt = dt;
    model.dict = dict;
    model.rank = rank < 0 ? static_cast<int>(N) : rank;
    model.mu.resize(N);
    model.lambda.resize(N);
    model.Xi.resize(N, N);
    for (Eigen::Index r = 0; r < N; ++r) {
        const auto src = order[static_cast<std::size_t>(r)];
        model.mu[r] = mu[src];
        model.lambda[r] = lambda[src];
        model.Xi.row(r) = vecs.col(src).transpose();
    }

    for (Eigen::Index i = 0; i < N; ++i) {
        const Complex l = model.lambda[i];
        diag.max_abs_imag = std::max(diag.max_abs_imag, std::abs(l.imag()));
        diag.max_imag_ratio = std::max(diag.max_imag_ratio, std::abs(l.imag()) / (1.0 + std::abs(l.real())));
        diag.spectral_radius = std::max(diag.spectral_radius, std::abs(model.mu[i]));
        if (std::abs(model.mu[i]) > 1.0 + 1e-6) diag.non_contractive = true;
        if (l.real() > 1e-6) diag.unstable_modes.push_back(static_cast<int>(i));
    }
    if (diag.non_contractive)
        diag.warnings.push_back("Koopman matrix has eigenvalues outside the unit circle");
    if (!diag.unstable_modes.empty())
        diag.warnings.push_back(std::to_string(diag.unstable_modes.size()) +
                                " mode(s) with Re(lambda) > 1e-6");
    if (diag.max_imag_ratio >= 0.05)
        diag.warnings.push_back("generator spectrum has sizeable imaginary parts (max |Im|/(1+|Re|) = " +
                                std::to_string(diag.max_imag_ratio) + ")");
    if (model.rank < N)
        diag.warnings.push_back("Gram matrix is rank deficient (rank " + std::to_string(model.rank) +
                                " of " + std::to_string(N) + ")");
    model.diagnostics = std::move(diag);
    return model;
}

KoopmanModel fit_koopman(const SnapshotPairs& pairs, const Dictionary& dict, double rtol) {
    pairs.validate();
    const Matrix PsiX = dict.eval_matrix(pairs.X);
    const Matrix PsiY = dict.eval_matrix(pairs.Y);
    const GramPair grams = assemble_grams(PsiX, PsiY);
    const KoopmanMatrix km = koopman_matrix(grams, rtol);
    KoopmanModel model = eigendecompose(km.K, pairs.dt, dict, PsiX, km.rank);
    for (const auto& w : grams.warnings) model.diagnostics.warnings.push_back(w);
    return model;
}

CMatrix KoopmanModel::eigenfunctions(const Matrix& X) const {
    return Xi * dict.eval_matrix(X).cast<Complex>();
}

CVector eval_eigenfunction(const KoopmanModel& model, int index, const Matrix& X) {
    if (index < 0 || index >= model.size())
        throw InputError("eigenfunction index " + std::to_string(index) + " out of range [0, " +
                         std::to_string(model.size()) + ")");
    return (model.Xi.row(index) * model.dict.eval_matrix(X).cast<Complex>()).transpose();
}

InnerProduct empirical_inner(const CVector& f, const CVector& g) {
    if (f.size() != g.size()) throw InputError("empirical_inner: vectors differ in length");
    if (f.size() == 0) throw InputError("empirical_inner: empty input");
    Complex s = 0.0;
    for (Eigen::Index m = 0; m < f.size(); ++m) s += f[m] * std::conj(g[m]);
    s /= static_cast<double>(f.size());
    return {s.real(), std::abs(s.imag())};
}

} // namespace dpdd
