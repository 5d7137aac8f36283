#pragma once

#include <string>
#include <vector>

#include "dpdd/common.hpp"
#include "dpdd/dictionary.hpp"
#include "dpdd/sde.hpp"

namespace dpdd {

/// G = (1/M) psi(X) psi(X)^T,  A = (1/M) psi(Y) psi(X)^T.
struct GramPair {
    Matrix G;
    Matrix A;
    std::size_t M = 0;
    std::vector<std::string> warnings;
};

/// Sums are taken over fixed column blocks in block order, so the result does
/// not depend on the thread count.
GramPair assemble_grams(const Matrix& PsiX, const Matrix& PsiY);

struct KoopmanMatrix {
    Matrix K;
    int rank = 0;
    Vector singular_values;
};

/// K = A G^+ with singular values of G below rtol * sigma_max discarded.
KoopmanMatrix koopman_matrix(const GramPair& grams, double rtol = 1e-10);

struct KoopmanDiagnostics {
    /// max_i |Im lambda_i| / (1 + |Re lambda_i|)
    double max_imag_ratio = 0.0;
    double max_abs_imag = 0.0;
    double spectral_radius = 0.0;
    /// Some |mu| > 1 + 1e-6.
    bool non_contractive = false;
    /// Indices (after sorting) of modes with Re(lambda) > 1e-6.
    std::vector<int> unstable_modes;
    std::vector<std::string> warnings;
};

/// Spectral data of the finite-dimensional Koopman approximation.
///
/// Modes are sorted by Re(lambda) descending, ties by |Im(lambda)| ascending.
/// Row i of Xi is the left eigenvector xi_i, scaled so that
/// (1/M) sum_m |xi_i^T psi(x_m)|^2 = 1 on the training data.
struct KoopmanModel {
    Matrix K;
    double dt = 0.0;
    CVector mu;
    CVector lambda;
    CMatrix Xi;
    Dictionary dict;
    int rank = 0;
    KoopmanDiagnostics diagnostics;

    int size() const { return static_cast<int>(mu.size()); }
    /// N x M matrix of phi_i(x_m).
    CMatrix eigenfunctions(const Matrix& X) const;
};

/// Left eigenpairs of K, generator eigenvalues lambda = log(mu) / dt (principal branch).
KoopmanModel eigendecompose(const Matrix& K, double dt, const Dictionary& dict, const Matrix& PsiX,
                            int rank = -1);

/// Dictionary evaluation, Gram assembly, pseudoinverse and eigendecomposition in one call.
KoopmanModel fit_koopman(const SnapshotPairs& pairs, const Dictionary& dict, double rtol = 1e-10);

/// phi_i(x_m) = xi_i^T psi(x_m) for each column of X.
CVector eval_eigenfunction(const KoopmanModel& model, int index, const Matrix& X);

struct InnerProduct {
    double value = 0.0;
    double imag_residual = 0.0;
};

/// (1/M) sum_m f_m conj(g_m): the sample estimate of <f, g> in L^2(p_s).
InnerProduct empirical_inner(const CVector& f, const CVector& g);

} // namespace dpdd
