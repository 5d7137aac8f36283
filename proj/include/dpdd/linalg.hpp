#pragma once

#include <functional>

#include "dpdd/common.hpp"

namespace dpdd {

/// out = S * V for a symmetric n x n operator S; out is preallocated n x V.cols().
using SymOperator = std::function<void(const Matrix& V, Matrix& out)>;

struct SymEigOptions {
    int oversample = 0;       ///< extra block columns; 0 selects max(10, k / 10)
    int max_columns = 0;      ///< Krylov basis cap; 0 selects max(2 * block, 120)
    double tol = 1e-10;       ///< residual bound relative to the largest Ritz value
    int max_restarts = 60;
    std::uint64_t seed = 0x5eed;
};

struct SymEigResult {
    Vector values;   ///< descending
    Matrix vectors;  ///< n x k, orthonormal columns
    bool converged = false;
    int restarts = 0;
    double max_residual = 0.0;
};

/// Largest-algebraic k eigenpairs of a symmetric operator by thick-restart block Lanczos
/// with full reorthogonalization.
SymEigResult sym_top_eigs(const SymOperator& apply, Eigen::Index n, int k, const SymEigOptions& opts = {});

/// Same for an explicit dense symmetric matrix; small problems use a direct solver.
SymEigResult sym_top_eigs(const Matrix& S, int k, const SymEigOptions& opts = {});

} // namespace dpdd
