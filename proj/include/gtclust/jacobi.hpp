#pragma once

#include "gtclust/types.hpp"

namespace gtclust {

struct EigenDecomposition {
    Vector eigenvalues;   // ascending
    Matrix eigenvectors;  // column i pairs with eigenvalues(i)
};

/// Cyclic Jacobi eigensolver for dense symmetric matrices. Sweeps row by
/// row until the off-diagonal Frobenius norm falls below tol (relative to
/// the input norm) or max_sweeps is reached.
EigenDecomposition jacobi_eigen(const Matrix& a, double tol = 1e-14, int max_sweeps = 64);

}  // namespace gtclust
