#pragma once

#include "switchcode/common.hpp"

namespace switchcode {

/// Eigendecomposition of a symmetric matrix.
///
/// Eigenvalues are sorted descending. Eigenvectors are returned as rows of an
/// orthonormal matrix, with a fixed sign convention: each row's
/// largest-magnitude entry is positive (first such entry on ties). Together
/// with the cyclic Jacobi sweep order this makes the decomposition fully
/// deterministic, so values serialized from it survive rebuilds.
struct SymmetricEigen {
    Vector eigenvalues;   // descending, unclamped
    Matrix eigenvectors;  // row i pairs with eigenvalues[i]
};

/// Cyclic Jacobi rotations on a symmetric matrix.
/// Throws std::invalid_argument if the input is not square or not symmetric
/// within 1e-9 relative tolerance.
SymmetricEigen eigen_symmetric(const Matrix& a);

}  // namespace switchcode
