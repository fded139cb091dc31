#pragma once

#include <complex>
#include <vector>

#include "lpvccm/expr.hpp"

namespace lpvccm {

// A + A^T
Matrix he(const Matrix& a);

// Largest eigenvalue of a symmetric matrix via cyclic Jacobi rotations,
// iterated until the off-diagonal Frobenius norm is <= 1e-12 (absolute,
// relaxed to a relative bound for badly scaled inputs).  Rejects inputs
// whose antisymmetric part exceeds 1e-12 * max(1, |S|_max).
double max_eig_sym(const Matrix& s);

// All eigenvalues of a symmetric matrix, ascending.  Same algorithm.
Vector sym_eigenvalues(const Matrix& s);

// General (possibly complex) spectrum of a small dense matrix.
std::vector<std::complex<double>> eigenvalues(const Matrix& a);

}  // namespace lpvccm
