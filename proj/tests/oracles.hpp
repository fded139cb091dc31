// Test-only reference computations, kept independent of the library's own
// numerical paths: quadrature, frequency sweeps, characteristic-polynomial
// roots, and dense Lyapunov solves.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lpvccm/expr.hpp"

namespace oracles {

using lpvccm::Matrix;
using lpvccm::Vector;

// Adaptive Simpson quadrature.
inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double whole, double tol,
                          int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

// sup over a log grid of frequencies of the largest singular value of
// C (jw I - A)^-1 B + D.
inline double hinf_freq_sweep(const Matrix& a, const Matrix& b, const Matrix& c,
                              const Matrix& d, double w_lo = 1e-3, double w_hi = 1e3,
                              int points = 2000) {
    using CMatrix = Eigen::MatrixXcd;
    const std::complex<double> im(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < points; ++k) {
        double w = w_lo * std::pow(w_hi / w_lo, static_cast<double>(k) / (points - 1));
        CMatrix jw = im * w * CMatrix::Identity(a.rows(), a.cols()) - a.cast<std::complex<double>>();
        CMatrix g = c.cast<std::complex<double>>() * jw.lu().solve(b.cast<std::complex<double>>()) +
                    d.cast<std::complex<double>>();
        Eigen::JacobiSVD<CMatrix> svd(g);
        worst = std::max(worst, svd.singularValues()[0]);
    }
    return worst;
}

// Characteristic polynomial coefficients by Faddeev-LeVerrier:
// p(x) = x^n + c[0] x^{n-1} + ... + c[n-1].
inline std::vector<double> char_poly(const Matrix& a) {
    const Eigen::Index n = a.rows();
    std::vector<double> c(static_cast<std::size_t>(n));
    // Faddeev-LeVerrier: M_1 = A, c_1 = -tr(M_1); M_k = A(M_{k-1} + c_{k-1} I)
    Matrix mk = a;
    double ck = -mk.trace();
    c[0] = ck;
    for (Eigen::Index k = 2; k <= n; ++k) {
        mk = a * (mk + ck * Matrix::Identity(n, n));
        ck = -mk.trace() / static_cast<double>(k);
        c[static_cast<std::size_t>(k - 1)] = ck;
    }
    return c;
}

// Roots of the characteristic polynomial via the companion matrix.
inline std::vector<std::complex<double>> companion_roots(const Matrix& a) {
    auto c = char_poly(a);
    const Eigen::Index n = a.rows();
    Matrix comp = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) comp(0, i) = -c[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    Eigen::EigenSolver<Matrix> es(comp);
    std::vector<std::complex<double>> roots;
    for (Eigen::Index i = 0; i < n; ++i) roots.push_back(es.eigenvalues()[i]);
    std::sort(roots.begin(), roots.end(), [](const auto& x, const auto& y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    return roots;
}

// Solve A^T X + X A = -Q through the Kronecker form.
inline Matrix lyapunov_solve(const Matrix& a, const Matrix& q) {
    const Eigen::Index n = a.rows();
    Matrix big = Matrix::Zero(n * n, n * n);
    Vector rhs(n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::Index row = i * n + j;
            rhs[row] = -q(i, j);
            for (Eigen::Index k = 0; k < n; ++k) {
                big(row, k * n + j) += a(k, i);  // (A^T X)_{ij} = sum_k A_{ki} X_{kj}
                big(row, i * n + k) += a(k, j);  // (X A)_{ij}  = sum_k X_{ik} A_{kj}
            }
        }
    Vector x = big.lu().solve(rhs);
    Matrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = x[i * n + j];
    return out;
}

// Random symmetric matrix with a prescribed, well-separated spectrum.
inline Matrix random_symmetric(std::mt19937& rng, const Vector& spectrum) {
    const Eigen::Index n = spectrum.size();
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = gauss(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    return q * spectrum.asDiagonal() * q.transpose();
}

}  // namespace oracles
