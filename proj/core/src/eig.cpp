#include "lpvccm/eig.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace lpvccm {

Matrix he(const Matrix& a) { return a + a.transpose(); }

namespace {

double offdiag_norm(const Matrix& a) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (i != j) sum += a(i, j) * a(i, j);
    return std::sqrt(sum);
}

// Cyclic Jacobi sweeps; diagonal of the rotated matrix converges to the
// spectrum.  Quadratic convergence makes a handful of sweeps enough for the
// small matrices this toolkit deals with.
Vector jacobi_eigenvalues(Matrix a) {
    const Eigen::Index n = a.rows();
    if (n != a.cols()) throw DimensionError("jacobi: matrix must be square");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
        throw Error("jacobi: matrix is not symmetric (asymmetry " + std::to_string(asym) +
                    ")");
    a = 0.5 * (a + a.transpose()).eval();

    const double tol = 1e-12;
    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (offdiag_norm(a) <= tol) break;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                double tau = s / (1.0 + c);
                double app = a(p, p), aqq = a(q, q);
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                for (Eigen::Index r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    double arp = a(r, p), arq = a(r, q);
                    a(r, p) = a(p, r) = arp - s * (arq + tau * arp);
                    a(r, q) = a(q, r) = arq + s * (arp - tau * arq);
                }
            }
        }
    }
    if (offdiag_norm(a) > std::max(tol, 1e-14 * scale * n))
        throw Error("jacobi: failed to converge");

    Vector ev = a.diagonal();
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace

double max_eig_sym(const Matrix& s) {
    if (s.size() == 0) throw DimensionError("max_eig_sym: empty matrix");
    Vector ev = jacobi_eigenvalues(s);
    return ev[ev.size() - 1];
}

Vector sym_eigenvalues(const Matrix& s) { return jacobi_eigenvalues(s); }

std::vector<std::complex<double>> eigenvalues(const Matrix& a) {
    Eigen::EigenSolver<Matrix> solver(a);
    std::vector<std::complex<double>> out;
    out.reserve(static_cast<std::size_t>(a.rows()));
    for (Eigen::Index i = 0; i < a.rows(); ++i) out.push_back(solver.eigenvalues()[i]);
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    return out;
}

}  // namespace lpvccm
