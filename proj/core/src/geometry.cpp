#include "lpvccm/geometry.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace lpvccm {

Metric::Metric(SymbolicMatrixFn m, std::optional<MetricBounds> bounds)
    : m_(std::move(m)), bounds_(bounds) {
    if (m_.rows() != m_.cols()) throw DimensionError("Metric: matrix must be square");
    if (!m_.symmetric())
        throw MetricError("Metric: matrix function must be declared symmetric");
    if (bounds_ && !(bounds_->a1 > 0.0 && bounds_->a2 >= bounds_->a1))
        throw MetricError("Metric: bounds must satisfy 0 < a1 <= a2");
}

Metric Metric::identity(const Variables& state_vars) {
    auto n = static_cast<Eigen::Index>(state_vars.size());
    return Metric(SymbolicMatrixFn(ExprMatrix::identity(n, state_vars), true),
                  MetricBounds{1.0, 1.0});
}

Matrix Metric::eval(const Vector& x) const {
    Matrix m = m_.eval(x);
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success)
        throw MetricError("Metric: not positive definite at the evaluated point");
    return m;
}

Vector Metric::quadratic_gradient(const Vector& x, const Vector& v) const {
    const int n = dim();
    Vector g = Vector::Zero(n);
    if (m_.has_constant_partials() && m_.is_constant()) return g;
    for (int i = 0; i < n; ++i) {
        Matrix dm = m_.partial(i, x);
        g[i] = v.dot(dm.selfadjointView<Eigen::Lower>() * v);
    }
    return g;
}

bool Metric::bounds_hold(const Vector& x, double slack) const {
    if (!bounds_) throw MetricError("Metric: no uniform bounds declared");
    Matrix m = eval(x);
    Vector ev = sym_eigenvalues(m);
    return ev[0] >= bounds_->a1 - slack && ev[ev.size() - 1] <= bounds_->a2 + slack;
}

Vector GeodesicPath::tangent(int j) const {
    const int n_seg = segments();
    const double inv_ds = static_cast<double>(n_seg);
    if (j <= 0) return (nodes.row(1) - nodes.row(0)).transpose() * inv_ds;
    if (j >= n_seg) return (nodes.row(n_seg) - nodes.row(n_seg - 1)).transpose() * inv_ds;
    return (nodes.row(j + 1) - nodes.row(j - 1)).transpose() * (0.5 * inv_ds);
}

namespace {

double segment_quadratic(const Metric& metric, const Matrix& nodes, int j, int n_seg) {
    Vector mid = 0.5 * (nodes.row(j) + nodes.row(j + 1)).transpose();
    Vector tang = (nodes.row(j + 1) - nodes.row(j)).transpose() * static_cast<double>(n_seg);
    return tang.dot(metric.eval(mid) * tang);
}

}  // namespace

double path_energy(const Metric& metric, const Matrix& nodes) {
    const int n_seg = static_cast<int>(nodes.rows()) - 1;
    if (n_seg < 1) throw DimensionError("path_energy: need at least two nodes");
    double sum = 0.0;
    for (int j = 0; j < n_seg; ++j) sum += segment_quadratic(metric, nodes, j, n_seg);
    return sum / n_seg;
}

double path_length(const Metric& metric, const Matrix& nodes) {
    const int n_seg = static_cast<int>(nodes.rows()) - 1;
    if (n_seg < 1) throw DimensionError("path_length: need at least two nodes");
    double sum = 0.0;
    for (int j = 0; j < n_seg; ++j)
        sum += std::sqrt(std::max(0.0, segment_quadratic(metric, nodes, j, n_seg)));
    return sum / n_seg;
}

namespace {

// Gradient of the discretized energy with respect to the interior nodes.
// Segment j contributes through its two endpoints and its midpoint.
Matrix energy_gradient(const Metric& metric, const Matrix& nodes) {
    const int n_seg = static_cast<int>(nodes.rows()) - 1;
    const int n = static_cast<int>(nodes.cols());
    const double scale = static_cast<double>(n_seg);
    Matrix grad = Matrix::Zero(n_seg + 1, n);
    for (int j = 0; j < n_seg; ++j) {
        Vector mid = 0.5 * (nodes.row(j) + nodes.row(j + 1)).transpose();
        Vector delta = (nodes.row(j + 1) - nodes.row(j)).transpose();
        Matrix m = metric.eval(mid);
        Vector md = m * delta;                                 // d(e_j)/d(delta) / (2N)
        Vector gq = metric.quadratic_gradient(mid, delta);     // d(delta^T M delta)/d(mid)
        grad.row(j) += (-2.0 * scale * md + 0.5 * scale * gq).transpose();
        grad.row(j + 1) += (2.0 * scale * md + 0.5 * scale * gq).transpose();
    }
    grad.row(0).setZero();
    grad.row(n_seg).setZero();
    return grad;
}

// Thomas solve of (T y = b) per column with T = tridiag(-1, 2, -1) over the
// interior nodes; T is the exact Hessian factor of the constant-metric
// energy and a good preconditioner otherwise.
Matrix laplacian_solve(const Matrix& b) {
    const int m = static_cast<int>(b.rows());
    Matrix y = b;
    std::vector<double> diag(static_cast<std::size_t>(m));
    diag[0] = 2.0;
    for (int i = 1; i < m; ++i) {
        double inv_prev = 1.0 / diag[static_cast<std::size_t>(i - 1)];
        diag[static_cast<std::size_t>(i)] = 2.0 - inv_prev;
        y.row(i) += inv_prev * y.row(i - 1);
    }
    y.row(m - 1) /= diag[static_cast<std::size_t>(m - 1)];
    for (int i = m - 2; i >= 0; --i)
        y.row(i) = (y.row(i) + y.row(i + 1)) / diag[static_cast<std::size_t>(i)];
    return y;
}

}  // namespace

GeodesicPath solve_geodesic(const Metric& metric, const Vector& x0, const Vector& x1,
                            const GeodesicSettings& settings, const Matrix* warm_start) {
    const int n = metric.dim();
    if (x0.size() != n || x1.size() != n)
        throw DimensionError("solve_geodesic: endpoint dimension mismatch");
    const int n_seg = settings.nodes < 2 ? 2 : settings.nodes;

    GeodesicPath path;
    path.nodes.resize(n_seg + 1, n);
    if (warm_start && warm_start->rows() == n_seg + 1 && warm_start->cols() == n) {
        path.nodes = *warm_start;
    } else {
        for (int j = 0; j <= n_seg; ++j) {
            double s = static_cast<double>(j) / n_seg;
            path.nodes.row(j) = ((1.0 - s) * x0 + s * x1).transpose();
        }
    }
    path.nodes.row(0) = x0.transpose();
    path.nodes.row(n_seg) = x1.transpose();

    if ((x1 - x0).norm() == 0.0 && !warm_start) {
        path.energy = 0.0;
        path.converged = true;
        return path;
    }

    // Preconditioned nonlinear conjugate gradient (Polak-Ribiere, restarted)
    // over the interior nodes; the chord Laplacian is the preconditioner and
    // a directional-curvature estimate seeds the backtracking line search.
    double energy = path_energy(metric, path.nodes);
    Matrix grad = energy_gradient(metric, path.nodes);
    Matrix pgrad_prev, dir;
    double gp_prev = 0.0;
    for (int it = 0; it < settings.max_iter; ++it) {
        path.iterations = it;
        // gradient entries scale with 2N * energy; the tolerance is applied
        // relative to that so the stop is reachable at any resolution
        double grad_scale = 1.0 + 2.0 * n_seg * std::abs(energy);
        if (grad.cwiseAbs().maxCoeff() <= settings.tol * grad_scale) {
            path.converged = true;
            break;
        }
        Matrix pgrad = Matrix::Zero(n_seg + 1, n);
        pgrad.middleRows(1, n_seg - 1) =
            laplacian_solve(grad.middleRows(1, n_seg - 1)) / (2.0 * n_seg);
        double gp = (grad.array() * pgrad.array()).sum();
        double beta = 0.0;
        if (it > 0 && gp_prev > 0.0) {
            double num = ((grad - pgrad_prev).array() * pgrad.array()).sum();
            beta = std::max(0.0, num / gp_prev);
        }
        if (it == 0 || beta == 0.0)
            dir = -pgrad;
        else
            dir = -pgrad + beta * dir;
        double slope = (grad.array() * dir.array()).sum();
        if (slope >= 0.0) {  // restart on a non-descent direction
            dir = -pgrad;
            slope = -gp;
        }
        pgrad_prev = grad;  // PR numerator uses the raw gradient difference
        gp_prev = gp;

        // one-sided curvature along dir seeds the step length
        double dir_norm = dir.norm();
        double probe = 1e-6 / std::max(dir_norm, 1e-12);
        Matrix grad_probe = energy_gradient(metric, path.nodes + probe * dir);
        double curv = ((grad_probe - grad).array() * dir.array()).sum() / probe;
        double alpha = curv > 0.0 ? -slope / curv : 1.0;
        if (!(alpha > 0.0) || !std::isfinite(alpha)) alpha = 1.0;

        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            Matrix trial = path.nodes + alpha * dir;
            double trial_energy;
            try {
                trial_energy = path_energy(metric, trial);
            } catch (const Error&) {
                alpha *= settings.backtrack;  // stepped outside the metric domain
                continue;
            }
            if (trial_energy <= energy + 1e-4 * alpha * slope) {
                path.nodes = std::move(trial);
                energy = trial_energy;
                accepted = true;
                break;
            }
            alpha *= settings.backtrack;
        }
        if (!accepted) break;  // descent stalled at floating-point resolution
        grad = energy_gradient(metric, path.nodes);
    }
    path.energy = path_energy(metric, path.nodes);
    return path;
}

EnergyResult riemann_energy(const Metric& metric, const Vector& x0, const Vector& x1,
                            const GeodesicSettings& settings) {
    GeodesicPath path = solve_geodesic(metric, x0, x1, settings);
    return EnergyResult{path.energy, path.converged};
}

}  // namespace lpvccm
