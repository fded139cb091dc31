#pragma once

#include <optional>

#include "lpvccm/certify.hpp"
#include "lpvccm/expr.hpp"

namespace lpvccm {

struct MetricError : Error {
    using Error::Error;
};

struct MetricBounds {
    double a1 = 0.0, a2 = 0.0;  // a1 I <= M(x) <= a2 I
};

// Riemannian metric M(x) > 0 on R^n.  Evaluation enforces positive
// definiteness; declared uniform bounds are checked on demand.
class Metric {
  public:
    explicit Metric(SymbolicMatrixFn m, std::optional<MetricBounds> bounds = {});
    static Metric identity(const Variables& state_vars);

    int dim() const { return static_cast<int>(m_.rows()); }
    const std::optional<MetricBounds>& bounds() const { return bounds_; }
    const SymbolicMatrixFn& fn() const { return m_; }
    bool is_constant() const { return m_.is_constant(); }

    Matrix eval(const Vector& x) const;  // throws MetricError if not PD
    // components of the gradient of v^T M(x) v with respect to x
    Vector quadratic_gradient(const Vector& x, const Vector& v) const;
    // check a1 I <= M(x) <= a2 I at one point (requires declared bounds)
    bool bounds_hold(const Vector& x, double slack = 1e-9) const;

  private:
    SymbolicMatrixFn m_;
    std::optional<MetricBounds> bounds_;
};

struct GeodesicSettings {
    int nodes = 50;        // N segments, N+1 path nodes
    double tol = 1e-8;     // gradient infinity-norm stop
    int max_iter = 500;
    double backtrack = 0.5;
};

// Discretized path c(s_j), s_j = j/N.  Endpoints are pinned exactly.
struct GeodesicPath {
    Matrix nodes;  // (N+1) x n, row j = c(s_j)
    double energy = 0.0;
    int iterations = 0;
    bool converged = false;

    int segments() const { return static_cast<int>(nodes.rows()) - 1; }
    Vector node(int j) const { return nodes.row(j).transpose(); }
    // path tangent at node j: centered difference, one-sided at the ends
    Vector tangent(int j) const;
};

// Composite midpoint quadrature of the path energy and length:
// tangents N*(c_{j+1}-c_j), metric at segment midpoints.
double path_energy(const Metric& metric, const Matrix& nodes);
double path_length(const Metric& metric, const Matrix& nodes);

// Minimize the discretized energy over interior nodes, starting from the
// straight chord (or a caller-provided warm start).  Descent directions are
// preconditioned by the chord Laplacian; step sizes by backtracking line
// search.  Non-convergence is reported through the flag, never silently.
GeodesicPath solve_geodesic(const Metric& metric, const Vector& x0, const Vector& x1,
                            const GeodesicSettings& settings = {},
                            const Matrix* warm_start = nullptr);

struct EnergyResult {
    double energy = 0.0;
    bool converged = false;
};

// Riemann energy between two states: energy of the connecting geodesic.
EnergyResult riemann_energy(const Metric& metric, const Vector& x0, const Vector& x1,
                            const GeodesicSettings& settings = {});

}  // namespace lpvccm
