#pragma once

#include "lpvccm/geometry.hpp"
#include "lpvccm/lpv.hpp"
#include "lpvccm/model.hpp"

namespace lpvccm {

// Differential state feedback realized by integrating the gain along the
// geodesic joining the reference state to the current state:
//   u = u* + integral_0^1 K(gamma(s), kappa(s)) gamma_s(s) ds.
struct CCMController {
    ExprMatrix gain;  // n_u x n_x over [state..., input...] variables
    Metric metric;
    GeodesicSettings geodesic;
    int substeps = 4;  // RK4 substeps per geodesic segment

    CCMController(ExprMatrix k, Metric m, GeodesicSettings g = {}, int sub = 4);
};

// Integrate d kappa / ds = K(gamma(s), kappa) gamma_s(s) with kappa(0) = u*
// by classical RK4 over the geodesic nodes; returns kappa at every node
// (row j = kappa(s_j)), with kappa(0) = u* exactly.
Matrix integrate_gain(const CCMController& c, const GeodesicPath& path, const Vector& u_star);

struct CcmOutput {
    Vector u;
    bool geodesic_converged = true;
    GeodesicPath path;
};

// Full controller evaluation: geodesic from x* to x, then the path integral.
// When x == x*, returns u* exactly.
CcmOutput ccm_control(const CCMController& c, const Vector& x, const Vector& x_star,
                      const Vector& u_star, const Matrix* warm_start = nullptr);

// Hidden-coupling functional applied to the map x -> ccm_control(x, x_e(s),
// u_e(s)) by central finite differences; returns the largest |K_h| over a
// per-axis grid of the given sigma box.  Near-zero output certifies the
// realization is exact on that box.
double exactness_check(const CCMController& c, const EquilibriumFamily& fam,
                       const std::vector<std::pair<double, double>>& sigma_box,
                       int points_per_axis = 11, double fd_step = 1e-6);

}  // namespace lpvccm
