#include "lpvccm/realization.hpp"

#include <cmath>

namespace lpvccm {

CCMController::CCMController(ExprMatrix k, Metric m, GeodesicSettings g, int sub)
    : gain(std::move(k)), metric(std::move(m)), geodesic(g), substeps(sub) {
    if (substeps < 1) throw Error("CCMController: substeps must be positive");
    if (gain.cols() != metric.dim())
        throw DimensionError("CCMController: gain columns must match the state dimension");
}

namespace {

// kappa' = K(gamma(s), kappa) gamma_s(s), with gamma piecewise linear on the
// nodes and gamma_s interpolated from the node tangents.
struct PathField {
    const CCMController& c;
    const GeodesicPath& path;
    int nx;
    std::vector<Vector> tangents;

    explicit PathField(const CCMController& ctrl, const GeodesicPath& p)
        : c(ctrl), path(p), nx(static_cast<int>(p.nodes.cols())) {
        tangents.reserve(static_cast<std::size_t>(p.segments()) + 1);
        for (int j = 0; j <= p.segments(); ++j) tangents.push_back(p.tangent(j));
    }

    Vector operator()(int segment, double xi, const Vector& kappa,
                      std::vector<double>& values) const {
        Vector gamma = ((1.0 - xi) * path.nodes.row(segment) +
                        xi * path.nodes.row(segment + 1))
                           .transpose();
        Vector gamma_s = (1.0 - xi) * tangents[static_cast<std::size_t>(segment)] +
                         xi * tangents[static_cast<std::size_t>(segment) + 1];
        for (int i = 0; i < nx; ++i) values[static_cast<std::size_t>(i)] = gamma[i];
        for (Eigen::Index i = 0; i < kappa.size(); ++i)
            values[static_cast<std::size_t>(nx + i)] = kappa[i];
        return c.gain.eval(values) * gamma_s;
    }
};

}  // namespace

Matrix integrate_gain(const CCMController& c, const GeodesicPath& path, const Vector& u_star) {
    const int n_seg = path.segments();
    const int nu = static_cast<int>(c.gain.rows());
    if (u_star.size() != nu) throw DimensionError("integrate_gain: u* dimension mismatch");

    PathField field(c, path);
    std::vector<double> values(static_cast<std::size_t>(path.nodes.cols()) +
                               static_cast<std::size_t>(nu));

    Matrix kappa(n_seg + 1, nu);
    Vector k = u_star;
    kappa.row(0) = k.transpose();
    const double h = 1.0 / (n_seg * c.substeps);
    for (int j = 0; j < n_seg; ++j) {
        for (int sub = 0; sub < c.substeps; ++sub) {
            double xi0 = static_cast<double>(sub) / c.substeps;
            double xi_half = (sub + 0.5) / c.substeps;
            double xi1 = static_cast<double>(sub + 1) / c.substeps;
            Vector k1 = field(j, xi0, k, values);
            Vector k2 = field(j, xi_half, k + 0.5 * h * k1, values);
            Vector k3 = field(j, xi_half, k + 0.5 * h * k2, values);
            Vector k4 = field(j, xi1, k + h * k3, values);
            k += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        kappa.row(j + 1) = k.transpose();
    }
    return kappa;
}

CcmOutput ccm_control(const CCMController& c, const Vector& x, const Vector& x_star,
                      const Vector& u_star, const Matrix* warm_start) {
    if ((x - x_star).norm() == 0.0) {
        GeodesicPath degenerate;
        degenerate.nodes = x.transpose().replicate(c.geodesic.nodes + 1, 1);
        degenerate.converged = true;
        return CcmOutput{u_star, true, std::move(degenerate)};
    }
    GeodesicPath path = solve_geodesic(c.metric, x_star, x, c.geodesic, warm_start);
    Matrix kappa = integrate_gain(c, path, u_star);
    bool ok = path.converged;
    return CcmOutput{kappa.row(kappa.rows() - 1).transpose(), ok, std::move(path)};
}

double exactness_check(const CCMController& c, const EquilibriumFamily& fam,
                       const std::vector<std::pair<double, double>>& sigma_box,
                       int points_per_axis, double fd_step) {
    if (!(fd_step > 0.0)) throw Error("exactness_check: finite-difference step underflow");
    const int nu = static_cast<int>(fam.ue().size());

    // realized law as a function of (x, sigma)
    RealizedLaw law;
    law.fn = [&c, &fam](const Vector& x, const Vector& sigma) {
        auto p = fam.at(sigma);
        return ccm_control(c, x, p.x_e, p.u_e).u;
    };

    // the design gain on the manifold is the differential gain at (x_e, u_e)
    auto gain_at = [&c, &fam, nu](const Vector& sigma) {
        auto p = fam.at(sigma);
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(p.x_e.size() + nu));
        values.insert(values.end(), p.x_e.begin(), p.x_e.end());
        values.insert(values.end(), p.u_e.begin(), p.u_e.end());
        return c.gain.eval(values);
    };

    GridSpec grid = GridSpec::over_box(fam.sigma_vars(), sigma_box, points_per_axis);
    double worst = 0.0;
    grid.for_each([&](const Vector& sigma) {
        Matrix kh = hidden_coupling(fam, gain_at, law, sigma, DiffRoute::FiniteDifference,
                                    fd_step);
        worst = std::max(worst, kh.cwiseAbs().maxCoeff());
    });
    return worst;
}

}  // namespace lpvccm
