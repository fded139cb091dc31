#include "lpvccm/csvio.hpp"

#include <cstdio>
#include <ostream>

#include <nlohmann/json.hpp>

namespace lpvccm {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_sim_csv(std::ostream& os, const SystemModel& model, const SimResult& result) {
    os << "t";
    for (std::size_t i = 0; i < model.vars().size(); ++i) os << "," << model.vars().name(i);
    os << ",err_norm,energy,flags\n";
    const Eigen::Index n = result.traj.t.size();
    for (Eigen::Index k = 0; k < n; ++k) {
        os << format_double(result.traj.t[k]);
        for (Eigen::Index j = 0; j < result.traj.x.cols(); ++j)
            os << "," << format_double(result.traj.x(k, j));
        for (Eigen::Index j = 0; j < result.traj.u.cols(); ++j)
            os << "," << format_double(result.traj.u(k, j));
        for (Eigen::Index j = 0; j < result.traj.w.cols(); ++j)
            os << "," << format_double(result.traj.w(k, j));
        os << "," << format_double(result.err_norm[k]);
        os << "," << format_double(result.energy[k]);
        os << "," << static_cast<int>(result.flags[static_cast<std::size_t>(k)]);
        os << "\n";
    }
}

void write_geodesic_csv(std::ostream& os, const Metric& metric, const GeodesicPath& path) {
    os << "# energy=" << format_double(path.energy)
       << " length=" << format_double(path_length(metric, path.nodes))
       << " iterations=" << path.iterations
       << " converged=" << (path.converged ? "true" : "false") << "\n";
    os << "s";
    for (Eigen::Index j = 0; j < path.nodes.cols(); ++j) os << ",x" << (j + 1);
    os << "\n";
    const int n_seg = path.segments();
    for (int k = 0; k <= n_seg; ++k) {
        os << format_double(static_cast<double>(k) / n_seg);
        for (Eigen::Index j = 0; j < path.nodes.cols(); ++j)
            os << "," << format_double(path.nodes(k, j));
        os << "\n";
    }
}

nlohmann::json sim_summary(const std::string& scenario, const std::string& controller,
                           const SimResult& result, double fit_lo, double fit_hi) {
    nlohmann::json j;
    j["scenario"] = scenario;
    j["controller"] = controller;
    j["diverged"] = result.diverged;
    j["domain_error"] = result.domain_error;
    j["samples"] = result.traj.t.size();
    j["final_err"] = result.err_norm.size() > 0 ? result.err_norm[result.err_norm.size() - 1]
                                                : 0.0;
    try {
        OvershootFit fit = overshoot_fit(result, fit_lo, fit_hi);
        j["lambda_fit"] = fit.lambda;
        j["overshoot_R"] = fit.R;
    } catch (const Error&) {
        j["lambda_fit"] = nullptr;
        j["overshoot_R"] = nullptr;
    }
    j["warnings"] = {{"sigma_out_of_box", result.warnings.sigma_out_of_box},
                     {"geodesic_failures", result.warnings.geodesic_failures},
                     {"notes", result.warnings.notes}};
    return j;
}

}  // namespace lpvccm
