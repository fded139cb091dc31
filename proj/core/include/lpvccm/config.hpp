#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lpvccm/certify.hpp"
#include "lpvccm/sim.hpp"

namespace lpvccm {

// exit codes reported by the run driver
inline constexpr int kExitOk = 0;
inline constexpr int kExitSchema = 2;
inline constexpr int kExitExpression = 3;
inline constexpr int kExitRuntime = 4;

struct ConfigError : Error {
    ConfigError(const std::string& what, std::string at, int code)
        : Error(what + " (at " + at + ")"), path(std::move(at)), exit_code(code) {}
    std::string path;  // JSON-pointer-ish location of the offending field
    int exit_code;
};

struct ScenarioSpec {
    std::string name;
    std::vector<std::string> controllers;
    std::vector<ScalarSignal> channels;
    std::optional<ExprVector> u_star;
    Vector x0;
    double t_end = 20.0;
    double dt = 1e-3;
    double fit_lo = 0.0;
    double fit_hi = std::numeric_limits<double>::infinity();
    std::optional<bool> expect_diverged;
    std::optional<double> expect_final_err_below;
};

struct CertRequest {
    std::string name;
    std::string condition;  // stability | convex | performance | ccm | ccm_performance
    SymbolicMatrixFn metric;                 // M over sigma (or x for ccm conditions)
    std::optional<SymbolicMatrixFn> w_fn, l_fn;  // convex form
    std::optional<ExprMatrix> gain_sigma;    // K over sigma (lpv conditions)
    std::optional<ExprMatrix> gain_xu;       // K over (x, u) (ccm conditions)
    double lambda = 0.0;
    double alpha = 1.0;
    int grid_points = 21;
    std::vector<double> rate_bound;
    std::vector<GridAxis> ccm_axes;  // axes over model variables
    std::optional<std::string> expect_verdict;
    struct Bisect {
        BisectGoal goal;
        double lo, hi, tol;
    };
    std::optional<Bisect> bisect;
};

struct RunPlan {
    SystemModel model;
    std::optional<EquilibriumFamily> family;
    std::vector<std::pair<std::string, Controller>> controllers;
    std::vector<ScenarioSpec> scenarios;
    std::vector<CertRequest> certifications;
    std::filesystem::path out_dir = "out";
};

// Parse and validate a config file.  Schema violations carry kExitSchema,
// expression problems kExitExpression; both surface as ConfigError.
RunPlan load_config(const std::filesystem::path& path);
RunPlan load_config_json(const nlohmann::json& j);

// Execute every declared certification and simulation, writing CSV and JSON
// artifacts into the plan's output directory.  Returns a process exit code;
// failed expectations and invalid brackets map to kExitRuntime.
int run_plan(const RunPlan& plan, std::ostream& log);

// Only the certifications (the `certify` subcommand).
int run_certifications(const RunPlan& plan, std::ostream& log);

// Jacobian cross-check over random points for the plan's model; returns the
// worst relative deviation.
double jacobian_check(const SystemModel& model, int points, unsigned seed = 20260810);

}  // namespace lpvccm
