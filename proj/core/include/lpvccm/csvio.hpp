#pragma once

#include <iosfwd>
#include <limits>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "lpvccm/geometry.hpp"
#include "lpvccm/sim.hpp"

namespace lpvccm {

// Shortest deterministic decimal form that typical plotters read back.
std::string format_double(double v);

// Columns: t, <states>, <inputs>, <disturbances>, err_norm, energy, flags.
void write_sim_csv(std::ostream& os, const SystemModel& model, const SimResult& result);

// Leading comment row with energy/length, then columns s, <states>.
void write_geodesic_csv(std::ostream& os, const Metric& metric, const GeodesicPath& path);

// Scenario summary: every warning recorded per step is surfaced here.  The
// decay fit runs over [fit_lo, fit_hi].
nlohmann::json sim_summary(const std::string& scenario, const std::string& controller,
                           const SimResult& result, double fit_lo = 0.0,
                           double fit_hi = std::numeric_limits<double>::infinity());

}  // namespace lpvccm
