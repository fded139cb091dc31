#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <variant>

#include "lpvccm/lpv.hpp"
#include "lpvccm/realization.hpp"

namespace lpvccm {

// Scalar signal with an exact analytic derivative.
class ScalarSignal {
  public:
    static ScalarSignal constant(double value);
    // value = levels[i] on [times[i], times[i+1]); rate 0 between breakpoints
    static ScalarSignal piecewise(std::vector<double> times, std::vector<double> levels);
    // value = offset + amplitude * sin(omega t)
    static ScalarSignal sinusoid(double amplitude, double omega, double offset = 0.0);
    // arbitrary expression of t; the rate is its symbolic derivative
    static ScalarSignal expression(const std::string& expr_of_t);

    double value(double t) const;
    double rate(double t) const;

  private:
    struct Piecewise {
        std::vector<double> times, levels;
    };
    struct Sine {
        double amplitude, omega, offset;
    };
    struct Sym {
        Expr value, rate;
    };
    std::variant<double, Piecewise, Sine, Sym> impl_;
};

struct RefPoint {
    Vector sigma, sigma_dot;
    Vector x, u, w, z;  // target trajectory values
};

// Target-trajectory generator.  Family-based references drive the scheduling
// channels through scalar signals and map them to (x*, u*, w*, z*); the u*
// map may include feedforward terms in the channel rates.
class ReferenceSignal {
  public:
    static ReferenceSignal from_family(EquilibriumFamily fam,
                                       std::vector<ScalarSignal> channels,
                                       std::optional<ExprVector> u_star = {});
    // trivial zero reference (the origin equilibrium)
    static ReferenceSignal zero(int nx, int nu, int nw, int nz);

    RefPoint at(double t) const;
    const EquilibriumFamily* family() const { return family_ ? &*family_ : nullptr; }

  private:
    std::optional<EquilibriumFamily> family_;
    std::vector<ScalarSignal> channels_;
    std::optional<ExprVector> u_star_;  // over [sigma..., sigma_dot...]
    int nx_ = 0, nu_ = 0, nw_ = 0, nz_ = 0;
};

struct Trajectory {
    Vector t;
    Matrix x, u, w, z;                      // row k = sample at t[k]
    Matrix x_ref, u_ref, w_ref, z_ref;
};

// per-step flag bits
inline constexpr std::uint8_t kFlagSigmaOutOfBox = 1;
inline constexpr std::uint8_t kFlagGeodesicFail = 2;
inline constexpr std::uint8_t kFlagDomainError = 4;
inline constexpr std::uint8_t kFlagDiverged = 8;

struct SimWarnings {
    int sigma_out_of_box = 0;
    int geodesic_failures = 0;
    std::vector<std::string> notes;
};

struct SimResult {
    Trajectory traj;
    Vector err_norm;                  // |x - x*|
    Vector energy;                    // Riemann energy to the reference (NaN if no metric)
    std::vector<std::uint8_t> flags;  // aligned with the time grid
    bool diverged = false;
    bool domain_error = false;
    SimWarnings warnings;
};

// open loop (zero input) | gain-scheduled | path-integral CCM
using Controller = std::variant<std::monostate, GainScheduledController, CCMController>;

struct SimOptions {
    double t_end = 20.0;
    double dt = 1e-3;
    double divergence_threshold = 1e6;
    bool record_energy = true;            // uses the CCM metric or energy_metric
    const Metric* energy_metric = nullptr;
};

// Fixed-step classical RK4 on the closed loop; the controller is evaluated
// once per RK stage.  Divergence and expression domain errors truncate the
// run with flags instead of throwing.
SimResult simulate(const SystemModel& model, const Controller& controller,
                   const ReferenceSignal& ref, const Vector& x0, const SimOptions& opts = {});

// Does the recorded energy obey eps(t) <= eps(0) exp(-2 lambda t) within the
// relative slack?  Geodesic failures during the run invalidate the check.
struct DecayCheck {
    bool satisfied = false;
    double margin = 0.0;  // max relative excess over the bound
    bool valid = true;
};
DecayCheck energy_decay(const Metric& metric, const SimResult& result, double lambda_claimed,
                        double tol_decay = 0.02);

// Ratio ||z_p - z_n|| / ||w_p - w_n|| by trapezoidal quadrature over the
// shared time grid.  Throws on a zero-disturbance denominator.
double l2_gain_estimate(const SimResult& nominal, const SimResult& perturbed);

// Least-squares fit of log|x - x*| against t over [t_lo, t_hi] (where the
// error exceeds 1e-9); R makes the bound |x - x*| <= R e^{-lambda t} |x(0) - x*(0)|
// tight at the worst sample.
struct OvershootFit {
    double R = 0.0;
    double lambda = 0.0;
};
OvershootFit overshoot_fit(const SimResult& result, double t_lo = 0.0,
                           double t_hi = std::numeric_limits<double>::infinity());

}  // namespace lpvccm
