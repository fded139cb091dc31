#pragma once

#include "lpvccm/sim.hpp"

namespace lpvccm {
namespace casestudy {

// Two-state benchmark plant
//   x1' = -x1 - x2 + w,   x2' = 1 - exp(-x2) + u,
// stabilized on the equilibrium family x_e = (0, w_e), u_e = exp(-w_e) - 1.
SystemModel plant();

// Family parameterized directly by the reference level (sigma = w_e), with
// the scheduling map g(x) = x2.  This is the parameterization the hidden
// coupling value is quoted in.
EquilibriumFamily family_w(const SystemModel& model);

// Family parameterized by sigma = exp(-w_e) (equivalently exp(-x2_e)); the
// LPV coefficient matrices are affine in this sigma.
EquilibriumFamily family_sigma(const SystemModel& model);

// Design gain K(sigma) = [1, -3 - sigma] over the family_sigma parameter;
// it places both closed-loop eigenvalues at -2 for every sigma.
ExprMatrix lpv_gain_sigma(const EquilibriumFamily& fam);

// The same gain expressed over the family_w parameter: K(s) = [1, -(3 + e^-s)].
ExprMatrix lpv_gain_w(const EquilibriumFamily& fam);

// Reference-scheduled realization (schedules on the measured reference).
GainScheduledController gsc1(const SystemModel& model);
// State-scheduled realization (schedules on sigma = g(x) = x2).
GainScheduledController gsc2(const SystemModel& model);
// Path-integral controller with differential gain K(x) = [1, -(3 + e^-x2)]
// and the constant identity metric.
CCMController ccm(const SystemModel& model);

// Tracking scenarios: piecewise-constant setpoints w in {0, 1, -2} switched
// at t in {0, 7, 14}, and the time-varying reference w(t) = 0.5 sin t.  The
// u* map carries the feedforward rate term needed by the path-integral
// controller.
ReferenceSignal step_reference(const SystemModel& model);
ReferenceSignal sine_reference(const SystemModel& model);
ReferenceSignal constant_reference(const SystemModel& model, double level);

// Default initial state for the tracking scenarios.
Vector default_x0();
// Initial states demonstrating the reference-scheduled realization's
// instability region (diverges) and its complement (converges).
Vector unstable_x0();
Vector stable_x0();

}  // namespace casestudy
}  // namespace lpvccm
