#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lpvccm/expr.hpp"
#include "lpvccm/model.hpp"

namespace lpvccm {

// Scheduling value left the operating box or a rate left the rate box.
struct OutOfDomainError : Error {
    using Error::Error;
};

// Smooth family of plant equilibria sigma -> (x_e, u_e, w_e, z_e) together
// with the scheduling map sigma = g(x) and the boxes the scheduling signal
// and its rate are designed for.
class EquilibriumFamily {
  public:
    EquilibriumFamily(const SystemModel& model, std::vector<std::string> sigma_names,
                      std::vector<std::string> xe_exprs, std::vector<std::string> ue_exprs,
                      std::vector<std::string> we_exprs, std::vector<std::string> ze_exprs,
                      std::vector<std::string> g_exprs,
                      std::vector<std::pair<double, double>> sigma_box,
                      std::vector<double> rate_bound);

    int n_sigma() const { return n_sigma_; }
    const Variables& sigma_vars() const { return sigma_vars_; }

    struct Point {
        Vector x_e, u_e, w_e, z_e;
    };
    Point at(const Vector& sigma) const;

    bool has_scheduling_map() const { return g_.size() > 0; }
    Vector schedule(const Vector& x) const;  // g(x)

    bool in_sigma_box(const Vector& sigma) const;
    bool in_rate_box(const Vector& rate) const;
    const std::vector<std::pair<double, double>>& sigma_box() const { return sigma_box_; }
    const std::vector<double>& rate_bound() const { return rate_bound_; }

    const ExprVector& xe() const { return xe_; }
    const ExprVector& ue() const { return ue_; }
    const ExprVector& we() const { return we_; }
    const ExprVector& ze() const { return ze_; }
    const ExprVector& g() const { return g_; }
    const ExprMatrix& dxe_dsigma() const { return dxe_; }
    const ExprMatrix& due_dsigma() const { return due_; }

    // Max |f(x_e, u_e, w_e)| over a per-axis grid of the sigma box.
    double max_equilibrium_residual(const SystemModel& model, int points_per_axis = 21) const;
    // Max |g(x_e(sigma)) - sigma| over the same grid.
    double max_scheduling_mismatch(int points_per_axis = 21) const;

  private:
    int n_sigma_, nx_, nu_, nw_;
    Variables sigma_vars_;
    ExprVector xe_, ue_, we_, ze_, g_;
    ExprMatrix dxe_, due_;
    std::vector<std::pair<double, double>> sigma_box_;
    std::vector<double> rate_bound_;
};

// Jacobians of the plant at the sigma-defined equilibrium.  Throws
// OutOfDomainError when sigma leaves the design box.
Jacobians lpv_linearize(const SystemModel& model, const EquilibriumFamily& fam,
                        const Vector& sigma);

// Coefficient matrices as symbolic functions of sigma (the model Jacobians
// composed with the equilibrium maps).
struct LpvMatrices {
    ExprMatrix A, Bu, Bw, C, Du, Dw;
};
LpvMatrices symbolic_lpv(const SystemModel& model, const EquilibriumFamily& fam);

enum class GsMode { ReferenceScheduled, StateScheduled };

// Static gain-scheduled state feedback realized from the design gain K(sigma):
//   u = u_e(sigma) + K(sigma) [x - x_e(sigma)],
// with sigma supplied externally (reference-scheduled) or read back from the
// state via the scheduling map (state-scheduled).
class GainScheduledController {
  public:
    GainScheduledController(EquilibriumFamily family, ExprMatrix gain, GsMode mode);

    const EquilibriumFamily& family() const { return family_; }
    const ExprMatrix& gain() const { return gain_; }
    GsMode mode() const { return mode_; }

  private:
    EquilibriumFamily family_;
    ExprMatrix gain_;  // n_u x n_x over sigma
    GsMode mode_;
};

struct GsOutput {
    Vector u;
    Vector sigma_used;
    bool in_domain = true;  // false flags sigma outside the design box
};
GsOutput gs_control(const GainScheduledController& c, const Vector& x,
                    const Vector& sigma_input);

// A realized control law u = kappa(x, sigma), as an evaluator plus an
// optional symbolic form over the concatenated [state..., sigma...] space.
struct RealizedLaw {
    std::function<Vector(const Vector& x, const Vector& sigma)> fn;
    std::optional<ExprVector> symbolic;
};
RealizedLaw realized_law(const GainScheduledController& c);

enum class DiffRoute { Auto, Symbolic, FiniteDifference };

// Hidden-coupling matrix of a realized law at sigma:
//   K_h = du_e/dsigma - K(sigma) dx_e/dsigma - dkappa/dsigma (x_e(sigma), sigma).
// An exactly zero matrix certifies that the realization has no hidden
// coupling at that operating point.
Matrix hidden_coupling(const EquilibriumFamily& fam, const ExprMatrix& gain,
                       const RealizedLaw& kappa, const Vector& sigma,
                       DiffRoute route = DiffRoute::Auto, double fd_step = 1e-6);

// Same functional with the design gain given as an evaluator (used to pass
// state-dependent differential gains evaluated on the equilibrium manifold).
Matrix hidden_coupling(const EquilibriumFamily& fam,
                       const std::function<Matrix(const Vector&)>& gain_at,
                       const RealizedLaw& kappa, const Vector& sigma,
                       DiffRoute route = DiffRoute::Auto, double fd_step = 1e-6);

// Residual forcing E(sigma) sigma_dot with E = dx_e/dsigma; the term the
// scheduled reference injects into the actual linearization.
Vector residual_term(const EquilibriumFamily& fam, const Vector& sigma,
                     const Vector& sigma_dot);

}  // namespace lpvccm
