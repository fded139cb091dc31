#include "lpvccm/lpv.hpp"

#include <cmath>
#include <numeric>

namespace lpvccm {

namespace {

std::vector<Expr> sigma_shift(const Variables& sigma_vars, int offset) {
    // embed sigma variable i as joint-space variable offset+i
    std::vector<Expr> reps;
    reps.reserve(sigma_vars.size());
    for (std::size_t i = 0; i < sigma_vars.size(); ++i)
        reps.push_back(Expr::variable(offset + static_cast<int>(i), sigma_vars.name(i)));
    return reps;
}

void walk_grid(const std::vector<std::pair<double, double>>& box, int points_per_axis,
               const std::function<void(const Vector&)>& visit) {
    const int n = static_cast<int>(box.size());
    Vector p(n);
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    const int count = points_per_axis < 1 ? 1 : points_per_axis;
    for (;;) {
        for (int i = 0; i < n; ++i) {
            auto [lo, hi] = box[static_cast<std::size_t>(i)];
            p[i] = count == 1 ? lo : lo + (hi - lo) * idx[static_cast<std::size_t>(i)] / (count - 1);
        }
        visit(p);
        int axis = 0;
        while (axis < n && ++idx[static_cast<std::size_t>(axis)] == count) {
            idx[static_cast<std::size_t>(axis)] = 0;
            ++axis;
        }
        if (axis == n || n == 0) break;
    }
}

}  // namespace

EquilibriumFamily::EquilibriumFamily(const SystemModel& model,
                                     std::vector<std::string> sigma_names,
                                     std::vector<std::string> xe_exprs,
                                     std::vector<std::string> ue_exprs,
                                     std::vector<std::string> we_exprs,
                                     std::vector<std::string> ze_exprs,
                                     std::vector<std::string> g_exprs,
                                     std::vector<std::pair<double, double>> sigma_box,
                                     std::vector<double> rate_bound)
    : n_sigma_(static_cast<int>(sigma_names.size())),
      nx_(model.nx()),
      nu_(model.nu()),
      nw_(model.nw()),
      sigma_vars_(sigma_names, std::vector<VarRole>(sigma_names.size(), VarRole::Scheduling)),
      sigma_box_(std::move(sigma_box)),
      rate_bound_(std::move(rate_bound)) {
    if (static_cast<int>(xe_exprs.size()) != nx_ ||
        static_cast<int>(ue_exprs.size()) != nu_ ||
        static_cast<int>(we_exprs.size()) != nw_)
        throw DimensionError("EquilibriumFamily: map sizes do not match model dimensions");
    if (static_cast<int>(sigma_box_.size()) != n_sigma_)
        throw DimensionError("EquilibriumFamily: sigma box must have one interval per axis");
    if (rate_bound_.empty()) rate_bound_.assign(static_cast<std::size_t>(n_sigma_), 0.0);
    if (static_cast<int>(rate_bound_.size()) != n_sigma_)
        throw DimensionError("EquilibriumFamily: rate bound must have one entry per axis");

    xe_ = ExprVector::parse(xe_exprs, sigma_vars_);
    ue_ = ExprVector::parse(ue_exprs, sigma_vars_);
    we_ = ExprVector::parse(we_exprs, sigma_vars_);

    if (!g_exprs.empty()) {
        if (static_cast<int>(g_exprs.size()) != n_sigma_)
            throw DimensionError("EquilibriumFamily: g must have one entry per sigma axis");
        g_ = ExprVector::parse(g_exprs, model.state_vars());
    }

    if (!ze_exprs.empty()) {
        ze_ = ExprVector::parse(ze_exprs, sigma_vars_);
    } else if (model.nz() > 0) {
        // compose z_e = h(x_e, u_e, w_e) symbolically
        std::vector<Expr> reps;
        for (std::size_t i = 0; i < xe_.size(); ++i) reps.push_back(xe_[i]);
        for (std::size_t i = 0; i < ue_.size(); ++i) reps.push_back(ue_[i]);
        for (std::size_t i = 0; i < we_.size(); ++i) reps.push_back(we_[i]);
        ze_ = model.h().substitute(reps, sigma_vars_);
    }

    std::vector<int> si(static_cast<std::size_t>(n_sigma_));
    std::iota(si.begin(), si.end(), 0);
    dxe_ = jacobian(xe_, si);
    due_ = jacobian(ue_, si);
}

EquilibriumFamily::Point EquilibriumFamily::at(const Vector& sigma) const {
    if (sigma.size() != n_sigma_)
        throw DimensionError("EquilibriumFamily: sigma dimension mismatch");
    std::span<const double> s(sigma.data(), static_cast<std::size_t>(sigma.size()));
    return Point{xe_.eval(s), ue_.eval(s), we_.eval(s),
                 ze_.size() > 0 ? ze_.eval(s) : Vector(0)};
}

Vector EquilibriumFamily::schedule(const Vector& x) const {
    if (!has_scheduling_map())
        throw Error("EquilibriumFamily: no scheduling map g(x) declared");
    if (x.size() != nx_) throw DimensionError("schedule: state dimension mismatch");
    return g_.eval(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

bool EquilibriumFamily::in_sigma_box(const Vector& sigma) const {
    for (int i = 0; i < n_sigma_; ++i) {
        auto [lo, hi] = sigma_box_[static_cast<std::size_t>(i)];
        if (sigma[i] < lo || sigma[i] > hi) return false;
    }
    return true;
}

bool EquilibriumFamily::in_rate_box(const Vector& rate) const {
    for (int i = 0; i < n_sigma_; ++i)
        if (std::abs(rate[i]) > rate_bound_[static_cast<std::size_t>(i)]) return false;
    return true;
}

double EquilibriumFamily::max_equilibrium_residual(const SystemModel& model,
                                                   int points_per_axis) const {
    double worst = 0.0;
    walk_grid(sigma_box_, points_per_axis, [&](const Vector& sigma) {
        Point p = at(sigma);
        worst = std::max(worst, model.dynamics(p.x_e, p.u_e, p.w_e).norm());
    });
    return worst;
}

double EquilibriumFamily::max_scheduling_mismatch(int points_per_axis) const {
    if (!has_scheduling_map())
        throw Error("EquilibriumFamily: no scheduling map g(x) declared");
    double worst = 0.0;
    walk_grid(sigma_box_, points_per_axis, [&](const Vector& sigma) {
        Point p = at(sigma);
        worst = std::max(worst, (schedule(p.x_e) - sigma).norm());
    });
    return worst;
}

Jacobians lpv_linearize(const SystemModel& model, const EquilibriumFamily& fam,
                        const Vector& sigma) {
    if (!fam.in_sigma_box(sigma))
        throw OutOfDomainError("lpv_linearize: sigma outside the design box");
    auto p = fam.at(sigma);
    return model.jacobians(p.x_e, p.u_e, p.w_e);
}

LpvMatrices symbolic_lpv(const SystemModel& model, const EquilibriumFamily& fam) {
    std::vector<Expr> reps;
    for (std::size_t i = 0; i < fam.xe().size(); ++i) reps.push_back(fam.xe()[i]);
    for (std::size_t i = 0; i < fam.ue().size(); ++i) reps.push_back(fam.ue()[i]);
    for (std::size_t i = 0; i < fam.we().size(); ++i) reps.push_back(fam.we()[i]);
    const Variables& sv = fam.sigma_vars();
    return LpvMatrices{model.dfdx().substitute(reps, sv), model.dfdu().substitute(reps, sv),
                       model.dfdw().substitute(reps, sv), model.dhdx().substitute(reps, sv),
                       model.dhdu().substitute(reps, sv), model.dhdw().substitute(reps, sv)};
}

GainScheduledController::GainScheduledController(EquilibriumFamily family, ExprMatrix gain,
                                                 GsMode mode)
    : family_(std::move(family)), gain_(std::move(gain)), mode_(mode) {
    if (gain_.rows() != static_cast<Eigen::Index>(family_.ue().size()) ||
        gain_.cols() != static_cast<Eigen::Index>(family_.xe().size()))
        throw DimensionError("GainScheduledController: gain must be n_u x n_x");
    if (!(gain_.vars() == family_.sigma_vars()))
        throw DimensionError("GainScheduledController: gain must be a function of sigma");
    if (mode_ == GsMode::StateScheduled && !family_.has_scheduling_map())
        throw Error("GainScheduledController: state scheduling requires a map g(x)");
}

GsOutput gs_control(const GainScheduledController& c, const Vector& x,
                    const Vector& sigma_input) {
    const EquilibriumFamily& fam = c.family();
    Vector sigma =
        c.mode() == GsMode::StateScheduled ? fam.schedule(x) : sigma_input;
    std::span<const double> s(sigma.data(), static_cast<std::size_t>(sigma.size()));
    auto p = fam.at(sigma);
    Vector u = p.u_e + c.gain().eval(s) * (x - p.x_e);
    bool in_domain = fam.in_sigma_box(sigma);
    return GsOutput{std::move(u), std::move(sigma), in_domain};
}

RealizedLaw realized_law(const GainScheduledController& c) {
    const EquilibriumFamily& fam = c.family();
    const int nx = static_cast<int>(fam.xe().size());
    const int nu = static_cast<int>(fam.ue().size());

    // symbolic form over joint [x..., sigma...] variables
    Variables state_vars = fam.g().size() > 0 ? fam.g().vars() : Variables();
    std::vector<std::string> joint_names;
    std::vector<VarRole> joint_roles;
    if (state_vars.size() == 0) {
        // fall back to synthetic state names when no map is declared
        for (int i = 0; i < nx; ++i) {
            joint_names.push_back("x" + std::to_string(i + 1));
            joint_roles.push_back(VarRole::State);
        }
    } else {
        for (std::size_t i = 0; i < state_vars.size(); ++i) {
            joint_names.push_back(state_vars.name(i));
            joint_roles.push_back(VarRole::State);
        }
    }
    for (std::size_t i = 0; i < fam.sigma_vars().size(); ++i) {
        joint_names.push_back(fam.sigma_vars().name(i));
        joint_roles.push_back(VarRole::Scheduling);
    }
    Variables joint(joint_names, joint_roles);

    std::vector<Expr> kappa_entries;
    if (c.mode() == GsMode::ReferenceScheduled) {
        auto reps = sigma_shift(fam.sigma_vars(), nx);
        std::vector<Expr> xe, ue, gain;
        for (int i = 0; i < nx; ++i) xe.push_back(fam.xe()[static_cast<std::size_t>(i)].substitute(reps));
        for (int i = 0; i < nu; ++i) ue.push_back(fam.ue()[static_cast<std::size_t>(i)].substitute(reps));
        for (int i = 0; i < nu; ++i) {
            Expr acc = ue[static_cast<std::size_t>(i)];
            for (int j = 0; j < nx; ++j) {
                Expr kij = c.gain()(i, j).substitute(reps);
                Expr xj = Expr::variable(j, joint.name(static_cast<std::size_t>(j)));
                acc = acc + kij * (xj - xe[static_cast<std::size_t>(j)]);
            }
            kappa_entries.push_back(acc);
        }
    } else {
        // sigma := g(x); the realized law depends on the state only
        std::vector<Expr> g_reps;
        for (std::size_t i = 0; i < fam.g().size(); ++i) g_reps.push_back(fam.g()[i]);
        std::vector<Expr> xe, ue;
        for (int i = 0; i < nx; ++i) xe.push_back(fam.xe()[static_cast<std::size_t>(i)].substitute(g_reps));
        for (int i = 0; i < nu; ++i) ue.push_back(fam.ue()[static_cast<std::size_t>(i)].substitute(g_reps));
        for (int i = 0; i < nu; ++i) {
            Expr acc = ue[static_cast<std::size_t>(i)];
            for (int j = 0; j < nx; ++j) {
                Expr kij = c.gain()(i, j).substitute(g_reps);
                Expr xj = Expr::variable(j, joint.name(static_cast<std::size_t>(j)));
                acc = acc + kij * (xj - xe[static_cast<std::size_t>(j)]);
            }
            kappa_entries.push_back(acc);
        }
    }

    RealizedLaw law;
    law.symbolic = ExprVector(std::move(kappa_entries), joint);
    GainScheduledController cc = c;
    law.fn = [cc](const Vector& x, const Vector& sigma) {
        return gs_control(cc, x, sigma).u;
    };
    return law;
}

namespace {

Matrix kappa_dsigma(const EquilibriumFamily& fam, const RealizedLaw& kappa,
                    const Vector& x_at, const Vector& sigma, DiffRoute route,
                    double fd_step) {
    const int nu = static_cast<int>(fam.ue().size());
    const int ns = fam.n_sigma();
    const int nx = static_cast<int>(x_at.size());
    Matrix d(nu, ns);
    bool use_symbolic = kappa.symbolic.has_value() && route != DiffRoute::FiniteDifference;
    if (route == DiffRoute::Symbolic && !kappa.symbolic.has_value())
        throw Error("hidden_coupling: no symbolic form available");
    if (use_symbolic) {
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(nx + ns));
        values.insert(values.end(), x_at.begin(), x_at.end());
        values.insert(values.end(), sigma.begin(), sigma.end());
        for (int j = 0; j < ns; ++j) {
            ExprVector dj = kappa.symbolic->diff(nx + j);
            d.col(j) = dj.eval(values);
        }
    } else {
        if (!kappa.fn) throw Error("hidden_coupling: realized law has no evaluator");
        for (int j = 0; j < ns; ++j) {
            Vector sp = sigma, sm = sigma;
            sp[j] += fd_step;
            sm[j] -= fd_step;
            d.col(j) = (kappa.fn(x_at, sp) - kappa.fn(x_at, sm)) / (2.0 * fd_step);
        }
    }
    return d;
}

}  // namespace

Matrix hidden_coupling(const EquilibriumFamily& fam,
                       const std::function<Matrix(const Vector&)>& gain_at,
                       const RealizedLaw& kappa, const Vector& sigma, DiffRoute route,
                       double fd_step) {
    if (!fam.in_sigma_box(sigma))
        throw OutOfDomainError("hidden_coupling: sigma outside the design box");
    std::span<const double> s(sigma.data(), static_cast<std::size_t>(sigma.size()));
    Matrix due = fam.due_dsigma().eval(s);
    Matrix dxe = fam.dxe_dsigma().eval(s);
    Vector x_e = fam.xe().eval(s);
    Matrix k = gain_at(sigma);
    return due - k * dxe - kappa_dsigma(fam, kappa, x_e, sigma, route, fd_step);
}

Matrix hidden_coupling(const EquilibriumFamily& fam, const ExprMatrix& gain,
                       const RealizedLaw& kappa, const Vector& sigma, DiffRoute route,
                       double fd_step) {
    return hidden_coupling(
        fam,
        [&gain](const Vector& sg) {
            return gain.eval(std::span<const double>(sg.data(),
                                                     static_cast<std::size_t>(sg.size())));
        },
        kappa, sigma, route, fd_step);
}

Vector residual_term(const EquilibriumFamily& fam, const Vector& sigma,
                     const Vector& sigma_dot) {
    if (!fam.in_sigma_box(sigma))
        throw OutOfDomainError("residual_term: sigma outside the design box");
    if (!fam.in_rate_box(sigma_dot))
        throw OutOfDomainError("residual_term: rate outside the rate box");
    std::span<const double> s(sigma.data(), static_cast<std::size_t>(sigma.size()));
    return fam.dxe_dsigma().eval(s) * sigma_dot;
}

}  // namespace lpvccm
