#include "lpvccm/sim.hpp"

#include <algorithm>
#include <cmath>

namespace lpvccm {

// ---------------------------------------------------------------------------
// ScalarSignal
// ---------------------------------------------------------------------------

ScalarSignal ScalarSignal::constant(double value) {
    ScalarSignal s;
    s.impl_ = value;
    return s;
}

ScalarSignal ScalarSignal::piecewise(std::vector<double> times, std::vector<double> levels) {
    if (times.size() != levels.size() || times.empty())
        throw Error("ScalarSignal: breakpoints and levels must match and be non-empty");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] <= times[i - 1]) throw Error("ScalarSignal: breakpoints must increase");
    ScalarSignal s;
    s.impl_ = Piecewise{std::move(times), std::move(levels)};
    return s;
}

ScalarSignal ScalarSignal::sinusoid(double amplitude, double omega, double offset) {
    ScalarSignal s;
    s.impl_ = Sine{amplitude, omega, offset};
    return s;
}

ScalarSignal ScalarSignal::expression(const std::string& expr_of_t) {
    Variables tv({"t"}, {VarRole::Time});
    Expr value = parse(expr_of_t, tv);
    ScalarSignal s;
    s.impl_ = Sym{value, value.diff(0)};
    return s;
}

double ScalarSignal::value(double t) const {
    if (const double* c = std::get_if<double>(&impl_)) return *c;
    if (const Piecewise* p = std::get_if<Piecewise>(&impl_)) {
        double v = p->levels.front();
        for (std::size_t i = 0; i < p->times.size(); ++i)
            if (t >= p->times[i]) v = p->levels[i];
        return v;
    }
    if (const Sine* s = std::get_if<Sine>(&impl_))
        return s->offset + s->amplitude * std::sin(s->omega * t);
    const Sym& sym = std::get<Sym>(impl_);
    double values[1] = {t};
    return sym.value.eval(values);
}

double ScalarSignal::rate(double t) const {
    if (std::holds_alternative<double>(impl_)) return 0.0;
    if (std::holds_alternative<Piecewise>(impl_)) return 0.0;
    if (const Sine* s = std::get_if<Sine>(&impl_))
        return s->amplitude * s->omega * std::cos(s->omega * t);
    const Sym& sym = std::get<Sym>(impl_);
    double values[1] = {t};
    return sym.rate.eval(values);
}

// ---------------------------------------------------------------------------
// ReferenceSignal
// ---------------------------------------------------------------------------

ReferenceSignal ReferenceSignal::from_family(EquilibriumFamily fam,
                                             std::vector<ScalarSignal> channels,
                                             std::optional<ExprVector> u_star) {
    if (static_cast<int>(channels.size()) != fam.n_sigma())
        throw DimensionError("ReferenceSignal: one signal per scheduling channel required");
    ReferenceSignal r;
    r.nx_ = static_cast<int>(fam.xe().size());
    r.nu_ = static_cast<int>(fam.ue().size());
    r.nw_ = static_cast<int>(fam.we().size());
    r.nz_ = static_cast<int>(fam.ze().size());
    if (u_star) {
        if (static_cast<int>(u_star->size()) != r.nu_)
            throw DimensionError("ReferenceSignal: u* map must have n_u entries");
        if (u_star->vars().size() != 2 * static_cast<std::size_t>(fam.n_sigma()))
            throw DimensionError(
                "ReferenceSignal: u* map must be over [sigma..., sigma_dot...]");
    }
    r.family_ = std::move(fam);
    r.channels_ = std::move(channels);
    r.u_star_ = std::move(u_star);
    return r;
}

ReferenceSignal ReferenceSignal::zero(int nx, int nu, int nw, int nz) {
    ReferenceSignal r;
    r.nx_ = nx;
    r.nu_ = nu;
    r.nw_ = nw;
    r.nz_ = nz;
    return r;
}

RefPoint ReferenceSignal::at(double t) const {
    RefPoint p;
    if (!family_) {
        p.sigma = Vector(0);
        p.sigma_dot = Vector(0);
        p.x = Vector::Zero(nx_);
        p.u = Vector::Zero(nu_);
        p.w = Vector::Zero(nw_);
        p.z = Vector::Zero(nz_);
        return p;
    }
    const int ns = family_->n_sigma();
    p.sigma.resize(ns);
    p.sigma_dot.resize(ns);
    for (int i = 0; i < ns; ++i) {
        p.sigma[i] = channels_[static_cast<std::size_t>(i)].value(t);
        p.sigma_dot[i] = channels_[static_cast<std::size_t>(i)].rate(t);
    }
    auto fp = family_->at(p.sigma);
    p.x = std::move(fp.x_e);
    p.w = std::move(fp.w_e);
    p.z = std::move(fp.z_e);
    if (u_star_) {
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(2 * ns));
        values.insert(values.end(), p.sigma.begin(), p.sigma.end());
        values.insert(values.end(), p.sigma_dot.begin(), p.sigma_dot.end());
        p.u = u_star_->eval(values);
    } else {
        p.u = std::move(fp.u_e);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Closed-loop simulation
// ---------------------------------------------------------------------------

namespace {

struct ControlEval {
    Vector u;
    bool sigma_ok = true;
    bool geodesic_ok = true;
};

struct ControlContext {
    const SystemModel& model;
    const Controller& controller;
    const ReferenceSignal& ref;
    Matrix ccm_warm;  // warm-start nodes for the geodesic solver
    bool have_warm = false;

    ControlEval evaluate(double t, const Vector& x) {
        ControlEval out;
        if (std::holds_alternative<std::monostate>(controller)) {
            out.u = Vector::Zero(model.nu());
            return out;
        }
        RefPoint rp = ref.at(t);
        if (const auto* gs = std::get_if<GainScheduledController>(&controller)) {
            GsOutput g = gs_control(*gs, x, rp.sigma);
            out.u = std::move(g.u);
            out.sigma_ok = g.in_domain;
            return out;
        }
        const auto& ccm = std::get<CCMController>(controller);
        CcmOutput c = ccm_control(ccm, x, rp.x, rp.u, have_warm ? &ccm_warm : nullptr);
        out.u = std::move(c.u);
        out.geodesic_ok = c.geodesic_converged;
        ccm_warm = std::move(c.path.nodes);
        have_warm = true;
        return out;
    }
};

const Metric* pick_energy_metric(const Controller& controller, const SimOptions& opts) {
    if (!opts.record_energy) return nullptr;
    if (opts.energy_metric) return opts.energy_metric;
    if (const auto* ccm = std::get_if<CCMController>(&controller)) return &ccm->metric;
    return nullptr;
}

void truncate(SimResult& r, int count) {
    r.traj.t.conservativeResize(count);
    r.traj.x.conservativeResize(count, Eigen::NoChange);
    r.traj.u.conservativeResize(count, Eigen::NoChange);
    r.traj.w.conservativeResize(count, Eigen::NoChange);
    r.traj.z.conservativeResize(count, Eigen::NoChange);
    r.traj.x_ref.conservativeResize(count, Eigen::NoChange);
    r.traj.u_ref.conservativeResize(count, Eigen::NoChange);
    r.traj.w_ref.conservativeResize(count, Eigen::NoChange);
    r.traj.z_ref.conservativeResize(count, Eigen::NoChange);
    r.err_norm.conservativeResize(count);
    r.energy.conservativeResize(count);
    r.flags.resize(static_cast<std::size_t>(count));
}

}  // namespace

SimResult simulate(const SystemModel& model, const Controller& controller,
                   const ReferenceSignal& ref, const Vector& x0, const SimOptions& opts) {
    if (!(opts.dt > 0.0) || opts.t_end < opts.dt)
        throw Error("simulate: need dt > 0 and t_end >= dt");
    if (x0.size() != model.nx()) throw DimensionError("simulate: x0 dimension mismatch");

    const int steps = static_cast<int>(std::llround(opts.t_end / opts.dt));
    const int samples = steps + 1;
    const Metric* energy_metric = pick_energy_metric(controller, opts);

    SimResult r;
    r.traj.t.resize(samples);
    r.traj.x.resize(samples, model.nx());
    r.traj.u.resize(samples, model.nu());
    r.traj.w.resize(samples, model.nw());
    r.traj.z.resize(samples, model.nz());
    r.traj.x_ref.resize(samples, model.nx());
    r.traj.u_ref.resize(samples, model.nu());
    r.traj.w_ref.resize(samples, model.nw());
    r.traj.z_ref.resize(samples, model.nz());
    r.err_norm.resize(samples);
    r.energy.setConstant(samples, std::numeric_limits<double>::quiet_NaN());
    r.flags.assign(static_cast<std::size_t>(samples), 0);

    ControlContext ctx{model, controller, ref};
    Matrix energy_warm;
    bool have_energy_warm = false;

    Vector x = x0;
    int recorded = 0;
    for (int k = 0; k < samples; ++k) {
        double t = k * opts.dt;
        std::uint8_t flag = 0;
        RefPoint rp = ref.at(t);
        Vector w = rp.w;

        // record the sample
        try {
            ControlEval ce = ctx.evaluate(t, x);
            if (!ce.sigma_ok) {
                flag |= kFlagSigmaOutOfBox;
                ++r.warnings.sigma_out_of_box;
            }
            if (!ce.geodesic_ok) {
                flag |= kFlagGeodesicFail;
                ++r.warnings.geodesic_failures;
            }
            r.traj.t[k] = t;
            r.traj.x.row(k) = x.transpose();
            r.traj.u.row(k) = ce.u.transpose();
            r.traj.w.row(k) = w.transpose();
            r.traj.z.row(k) = model.output(x, ce.u, w).transpose();
            r.traj.x_ref.row(k) = rp.x.transpose();
            r.traj.u_ref.row(k) = rp.u.transpose();
            r.traj.w_ref.row(k) = rp.w.transpose();
            r.traj.z_ref.row(k) = rp.z.transpose();
            r.err_norm[k] = (x - rp.x).norm();
            if (energy_metric) {
                GeodesicSettings gs;
                if (const auto* ccm = std::get_if<CCMController>(&controller))
                    gs = ccm->geodesic;
                GeodesicPath gp = solve_geodesic(*energy_metric, rp.x, x, gs,
                                                 have_energy_warm ? &energy_warm : nullptr);
                r.energy[k] = gp.energy;
                if (!gp.converged) {
                    flag |= kFlagGeodesicFail;
                    ++r.warnings.geodesic_failures;
                }
                energy_warm = std::move(gp.nodes);
                have_energy_warm = true;
            }
        } catch (const EvalError& e) {
            r.domain_error = true;
            r.warnings.notes.push_back("domain error at t=" + std::to_string(t) + ": " +
                                       e.what());
            break;
        }
        r.flags[static_cast<std::size_t>(k)] = flag;
        recorded = k + 1;

        if (!x.allFinite() || x.norm() > opts.divergence_threshold) {
            r.diverged = true;
            r.flags[static_cast<std::size_t>(k)] |= kFlagDiverged;
            break;
        }
        if (k == steps) break;

        // RK4 step; the controller is evaluated once per stage
        try {
            auto xdot = [&](double ts, const Vector& xs) {
                ControlEval ce = ctx.evaluate(ts, xs);
                return model.dynamics(xs, ce.u, ref.at(ts).w);
            };
            Vector k1 = xdot(t, x);
            Vector k2 = xdot(t + 0.5 * opts.dt, x + 0.5 * opts.dt * k1);
            Vector k3 = xdot(t + 0.5 * opts.dt, x + 0.5 * opts.dt * k2);
            Vector k4 = xdot(t + opts.dt, x + opts.dt * k3);
            x += (opts.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } catch (const EvalError& e) {
            r.domain_error = true;
            r.flags[static_cast<std::size_t>(k)] |= kFlagDomainError;
            r.warnings.notes.push_back("domain error at t=" + std::to_string(t) + ": " +
                                       e.what());
            break;
        }
    }

    if (recorded < samples) truncate(r, recorded);
    if (r.diverged) r.warnings.notes.push_back("state diverged");
    return r;
}

DecayCheck energy_decay(const Metric& metric, const SimResult& result, double lambda_claimed,
                        double tol_decay) {
    DecayCheck out;
    if (result.warnings.geodesic_failures > 0) {
        out.valid = false;
        return out;
    }
    const Eigen::Index n = result.traj.t.size();
    if (n < 1) throw Error("energy_decay: empty result");

    Vector energy = result.energy;
    if (energy.size() != n || !std::isfinite(energy[0])) {
        energy.resize(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            EnergyResult e = riemann_energy(metric, result.traj.x_ref.row(k).transpose(),
                                            result.traj.x.row(k).transpose());
            if (!e.converged) {
                out.valid = false;
                return out;
            }
            energy[k] = e.energy;
        }
    }

    const double e0 = energy[0];
    const double t0 = result.traj.t[0];
    if (e0 <= 1e-12) {
        // started on the reference; require it stays there
        double worst = energy.maxCoeff();
        out.satisfied = worst <= 1e-9;
        out.margin = worst;
        return out;
    }
    double worst_ratio = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        double bound = e0 * std::exp(-2.0 * lambda_claimed * (result.traj.t[k] - t0));
        double ratio = bound > 0.0 ? energy[k] / bound : 0.0;
        worst_ratio = std::max(worst_ratio, ratio);
    }
    out.margin = worst_ratio - 1.0;
    out.satisfied = worst_ratio <= 1.0 + tol_decay;
    return out;
}

double l2_gain_estimate(const SimResult& nominal, const SimResult& perturbed) {
    const Eigen::Index n = nominal.traj.t.size();
    if (perturbed.traj.t.size() != n || n < 2)
        throw Error("l2_gain_estimate: runs must share the time grid");
    if ((nominal.traj.t - perturbed.traj.t).cwiseAbs().maxCoeff() != 0.0)
        throw Error("l2_gain_estimate: runs must share the time grid");

    double num = 0.0, den = 0.0;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        double dt = nominal.traj.t[k + 1] - nominal.traj.t[k];
        double z0 = (perturbed.traj.z.row(k) - nominal.traj.z.row(k)).squaredNorm();
        double z1 = (perturbed.traj.z.row(k + 1) - nominal.traj.z.row(k + 1)).squaredNorm();
        double w0 = (perturbed.traj.w.row(k) - nominal.traj.w.row(k)).squaredNorm();
        double w1 = (perturbed.traj.w.row(k + 1) - nominal.traj.w.row(k + 1)).squaredNorm();
        num += 0.5 * dt * (z0 + z1);
        den += 0.5 * dt * (w0 + w1);
    }
    if (den == 0.0) throw Error("l2_gain_estimate: disturbances are identical");
    return std::sqrt(num / den);
}

OvershootFit overshoot_fit(const SimResult& result, double t_lo, double t_hi) {
    if (result.diverged) throw Error("overshoot_fit: run diverged");
    const Eigen::Index n = result.traj.t.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        double t = result.traj.t[k];
        double e = result.err_norm[k];
        if (t < t_lo || t > t_hi || e <= 1e-9) continue;
        double y = std::log(e);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        ++count;
    }
    if (count < 2) throw Error("overshoot_fit: no samples with error above threshold");
    double denom = count * sxx - sx * sx;
    if (denom == 0.0) throw Error("overshoot_fit: degenerate fit window");
    double slope = (count * sxy - sx * sy) / denom;

    OvershootFit fit;
    fit.lambda = -slope;
    const double e_init = result.err_norm[0];
    if (e_init <= 0.0) throw Error("overshoot_fit: already at the reference");
    double worst = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        double t = result.traj.t[k];
        if (t < t_lo || t > t_hi) continue;
        worst = std::max(worst, result.err_norm[k] * std::exp(fit.lambda * t) / e_init);
    }
    fit.R = worst;
    return fit;
}

}  // namespace lpvccm
