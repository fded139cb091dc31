#include "lpvccm/certify.hpp"

#include <cmath>

#include <Eigen/LU>
#include <nlohmann/json.hpp>

namespace lpvccm {

SymbolicMatrixFn::SymbolicMatrixFn(ExprMatrix m, bool symmetric)
    : m_(std::move(m)), symmetric_(symmetric) {
    if (symmetric_ && m_.rows() != m_.cols())
        throw DimensionError("SymbolicMatrixFn: symmetric flag on non-square matrix");
    partials_.reserve(m_.vars().size());
    for (std::size_t i = 0; i < m_.vars().size(); ++i) {
        partials_.push_back(m_.diff(static_cast<int>(i)));
        if (!partials_.back().is_constant()) partials_vanish_ = false;
        else {
            Matrix z = partials_.back().eval(std::vector<double>(m_.vars().size(), 0.0));
            if (z.size() > 0 && z.cwiseAbs().maxCoeff() != 0.0) partials_vanish_ = false;
        }
    }
    if (m_.is_constant())
        constant_ = m_.eval(std::vector<double>(m_.vars().size(), 0.0));
}

SymbolicMatrixFn SymbolicMatrixFn::constant(const Matrix& m, const Variables& vars,
                                            bool symmetric) {
    return SymbolicMatrixFn(ExprMatrix::constant(m, vars), symmetric);
}

Matrix SymbolicMatrixFn::eval(const Vector& p) const {
    if (p.size() != static_cast<Eigen::Index>(m_.vars().size()))
        throw DimensionError("SymbolicMatrixFn: parameter dimension mismatch");
    Matrix out = constant_ ? *constant_
                           : m_.eval(std::span<const double>(
                                 p.data(), static_cast<std::size_t>(p.size())));
    if (symmetric_) {
        double scale = std::max(1.0, out.size() > 0 ? out.cwiseAbs().maxCoeff() : 0.0);
        double asym = (out - out.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12 * scale)
            throw Error("SymbolicMatrixFn: symmetric-flagged matrix evaluated asymmetric");
    }
    return out;
}

Matrix SymbolicMatrixFn::partial(int i, const Vector& p) const {
    return partials_[static_cast<std::size_t>(i)].eval(
        std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

GridSpec GridSpec::over_box(const Variables& vars,
                            const std::vector<std::pair<double, double>>& box,
                            int points_per_axis) {
    if (vars.size() != box.size())
        throw DimensionError("GridSpec: box must have one interval per variable");
    GridSpec g;
    for (std::size_t i = 0; i < vars.size(); ++i)
        g.axes.push_back(GridAxis{vars.name(i), box[i].first, box[i].second,
                                  box[i].first == box[i].second ? 1 : points_per_axis});
    return g;
}

std::size_t GridSpec::total_points() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= static_cast<std::size_t>(a.count < 1 ? 1 : a.count);
    return n;
}

void GridSpec::for_each(const std::function<void(const Vector&)>& visit) const {
    const int n = static_cast<int>(axes.size());
    Vector p(n);
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (;;) {
        for (int i = 0; i < n; ++i) {
            const GridAxis& a = axes[static_cast<std::size_t>(i)];
            int count = a.count < 1 ? 1 : a.count;
            p[i] = count == 1 ? a.lo : a.lo + (a.hi - a.lo) * idx[static_cast<std::size_t>(i)] / (count - 1);
        }
        visit(p);
        int axis = 0;
        while (axis < n) {
            const GridAxis& a = axes[static_cast<std::size_t>(axis)];
            int count = a.count < 1 ? 1 : a.count;
            if (++idx[static_cast<std::size_t>(axis)] < count) break;
            idx[static_cast<std::size_t>(axis)] = 0;
            ++axis;
        }
        if (axis == n || n == 0) break;
    }
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Certified: return "certified";
        case Verdict::Violated: return "violated";
        case Verdict::MetricInvalid: return "metric invalid";
    }
    return "?";
}

nlohmann::json CertReport::to_json() const {
    nlohmann::json axes = nlohmann::json::array();
    for (const auto& a : grid.axes)
        axes.push_back({{"var", a.var}, {"lo", a.lo}, {"hi", a.hi}, {"count", a.count}});
    nlohmann::json j{{"condition", condition},
                     {"grid", {{"axes", axes}}},
                     {"worst_eig", worst_eig},
                     {"argmax_point", std::vector<double>(argmax_point.begin(), argmax_point.end())},
                     {"verdict", to_string(verdict)}};
    if (argmax_rate.size() > 0)
        j["argmax_rate"] = std::vector<double>(argmax_rate.begin(), argmax_rate.end());
    if (certified_scalar)
        j["certified_scalar"] = *certified_scalar;
    else
        j["certified_scalar"] = nullptr;
    return j;
}

namespace {

// Enumerate the vertices of the symmetric rate box; a single zero vertex
// when no rate term contributes.
std::vector<Vector> rate_vertices(const std::vector<double>& bound, bool metric_varies) {
    const int n = static_cast<int>(bound.size());
    bool all_zero = true;
    for (double b : bound)
        if (b != 0.0) all_zero = false;
    if (n == 0 || all_zero || !metric_varies) return {Vector::Zero(std::max(n, 0))};
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(1) << n);
    for (std::size_t mask = 0; mask < (static_cast<std::size_t>(1) << n); ++mask) {
        Vector v(n);
        for (int i = 0; i < n; ++i)
            v[i] = (mask >> i) & 1 ? bound[static_cast<std::size_t>(i)]
                                   : -bound[static_cast<std::size_t>(i)];
        out.push_back(std::move(v));
    }
    return out;
}

struct WorstCase {
    double eig = -std::numeric_limits<double>::infinity();
    Vector point;
    Vector rate;
    bool metric_invalid = false;
    Vector invalid_point;
    double invalid_eig = 0.0;

    void offer(double value, const Vector& p, const Vector& r) {
        if (value > eig) {
            eig = value;
            point = p;
            rate = r;
        }
    }
};

CertReport finish(std::string condition, const GridSpec& grid, const WorstCase& wc) {
    CertReport r;
    r.condition = std::move(condition);
    r.grid = grid;
    if (wc.metric_invalid) {
        r.verdict = Verdict::MetricInvalid;
        r.worst_eig = wc.invalid_eig;
        r.argmax_point = wc.invalid_point;
        return r;
    }
    r.worst_eig = wc.eig;
    r.argmax_point = wc.point;
    r.argmax_rate = wc.rate;
    r.verdict = wc.eig <= -kTolPd ? Verdict::Certified : Verdict::Violated;
    return r;
}

bool metric_positive(const SymbolicMatrixFn& metric, const Vector& p, WorstCase& wc) {
    Matrix m = metric.eval(p);
    double min_eig = sym_eigenvalues(m)[0];
    if (min_eig < kTolPd) {
        wc.metric_invalid = true;
        wc.invalid_point = p;
        wc.invalid_eig = min_eig;
        return false;
    }
    return true;
}

}  // namespace

CertReport check_stability_lmi(const SymbolicMatrixFn& metric, const SymbolicMatrixFn& a_cl,
                               double lambda, const GridSpec& grid,
                               std::vector<double> rate_bound) {
    if (lambda < 0.0) throw Error("check_stability_lmi: lambda must be nonnegative");
    const int ns = static_cast<int>(metric.vars().size());
    auto vertices = rate_vertices(rate_bound, !metric.has_constant_partials());
    WorstCase wc;
    grid.for_each([&](const Vector& p) {
        if (wc.metric_invalid) return;
        if (!metric_positive(metric, p, wc)) return;
        Matrix m = metric.eval(p);
        Matrix base = he(m * a_cl.eval(p)) + 2.0 * lambda * m;
        for (const Vector& rho : vertices) {
            Matrix s = base;
            if (rho.size() == ns)
                for (int i = 0; i < ns; ++i)
                    if (rho[i] != 0.0) s += rho[i] * 0.5 * he(metric.partial(i, p));
            wc.offer(max_eig_sym(s), p, rho);
        }
    });
    return finish("stability_lmi", grid, wc);
}

CertReport check_convex_synthesis(const SymbolicMatrixFn& w_fn, const SymbolicMatrixFn& l_fn,
                                  const SymbolicMatrixFn& a_fn, const SymbolicMatrixFn& bu_fn,
                                  double lambda, const GridSpec& grid,
                                  std::vector<double> rate_bound) {
    const int ns = static_cast<int>(w_fn.vars().size());
    auto vertices = rate_vertices(rate_bound, !w_fn.has_constant_partials());
    WorstCase wc;
    grid.for_each([&](const Vector& p) {
        if (wc.metric_invalid) return;
        if (!metric_positive(w_fn, p, wc)) return;
        Matrix w = w_fn.eval(p);
        Matrix base = he(a_fn.eval(p) * w + bu_fn.eval(p) * l_fn.eval(p)) + 2.0 * lambda * w;
        for (const Vector& rho : vertices) {
            Matrix s = base;
            if (rho.size() == ns)
                for (int i = 0; i < ns; ++i)
                    if (rho[i] != 0.0) s -= rho[i] * 0.5 * he(w_fn.partial(i, p));
            wc.offer(max_eig_sym(s), p, rho);
        }
    });
    return finish("convex_synthesis", grid, wc);
}

Matrix gain_from_wl(const SymbolicMatrixFn& w_fn, const SymbolicMatrixFn& l_fn,
                    const Vector& sigma) {
    Matrix w = w_fn.eval(sigma);
    Eigen::FullPivLU<Matrix> lu(w);
    if (!lu.isInvertible()) throw Error("gain_from_wl: W is singular at the given point");
    return l_fn.eval(sigma) * lu.inverse();
}

namespace {

Matrix performance_block(const Matrix& curly_m, const Matrix& m, const Matrix& b,
                         const Matrix& c, const Matrix& d, double alpha) {
    const Eigen::Index nx = curly_m.rows(), nw = b.cols(), nz = c.rows();
    Matrix s = Matrix::Zero(nx + nw + nz, nx + nw + nz);
    s.topLeftCorner(nx, nx) = curly_m;
    s.block(0, nx, nx, nw) = m * b;
    s.block(nx, 0, nw, nx) = (m * b).transpose();
    s.block(nx, nx, nw, nw) = -Matrix::Identity(nw, nw);
    s.block(0, nx + nw, nx, nz) = c.transpose() / alpha;
    s.block(nx + nw, 0, nz, nx) = c / alpha;
    s.block(nx, nx + nw, nw, nz) = d.transpose() / alpha;
    s.block(nx + nw, nx, nz, nw) = d / alpha;
    s.bottomRightCorner(nz, nz) = -Matrix::Identity(nz, nz);
    return s;
}

}  // namespace

CertReport check_performance_lmi(const SymbolicMatrixFn& metric, const SymbolicMatrixFn& a_cl,
                                 const SymbolicMatrixFn& b_fn, const SymbolicMatrixFn& c_cl,
                                 const SymbolicMatrixFn& d_fn, double alpha,
                                 const GridSpec& grid, std::vector<double> rate_bound) {
    if (!(alpha > 0.0)) throw Error("check_performance_lmi: alpha must be positive");
    const int ns = static_cast<int>(metric.vars().size());
    auto vertices = rate_vertices(rate_bound, !metric.has_constant_partials());
    WorstCase wc;
    grid.for_each([&](const Vector& p) {
        if (wc.metric_invalid) return;
        if (!metric_positive(metric, p, wc)) return;
        Matrix m = metric.eval(p);
        Matrix base = he(m * a_cl.eval(p));
        Matrix b = b_fn.eval(p), c = c_cl.eval(p), d = d_fn.eval(p);
        for (const Vector& rho : vertices) {
            Matrix curly = base;
            if (rho.size() == ns)
                for (int i = 0; i < ns; ++i)
                    if (rho[i] != 0.0) curly += rho[i] * 0.5 * he(metric.partial(i, p));
            wc.offer(max_eig_sym(performance_block(curly, m, b, c, d, alpha)), p, rho);
        }
    });
    return finish("performance_lmi", grid, wc);
}

namespace {

// Grids for the contraction conditions name model variables; omitted
// variables are pinned to 0 so the caller only declares the axes that matter.
GridSpec expand_model_grid(const SystemModel& model, const GridSpec& grid) {
    GridSpec full;
    for (std::size_t i = 0; i < model.vars().size(); ++i) {
        const std::string& name = model.vars().name(i);
        const GridAxis* found = nullptr;
        for (const auto& a : grid.axes)
            if (a.var == name) found = &a;
        if (found)
            full.axes.push_back(*found);
        else
            full.axes.push_back(GridAxis{name, 0.0, 0.0, 1});
    }
    for (const auto& a : grid.axes)
        if (model.vars().index_of(a.var) < 0)
            throw Error("check_ccm: grid axis '" + a.var + "' is not a model variable");
    return full;
}

struct CcmPoint {
    Vector x, u, w, full;
};

CcmPoint split_point(const SystemModel& model, const Vector& p) {
    CcmPoint out;
    out.x = p.head(model.nx());
    out.u = p.segment(model.nx(), model.nu());
    out.w = p.tail(model.nw());
    out.full = p;
    return out;
}

}  // namespace

CertReport check_ccm(const SymbolicMatrixFn& metric, const SystemModel& model,
                     const ExprMatrix& gain, double lambda, const GridSpec& grid) {
    if (metric.rows() != model.nx())
        throw DimensionError("check_ccm: metric must be n_x x n_x");
    GridSpec full = expand_model_grid(model, grid);
    WorstCase wc;
    full.for_each([&](const Vector& p) {
        if (wc.metric_invalid) return;
        CcmPoint pt = split_point(model, p);
        if (!metric_positive(metric, pt.x, wc)) return;
        Matrix m = metric.eval(pt.x);
        Jacobians j = model.jacobians(pt.x, pt.u, pt.w);
        std::span<const double> full_span(pt.full.data(),
                                          static_cast<std::size_t>(pt.full.size()));
        Matrix a_cl = j.A + j.Bu * gain.eval(full_span);
        Matrix s = he(m * a_cl) + 2.0 * lambda * m;
        Vector f = model.dynamics(pt.x, pt.u, pt.w);
        for (int i = 0; i < model.nx(); ++i)
            if (f[i] != 0.0) s += f[i] * 0.5 * he(metric.partial(i, pt.x));
        wc.offer(max_eig_sym(s), p, Vector());
    });
    return finish("ccm", full, wc);
}

CertReport check_ccm_performance(const SymbolicMatrixFn& metric, const SystemModel& model,
                                 const ExprMatrix& gain, double alpha, const GridSpec& grid) {
    if (!(alpha > 0.0)) throw Error("check_ccm_performance: alpha must be positive");
    GridSpec full = expand_model_grid(model, grid);
    WorstCase wc;
    full.for_each([&](const Vector& p) {
        if (wc.metric_invalid) return;
        CcmPoint pt = split_point(model, p);
        if (!metric_positive(metric, pt.x, wc)) return;
        Matrix m = metric.eval(pt.x);
        Jacobians j = model.jacobians(pt.x, pt.u, pt.w);
        std::span<const double> full_span(pt.full.data(),
                                          static_cast<std::size_t>(pt.full.size()));
        Matrix k = gain.eval(full_span);
        Matrix a_cl = j.A + j.Bu * k;
        Matrix c_cl = j.C + j.Du * k;
        Matrix curly = he(m * a_cl);
        Vector f = model.dynamics(pt.x, pt.u, pt.w);
        for (int i = 0; i < model.nx(); ++i)
            if (f[i] != 0.0) curly += f[i] * 0.5 * he(metric.partial(i, pt.x));
        wc.offer(max_eig_sym(performance_block(curly, m, j.Bw, c_cl, j.Dw, alpha)), p,
                 Vector());
    });
    return finish("ccm_performance", full, wc);
}

BisectResult bisect(const std::function<CertReport(double)>& check, BisectGoal goal,
                    double lo, double hi, double tol) {
    if (!(hi > lo) || !(tol > 0.0)) throw BracketError("bisect: invalid bracket or tolerance");
    CertReport r_lo = check(lo);
    CertReport r_hi = check(hi);
    if (r_lo.verdict == Verdict::MetricInvalid || r_hi.verdict == Verdict::MetricInvalid)
        throw BracketError("bisect: metric invalid on the bracket");

    // which side must be certified depends on the goal
    bool lo_cert = r_lo.certified(), hi_cert = r_hi.certified();
    if (goal == BisectGoal::MaximizeLambda) {
        if (!lo_cert || hi_cert)
            throw BracketError("bisect: bracket must be (certified, violated)");
    } else {
        if (lo_cert || !hi_cert)
            throw BracketError("bisect: bracket must be (violated, certified)");
    }

    CertReport best = goal == BisectGoal::MaximizeLambda ? std::move(r_lo) : std::move(r_hi);
    double certified_end = goal == BisectGoal::MaximizeLambda ? lo : hi;
    int iters = 0;
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        CertReport r = check(mid);
        ++iters;
        bool cert = r.certified();
        if (goal == BisectGoal::MaximizeLambda) {
            if (cert) {
                lo = mid;
                certified_end = mid;
                best = std::move(r);
            } else {
                hi = mid;
            }
        } else {
            if (cert) {
                hi = mid;
                certified_end = mid;
                best = std::move(r);
            } else {
                lo = mid;
            }
        }
    }
    best.certified_scalar = certified_end;
    return BisectResult{certified_end, std::move(best), iters};
}

}  // namespace lpvccm
