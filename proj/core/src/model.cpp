#include "lpvccm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lpvccm {

namespace {

Variables build_vars(const std::vector<std::string>& x, const std::vector<std::string>& u,
                     const std::vector<std::string>& w) {
    std::vector<std::string> names;
    std::vector<VarRole> roles;
    for (const auto& n : x) { names.push_back(n); roles.push_back(VarRole::State); }
    for (const auto& n : u) { names.push_back(n); roles.push_back(VarRole::Input); }
    for (const auto& n : w) { names.push_back(n); roles.push_back(VarRole::Disturbance); }
    return Variables(std::move(names), std::move(roles));
}

std::vector<int> index_range(int begin, int count) {
    std::vector<int> idx(static_cast<std::size_t>(count));
    std::iota(idx.begin(), idx.end(), begin);
    return idx;
}

}  // namespace

SystemModel::SystemModel(std::vector<std::string> state_names,
                         std::vector<std::string> input_names,
                         std::vector<std::string> disturbance_names,
                         std::vector<std::string> f_exprs, std::vector<std::string> h_exprs)
    : nx_(static_cast<int>(state_names.size())),
      nu_(static_cast<int>(input_names.size())),
      nw_(static_cast<int>(disturbance_names.size())),
      nz_(static_cast<int>(h_exprs.size())),
      vars_(build_vars(state_names, input_names, disturbance_names)),
      f_(ExprVector::parse(f_exprs, vars_)),
      h_(ExprVector::parse(h_exprs, vars_)) {
    if (static_cast<int>(f_exprs.size()) != nx_)
        throw DimensionError("SystemModel: f must have one entry per state");
    auto xi = index_range(0, nx_);
    auto ui = index_range(nx_, nu_);
    auto wi = index_range(nx_ + nu_, nw_);
    dfdx_ = jacobian(f_, xi);
    dfdu_ = jacobian(f_, ui);
    dfdw_ = jacobian(f_, wi);
    dhdx_ = jacobian(h_, xi);
    dhdu_ = jacobian(h_, ui);
    dhdw_ = jacobian(h_, wi);
}

Variables SystemModel::state_vars() const {
    std::vector<std::string> names;
    std::vector<VarRole> roles;
    for (int i = 0; i < nx_; ++i) {
        names.push_back(vars_.name(static_cast<std::size_t>(i)));
        roles.push_back(VarRole::State);
    }
    return Variables(std::move(names), std::move(roles));
}

Variables SystemModel::input_vars() const {
    std::vector<std::string> names;
    std::vector<VarRole> roles;
    for (int i = 0; i < nu_; ++i) {
        names.push_back(vars_.name(static_cast<std::size_t>(nx_ + i)));
        roles.push_back(VarRole::Input);
    }
    return Variables(std::move(names), std::move(roles));
}

std::vector<double> SystemModel::pack(const Vector& x, const Vector& u, const Vector& w) const {
    if (x.size() != nx_ || u.size() != nu_ || w.size() != nw_)
        throw DimensionError("SystemModel: dimension mismatch in evaluation point");
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(nx_ + nu_ + nw_));
    values.insert(values.end(), x.begin(), x.end());
    values.insert(values.end(), u.begin(), u.end());
    values.insert(values.end(), w.begin(), w.end());
    return values;
}

Vector SystemModel::dynamics(const Vector& x, const Vector& u, const Vector& w) const {
    return f_.eval(pack(x, u, w));
}

Vector SystemModel::output(const Vector& x, const Vector& u, const Vector& w) const {
    return h_.eval(pack(x, u, w));
}

Jacobians SystemModel::jacobians(const Vector& x, const Vector& u, const Vector& w) const {
    auto values = pack(x, u, w);
    return Jacobians{dfdx_.eval(values), dfdu_.eval(values), dfdw_.eval(values),
                     dhdx_.eval(values), dhdu_.eval(values), dhdw_.eval(values)};
}

double SystemModel::fd_check(const Vector& x, const Vector& u, const Vector& w,
                             double h) const {
    if (!(h > 0.0)) throw Error("fd_check: step must be positive");
    Jacobians sym = jacobians(x, u, w);
    auto values = pack(x, u, w);
    const int total = nx_ + nu_ + nw_;

    Matrix fd_f(nx_, total), fd_h(nz_, total);
    for (int j = 0; j < total; ++j) {
        auto plus = values, minus = values;
        plus[static_cast<std::size_t>(j)] += h;
        minus[static_cast<std::size_t>(j)] -= h;
        fd_f.col(j) = (f_.eval(plus) - f_.eval(minus)) / (2.0 * h);
        fd_h.col(j) = (h_.eval(plus) - h_.eval(minus)) / (2.0 * h);
    }

    auto rel_dev = [](const Matrix& sym_block, const Matrix& fd_block) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < sym_block.rows(); ++i)
            for (Eigen::Index j = 0; j < sym_block.cols(); ++j) {
                double d = std::abs(sym_block(i, j) - fd_block(i, j)) /
                           (1.0 + std::abs(sym_block(i, j)));
                worst = std::max(worst, d);
            }
        return worst;
    };

    double worst = 0.0;
    worst = std::max(worst, rel_dev(sym.A, fd_f.leftCols(nx_)));
    worst = std::max(worst, rel_dev(sym.Bu, fd_f.middleCols(nx_, nu_)));
    worst = std::max(worst, rel_dev(sym.Bw, fd_f.rightCols(nw_)));
    worst = std::max(worst, rel_dev(sym.C, fd_h.leftCols(nx_)));
    worst = std::max(worst, rel_dev(sym.Du, fd_h.middleCols(nx_, nu_)));
    worst = std::max(worst, rel_dev(sym.Dw, fd_h.rightCols(nw_)));
    return worst;
}

const std::vector<std::string>& model_registry() {
    static const std::vector<std::string> names = {"rugh1991", "linear1d", "cubic1d"};
    return names;
}

SystemModel make_registered_model(const std::string& name) {
    if (name == "rugh1991") {
        // Two-state plant from Rugh's classic gain-scheduling example; the
        // performance output is the full state so z - z* is the tracking error.
        return SystemModel({"x1", "x2"}, {"u"}, {"w"},
                           {"-x1 - x2 + w", "1 - exp(-x2) + u"}, {"x1", "x2"});
    }
    if (name == "linear1d") {
        return SystemModel({"x"}, {}, {"w"}, {"-x + w"}, {"x"});
    }
    if (name == "cubic1d") {
        return SystemModel({"x"}, {}, {}, {"-x - x^3"}, {"x"});
    }
    throw Error("unknown model '" + name + "'");
}

}  // namespace lpvccm
