#pragma once

#include <string>
#include <vector>

#include "lpvccm/expr.hpp"

namespace lpvccm {

// Coefficient matrices of the linearization at one point:
//   A  = df/dx   Bu = df/du   Bw = df/dw
//   C  = dh/dx   Du = dh/du   Dw = dh/dw
struct Jacobians {
    Matrix A, Bu, Bw, C, Du, Dw;
};

// Smooth time-invariant plant
//   xdot = f(x, u, w),   z = h(x, u, w)
// with exact symbolic Jacobians cached at construction.  Immutable and safe
// for concurrent evaluation.
class SystemModel {
  public:
    SystemModel(std::vector<std::string> state_names, std::vector<std::string> input_names,
                std::vector<std::string> disturbance_names,
                std::vector<std::string> f_exprs, std::vector<std::string> h_exprs);

    int nx() const { return nx_; }
    int nu() const { return nu_; }
    int nw() const { return nw_; }
    int nz() const { return nz_; }

    // All declared variables in [x..., u..., w...] order.
    const Variables& vars() const { return vars_; }
    Variables state_vars() const;
    Variables input_vars() const;

    Vector dynamics(const Vector& x, const Vector& u, const Vector& w) const;
    Vector output(const Vector& x, const Vector& u, const Vector& w) const;
    Jacobians jacobians(const Vector& x, const Vector& u, const Vector& w) const;

    // Max relative deviation over all six Jacobians against central finite
    // differences with step h.
    double fd_check(const Vector& x, const Vector& u, const Vector& w, double h = 1e-5) const;

    const ExprVector& f() const { return f_; }
    const ExprVector& h() const { return h_; }
    const ExprMatrix& dfdx() const { return dfdx_; }
    const ExprMatrix& dfdu() const { return dfdu_; }
    const ExprMatrix& dfdw() const { return dfdw_; }
    const ExprMatrix& dhdx() const { return dhdx_; }
    const ExprMatrix& dhdu() const { return dhdu_; }
    const ExprMatrix& dhdw() const { return dhdw_; }

    std::vector<double> pack(const Vector& x, const Vector& u, const Vector& w) const;

  private:
    int nx_, nu_, nw_, nz_;
    Variables vars_;
    ExprVector f_, h_;
    ExprMatrix dfdx_, dfdu_, dfdw_, dhdx_, dhdu_, dhdw_;
};

// Built-in plants: "rugh1991" (two-state gain-scheduling benchmark),
// "linear1d" (xdot = -x + w, z = x), "cubic1d" (xdot = -x - x^3).
const std::vector<std::string>& model_registry();
SystemModel make_registered_model(const std::string& name);

}  // namespace lpvccm
