#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lpvccm/eig.hpp"
#include "lpvccm/expr.hpp"
#include "lpvccm/model.hpp"

namespace lpvccm {

// Negative/positive definiteness margin on the worst-case eigenvalue.
inline constexpr double kTolPd = 1e-9;

// Matrix-valued function of a named parameter vector, with cached symbolic
// partial derivatives.  A symmetric-flagged function rejects evaluations
// whose antisymmetric part is not negligible.
class SymbolicMatrixFn {
  public:
    SymbolicMatrixFn() = default;
    explicit SymbolicMatrixFn(ExprMatrix m, bool symmetric = false);
    static SymbolicMatrixFn constant(const Matrix& m, const Variables& vars,
                                     bool symmetric = false);

    Eigen::Index rows() const { return m_.rows(); }
    Eigen::Index cols() const { return m_.cols(); }
    const Variables& vars() const { return m_.vars(); }
    bool symmetric() const { return symmetric_; }
    bool is_constant() const { return constant_.has_value(); }
    bool has_constant_partials() const { return partials_vanish_; }

    Matrix eval(const Vector& p) const;
    Matrix partial(int i, const Vector& p) const;  // dM/dp_i at p
    const ExprMatrix& expr() const { return m_; }

  private:
    ExprMatrix m_;
    std::vector<ExprMatrix> partials_;
    bool symmetric_ = false;
    bool partials_vanish_ = true;
    std::optional<Matrix> constant_;
};

struct GridAxis {
    std::string var;
    double lo = 0.0, hi = 0.0;
    int count = 1;  // count == 1 pins the axis to lo
};

struct GridSpec {
    std::vector<GridAxis> axes;

    static GridSpec over_box(const Variables& vars,
                             const std::vector<std::pair<double, double>>& box,
                             int points_per_axis = 21);
    std::size_t total_points() const;
    void for_each(const std::function<void(const Vector&)>& visit) const;
};

enum class Verdict { Certified, Violated, MetricInvalid };
std::string to_string(Verdict v);

struct CertReport {
    std::string condition;
    GridSpec grid;
    double worst_eig = 0.0;
    Vector argmax_point;
    Vector argmax_rate;  // empty when the condition carries no rate vertex
    Verdict verdict = Verdict::Violated;
    std::optional<double> certified_scalar;

    bool certified() const { return verdict == Verdict::Certified; }
    nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Gridded feasibility checks.  Every condition is evaluated at each grid
// point and, where a rate term appears, at every vertex of the rate box
// (the dependence on the rate is affine, so vertices are the worst case).
// The report carries the largest eigenvalue seen and where it occurred.
// ---------------------------------------------------------------------------

// He{M A} + 2 lambda M + sum_i rho_i dM/dsigma_i < 0 on the grid.
CertReport check_stability_lmi(const SymbolicMatrixFn& metric, const SymbolicMatrixFn& a_cl,
                               double lambda, const GridSpec& grid,
                               std::vector<double> rate_bound = {});

// Convexified synthesis form with W = M^-1, L = K W:
// He{A W + Bu L} + 2 lambda W - sum_i rho_i dW/dsigma_i < 0.
CertReport check_convex_synthesis(const SymbolicMatrixFn& w_fn, const SymbolicMatrixFn& l_fn,
                                  const SymbolicMatrixFn& a_fn, const SymbolicMatrixFn& bu_fn,
                                  double lambda, const GridSpec& grid,
                                  std::vector<double> rate_bound = {});

// Gain recovered from the congruence pair at one parameter value.
Matrix gain_from_wl(const SymbolicMatrixFn& w_fn, const SymbolicMatrixFn& l_fn,
                    const Vector& sigma);

// L2-gain block condition:
//   [ He{M A} + sum rho_i dM_i    M B        C^T / alpha ]
//   [ B^T M                      -I          D^T / alpha ]
//   [ C / alpha                   D / alpha  -I          ]  < 0.
CertReport check_performance_lmi(const SymbolicMatrixFn& metric, const SymbolicMatrixFn& a_cl,
                                 const SymbolicMatrixFn& b_fn, const SymbolicMatrixFn& c_cl,
                                 const SymbolicMatrixFn& d_fn, double alpha,
                                 const GridSpec& grid, std::vector<double> rate_bound = {});

// Contraction condition over a state-space box, with the metric rate driven
// by the model vector field instead of a rate box:
//   He{M(x)(A + Bu K)} + 2 lambda M(x) + sum_i f_i dM/dx_i < 0.
// The grid axes name model variables; omitted variables are pinned to 0.
CertReport check_ccm(const SymbolicMatrixFn& metric, const SystemModel& model,
                     const ExprMatrix& gain, double lambda, const GridSpec& grid);

// Same block structure as check_performance_lmi with the model-driven rate.
CertReport check_ccm_performance(const SymbolicMatrixFn& metric, const SystemModel& model,
                                 const ExprMatrix& gain, double alpha, const GridSpec& grid);

// ---------------------------------------------------------------------------
// Scalar bisection over a certification predicate.
// ---------------------------------------------------------------------------

struct BracketError : Error {
    using Error::Error;
};

enum class BisectGoal { MaximizeLambda, MinimizeAlpha };

struct BisectResult {
    double scalar = 0.0;  // last certified value (conservative side)
    CertReport report;    // report at that value
    int iterations = 0;
};

BisectResult bisect(const std::function<CertReport(double)>& check, BisectGoal goal,
                    double lo, double hi, double tol);

}  // namespace lpvccm
