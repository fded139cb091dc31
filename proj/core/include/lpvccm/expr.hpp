#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace lpvccm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Syntax error with the byte offset of the offending token.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t at)
        : Error(what + " (offset " + std::to_string(at) + ")"), offset(at) {}
    std::size_t offset;
};

// Evaluation-time domain error (ln of non-positive, division by zero, ...).
// The message carries the offending subexpression.
struct EvalError : Error {
    using Error::Error;
};

struct DimensionError : Error {
    using Error::Error;
};

enum class VarRole { State, Input, Disturbance, Scheduling, PathParam, Time, Other };

// Ordered, immutable list of declared variable names.  An Expr references
// variables by index into the list it was parsed against.
class Variables {
  public:
    Variables() = default;
    explicit Variables(std::vector<std::string> names,
                       std::vector<VarRole> roles = {});

    static Variables cat(const Variables& a, const Variables& b);

    int index_of(std::string_view name) const;  // -1 if absent
    std::size_t size() const { return names_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    VarRole role(std::size_t i) const { return roles_[i]; }
    const std::vector<std::string>& names() const { return names_; }

    friend bool operator==(const Variables& a, const Variables& b) {
        return a.names_ == b.names_;
    }

  private:
    std::vector<std::string> names_;
    std::vector<VarRole> roles_;
};

enum class UnaryOp { Neg, Exp, Ln, Sin, Cos, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

class Expr;

namespace detail {
struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;
Expr wrap_node(NodePtr n);
const NodePtr& node_of(const Expr& e);
}  // namespace detail

// Immutable expression tree over IEEE doubles.  Construction folds
// identity/annihilator patterns (x+0, 1*x, ...) and constant subtrees;
// values are safe to copy and to evaluate concurrently.
class Expr {
  public:
    Expr();  // constant 0
    static Expr constant(double value);
    static Expr variable(int index, std::string name);

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    static Expr pow(const Expr& base, const Expr& exponent);
    static Expr exp(const Expr& a);
    static Expr ln(const Expr& a);
    static Expr sin(const Expr& a);
    static Expr cos(const Expr& a);
    static Expr sqrt(const Expr& a);

    // Evaluate with values[i] bound to variable index i.
    double eval(std::span<const double> values) const;

    // Exact symbolic partial derivative with respect to variable index v.
    Expr diff(int v) const;

    // Replace every variable i by replacements[i]; the result is an
    // expression over the replacements' variable space.
    Expr substitute(std::span<const Expr> replacements) const;

    std::string str() const;

    bool is_constant() const;
    std::optional<double> constant_value() const;
    int max_var_index() const;  // -1 for closed expressions

  private:
    explicit Expr(detail::NodePtr n) : node_(std::move(n)) {}
    friend Expr detail::wrap_node(detail::NodePtr n);
    friend const detail::NodePtr& detail::node_of(const Expr& e);
    detail::NodePtr node_;
};

// Parse a formula over the declared variables.  Grammar: decimal literals,
// identifiers, unary functions exp/ln/sin/cos/sqrt, operators + - * / ^ with
// precedence ^ > unary- > *,/ > +,- and parentheses.
Expr parse(std::string_view text, const Variables& vars);

// Fixed-length vector of expressions over a shared variable list.
class ExprVector {
  public:
    ExprVector() = default;
    ExprVector(std::vector<Expr> entries, Variables vars);
    static ExprVector parse(std::span<const std::string> texts, const Variables& vars);

    std::size_t size() const { return entries_.size(); }
    const Expr& operator[](std::size_t i) const { return entries_[i]; }
    const Variables& vars() const { return vars_; }

    Vector eval(std::span<const double> values) const;
    ExprVector diff(int v) const;
    ExprVector substitute(std::span<const Expr> replacements, const Variables& new_vars) const;

  private:
    std::vector<Expr> entries_;
    Variables vars_;
};

// Rectangular array of expressions over a shared variable list.
class ExprMatrix {
  public:
    ExprMatrix() = default;
    ExprMatrix(Eigen::Index rows, Eigen::Index cols, std::vector<Expr> flat, Variables vars);
    static ExprMatrix parse(const std::vector<std::vector<std::string>>& texts,
                            const Variables& vars);
    static ExprMatrix constant(const Matrix& m, const Variables& vars);
    static ExprMatrix zero(Eigen::Index rows, Eigen::Index cols, const Variables& vars);
    static ExprMatrix identity(Eigen::Index n, const Variables& vars);

    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }
    const Expr& operator()(Eigen::Index i, Eigen::Index j) const;
    const Variables& vars() const { return vars_; }

    Matrix eval(std::span<const double> values) const;
    ExprMatrix diff(int v) const;
    ExprMatrix substitute(std::span<const Expr> replacements, const Variables& new_vars) const;
    bool is_constant() const;

    friend ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b);
    friend ExprMatrix operator*(const ExprMatrix& a, const ExprMatrix& b);

  private:
    Eigen::Index rows_ = 0, cols_ = 0;
    std::vector<Expr> flat_;  // row-major
    Variables vars_;
};

// Jacobian of a vector of expressions: rows follow the vector entries,
// columns follow the selected variable indices.
ExprMatrix jacobian(const ExprVector& v, std::span<const int> var_indices);

}  // namespace lpvccm
