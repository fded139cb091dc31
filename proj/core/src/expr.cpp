#include "lpvccm/expr.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

namespace lpvccm {

namespace detail {

enum class NodeKind { Constant, Variable, Unary, Binary };

struct ExprNode {
    NodeKind kind;
    double value = 0.0;       // Constant
    int var_index = -1;       // Variable
    std::string var_name;     // Variable (kept for printing and errors)
    UnaryOp uop{};
    BinaryOp bop{};
    NodePtr lhs, rhs;         // Unary uses lhs only
};

namespace {

NodePtr make_const(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Constant;
    n->value = v;
    return n;
}

NodePtr make_var(int index, std::string name) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Variable;
    n->var_index = index;
    n->var_name = std::move(name);
    return n;
}

NodePtr make_unary(UnaryOp op, NodePtr a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Unary;
    n->uop = op;
    n->lhs = std::move(a);
    return n;
}

NodePtr make_binary(BinaryOp op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Binary;
    n->bop = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

bool is_const(const NodePtr& n, double v) {
    return n->kind == NodeKind::Constant && n->value == v;
}

}  // namespace

Expr wrap_node(NodePtr n) { return Expr(std::move(n)); }
const NodePtr& node_of(const Expr& e) { return e.node_; }

namespace {

double apply_unary_const(UnaryOp op, double a) {
    switch (op) {
        case UnaryOp::Neg: return -a;
        case UnaryOp::Exp: return std::exp(a);
        case UnaryOp::Ln: return std::log(a);
        case UnaryOp::Sin: return std::sin(a);
        case UnaryOp::Cos: return std::cos(a);
        case UnaryOp::Sqrt: return std::sqrt(a);
    }
    return 0.0;
}

}  // namespace
}  // namespace detail

using detail::ExprNode;
using detail::NodeKind;
using detail::NodePtr;

Expr::Expr() : node_(detail::make_const(0.0)) {}

Expr Expr::constant(double value) { return Expr(detail::make_const(value)); }

Expr Expr::variable(int index, std::string name) {
    return Expr(detail::make_var(index, std::move(name)));
}

bool Expr::is_constant() const { return node_->kind == NodeKind::Constant; }

std::optional<double> Expr::constant_value() const {
    if (node_->kind == NodeKind::Constant) return node_->value;
    return std::nullopt;
}

namespace {

int max_var_index_rec(const NodePtr& n) {
    switch (n->kind) {
        case NodeKind::Constant: return -1;
        case NodeKind::Variable: return n->var_index;
        case NodeKind::Unary: return max_var_index_rec(n->lhs);
        case NodeKind::Binary:
            return std::max(max_var_index_rec(n->lhs), max_var_index_rec(n->rhs));
    }
    return -1;
}

}  // namespace

int Expr::max_var_index() const { return max_var_index_rec(node_); }

// ---------------------------------------------------------------------------
// Folding constructors.  Only identity/annihilator patterns and fully
// constant subtrees are folded; no structural simplification beyond that.
// ---------------------------------------------------------------------------

Expr operator+(const Expr& a, const Expr& b) {
    if (a.node_->kind == NodeKind::Constant && b.node_->kind == NodeKind::Constant)
        return Expr::constant(a.node_->value + b.node_->value);
    if (detail::is_const(a.node_, 0.0)) return b;
    if (detail::is_const(b.node_, 0.0)) return a;
    return Expr(detail::make_binary(BinaryOp::Add, a.node_, b.node_));
}

Expr operator-(const Expr& a, const Expr& b) {
    if (a.node_->kind == NodeKind::Constant && b.node_->kind == NodeKind::Constant)
        return Expr::constant(a.node_->value - b.node_->value);
    if (detail::is_const(b.node_, 0.0)) return a;
    if (detail::is_const(a.node_, 0.0)) return -b;
    return Expr(detail::make_binary(BinaryOp::Sub, a.node_, b.node_));
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.node_->kind == NodeKind::Constant && b.node_->kind == NodeKind::Constant)
        return Expr::constant(a.node_->value * b.node_->value);
    if (detail::is_const(a.node_, 0.0) || detail::is_const(b.node_, 0.0))
        return Expr::constant(0.0);
    if (detail::is_const(a.node_, 1.0)) return b;
    if (detail::is_const(b.node_, 1.0)) return a;
    return Expr(detail::make_binary(BinaryOp::Mul, a.node_, b.node_));
}

Expr operator/(const Expr& a, const Expr& b) {
    if (a.node_->kind == NodeKind::Constant && b.node_->kind == NodeKind::Constant &&
        b.node_->value != 0.0)
        return Expr::constant(a.node_->value / b.node_->value);
    if (detail::is_const(b.node_, 1.0)) return a;
    return Expr(detail::make_binary(BinaryOp::Div, a.node_, b.node_));
}

Expr operator-(const Expr& a) {
    if (a.node_->kind == NodeKind::Constant) return Expr::constant(-a.node_->value);
    if (a.node_->kind == NodeKind::Unary && a.node_->uop == UnaryOp::Neg)
        return Expr(a.node_->lhs);
    return Expr(detail::make_unary(UnaryOp::Neg, a.node_));
}

Expr Expr::pow(const Expr& base, const Expr& exponent) {
    if (detail::is_const(exponent.node_, 1.0)) return base;
    if (detail::is_const(exponent.node_, 0.0)) return Expr::constant(1.0);
    if (base.node_->kind == NodeKind::Constant && exponent.node_->kind == NodeKind::Constant) {
        double v = std::pow(base.node_->value, exponent.node_->value);
        if (std::isfinite(v)) return Expr::constant(v);
    }
    return Expr(detail::make_binary(BinaryOp::Pow, base.node_, exponent.node_));
}

namespace {

Expr fold_unary(UnaryOp op, const Expr& a);

}  // namespace

Expr Expr::exp(const Expr& a) { return fold_unary(UnaryOp::Exp, a); }
Expr Expr::ln(const Expr& a) { return fold_unary(UnaryOp::Ln, a); }
Expr Expr::sin(const Expr& a) { return fold_unary(UnaryOp::Sin, a); }
Expr Expr::cos(const Expr& a) { return fold_unary(UnaryOp::Cos, a); }
Expr Expr::sqrt(const Expr& a) { return fold_unary(UnaryOp::Sqrt, a); }

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

std::string print_node(const NodePtr& n);

[[noreturn]] void domain_error(const char* what, const NodePtr& n) {
    throw EvalError(std::string(what) + " in '" + print_node(n) + "'");
}

double eval_rec(const NodePtr& n, std::span<const double> values) {
    switch (n->kind) {
        case NodeKind::Constant:
            return n->value;
        case NodeKind::Variable:
            assert(n->var_index >= 0 &&
                   static_cast<std::size_t>(n->var_index) < values.size());
            return values[static_cast<std::size_t>(n->var_index)];
        case NodeKind::Unary: {
            double a = eval_rec(n->lhs, values);
            switch (n->uop) {
                case UnaryOp::Neg: return -a;
                case UnaryOp::Exp: return std::exp(a);
                case UnaryOp::Ln:
                    if (a <= 0.0) domain_error("ln of non-positive value", n);
                    return std::log(a);
                case UnaryOp::Sin: return std::sin(a);
                case UnaryOp::Cos: return std::cos(a);
                case UnaryOp::Sqrt:
                    if (a < 0.0) domain_error("sqrt of negative value", n);
                    return std::sqrt(a);
            }
            return 0.0;
        }
        case NodeKind::Binary: {
            double a = eval_rec(n->lhs, values);
            double b = eval_rec(n->rhs, values);
            switch (n->bop) {
                case BinaryOp::Add: return a + b;
                case BinaryOp::Sub: return a - b;
                case BinaryOp::Mul: return a * b;
                case BinaryOp::Div:
                    if (b == 0.0) domain_error("division by zero", n);
                    return a / b;
                case BinaryOp::Pow: {
                    double v = std::pow(a, b);
                    if (std::isnan(v) && !std::isnan(a) && !std::isnan(b))
                        domain_error("pow outside real domain", n);
                    return v;
                }
            }
            return 0.0;
        }
    }
    return 0.0;
}

Expr fold_unary(UnaryOp op, const Expr& a) {
    const NodePtr& n = detail::node_of(a);
    if (n->kind == NodeKind::Constant) {
        double v = detail::apply_unary_const(op, n->value);
        if (std::isfinite(v)) return Expr::constant(v);
    }
    return detail::wrap_node(detail::make_unary(op, n));
}

}  // namespace

double Expr::eval(std::span<const double> values) const {
    return eval_rec(node_, values);
}

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

namespace {

Expr wrap(NodePtr n) { return detail::wrap_node(std::move(n)); }

Expr diff_rec(const NodePtr& n, int v) {
    switch (n->kind) {
        case NodeKind::Constant:
            return Expr::constant(0.0);
        case NodeKind::Variable:
            return Expr::constant(n->var_index == v ? 1.0 : 0.0);
        case NodeKind::Unary: {
            Expr a = wrap(n->lhs);
            Expr da = diff_rec(n->lhs, v);
            switch (n->uop) {
                case UnaryOp::Neg: return -da;
                case UnaryOp::Exp: return Expr::exp(a) * da;
                case UnaryOp::Ln: return da / a;
                case UnaryOp::Sin: return Expr::cos(a) * da;
                case UnaryOp::Cos: return -(Expr::sin(a) * da);
                case UnaryOp::Sqrt:
                    return da / (Expr::constant(2.0) * Expr::sqrt(a));
            }
            return Expr::constant(0.0);
        }
        case NodeKind::Binary: {
            Expr a = wrap(n->lhs);
            Expr b = wrap(n->rhs);
            Expr da = diff_rec(n->lhs, v);
            Expr db = diff_rec(n->rhs, v);
            switch (n->bop) {
                case BinaryOp::Add: return da + db;
                case BinaryOp::Sub: return da - db;
                case BinaryOp::Mul: return da * b + a * db;
                case BinaryOp::Div: return (da * b - a * db) / (b * b);
                case BinaryOp::Pow: {
                    // power rule for constant exponents keeps negative bases legal
                    if (n->rhs->kind == NodeKind::Constant) {
                        double c = n->rhs->value;
                        return Expr::constant(c) *
                               Expr::pow(a, Expr::constant(c - 1.0)) * da;
                    }
                    return Expr::pow(a, b) * (db * Expr::ln(a) + b * da / a);
                }
            }
            return Expr::constant(0.0);
        }
    }
    return Expr::constant(0.0);
}

}  // namespace

Expr Expr::diff(int v) const { return diff_rec(node_, v); }

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

namespace {

Expr subst_rec(const NodePtr& n, std::span<const Expr> reps) {
    switch (n->kind) {
        case NodeKind::Constant:
            return wrap(n);
        case NodeKind::Variable: {
            auto i = static_cast<std::size_t>(n->var_index);
            if (i >= reps.size())
                throw DimensionError("substitute: no replacement for variable '" +
                                     n->var_name + "'");
            return reps[i];
        }
        case NodeKind::Unary: {
            Expr a = subst_rec(n->lhs, reps);
            switch (n->uop) {
                case UnaryOp::Neg: return -a;
                case UnaryOp::Exp: return Expr::exp(a);
                case UnaryOp::Ln: return Expr::ln(a);
                case UnaryOp::Sin: return Expr::sin(a);
                case UnaryOp::Cos: return Expr::cos(a);
                case UnaryOp::Sqrt: return Expr::sqrt(a);
            }
            return a;
        }
        case NodeKind::Binary: {
            Expr a = subst_rec(n->lhs, reps);
            Expr b = subst_rec(n->rhs, reps);
            switch (n->bop) {
                case BinaryOp::Add: return a + b;
                case BinaryOp::Sub: return a - b;
                case BinaryOp::Mul: return a * b;
                case BinaryOp::Div: return a / b;
                case BinaryOp::Pow: return Expr::pow(a, b);
            }
            return a;
        }
    }
    return wrap(n);
}

}  // namespace

Expr Expr::substitute(std::span<const Expr> replacements) const {
    return subst_rec(node_, replacements);
}

// ---------------------------------------------------------------------------
// Printing.  Parenthesization preserves the exact tree shape on re-parse so
// that parse(print(e)) evaluates bit-identically.
// ---------------------------------------------------------------------------

namespace {

// precedence: +,- = 1; *,/ = 2; unary- = 3; ^ = 4; atoms = 6
int prec(const NodePtr& n) {
    switch (n->kind) {
        case NodeKind::Constant: return n->value < 0.0 ? 3 : 6;
        case NodeKind::Variable: return 6;
        case NodeKind::Unary: return n->uop == UnaryOp::Neg ? 3 : 6;
        case NodeKind::Binary:
            switch (n->bop) {
                case BinaryOp::Add:
                case BinaryOp::Sub: return 1;
                case BinaryOp::Mul:
                case BinaryOp::Div: return 2;
                case BinaryOp::Pow: return 4;
            }
    }
    return 6;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* unary_name(UnaryOp op) {
    switch (op) {
        case UnaryOp::Neg: return "-";
        case UnaryOp::Exp: return "exp";
        case UnaryOp::Ln: return "ln";
        case UnaryOp::Sin: return "sin";
        case UnaryOp::Cos: return "cos";
        case UnaryOp::Sqrt: return "sqrt";
    }
    return "?";
}

std::string print_child(const NodePtr& c, int min_prec) {
    std::string s = print_node(c);
    if (prec(c) < min_prec) return "(" + s + ")";
    return s;
}

std::string print_node(const NodePtr& n) {
    switch (n->kind) {
        case NodeKind::Constant:
            return fmt_double(n->value);
        case NodeKind::Variable:
            return n->var_name;
        case NodeKind::Unary:
            if (n->uop == UnaryOp::Neg) return "-" + print_child(n->lhs, 3);
            return std::string(unary_name(n->uop)) + "(" + print_node(n->lhs) + ")";
        case NodeKind::Binary: {
            int p = prec(n);
            const char* op = nullptr;
            bool right_assoc = false;
            switch (n->bop) {
                case BinaryOp::Add: op = " + "; break;
                case BinaryOp::Sub: op = " - "; break;
                case BinaryOp::Mul: op = "*"; break;
                case BinaryOp::Div: op = "/"; break;
                case BinaryOp::Pow: op = "^"; right_assoc = true; break;
            }
            // the associative side tolerates equal precedence; the other
            // side requires strictly higher precedence to drop parentheses
            std::string l = print_child(n->lhs, right_assoc ? p + 1 : p);
            std::string r = print_child(n->rhs, right_assoc ? p : p + 1);
            return l + op + r;
        }
    }
    return "?";
}

}  // namespace

std::string Expr::str() const { return print_node(node_); }

// ---------------------------------------------------------------------------
// Parser: recursive descent.
//   sum     := product (('+'|'-') product)*
//   product := unary (('*'|'/') unary)*
//   unary   := '-' unary | power
//   power   := atom ['^' unary]
//   atom    := number | ident | ident '(' sum ')' | '(' sum ')'
// ---------------------------------------------------------------------------

namespace {

class Parser {
  public:
    Parser(std::string_view text, const Variables& vars) : text_(text), vars_(vars) {}

    Expr run() {
        Expr e = parse_sum();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError("unexpected trailing input", pos_);
        return e;
    }

  private:
    std::string_view text_;
    const Variables& vars_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t'))
            ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    bool accept(char c) {
        if (peek(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c))
            throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    Expr parse_sum() {
        Expr e = parse_product();
        for (;;) {
            if (accept('+'))
                e = e + parse_product();
            else if (accept('-'))
                e = e - parse_product();
            else
                return e;
        }
    }

    Expr parse_product() {
        Expr e = parse_unary();
        for (;;) {
            if (accept('*'))
                e = e * parse_unary();
            else if (accept('/'))
                e = e / parse_unary();
            else
                return e;
        }
    }

    Expr parse_unary() {
        if (accept('-')) return -parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (accept('^')) return Expr::pow(base, parse_unary());
        return base;
    }

    Expr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_sum();
            expect(')');
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_')
            return parse_ident();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    Expr parse_number() {
        double v = 0.0;
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc())
            throw ParseError("malformed number", pos_);
        pos_ += static_cast<std::size_t>(ptr - begin);
        return Expr::constant(v);
    }

    Expr parse_ident() {
        std::size_t start = pos_;
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '_';
            if (!ok) break;
            ++pos_;
        }
        std::string_view name = text_.substr(start, pos_ - start);
        if (peek('(')) {
            UnaryOp op;
            if (name == "exp")
                op = UnaryOp::Exp;
            else if (name == "ln")
                op = UnaryOp::Ln;
            else if (name == "sin")
                op = UnaryOp::Sin;
            else if (name == "cos")
                op = UnaryOp::Cos;
            else if (name == "sqrt")
                op = UnaryOp::Sqrt;
            else
                throw ParseError("unknown function '" + std::string(name) + "'", start);
            expect('(');
            Expr arg = parse_sum();
            if (peek(','))
                throw ParseError("function '" + std::string(name) + "' takes one argument",
                                 pos_);
            expect(')');
            switch (op) {
                case UnaryOp::Exp: return Expr::exp(arg);
                case UnaryOp::Ln: return Expr::ln(arg);
                case UnaryOp::Sin: return Expr::sin(arg);
                case UnaryOp::Cos: return Expr::cos(arg);
                case UnaryOp::Sqrt: return Expr::sqrt(arg);
                case UnaryOp::Neg: break;
            }
        }
        int idx = vars_.index_of(name);
        if (idx < 0)
            throw ParseError("undeclared variable '" + std::string(name) + "'", start);
        return Expr::variable(idx, std::string(name));
    }
};

}  // namespace

Expr parse(std::string_view text, const Variables& vars) {
    return Parser(text, vars).run();
}

// ---------------------------------------------------------------------------
// Variables
// ---------------------------------------------------------------------------

Variables::Variables(std::vector<std::string> names, std::vector<VarRole> roles)
    : names_(std::move(names)), roles_(std::move(roles)) {
    if (roles_.empty()) roles_.assign(names_.size(), VarRole::Other);
    if (roles_.size() != names_.size())
        throw DimensionError("Variables: role list does not match name list");
    for (std::size_t i = 0; i < names_.size(); ++i)
        for (std::size_t j = i + 1; j < names_.size(); ++j)
            if (names_[i] == names_[j])
                throw DimensionError("Variables: duplicate name '" + names_[i] + "'");
}

Variables Variables::cat(const Variables& a, const Variables& b) {
    std::vector<std::string> names = a.names_;
    names.insert(names.end(), b.names_.begin(), b.names_.end());
    std::vector<VarRole> roles = a.roles_;
    roles.insert(roles.end(), b.roles_.begin(), b.roles_.end());
    return Variables(std::move(names), std::move(roles));
}

int Variables::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    return -1;
}

// ---------------------------------------------------------------------------
// ExprVector / ExprMatrix
// ---------------------------------------------------------------------------

ExprVector::ExprVector(std::vector<Expr> entries, Variables vars)
    : entries_(std::move(entries)), vars_(std::move(vars)) {
    for (const Expr& e : entries_)
        if (e.max_var_index() >= static_cast<int>(vars_.size()))
            throw DimensionError("ExprVector: entry references unknown variable index");
}

ExprVector ExprVector::parse(std::span<const std::string> texts, const Variables& vars) {
    std::vector<Expr> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(lpvccm::parse(t, vars));
    return ExprVector(std::move(out), vars);
}

Vector ExprVector::eval(std::span<const double> values) const {
    Vector out(static_cast<Eigen::Index>(entries_.size()));
    for (std::size_t i = 0; i < entries_.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = entries_[i].eval(values);
    return out;
}

ExprVector ExprVector::diff(int v) const {
    std::vector<Expr> out;
    out.reserve(entries_.size());
    for (const Expr& e : entries_) out.push_back(e.diff(v));
    return ExprVector(std::move(out), vars_);
}

ExprVector ExprVector::substitute(std::span<const Expr> replacements,
                                  const Variables& new_vars) const {
    std::vector<Expr> out;
    out.reserve(entries_.size());
    for (const Expr& e : entries_) out.push_back(e.substitute(replacements));
    return ExprVector(std::move(out), new_vars);
}

ExprMatrix::ExprMatrix(Eigen::Index rows, Eigen::Index cols, std::vector<Expr> flat,
                       Variables vars)
    : rows_(rows), cols_(cols), flat_(std::move(flat)), vars_(std::move(vars)) {
    if (static_cast<Eigen::Index>(flat_.size()) != rows_ * cols_)
        throw DimensionError("ExprMatrix: entry count does not match shape");
}

ExprMatrix ExprMatrix::parse(const std::vector<std::vector<std::string>>& texts,
                             const Variables& vars) {
    Eigen::Index rows = static_cast<Eigen::Index>(texts.size());
    Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(texts[0].size()) : 0;
    std::vector<Expr> flat;
    flat.reserve(static_cast<std::size_t>(rows * cols));
    for (const auto& row : texts) {
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw DimensionError("ExprMatrix: ragged rows");
        for (const std::string& t : row) flat.push_back(lpvccm::parse(t, vars));
    }
    return ExprMatrix(rows, cols, std::move(flat), vars);
}

ExprMatrix ExprMatrix::constant(const Matrix& m, const Variables& vars) {
    std::vector<Expr> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            flat.push_back(Expr::constant(m(i, j)));
    return ExprMatrix(m.rows(), m.cols(), std::move(flat), vars);
}

ExprMatrix ExprMatrix::zero(Eigen::Index rows, Eigen::Index cols, const Variables& vars) {
    return constant(Matrix::Zero(rows, cols), vars);
}

ExprMatrix ExprMatrix::identity(Eigen::Index n, const Variables& vars) {
    return constant(Matrix::Identity(n, n), vars);
}

const Expr& ExprMatrix::operator()(Eigen::Index i, Eigen::Index j) const {
    return flat_[static_cast<std::size_t>(i * cols_ + j)];
}

Matrix ExprMatrix::eval(std::span<const double> values) const {
    Matrix out(rows_, cols_);
    for (Eigen::Index i = 0; i < rows_; ++i)
        for (Eigen::Index j = 0; j < cols_; ++j) out(i, j) = (*this)(i, j).eval(values);
    return out;
}

ExprMatrix ExprMatrix::diff(int v) const {
    std::vector<Expr> flat;
    flat.reserve(flat_.size());
    for (const Expr& e : flat_) flat.push_back(e.diff(v));
    return ExprMatrix(rows_, cols_, std::move(flat), vars_);
}

ExprMatrix ExprMatrix::substitute(std::span<const Expr> replacements,
                                  const Variables& new_vars) const {
    std::vector<Expr> flat;
    flat.reserve(flat_.size());
    for (const Expr& e : flat_) flat.push_back(e.substitute(replacements));
    return ExprMatrix(rows_, cols_, std::move(flat), new_vars);
}

bool ExprMatrix::is_constant() const {
    for (const Expr& e : flat_)
        if (!e.is_constant()) return false;
    return true;
}

ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
        throw DimensionError("ExprMatrix +: shape mismatch");
    if (!(a.vars_ == b.vars_)) throw DimensionError("ExprMatrix +: variable mismatch");
    std::vector<Expr> flat;
    flat.reserve(a.flat_.size());
    for (std::size_t i = 0; i < a.flat_.size(); ++i) flat.push_back(a.flat_[i] + b.flat_[i]);
    return ExprMatrix(a.rows_, a.cols_, std::move(flat), a.vars_);
}

ExprMatrix operator*(const ExprMatrix& a, const ExprMatrix& b) {
    if (a.cols_ != b.rows_) throw DimensionError("ExprMatrix *: shape mismatch");
    if (!(a.vars_ == b.vars_)) throw DimensionError("ExprMatrix *: variable mismatch");
    std::vector<Expr> flat;
    flat.reserve(static_cast<std::size_t>(a.rows_ * b.cols_));
    for (Eigen::Index i = 0; i < a.rows_; ++i)
        for (Eigen::Index j = 0; j < b.cols_; ++j) {
            Expr acc = Expr::constant(0.0);
            for (Eigen::Index k = 0; k < a.cols_; ++k) acc = acc + a(i, k) * b(k, j);
            flat.push_back(acc);
        }
    return ExprMatrix(a.rows_, b.cols_, std::move(flat), a.vars_);
}

ExprMatrix jacobian(const ExprVector& v, std::span<const int> var_indices) {
    std::vector<Expr> flat;
    flat.reserve(v.size() * var_indices.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        for (int idx : var_indices) flat.push_back(v[i].diff(idx));
    return ExprMatrix(static_cast<Eigen::Index>(v.size()),
                      static_cast<Eigen::Index>(var_indices.size()), std::move(flat),
                      v.vars());
}

}  // namespace lpvccm
