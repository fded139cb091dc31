#include <doctest.h>

#include <cmath>
#include <random>

#include "lpvccm/expr.hpp"

using namespace lpvccm;

namespace {

double eval_at(const Expr& e, std::initializer_list<double> vals) {
    std::vector<double> v(vals);
    return e.eval(v);
}

double central_fd(const Expr& e, std::vector<double> point, int var, double h) {
    auto plus = point, minus = point;
    plus[static_cast<std::size_t>(var)] += h;
    minus[static_cast<std::size_t>(var)] -= h;
    return (e.eval(plus) - e.eval(minus)) / (2.0 * h);
}

// Random expression trees of bounded depth over the given variables,
// weighted away from ln/sqrt so random points mostly stay in-domain.
Expr random_expr(std::mt19937& rng, const Variables& vars, int depth) {
    std::uniform_int_distribution<int> kind(0, depth <= 0 ? 1 : 9);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    std::uniform_int_distribution<int> var_pick(0, static_cast<int>(vars.size()) - 1);
    switch (kind(rng)) {
        case 0: return Expr::constant(coef(rng));
        case 1: {
            int v = var_pick(rng);
            return Expr::variable(v, vars.name(static_cast<std::size_t>(v)));
        }
        case 2: return random_expr(rng, vars, depth - 1) + random_expr(rng, vars, depth - 1);
        case 3: return random_expr(rng, vars, depth - 1) - random_expr(rng, vars, depth - 1);
        case 4: return random_expr(rng, vars, depth - 1) * random_expr(rng, vars, depth - 1);
        case 5:
            return random_expr(rng, vars, depth - 1) /
                   (random_expr(rng, vars, depth - 1) * random_expr(rng, vars, depth - 1) +
                    Expr::constant(3.0));
        case 6: return Expr::sin(random_expr(rng, vars, depth - 1));
        case 7: return Expr::cos(random_expr(rng, vars, depth - 1));
        case 8: return Expr::exp(random_expr(rng, vars, depth - 1) * Expr::constant(0.5));
        default: {
            std::uniform_int_distribution<int> p(2, 4);
            return Expr::pow(random_expr(rng, vars, depth - 1),
                             Expr::constant(static_cast<double>(p(rng))));
        }
    }
}

}  // namespace

TEST_SUITE("expr") {

TEST_CASE("parses and evaluates linear combinations") {
    Variables vars({"x1", "x2", "w"});
    Expr e = parse("-x1 - x2 + w", vars);
    CHECK(eval_at(e, {1.0, 2.0, 3.0}) == doctest::Approx(0.0));
}

TEST_CASE("benchmark dynamics vanish at the origin") {
    Variables vars({"x2", "u"});
    Expr e = parse("1 - exp(-x2) + u", vars);
    CHECK(eval_at(e, {0.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("syntax error carries the offset") {
    Variables vars({"x"});
    CHECK_THROWS_WITH_AS(parse("x^(", vars), doctest::Contains("offset 3"), ParseError);
    try {
        parse("x^(", vars);
    } catch (const ParseError& e) {
        CHECK(e.offset == 3);
    }
}

TEST_CASE("undeclared variables and unknown functions are rejected") {
    Variables vars({"x"});
    CHECK_THROWS_AS(parse("x + y", vars), ParseError);
    CHECK_THROWS_AS(parse("foo(x)", vars), ParseError);
    CHECK_THROWS_AS(parse("sin(x, x)", vars), ParseError);
    CHECK_THROWS_AS(parse("x 2", vars), ParseError);
}

TEST_CASE("precedence: power binds above unary minus above product") {
    Variables vars({"x"});
    CHECK(eval_at(parse("-x^2", vars), {3.0}) == doctest::Approx(-9.0));
    CHECK(eval_at(parse("2*-x", vars), {3.0}) == doctest::Approx(-6.0));
    CHECK(eval_at(parse("2^3^2", vars), {0.0}) == doctest::Approx(512.0));  // right assoc
    CHECK(eval_at(parse("2 - 3 - 4", vars), {0.0}) == doctest::Approx(-5.0));
}

TEST_CASE("derivative of the benchmark coefficient") {
    Variables vars({"x2", "u"});
    Expr e = parse("1 - exp(-x2) + u", vars);
    Expr d = e.diff(0);
    CHECK(eval_at(d, {0.0, 0.0}) == doctest::Approx(1.0));   // exp(-x2) at 0
    CHECK(eval_at(d, {std::log(2.0), 0.0}) == doctest::Approx(0.5));
}

TEST_CASE("derivative with respect to an absent variable folds to zero") {
    Variables vars({"x1", "w"});
    Expr d = parse("x1 + 2", vars).diff(1);
    CHECK(d.is_constant());
    CHECK(*d.constant_value() == 0.0);
}

TEST_CASE("power rule matches finite differences") {
    Variables vars({"x"});
    Expr d = parse("x^3", vars).diff(0);
    CHECK(eval_at(d, {2.0}) == doctest::Approx(12.0).epsilon(1e-12));
    double fd = central_fd(parse("x^3", vars), {2.0}, 0, 1e-5);
    CHECK(std::abs(eval_at(d, {2.0}) - fd) <= 1e-6);
}

TEST_CASE("evaluation domain errors name the subexpression") {
    Variables vars({"x"});
    CHECK_THROWS_WITH_AS(eval_at(parse("ln(x)", vars), {-1.0}), doctest::Contains("ln"),
                         EvalError);
    CHECK_THROWS_AS(eval_at(parse("1/x", vars), {0.0}), EvalError);
    CHECK_THROWS_AS(eval_at(parse("sqrt(x)", vars), {-4.0}), EvalError);
    CHECK(eval_at(parse("exp(-x)", vars), {0.0}) == doctest::Approx(1.0));
    CHECK(eval_at(parse("exp(-x) - 1", vars), {0.0}) == doctest::Approx(0.0));
}

TEST_CASE("derivatives match central differences on random expressions") {
    Variables vars({"x", "y"});
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> pt(-1.5, 1.5);
    int checked = 0;
    while (checked < 100) {
        Expr e = random_expr(rng, vars, 6);
        std::vector<double> p{pt(rng), pt(rng)};
        for (int v = 0; v < 2; ++v) {
            double exact, fd;
            try {
                exact = e.diff(v).eval(p);
                fd = central_fd(e, p, v, 1e-5);
            } catch (const EvalError&) {
                continue;  // out of domain, draw again
            }
            if (!std::isfinite(exact) || !std::isfinite(fd) || std::abs(exact) > 1e6)
                continue;
            CHECK(std::abs(exact - fd) <= 1e-5 * (1.0 + std::abs(exact)));
            ++checked;
        }
    }
}

TEST_CASE("print/parse round trip evaluates identically") {
    Variables vars({"x", "y"});
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> pt(-1.5, 1.5);
    for (int i = 0; i < 60; ++i) {
        Expr e = random_expr(rng, vars, 5);
        Expr back = parse(e.str(), vars);
        for (int k = 0; k < 20; ++k) {
            std::vector<double> p{pt(rng), pt(rng)};
            double a, b;
            try {
                a = e.eval(p);
                b = back.eval(p);
            } catch (const EvalError&) {
                continue;
            }
            if (std::isnan(a)) continue;
            CHECK(a == b);  // bit-identical: printing preserves the tree
        }
    }
}

TEST_CASE("differentiation is linear") {
    Variables vars({"x", "y"});
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> pt(-1.0, 1.0);
    for (int i = 0; i < 40; ++i) {
        Expr a = random_expr(rng, vars, 4);
        Expr b = random_expr(rng, vars, 4);
        Expr lhs = (a + b).diff(0);
        Expr rhs = a.diff(0) + b.diff(0);
        std::vector<double> p{pt(rng), pt(rng)};
        try {
            CHECK(lhs.eval(p) == doctest::Approx(rhs.eval(p)).epsilon(1e-12));
        } catch (const EvalError&) {
        }
    }
}

TEST_CASE("substitution composes expressions") {
    Variables xy({"x", "y"});
    Variables st({"s"});
    Expr e = parse("x*y + exp(x)", xy);
    std::vector<Expr> reps{parse("s + 1", st), parse("2*s", st)};
    Expr composed = e.substitute(reps);
    double s = 0.7;
    double expect = (s + 1.0) * (2.0 * s) + std::exp(s + 1.0);
    std::vector<double> p{s};
    CHECK(composed.eval(p) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("ExprMatrix algebra and shape checks") {
    Variables v({"s"});
    ExprMatrix a = ExprMatrix::parse({{"1", "s"}, {"0", "2"}}, v);
    ExprMatrix b = ExprMatrix::identity(2, v);
    Matrix prod = (a * b).eval(std::vector<double>{3.0});
    CHECK(prod(0, 1) == doctest::Approx(3.0));
    CHECK_THROWS_AS(ExprMatrix::parse({{"1", "s"}, {"0"}}, v), DimensionError);
    ExprVector vec = ExprVector::parse(std::vector<std::string>{"s^2", "s"}, v);
    std::vector<int> idx{0};
    ExprMatrix jac = jacobian(vec, idx);
    CHECK(jac.eval(std::vector<double>{2.0})(0, 0) == doctest::Approx(4.0));
}

}  // TEST_SUITE
