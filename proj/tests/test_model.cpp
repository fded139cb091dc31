#include <doctest.h>

#include <cmath>
#include <random>

#include "lpvccm/casestudy.hpp"
#include "lpvccm/model.hpp"

using namespace lpvccm;

namespace {

Vector vec2(double a, double b) { return Eigen::Vector2d(a, b); }
Vector vec1(double a) { return Vector::Constant(1, a); }

}  // namespace

TEST_SUITE("model") {

TEST_CASE("benchmark dynamics at notable points") {
    SystemModel m = casestudy::plant();
    CHECK(m.nx() == 2);
    CHECK(m.nu() == 1);
    CHECK(m.nw() == 1);
    Vector origin = m.dynamics(vec2(0, 0), vec1(0), vec1(0));
    CHECK(origin.norm() == doctest::Approx(0.0).epsilon(1e-15));
    Vector f = m.dynamics(vec2(1, 0), vec1(0), vec1(0));
    CHECK(f[0] == doctest::Approx(-1.0));
    CHECK(f[1] == doctest::Approx(0.0));
}

TEST_CASE("linear model evaluates as A x") {
    SystemModel m({"x1", "x2"}, {}, {}, {"-x1 + 2*x2", "0.5*x1 - 3*x2"}, {});
    Matrix a(2, 2);
    a << -1, 2, 0.5, -3;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> d(-5, 5);
    for (int i = 0; i < 10; ++i) {
        Vector x = vec2(d(rng), d(rng));
        CHECK((m.dynamics(x, Vector(0), Vector(0)) - a * x).norm() ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("jacobians reproduce the scheduled coefficient matrices") {
    SystemModel m = casestudy::plant();
    Jacobians j = m.jacobians(vec2(0, 0), vec1(0), vec1(0));
    Matrix a_expect(2, 2);
    a_expect << -1, -1, 0, 1;
    CHECK((j.A - a_expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(j.Bu(0, 0) == doctest::Approx(0.0));
    CHECK(j.Bu(1, 0) == doctest::Approx(1.0));
    CHECK(j.Bw(0, 0) == doctest::Approx(1.0));
    CHECK(j.Bw(1, 0) == doctest::Approx(0.0));

    Jacobians j2 = m.jacobians(vec2(0, std::log(2.0)), vec1(0), vec1(0));
    CHECK(j2.A(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("jacobians of a linear model are point independent") {
    SystemModel m({"x"}, {}, {"w"}, {"-x + w"}, {"x"});
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> d(-3, 3);
    Jacobians ref = m.jacobians(vec1(0), Vector(0), vec1(0));
    for (int i = 0; i < 10; ++i) {
        Jacobians j = m.jacobians(vec1(d(rng)), Vector(0), vec1(d(rng)));
        CHECK((j.A - ref.A).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
        CHECK((j.Bw - ref.Bw).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    }
}

TEST_CASE("fd_check bounds across all registered models") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (const std::string& name : model_registry()) {
        SystemModel m = make_registered_model(name);
        for (int i = 0; i < 50; ++i) {
            Vector x(m.nx()), u(m.nu()), w(m.nw());
            for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = d(rng);
            for (Eigen::Index k = 0; k < u.size(); ++k) u[k] = d(rng);
            for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = d(rng);
            CHECK(m.fd_check(x, u, w) <= 1e-5);
        }
    }
}

TEST_CASE("fd_check is tight for affine maps") {
    SystemModel m({"x"}, {}, {"w"}, {"-x + w"}, {"x"});
    CHECK(m.fd_check(vec1(0.3), Vector(0), vec1(-0.7)) <= 1e-10);
}

TEST_CASE("fd_check rejects a non-positive step") {
    SystemModel m = casestudy::plant();
    CHECK_THROWS_AS(m.fd_check(vec2(0, 0), vec1(0), vec1(0), 0.0), Error);
}

TEST_CASE("expression domain errors propagate from dynamics") {
    SystemModel m({"x"}, {}, {}, {"ln(x)"}, {});
    CHECK_THROWS_AS(m.dynamics(vec1(-1.0), Vector(0), Vector(0)), EvalError);
}

TEST_CASE("dimension mismatches are rejected") {
    SystemModel m = casestudy::plant();
    CHECK_THROWS_AS(m.dynamics(vec1(0), vec1(0), vec1(0)), DimensionError);
    CHECK_THROWS_AS(SystemModel({"x1", "x2"}, {}, {}, {"-x1"}, {}), DimensionError);
}

}  // TEST_SUITE
