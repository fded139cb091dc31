#include <doctest.h>

#include <cmath>

#include "lpvccm/casestudy.hpp"
#include "lpvccm/lpv.hpp"

using namespace lpvccm;

namespace {

Vector vec1(double a) { return Vector::Constant(1, a); }
Vector vec2(double a, double b) { return Eigen::Vector2d(a, b); }

double fd_gain_entry(const GainScheduledController& c, const Vector& x0,
                     const Vector& sigma, int j, double h = 1e-6) {
    Vector xp = x0, xm = x0;
    xp[j] += h;
    xm[j] -= h;
    return (gs_control(c, xp, sigma).u[0] - gs_control(c, xm, sigma).u[0]) / (2.0 * h);
}

}  // namespace

TEST_SUITE("lpv") {

TEST_CASE("equilibrium families satisfy the plant and the scheduling map") {
    SystemModel m = casestudy::plant();
    EquilibriumFamily fw = casestudy::family_w(m);
    EquilibriumFamily fs = casestudy::family_sigma(m);
    CHECK(fw.max_equilibrium_residual(m) <= 1e-9);
    CHECK(fw.max_scheduling_mismatch() <= 1e-9);
    CHECK(fs.max_equilibrium_residual(m) <= 1e-9);
    CHECK(fs.max_scheduling_mismatch() <= 1e-9);
}

TEST_CASE("scheduled linearization reproduces the affine coefficient matrices") {
    SystemModel m = casestudy::plant();
    EquilibriumFamily fam = casestudy::family_sigma(m);

    Jacobians j1 = lpv_linearize(m, fam, vec1(1.0));  // sigma = 1 <=> w_e = 0
    Matrix a_expect(2, 2);
    a_expect << -1, -1, 0, 1;
    CHECK((j1.A - a_expect).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(j1.Bu(1, 0) == doctest::Approx(1.0));

    Jacobians j2 = lpv_linearize(m, fam, vec1(2.0));  // w_e = -ln 2
    CHECK(j2.A(1, 1) == doctest::Approx(2.0).epsilon(1e-12));

    CHECK_THROWS_AS(lpv_linearize(m, fam, vec1(100.0)), OutOfDomainError);
}

TEST_CASE("linear plants schedule trivially") {
    SystemModel m({"x"}, {"u"}, {"w"}, {"-x + u + w"}, {"x"});
    EquilibriumFamily fam(m, {"s"}, {"s"}, {"s"}, {"0"}, {}, {"x"}, {{-1.0, 1.0}}, {});
    Jacobians a = lpv_linearize(m, fam, vec1(-0.5));
    Jacobians b = lpv_linearize(m, fam, vec1(0.8));
    CHECK((a.A - b.A).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("gs_control at notable points of the tracking benchmark") {
    SystemModel m = casestudy::plant();
    GainScheduledController c1 = casestudy::gsc1(m);
    GainScheduledController c2 = casestudy::gsc2(m);

    // on the manifold the realization returns the trim input
    CHECK(gs_control(c1, vec2(0, 0), vec1(0)).u[0] == doctest::Approx(0.0));
    // u = u_e(w) + x1 - (3 + e^-w)(x2 - w) at w = 0, x = (1, 0)
    CHECK(gs_control(c1, vec2(1, 0), vec1(0)).u[0] == doctest::Approx(1.0));
    // the state-scheduled realization collapses to u = x1 + e^-x2 - 1
    CHECK(gs_control(c2, vec2(1, 0), vec1(0)).u[0] == doctest::Approx(1.0));
    CHECK(gs_control(c2, vec2(0.3, -0.4), Vector(1)).u[0] ==
          doctest::Approx(0.3 + std::exp(0.4) - 1.0).epsilon(1e-14));

    // leaving the design box flags but still evaluates
    GsOutput out = gs_control(c2, vec2(0, -5.0), Vector(1));
    CHECK_FALSE(out.in_domain);
    CHECK(std::isfinite(out.u[0]));
}

TEST_CASE("realization consistency on the design manifold") {
    SystemModel m = casestudy::plant();
    for (GainScheduledController c : {casestudy::gsc1(m), casestudy::gsc2(m)}) {
        const auto& fam = c.family();
        for (int k = 0; k < 21; ++k) {
            double lo = fam.sigma_box()[0].first, hi = fam.sigma_box()[0].second;
            Vector sigma = vec1(lo + (hi - lo) * k / 20.0);
            auto p = fam.at(sigma);
            Vector u = gs_control(c, p.x_e, sigma).u;
            CHECK((u - p.u_e).norm() <= 1e-10);
        }
    }
}

TEST_CASE("reference-scheduled jacobian equals the design gain") {
    SystemModel m = casestudy::plant();
    GainScheduledController c = casestudy::gsc1(m);
    const auto& fam = c.family();
    for (double s : {-2.0, -0.5, 0.0, 1.0, 2.5}) {
        Vector sigma = vec1(s);
        auto p = fam.at(sigma);
        Matrix k = c.gain().eval(std::vector<double>{s});
        for (int j = 0; j < 2; ++j)
            CHECK(fd_gain_entry(c, p.x_e, sigma, j) == doctest::Approx(k(0, j)).epsilon(1e-6));
    }
}

TEST_CASE("state-scheduled jacobian picks up the hidden coupling term") {
    SystemModel m = casestudy::plant();
    GainScheduledController c = casestudy::gsc2(m);
    const auto& fam = c.family();
    RealizedLaw law = realized_law(c);
    for (double s : {-1.5, 0.0, 0.7, 2.0}) {
        Vector sigma = vec1(s);
        auto p = fam.at(sigma);
        Matrix k = c.gain().eval(std::vector<double>{s});
        Matrix kh = hidden_coupling(fam, c.gain(), law, sigma);
        // dg/dx on the manifold for g(x) = x2
        Matrix dgdx(1, 2);
        dgdx << 0.0, 1.0;
        Matrix expected = k + kh * dgdx;
        for (int j = 0; j < 2; ++j)
            CHECK(fd_gain_entry(c, p.x_e, sigma, j) ==
                  doctest::Approx(expected(0, j)).epsilon(1e-6));
    }
}

TEST_CASE("hidden coupling of the state-scheduled law is constant") {
    SystemModel m = casestudy::plant();
    EquilibriumFamily fam = casestudy::family_w(m);
    GainScheduledController c2 = casestudy::gsc2(m);
    RealizedLaw law = realized_law(c2);
    for (double s : {-2.0, -1.0, 0.0, 0.5, 1.5, 3.0}) {
        Matrix kh = hidden_coupling(fam, casestudy::lpv_gain_w(fam), law, vec1(s));
        CHECK(kh(0, 0) == doctest::Approx(3.0).epsilon(1e-9));
    }
}

TEST_CASE("hidden coupling vanishes for the reference-scheduled realization") {
    SystemModel m = casestudy::plant();
    GainScheduledController c1 = casestudy::gsc1(m);
    RealizedLaw law = realized_law(c1);
    for (double s : {-2.0, 0.0, 1.0}) {
        Matrix kh = hidden_coupling(c1.family(), c1.gain(), law, vec1(s));
        CHECK(std::abs(kh(0, 0)) <= 1e-9);
    }
}

TEST_CASE("finite-difference and symbolic hidden coupling agree") {
    SystemModel m = casestudy::plant();
    GainScheduledController c2 = casestudy::gsc2(m);
    RealizedLaw law = realized_law(c2);
    const auto& fam = c2.family();
    for (double s : {-1.0, 0.25, 2.0}) {
        Matrix sym = hidden_coupling(fam, c2.gain(), law, vec1(s), DiffRoute::Symbolic);
        Matrix fd = hidden_coupling(fam, c2.gain(), law, vec1(s),
                                    DiffRoute::FiniteDifference);
        CHECK(std::abs(sym(0, 0) - fd(0, 0)) <= 1e-6);
    }
}

TEST_CASE("residual term follows the family sensitivity") {
    SystemModel m = casestudy::plant();
    EquilibriumFamily fam = casestudy::family_w(m);
    Vector r = residual_term(fam, vec1(0.0), vec1(0.5));
    CHECK(r[0] == doctest::Approx(0.0));
    CHECK(r[1] == doctest::Approx(0.5));
    CHECK(residual_term(fam, vec1(1.0), vec1(0.0)).norm() == doctest::Approx(0.0));
    CHECK_THROWS_AS(residual_term(fam, vec1(0.0), vec1(2.0)), OutOfDomainError);
    CHECK_THROWS_AS(residual_term(fam, vec1(10.0), vec1(0.1)), OutOfDomainError);
}

TEST_CASE("residual term of a constant family vanishes") {
    SystemModel m({"x"}, {"u"}, {}, {"-x + u"}, {"x"});
    EquilibriumFamily fam(m, {"s"}, {"0"}, {"0"}, {}, {}, {}, {{-1.0, 1.0}}, {0.5});
    CHECK(residual_term(fam, vec1(0.3), vec1(0.2)).norm() == doctest::Approx(0.0));
}

TEST_CASE("symbolic lpv matrices match pointwise linearization") {
    SystemModel m = casestudy::plant();
    EquilibriumFamily fam = casestudy::family_sigma(m);
    LpvMatrices lpv = symbolic_lpv(m, fam);
    for (double s : {0.2, 1.0, 5.0}) {
        Jacobians j = lpv_linearize(m, fam, vec1(s));
        std::vector<double> p{s};
        CHECK((lpv.A.eval(p) - j.A).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((lpv.Bu.eval(p) - j.Bu).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((lpv.Bw.eval(p) - j.Bw).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((lpv.C.eval(p) - j.C).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

}  // TEST_SUITE
