#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "layerstab/grid.hpp"
#include "layerstab/kinetics.hpp"

using namespace layerstab;

TEST_CASE("reduced profile: matching, monotonicity, energy, sign of the left integral") {
    const auto& p = fixtures::profile();
    const double scale = std::max(std::abs(p.slope_left), std::abs(p.slope_right));
    CHECK(p.slope_mismatch < 1e-6 * scale);
    for (size_t i = 1; i < p.V.size(); ++i) REQUIRE(p.V[i] > p.V[i - 1]);
    CHECK(energy_defect(p) < 1e-8);
    CHECK(integral_g_left(p) < 0);
    CHECK(p.V0 > p.branches.v_lo);
    CHECK(p.Vell < p.branches.v_hi);
    CHECK(p.V_at(p.x_star) == doctest::Approx(p.v_hat).epsilon(1e-10));
    CHECK(p.x_star == doctest::Approx(6.22027692986).epsilon(1e-9));
}

TEST_CASE("reduced profile: Neumann ends") {
    const auto& p = fixtures::profile();
    CHECK(std::abs(p.dV.front()) < 1e-8);
    CHECK(std::abs(p.dV.back()) < 1e-8);
}

TEST_CASE("steady state: large eps from the constant guess converges to the constant state") {
    auto params = fixtures::defaults();
    params.eps = 0.5;
    std::vector<double> x(201);
    for (size_t i = 0; i < x.size(); ++i) x[i] = params.ell * i / (x.size() - 1);
    std::vector<double> u(x.size()), v(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        u[i] = 2.0 + 0.01 * std::cos(M_PI * x[i] / params.ell * 3);
        v[i] = 5.0;
    }
    SteadyOptions o;
    o.tol = 1e-14;
    const auto s = newton_steady(params, 0.5, x, u, v, o);
    CHECK(s.raw_residual < 1e-12);
    for (int i = 0; i < s.size(); ++i) {
        CHECK(std::abs(s.u[i] - 2.0) < 1e-10);
        CHECK(std::abs(s.v[i] - 5.0) < 1e-10);
    }
}

TEST_CASE("steady state: positivity, residual and coefficient signs") {
    for (double eps : {0.05, 0.02}) {
        CAPTURE(eps);
        const auto& s = fixtures::state(eps);
        CHECK(s.newton_residual < 1e-8);
        for (int i = 0; i < s.size(); ++i) {
            REQUIRE(s.u[i] > 0);
            REQUIRE(s.v[i] > 0);
        }
        const auto c = linearize_coeffs(s);
        int sign_changes = 0;
        for (int i = 0; i < s.size(); ++i) {
            REQUIRE(c.f_v[i] < 0);
            REQUIRE(c.g_v[i] < 0);
            if (i > 0 && (c.f_u[i] >= 0) != (c.f_u[i - 1] >= 0)) ++sign_changes;
        }
        // one interval of f_u >= 0, straddling the layer
        CHECK(sign_changes == 2);
        CHECK(c.f_u.front() < 0);
        CHECK(c.f_u.back() < 0);
    }
}

TEST_CASE("steady state: coefficient fields match finite differences of the kinetics") {
    const auto& s = fixtures::state(0.05);
    const auto c = linearize_coeffs(s);
    const double h = 1e-6;
    for (int i = 0; i < s.size(); i += 97) {
        const double u = s.u[i], v = s.v[i];
        const double fu = (kinetics(u + h, v, s.a, s.sigma).f - kinetics(u - h, v, s.a, s.sigma).f) / (2 * h);
        const double gv = (kinetics(u, v + h, s.a, s.sigma).g - kinetics(u, v - h, s.a, s.sigma).g) / (2 * h);
        const double fv = (kinetics(u, v + h, s.a, s.sigma).f - kinetics(u, v - h, s.a, s.sigma).f) / (2 * h);
        const double gu = (kinetics(u + h, v, s.a, s.sigma).g - kinetics(u - h, v, s.a, s.sigma).g) / (2 * h);
        CHECK(std::abs(c.f_u[i] - fu) < 1e-6);
        CHECK(std::abs(c.f_v[i] - fv) < 1e-6);
        CHECK(std::abs(c.g_u[i] - gu) < 1e-6);
        CHECK(std::abs(c.g_v[i] - gv) < 1e-6);
    }
}

TEST_CASE("steady state: outer solution converges as eps halves") {
    const auto& p = fixtures::profile();
    auto outer_gap = [&](const LayeredStateEps& s) {
        double m = 0;
        for (int i = 0; i < s.size(); ++i)
            if (std::abs(s.x[i] - p.x_star) > 10 * s.eps) m = std::max(m, std::abs(s.v[i] - p.V_at(s.x[i])));
        return m;
    };
    const double g1 = outer_gap(fixtures::state(0.05));
    const double g2 = outer_gap(fixtures::state(0.025));
    CHECK(g2 < g1);
}

TEST_CASE("steady state: mesh refinement behaves like O(h^2)") {
    auto params = fixtures::defaults();
    params.eps = 0.05;
    std::vector<LayeredStateEps> s;
    for (int n : {1001, 2001, 4001}) {
        SteadyOptions o;
        o.nodes = n;
        s.push_back(solve_layered_eps(params, fixtures::profile(), o));
    }
    auto diff = [](const LayeredStateEps& a, const LayeredStateEps& b) {
        double m = 0;
        for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.v[i] - interp_linear(b.x, b.v, a.x[i])));
        return m;
    };
    const double d1 = diff(s[0], s[2]), d2 = diff(s[1], s[2]);
    CAPTURE(d1);
    CAPTURE(d2);
    CHECK(d1 / d2 > 2.5);
}
