#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "layerstab/direct.hpp"
#include "layerstab/kinetics.hpp"
#include "layerstab/simulate.hpp"

using namespace layerstab;

namespace {

const LayeredStateEps& base() {
    static const LayeredStateEps s = [] {
        auto p = fixtures::defaults();
        p.eps = 0.05;
        SteadyOptions o;
        o.nodes = 401;
        return solve_layered_eps(p, fixtures::profile(), o);
    }();
    return s;
}

ModelParams params_at(double tau, double k1, double k2, double alpha = kInfinite) {
    auto p = fixtures::defaults();
    p.eps = 0.05;
    p.tau = tau;
    p.k1 = k1;
    p.k2 = k2;
    p.alpha = alpha;
    return p;
}

LayeredStateEps uniform_state(int n, double u0, double v0) {
    LayeredStateEps s;
    auto p = params_at(1.2, 0, 0);
    s.eps = p.eps;
    s.a = p.a;
    s.sigma = p.sigma;
    s.d = p.d;
    s.ell = p.ell;
    s.x_star = 0.5 * p.ell;
    for (int i = 0; i < n; ++i) s.x.push_back(p.ell * i / (n - 1));
    s.u.assign(n, u0);
    s.v.assign(n, v0);
    return s;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Manufactured solution for the decoupled system: exact fields and the matching source term.
struct Manufactured {
    ModelParams p = params_at(1.2, 0, 0);
    double k = M_PI / 8.0;
    double u(double t, double x) const { return 2.0 + 0.3 * std::cos(k * x) * (1 + 0.5 * std::sin(t)); }
    double v(double t, double x) const { return 5.0 + 0.4 * std::cos(2 * k * x) * std::cos(t); }
    double ut(double t, double x) const { return 0.15 * std::cos(k * x) * std::cos(t); }
    double vt(double t, double x) const { return -0.4 * std::cos(2 * k * x) * std::sin(t); }
    double uxx(double t, double x) const { return -k * k * 0.3 * std::cos(k * x) * (1 + 0.5 * std::sin(t)); }
    double vxx(double t, double x) const { return -4 * k * k * 0.4 * std::cos(2 * k * x) * std::cos(t); }
    double force(double t, double x, int field) const {
        const auto kin = kinetics(u(t, x), v(t, x), p.a, p.sigma);
        if (field == 0) return ut(t, x) - p.eps / p.tau * uxx(t, x) - kin.f / (p.eps * p.tau);
        return vt(t, x) - p.d * vxx(t, x) - kin.g;
    }
    SimConfig config(double dt, double t_end) const {
        SimConfig c;
        c.system = SystemKind::Decoupled2;
        c.params = p;
        c.dt = dt;
        c.t_end = t_end;
        c.stride = 1000000;
        c.forcing = [this](double t, double x, int f, int) { return force(t, x, f); };
        return c;
    }
    SimState start(const LayeredStateEps& s) const {
        SimState st;
        st.n = s.size();
        st.fields = 2;
        st.y.resize(2 * st.n);
        for (int i = 0; i < st.n; ++i) {
            st.u(0, i) = u(0, s.x[i]);
            st.v(0, i) = v(0, s.x[i]);
        }
        return st;
    }
    double error(const SimResult& r, double t) const {
        double m = 0;
        for (int i = 0; i < r.final_state.n; ++i) {
            m = std::max(m, std::abs(r.final_state.u(0, i) - u(t, r.x[i])));
            m = std::max(m, std::abs(r.final_state.v(0, i) - v(t, r.x[i])));
        }
        return m;
    }
};

}  // namespace

TEST_CASE("constant state is stationary") {
    const auto s = uniform_state(101, 2.0, 5.0);
    SimConfig c;
    c.system = SystemKind::Coupled4;
    c.params = params_at(1.2, 0.02, 3.0);
    c.t_end = 5;
    c.dt = 0.05;
    const auto r = simulate_from(c, s, symmetric_state(c.system, s));
    for (int i = 0; i < s.size(); ++i) {
        CHECK(std::abs(r.final_state.u(0, i) - 2.0) < 1e-12);
        CHECK(std::abs(r.final_state.v(1, i) - 5.0) < 1e-12);
    }
}

TEST_CASE("symmetric data stay symmetric") {
    SimConfig c;
    c.system = SystemKind::Coupled6Delayed;
    c.params = params_at(1.2, 0.02, 3.0, 0.05);
    c.mode = Mode::Symmetric;
    c.perturbation = Perturbation::Bump;
    c.amplitude = 1e-3;
    c.t_end = 5;
    c.dt = 0.05;
    const auto r = simulate(c, base());
    for (double a : r.series.asym_norm) REQUIRE(a == 0.0);
}

TEST_CASE("exchanging the reactors commutes with the flow") {
    SimConfig c;
    c.system = SystemKind::Coupled4;
    c.params = params_at(1.2, 0.02, 3.0);
    c.perturbation = Perturbation::Bump;
    c.amplitude = 1e-2;
    c.t_end = 5;
    c.dt = 0.05;
    const auto s0 = initial_state(c, base());
    auto s1 = s0;
    for (int i = 0; i < s1.n; ++i) {
        std::swap(s1.u(0, i), s1.u(1, i));
        std::swap(s1.v(0, i), s1.v(1, i));
    }
    const auto a = simulate_from(c, base(), s0), b = simulate_from(c, base(), s1);
    double m = 0;
    for (int i = 0; i < s0.n; ++i) {
        m = std::max(m, std::abs(a.final_state.u(0, i) - b.final_state.u(1, i)));
        m = std::max(m, std::abs(a.final_state.v(1, i) - b.final_state.v(0, i)));
    }
    CHECK(m < 1e-12);
}

TEST_CASE("manufactured solution: second order in time") {
    const Manufactured ms;
    const auto s = uniform_state(101, 2.0, 5.0);
    std::vector<std::vector<double>> finals;
    for (double dt : {0.04, 0.02, 0.01}) finals.push_back(simulate_from(ms.config(dt, 2.0), s, ms.start(s)).final_state.y);
    const double e1 = max_diff(finals[0], finals[1]), e2 = max_diff(finals[1], finals[2]);
    CAPTURE(e1);
    CAPTURE(e2);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("manufactured solution: second order in space") {
    const Manufactured ms;
    double err[3];
    int k = 0;
    for (int n : {21, 41, 81}) {
        const auto s = uniform_state(n, 2.0, 5.0);
        err[k++] = ms.error(simulate_from(ms.config(2.5e-4, 0.5), s, ms.start(s)), 0.5);
    }
    CAPTURE(err[0]);
    CAPTURE(err[1]);
    CAPTURE(err[2]);
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.15));
    CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("Strang splitting: second order and consistent with BDF2") {
    const Manufactured ms;
    const auto s = uniform_state(101, 2.0, 5.0);
    std::vector<std::vector<double>> finals;
    // the splitting constant is large for the stiff reaction; smaller steps reach the asymptotic regime
    for (double dt : {0.005, 0.0025, 0.00125}) {
        auto c = ms.config(dt, 1.0);
        c.scheme = Scheme::Strang;
        finals.push_back(simulate_from(c, s, ms.start(s)).final_state.y);
    }
    const double e1 = max_diff(finals[0], finals[1]), e2 = max_diff(finals[1], finals[2]);
    CAPTURE(e1);
    CAPTURE(e2);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.2));
    const auto bdf = simulate_from(ms.config(0.00125, 1.0), s, ms.start(s)).final_state.y;
    CHECK(max_diff(bdf, finals[2]) < 10 * e2);
}

TEST_CASE("growth rate matches the rightmost direct eigenvalue") {
    const auto p = params_at(0.015, 0, 0);
    const auto lam = direct_eigs(SystemKind::Decoupled2, p, base(), 1)[0];
    REQUIRE(lam.real() > 0);
    SimConfig c;
    c.system = SystemKind::Decoupled2;
    c.params = p;
    c.amplitude = 1e-5;
    c.t_end = std::log(1e3) / lam.real();
    c.dt = c.t_end / 2000;
    c.stride = 4;
    const auto r = simulate(c, base());
    CAPTURE(lam);
    CHECK(r.series.verdict == Verdict::Growth);
    CHECK(r.series.log_slope == doctest::Approx(lam.real()).epsilon(0.05));
}

TEST_CASE("very fast relaxation tracks the undelayed system") {
    SimConfig c4;
    c4.system = SystemKind::Coupled4;
    c4.params = params_at(1.2, 0.02, 3.0);
    c4.perturbation = Perturbation::Bump;
    c4.amplitude = 1e-3;
    c4.t_end = 5;
    c4.dt = 0.05;
    auto c6 = c4;
    c6.system = SystemKind::Coupled6Delayed;
    c6.params.alpha = 1e4 * (fixtures::profile().d + 1.2);
    const auto a = simulate(c4, base()), b = simulate(c6, base());
    double m = 0;
    for (int i = 0; i < a.final_state.n; ++i)
        for (int r = 0; r < 2; ++r) m = std::max(m, std::abs(a.final_state.u(r, i) - b.final_state.u(r, i)));
    CHECK(m < 1e-5);
}

TEST_CASE("verdict rules on synthetic series") {
    auto run = [](auto f) {
        DiagnosticsSeries d;
        std::vector<double> obs;
        for (int i = 0; i <= 2000; ++i) {
            d.times.push_back(0.1 * i);
            obs.push_back(f(0.1 * i));
        }
        classify_series(d, obs, 0.15);
        return d;
    };
    CHECK(run([](double t) { return 1e-6 * std::exp(0.05 * t); }).verdict == Verdict::Growth);
    CHECK(run([](double t) { return 1e-6 * std::exp(-0.05 * t); }).verdict == Verdict::Decay);
    const auto osc = run([](double t) { return 1e-3 * std::abs(std::sin(0.7 * t)); });
    CHECK(osc.verdict == Verdict::SustainedOscillation);
    CHECK(osc.peaks > 10);
    const auto slow = run([](double t) { return 1e-3 * (1 + 0.0002 * t); });
    CHECK(slow.verdict == Verdict::Inconclusive);
}

TEST_CASE("simulation threshold needs a bracket with different verdicts") {
    SimConfig c;
    c.system = SystemKind::Decoupled2;
    c.params = params_at(1.2, 0, 0);
    c.t_end = 20;
    c.dt = 0.1;
    CHECK_THROWS_AS(sim_threshold(c, base(), "tau", 1.0, 2.0), RegimeError);
}

TEST_CASE("delayed system requires a finite alpha") {
    SimConfig c;
    c.system = SystemKind::Coupled6Delayed;
    c.params = params_at(1.2, 0.02, 3.0);
    CHECK_THROWS_AS(simulate(c, base()), RegimeError);
}
