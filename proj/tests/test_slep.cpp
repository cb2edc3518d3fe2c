#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "layerstab/slep.hpp"

using namespace layerstab;

namespace {

const SlepModel& model() {
    static const SlepModel m(fixtures::constants(), 1.2);
    return m;
}

double rho() { return model().rho0(); }

// (alpha, omega) of the Hopf point when the sums vanish (k2 -> infinity).
std::pair<double, double> hopf_limit(double k1, double tau) {
    const double r = rho();
    return {(r - k1) / tau, std::sqrt((2 * k1 - r) * (r - k1)) / tau};
}

}  // namespace

TEST_CASE("sign structure of the SLEP sums") {
    const auto rep = model().validate_prop31(10);
    CHECK(rep.passed);
    CHECK(rep.sign_failures == 0);
    CHECK(rep.worst_dX_dI2 < 0);
    CHECK(rep.worst_dY_dI2 < 0);
    CHECK(rep.worst_dY_dR < 0);
    CHECK(rep.identity_error < 1e-6);
    CHECK(rep.x000_minus_rho > 0);
    CHECK(rep.max_y_over_tau_star < 1);
}

TEST_CASE("no imaginary SLEP-1 roots for positive alpha") {
    std::vector<double> alphas;
    for (int j = 0; j < 40; ++j) alphas.push_back(1e-4 * std::pow(10.0, 6.0 * j / 39));
    for (double f : {0.1, 0.3, 0.6, 0.9}) {
        CAPTURE(f);
        const auto r = model().slep1_no_crossing_check(f * rho(), alphas);
        CHECK(r.passed);
        CHECK(r.xhat_margin > 0);
        CHECK(r.yhat_margin > 0);
        CHECK(r.yhat_over_tau_star < 1);
    }
}

TEST_CASE("Turing curve: residual, monotonicity and blow-up at rho/2") {
    double prev = 0;
    for (double f : {0.02, 0.1, 0.2, 0.3, 0.4, 0.45, 0.49}) {
        CAPTURE(f);
        const double k1 = f * rho();
        const double xi = model().turing_curve_xi(k1);
        CHECK(xi > prev);
        prev = xi;
        CHECK(std::abs(model().X(0, 0, xi) - (rho() - 2 * k1)) < 1e-10 * rho());
        CHECK(std::abs(model().F_star(cdouble(0, 0), k1, xi)) < 1e-10 * rho());
    }
    CHECK(prev > 1e3 * model().turing_curve_xi(0.1 * rho()));
    CHECK_THROWS_AS(model().turing_curve_xi(0.6 * rho()), RegimeError);
}

TEST_CASE("region labels") {
    const double k1 = 0.2 * rho();
    const double xi = model().turing_curve_xi(k1);
    CHECK(model().classify(k1, 2.0 * xi).label == Region::Gamma1);
    CHECK(model().classify(k1, 0.5 * xi).label == Region::Gamma2);
    CHECK(model().classify(0.6 * rho(), 1.0).label == Region::Gamma3_1);
    CHECK(model().classify(1.5 * rho(), 1.0).label == Region::Gamma3_2);
    CHECK(model().classify(0.5 * rho(), 1.0).label == Region::Boundary);
    CHECK(model().classify(0.1, 5.0).label == Region::Gamma3_2);
    CHECK(region_name(Region::Gamma3_2) == "Gamma3-2");
}

TEST_CASE("alpha2 is where lambda_I2 meets the diagonal") {
    const double k1 = 0.6 * rho(), k2 = 1000;
    const double a0 = model().alpha0(k1, k2), a2 = model().alpha2(k1, k2);
    CHECK(a2 < a0);
    CHECK(model().lambda_I2(a2, k1, k2) == doctest::Approx(a2).epsilon(1e-8));
    CHECK(model().lambda_I2(0.8 * a2, k1, k2) < a2);
    CHECK(model().lambda_I2(1.2 * a2, k1, k2) < a2);
    CHECK(model().lambda_I2(0.999 * a0, k1, k2) < 0.1 * a2);
}

TEST_CASE("Hopf point: residual, transversality and the observed ordering") {
    const double k1 = 0.0284, k2 = 1000;
    const auto h = model().find_hopf(k1, k2);
    CHECK(h.case_tag == "3.88b");
    CHECK(h.residual < 1e-10);
    CHECK(h.alpha_H == doctest::Approx(0.0131668).epsilon(1e-4));
    CHECK(h.lamIH == doctest::Approx(0.011758).epsilon(1e-4));
    CHECK(model().lambda_I1(h.alpha_H, k1, k2) == doctest::Approx(h.lamIH).epsilon(1e-8));
    CHECK(model().lambda_I2(h.alpha_H, k1, k2) == doctest::Approx(h.lamIH).epsilon(1e-8));
    CHECK(h.lambda_below_alpha2);
    CHECK_FALSE(h.ordering_holds);
    CHECK(h.dlamR_dalpha < 0);
    CHECK(h.dlamR_dalpha == doctest::Approx(-0.5).epsilon(1e-3));
    CHECK(model().transversality_fd(h, k1, k2) == doctest::Approx(h.dlamR_dalpha).epsilon(1e-4));
}

TEST_CASE("Hopf point approaches the closed-form limit as k2 grows") {
    const double k1 = 0.6 * rho();
    const auto [al, wl] = hopf_limit(k1, 1.2);
    double prev = 1;
    for (double K : {1e4, 1e6, 1e8}) {
        CAPTURE(K);
        const auto h = model().find_hopf(k1, K * model().gamma0());
        const double err = std::abs(h.alpha_H / al - 1);
        CHECK(err < prev);
        CHECK(std::abs(h.lamIH / wl - 1) < 2 * err + 1e-6);
        // K^{-1/2} decay of the Green's-function tail
        if (prev < 1) CHECK(prev / err == doctest::Approx(10.0).epsilon(0.15));
        prev = err;
    }
}

TEST_CASE("Hopf preconditions") {
    CHECK_THROWS_AS(model().find_hopf(0.2 * rho(), 2.0 * model().turing_curve_xi(0.2 * rho())), RegimeError);
    const SlepModel slow(fixtures::constants(), 0.5);
    CHECK_THROWS_AS(slow.find_hopf(0.6 * rho(), 1000), RegimeError);
}

TEST_CASE("H1 window has an even number of crossings" * doctest::may_fail()) {
    const double k1 = 0.2 * rho();
    const double kh = model().k2hat_star(k1);
    const auto h = model().find_hopf(k1, kh * (1 - 1e-10));
    CHECK(h.case_tag == "H1");
    CHECK(h.crossings.size() % 2 == 0);
}
