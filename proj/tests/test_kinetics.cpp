#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "layerstab/kinetics.hpp"
#include "layerstab/params.hpp"

using namespace layerstab;

namespace {

double bisect(double (*f)(double), double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double fold_cubic(double u) { return 2 * u * u * u - 10 * u * u + 10; }
double v_on_nullcline(double u, double a) { return (a - u) * (1 + u * u) / (4 * u); }

}  // namespace

TEST_CASE("folds match a bisection oracle on the stationarity cubic") {
    const auto nb = fold_points(10.0);
    const double ulo = bisect(fold_cubic, 1.0, 2.0), uhi = bisect(fold_cubic, 4.0, 5.0);
    CHECK(nb.u_lo == doctest::Approx(ulo).epsilon(1e-12));
    CHECK(nb.u_hi == doctest::Approx(uhi).epsilon(1e-12));
    CHECK(nb.v_lo == doctest::Approx(v_on_nullcline(ulo, 10)).epsilon(1e-10));
    CHECK(nb.v_hi == doctest::Approx(v_on_nullcline(uhi, 10)).epsilon(1e-10));
    CHECK(std::abs(nb.u_lo - 1.137805201613904) < 1e-10);
    CHECK(std::abs(nb.u_hi - 4.781283795978355) < 1e-10);
}

TEST_CASE("fold bounds hold across sigmoidal a") {
    for (double a : {6.5, 8.0, 10.0, 14.0, 20.0}) {
        CAPTURE(a);
        const auto nb = fold_points(a);
        CHECK(nb.u_lo > std::max(1.0, 8.0 / a));
        CHECK(nb.u_lo < 2.0);
        CHECK(nb.v_lo < nb.v_hi);
        // v on f = 0 rises between the folds
        CHECK(v_on_nullcline(0.5 * (nb.u_lo + nb.u_hi), a) > nb.v_lo);
    }
}

TEST_CASE("non-sigmoidal a is rejected") {
    CHECK_THROWS_AS(fold_points(sigmoidal_threshold()), RegimeError);
    CHECK_THROWS_AS(fold_points(6.0), RegimeError);
}

TEST_CASE("jacobian determinant closed form and constant state") {
    const auto [us, vs] = constant_steady_state(10.0);
    CHECK(us == doctest::Approx(2.0));
    CHECK(vs == doctest::Approx(5.0));
    const auto k = kinetics(us, vs, 10.0, 8.0);
    CHECK(std::abs(k.f) < 1e-14);
    CHECK(std::abs(k.g) < 1e-14);
    for (double u : {0.3, 1.0, 2.0, 5.5}) {
        for (double v : {0.5, 3.0, 7.0}) {
            const auto e = kinetics(u, v, 10.0, 8.0);
            CHECK(e.det() == doctest::Approx(kinetics_det(u, 8.0)).epsilon(1e-12));
        }
        CHECK(kinetics_det(u, 8.0) == doctest::Approx(5 * u / (8.0 * (1 + u * u))));
    }
}

TEST_CASE("kinetics derivatives match finite differences") {
    const double h = 1e-6;
    for (double u : {0.4, 1.5, 3.0}) {
        for (double v : {2.0, 5.0}) {
            const auto e = kinetics(u, v, 10.0, 8.0);
            const auto up = kinetics(u + h, v, 10.0, 8.0), um = kinetics(u - h, v, 10.0, 8.0);
            const auto vp = kinetics(u, v + h, 10.0, 8.0), vm = kinetics(u, v - h, 10.0, 8.0);
            CHECK(e.f_u == doctest::Approx((up.f - um.f) / (2 * h)).epsilon(1e-7));
            CHECK(e.g_u == doctest::Approx((up.g - um.g) / (2 * h)).epsilon(1e-7));
            CHECK(e.f_v == doctest::Approx((vp.f - vm.f) / (2 * h)).epsilon(1e-7));
            CHECK(e.g_v == doctest::Approx((vp.g - vm.g) / (2 * h)).epsilon(1e-7));
        }
    }
}

TEST_CASE("branches are ordered and continuous") {
    const auto nb = fold_points(10.0);
    const int n = 400;
    // square-root behaviour at the folds bounds the increments by C sqrt(dv)
    const double jump = 2 * std::sqrt((nb.v_hi - nb.v_lo) / n);
    double prev[3] = {0, 0, 0};
    for (int i = 1; i < n; ++i) {
        const double v = nb.v_lo + (nb.v_hi - nb.v_lo) * i / n;
        const double hm = nb.eval(v, Branch::Minus), h0 = nb.eval(v, Branch::Zero), hp = nb.eval(v, Branch::Plus);
        CHECK(hm < h0);
        CHECK(h0 < hp);
        if (i > 1) {
            CHECK(std::abs(hm - prev[0]) < jump);
            CHECK(std::abs(hp - prev[2]) < jump);
        }
        prev[0] = hm;
        prev[1] = h0;
        prev[2] = hp;
        CHECK(std::abs(kinetics(hm, v, 10, 8).f) < 1e-10);
        CHECK(std::abs(kinetics(hp, v, 10, 8).f) < 1e-10);
    }
    CHECK_THROWS_AS(nb.eval(nb.v_hi + 0.1, Branch::Zero), RegimeError);
}

TEST_CASE("closed-form M agrees with adaptive quadrature") {
    const auto nb = fold_points(10.0);
    for (double t : {0.05, 0.3, 0.5, 0.7, 0.95}) {
        const double v = nb.v_lo + t * (nb.v_hi - nb.v_lo);
        const double lo = nb.eval(v, Branch::Minus), hi = nb.eval(v, Branch::Plus);
        auto f = [&](double s) { return kinetics(s, v, 10.0, 8.0).f; };
        const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-14);
        CHECK(std::abs(M_of_v(nb, v, 8.0) - q) < 1e-10);
    }
}

TEST_CASE("Maxwell point: sign change and decreasing M") {
    const auto nb = fold_points(10.0);
    const double d = 1e-3;
    CHECK(M_of_v(nb, nb.v_lo + d, 8.0) > 0);
    CHECK(M_of_v(nb, nb.v_hi - d, 8.0) < 0);
    const auto vh = find_vhat(nb, 8.0);
    CHECK(vh.v_hat > nb.v_lo);
    CHECK(vh.v_hat < nb.v_hi);
    CHECK(vh.M_prime < 0);
    CHECK(std::abs(M_of_v(nb, vh.v_hat, 8.0)) < 1e-12);
    CHECK(vh.v_hat == doctest::Approx(5.504233915391049).epsilon(1e-10));
    const double fd = (M_of_v(nb, vh.v_hat + 1e-6, 8.0) - M_of_v(nb, vh.v_hat - 1e-6, 8.0)) / 2e-6;
    CHECK(vh.M_prime == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("parameter reduction") {
    // d1=0.01, sigma=4, b=2, d2=3: eps = 0.05, tau = 2 sqrt(4/0.01) = 40, d = 1.5
    const auto r = reduce_parameters(OriginalParams{0.01, 3.0, 10.0, 2.0, 4.0, 0.3, 1.5});
    CHECK(r.params.eps == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(r.params.tau == doctest::Approx(40.0).epsilon(1e-14));
    CHECK(r.params.d == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(r.params.k2 == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(r.time_scale == 2.0);
    CHECK(reduce_parameters(OriginalParams{4.0, 1.0, 10.0, 1.0, 4.0, 0, 0}).params.eps == 1.0);
    CHECK_THROWS_AS(reduce_parameters(OriginalParams{0.01, 0.64, 10.0, 2.0, 0.5, 0.3, 1.5}), RegimeError);
}

TEST_CASE("model parameter validation") {
    ModelParams p;
    CHECK_NOTHROW(p.validate());
    p.a = 6.0;
    CHECK_THROWS_AS(p.validate(), RegimeError);
    p = {};
    p.k2 = -1;
    CHECK_THROWS_AS(p.validate(), RegimeError);
}
