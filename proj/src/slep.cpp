#include "layerstab/slep.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/tools/minima.hpp>

namespace layerstab {

namespace {

constexpr double kBoundaryTol = 1e-12;

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

}  // namespace

std::string region_name(Region r) {
    switch (r) {
        case Region::Gamma1: return "Gamma1";
        case Region::Gamma2: return "Gamma2";
        case Region::Gamma3_1: return "Gamma3-1";
        case Region::Gamma3_2: return "Gamma3-2";
        case Region::Boundary: return "BOUNDARY";
    }
    return "?";
}

double solve_decreasing_log(const std::function<double(double)>& f, double guess, const char* what) {
    if (!(guess > 0) || !std::isfinite(guess)) guess = 1.0;
    double lo = guess, hi = guess;
    double flo = f(lo), fhi = flo;
    if (flo == 0.0) return lo;
    if (flo < 0) {
        // root lies below: shrink lo
        hi = lo;
        while (flo < 0) {
            hi = lo;
            lo *= 0.25;
            if (lo < 1e-300) throw RegimeError(std::string("no positive root for ") + what + " (function negative at 0+)");
            flo = f(lo);
        }
    } else {
        while (fhi > 0) {
            lo = hi;
            hi *= 4.0;
            if (hi > 1e300) throw RegimeError(std::string("no finite root for ") + what + " (function positive at infinity)");
            fhi = f(hi);
        }
    }
    return find_root(f, lo, hi, 1e-15);
}

SlepModel::SlepModel(const SlepConstants& k, double tau)
    : sums_(k.basis, k.c1c2), rho0_(k.rho0_star), tau_(tau), tau_star_(k.tau_star), mu_star_(k.mu_star) {
    if (!(tau > 0)) throw RegimeError("tau must be positive");
}

void SlepModel::require_tau() const {
    if (!(tau_ > tau_star_))
        throw RegimeError("tau = " + fmt(tau_) + " must exceed tau* = " + fmt(tau_star_));
}

// ---- Turing curve and regions ------------------------------------------------------------------------------

double SlepModel::turing_curve_xi(double k1) const {
    if (!(k1 > 0)) throw RegimeError("k1 must be positive");
    if (std::abs(2.0 * k1 - rho0_) <= kBoundaryTol * rho0_) throw RegimeError("BOUNDARY: 2 k1 = rho0*");
    if (k1 > 0.5 * rho0_) throw RegimeError("no curve: region Gamma3 (k1 >= rho0*/2)");
    const double target = rho0_ - 2.0 * k1;
    auto h = [&](double k2) { return X(0, 0, k2) - target; };
    return solve_decreasing_log(h, gamma0(), "xi(k1)");
}

RegionPoint SlepModel::classify(double k1, double k2) const {
    RegionPoint r{k1, k2, Region::Boundary, kInfinite};
    const double tol = kBoundaryTol * rho0_;
    if (std::abs(2.0 * k1 - rho0_) <= 2.0 * tol || std::abs(k1 - rho0_) <= tol) return r;
    if (k1 >= rho0_) {
        r.label = Region::Gamma3_2;
        return r;
    }
    if (k1 > 0.5 * rho0_) {
        r.label = Region::Gamma3_1;
        return r;
    }
    r.xi_k1 = turing_curve_xi(k1);
    const double h = rho0_ - 2.0 * k1 - X(0, 0, k2);
    if (std::abs(h) <= tol) return r;
    r.label = h > 0 ? Region::Gamma1 : Region::Gamma2;
    return r;
}

// ---- delayed coupling root curves --------------------------------------------------------------------------

double SlepModel::alpha0(double k1, double k2) const {
    require_tau();
    return k1 / (tau_ - Y(0, 0, k2));
}

double SlepModel::k2hat_star(double k1) const {
    if (!(k1 > 0 && 1.5 * k1 < rho0_)) throw RegimeError("k2hat* requires 0 < k1 < 2 rho0*/3");
    const double target = rho0_ - 1.5 * k1;
    return solve_decreasing_log([&](double k2) { return X(0, 0, k2) - target; }, gamma0(), "k2hat*");
}

double SlepModel::alpha1(double k1, double k2) const {
    const double f0 = X(0, 0, k2) + 1.5 * k1 - rho0_;
    if (!(1.5 * k1 < rho0_) || !(f0 > 0)) throw RegimeError("no alpha1: F1hat(1,0+) <= 0");
    return solve_decreasing_log([&](double a) { return X(0, a * a, k2) + 1.5 * k1 - rho0_; }, gamma0(), "alpha1");
}

double SlepModel::alpha2(double k1, double k2) const {
    const double a0 = alpha0(k1, k2);
    return solve_decreasing_log([&](double a) { return Y(0, a * a, k2) + k1 / (2.0 * a) - tau_; }, 0.5 * a0,
                                "alpha2");
}

double SlepModel::lambda_I1(double alpha, double k1, double k2) const {
    if (!(k1 < rho0_)) throw RegimeError("lambda_I1 requires k1 < rho0* (Gamma2 or Gamma3-1)");
    auto f = [&](double s) { return X(0, s, k2) - rho0_ + k1 + k1 * alpha * alpha / (alpha * alpha + s); };
    if (!(f(0.0) > 0)) throw RegimeError("lambda_I1: X(0,0,k2) <= rho0* - 2 k1, (k1,k2) lies in Gamma1");
    return std::sqrt(solve_decreasing_log(f, alpha * alpha + 1e-300, "lambda_I1"));
}

double SlepModel::lambda_I2(double alpha, double k1, double k2) const {
    auto f = [&](double s) { return Y(0, s, k2) - tau_ + k1 * alpha / (alpha * alpha + s); };
    if (!(f(0.0) > 0)) throw RegimeError("lambda_I2: alpha must lie in (0, alpha0)");
    return std::sqrt(solve_decreasing_log(f, alpha * alpha + 1e-300, "lambda_I2"));
}

// ---- complex SLEP functions --------------------------------------------------------------------------------

cdouble SlepModel::F_star(cdouble lam, double k1, double k2) const {
    return rho0_ - 2.0 * k1 - tau_ * lam - sums_.R(lam + 2.0 * k2);
}

cdouble SlepModel::dF_star(cdouble lam, double, double k2) const { return -tau_ + sums_.R2(lam + 2.0 * k2); }

cdouble SlepModel::G_star(cdouble lam, double alpha, double k1, double k2) const {
    return rho0_ - tau_ * lam - k1 * (alpha / (alpha + lam) + 1.0) - sums_.R(lam + 2.0 * k2);
}

cdouble SlepModel::dG_star(cdouble lam, double alpha, double k1, double k2) const {
    const cdouble r = 1.0 / (alpha + lam);
    return -tau_ + k1 * alpha * r * r + sums_.R2(lam + 2.0 * k2);
}

cdouble SlepModel::dG_dalpha(cdouble lam, double alpha, double k1) const {
    const cdouble r = 1.0 / (alpha + lam);
    return -k1 * lam * r * r;
}

cdouble SlepModel::newton(cdouble seed, double k2, const std::function<cdouble(cdouble)>& f,
                          const std::function<cdouble(cdouble)>& df) const {
    auto inside = [&](cdouble z) { return z.real() + 2.0 * k2 > -mu_star_; };
    if (!inside(seed)) throw RegimeError("seed outside the resolvent region");
    cdouble z = seed;
    for (int it = 0; it < 60; ++it) {
        const cdouble fz = f(z);
        const cdouble dz = fz / df(z);
        // damp steps that would leave the region
        double t = 1.0;
        while (!inside(z - t * dz) && t > 1e-6) t *= 0.5;
        if (!inside(z - t * dz)) throw NumericalError("complex Newton left the resolvent region");
        z -= t * dz;
        if (std::abs(dz) <= 1e-14 * std::max(1.0, std::abs(z))) {
            if (std::abs(f(z)) < 1e-10) return z;
        }
    }
    throw NumericalError("complex Newton did not converge from seed (" + fmt(seed.real()) + ", " +
                         fmt(seed.imag()) + ")");
}

cdouble SlepModel::complex_root_F(cdouble seed, double k1, double k2) const {
    return newton(
        seed, k2, [&](cdouble z) { return F_star(z, k1, k2); }, [&](cdouble z) { return dF_star(z, k1, k2); });
}

cdouble SlepModel::complex_root_G(cdouble seed, double alpha, double k1, double k2) const {
    return newton(
        seed, k2, [&](cdouble z) { return G_star(z, alpha, k1, k2); },
        [&](cdouble z) { return dG_star(z, alpha, k1, k2); });
}

// ---- Hopf point --------------------------------------------------------------------------------------------

double SlepModel::hopf_gap(double alpha, double k1, double k2) const {
    return lambda_I1(alpha, k1, k2) - lambda_I2(alpha, k1, k2);
}

// Logistic map of a uniform grid: geometric clustering at both ends of (0, alpha0). alpha2 is inserted.
std::vector<double> SlepModel::scan_grid(double a0, double a2, int n) const {
    const double tmax = std::log(1e7);
    std::vector<double> g;
    g.reserve(n + 1);
    for (int j = 0; j < n; ++j) {
        const double t = -tmax + 2.0 * tmax * j / (n - 1);
        g.push_back(a0 / (1.0 + std::exp(-t)));
    }
    g.push_back(a2);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

HopfSolution SlepModel::find_hopf(double k1, double k2) const {
    require_tau();
    const RegionPoint rp = classify(k1, k2);
    if (rp.label == Region::Boundary) throw RegimeError("BOUNDARY point excluded from Hopf computation");
    if (rp.label == Region::Gamma1 || rp.label == Region::Gamma3_2)
        throw RegimeError("find_hopf requires (k1,k2) in Gamma2 or Gamma3-1, got " + region_name(rp.label));

    HopfSolution h;
    h.alpha0 = alpha0(k1, k2);
    h.alpha2 = alpha2(k1, k2);
    if (1.5 * k1 < rho0_) {
        h.k2hat_star = k2hat_star(k1);
        if (k2 < h.k2hat_star) {
            h.case_tag = "H1";
            h.alpha1 = alpha1(k1, k2);
            if (!(h.alpha1 < h.alpha2))
                throw RegimeError("k2 below k2hat* but outside the (H1) window: alpha1 = " + fmt(h.alpha1) +
                                  " >= alpha2 = " + fmt(h.alpha2));
        } else {
            h.case_tag = k1 < 0.5 * rho0_ ? "3.88a" : "3.88b";
        }
    } else {
        h.case_tag = "3.88c";
    }

    auto D = [&](double a) { return hopf_gap(a, k1, k2); };
    std::vector<std::string> trace;
    for (int n = 512; n <= 32768; n *= 4) {
        const auto grid = scan_grid(h.alpha0, h.alpha2, n);
        std::vector<double> vals(grid.size());
        for (size_t j = 0; j < grid.size(); ++j) vals[j] = D(grid[j]);
        h.crossings.clear();
        for (size_t j = 0; j + 1 < grid.size(); ++j) {
            if (vals[j] == 0.0) {
                h.crossings.push_back({grid[j], lambda_I2(grid[j], k1, k2), 1});
                continue;
            }
            if ((vals[j] > 0) != (vals[j + 1] > 0) && vals[j + 1] != 0.0) {
                const double a = find_root(D, grid[j], grid[j + 1], 1e-15);
                h.crossings.push_back({a, lambda_I2(a, k1, k2), 1});
            }
        }
        // sign-preserving local minima of |D|
        for (size_t j = 1; j + 1 < grid.size(); ++j) {
            const double m = std::abs(vals[j]);
            if (!(m < std::abs(vals[j - 1]) && m < std::abs(vals[j + 1]))) continue;
            if ((vals[j - 1] > 0) != (vals[j] > 0) || (vals[j + 1] > 0) != (vals[j] > 0)) continue;
            const double sgn = vals[j] > 0 ? 1.0 : -1.0;
            auto r = boost::math::tools::brent_find_minima([&](double a) { return sgn * D(a); }, grid[j - 1],
                                                           grid[j + 1], 52);
            const double amin = r.first, dmin = sgn * r.second;
            if ((dmin > 0) != (vals[j] > 0)) {
                const double a = find_root(D, grid[j - 1], amin, 1e-15);
                const double b = find_root(D, amin, grid[j + 1], 1e-15);
                h.crossings.push_back({a, lambda_I2(a, k1, k2), 1});
                h.crossings.push_back({b, lambda_I2(b, k1, k2), 1});
            } else if (std::abs(dmin) < 1e-8 * h.alpha0) {
                h.crossings.push_back({amin, lambda_I2(amin, k1, k2), 2});
            }
        }
        std::sort(h.crossings.begin(), h.crossings.end(),
                  [](const HopfCrossing& x, const HopfCrossing& y) { return x.alpha < y.alpha; });
        h.scan_points = static_cast<int>(grid.size());
        if (!h.crossings.empty()) break;
        std::ostringstream s;
        s << "scan n=" << grid.size() << ": D(first)=" << vals.front() << " D(alpha2)="
          << vals[std::lower_bound(grid.begin(), grid.end(), h.alpha2) - grid.begin()] << " D(last)=" << vals.back();
        trace.push_back(s.str());
        if (h.case_tag == "H1") break;
    }
    if (h.crossings.empty()) {
        std::string t;
        for (const auto& s : trace) t += "\n  " + s;
        if (h.case_tag == "H1")
            throw RegimeError("no Hopf crossing: k2 lies below k2hat* outside the (H1) window" + t);
        throw NumericalError("no Hopf crossing found in regime " + h.case_tag + " after escalation" + t);
    }

    // Polish (alpha, lambda) on Re G* = Im G* = 0.
    double a = h.crossings.back().alpha, l = h.crossings.back().lambda;
    for (int it = 0; it < 8; ++it) {
        const cdouble z(0.0, l);
        const cdouble g = G_star(z, a, k1, k2);
        if (std::abs(g) < 1e-15) break;
        const cdouble gl = dG_star(z, a, k1, k2) * cdouble(0.0, 1.0);  // d/d lamI
        const cdouble ga = dG_dalpha(z, a, k1);
        const double det = ga.real() * gl.imag() - gl.real() * ga.imag();
        if (det == 0.0) break;
        const double da = (g.real() * gl.imag() - gl.real() * g.imag()) / det;
        const double dl = (ga.real() * g.imag() - g.real() * ga.imag()) / det;
        a -= da;
        l -= dl;
        if (std::abs(da) < 1e-16 * a && std::abs(dl) < 1e-16 * l) break;
    }
    h.crossings.back().alpha = a;
    h.crossings.back().lambda = l;
    h.alpha_H = a;
    h.lamIH = l;
    h.residual = std::abs(G_star(cdouble(0.0, l), a, k1, k2));
    if (h.case_tag == "3.88a" || h.case_tag == "3.88b")
        h.ordering_holds = h.alpha2 < h.lamIH && h.lamIH < h.alpha_H && h.alpha_H < h.alpha0;
    h.lambda_below_alpha2 = h.lamIH < h.alpha2 && h.alpha2 < h.alpha_H && h.alpha_H < h.alpha0;
    h.dlamR_dalpha = transversality(h, k1, k2).value;
    return h;
}

Transversality SlepModel::transversality(const HopfSolution& h, double k1, double k2) const {
    Transversality t;
    const double a = h.alpha_H, l = h.lamIH;
    const double den = a * a + l * l;
    const cdouble r2 = sums_.R2(cdouble(2.0 * k2, l));
    const double s1 = r2.real();                 // C sum ((g+2k2)^2 - l^2) / (...)^2
    const double s2 = -r2.imag() / (2.0 * l);    // C sum (g+2k2) / (...)^2
    t.I1 = (tau_ - s1) * 2.0 * a * k1 * l * l / (den * den);
    t.I2 = 2.0 * k1 * l * l * (a * a - l * l) / (den * den) * s2;
    const cdouble gl = dG_star(cdouble(0.0, l), a, k1, k2);
    t.denominator = std::norm(gl);
    t.value = -(t.I1 + t.I2) / t.denominator;
    t.h_bound = h.alpha0 / std::sqrt(3.0) - 2.0 * k2;
    t.gamma0_exceeds_h = gamma0() > t.h_bound;
    return t;
}

double SlepModel::transversality_fd(const HopfSolution& h, double k1, double k2, double rel_delta) const {
    const double da = rel_delta * h.alpha_H;
    const cdouble seed(0.0, h.lamIH);
    const cdouble zp = complex_root_G(seed, h.alpha_H + da, k1, k2);
    const cdouble zm = complex_root_G(seed, h.alpha_H - da, k1, k2);
    return (zp.real() - zm.real()) / (2.0 * da);
}

// ---- SLEP-1 and the Prop. 3.1 suite ------------------------------------------------------------------------

Slep1Report SlepModel::slep1_no_crossing_check(double k1, const std::vector<double>& alpha_grid,
                                              const std::vector<double>& lambda_grid) const {
    require_tau();
    Slep1Report r;
    std::vector<double> lams = lambda_grid;
    if (lams.empty()) {
        for (int j = 0; j < 64; ++j) lams.push_back(gamma0() * std::pow(10.0, -4.0 + 7.0 * j / 63.0));
    }
    r.xhat_margin = X(0, 0, 0) - rho0_;
    if (!(r.xhat_margin > 0)) {
        r.passed = false;
        r.violations.push_back("Xhat(0,0) <= rho0*");
    }
    r.yhat_margin = kInfinite;
    for (double lam : lams) {
        const double y = Y(0, lam * lam, 0);
        r.yhat_over_tau_star = std::max(r.yhat_over_tau_star, y / tau_star_);
        if (!(y < tau_star_)) {
            r.passed = false;
            r.violations.push_back("Yhat(0," + fmt(lam) + "^2) >= tau*");
        }
        for (double a : alpha_grid) {
            const double m = tau_ + k1 * a / (a * a + lam * lam) - y;
            ++r.samples;
            r.yhat_margin = std::min(r.yhat_margin, m);
            if (!(m > 0)) {
                r.passed = false;
                r.violations.push_back("imaginary SLEP-1 root at alpha=" + fmt(a) + " lambda=" + fmt(lam));
            }
        }
    }
    return r;
}

Prop31Report SlepModel::validate_prop31(int n) const {
    Prop31Report r;
    const double g0 = gamma0();
    std::vector<double> lr, li2, k2s;
    for (int j = 0; j < n; ++j) {
        lr.push_back(j == 0 ? 0.0 : g0 * std::pow(10.0, -3.0 + 4.0 * (j - 1) / std::max(1, n - 2)));
        li2.push_back(j == 0 ? 0.0 : g0 * g0 * std::pow(10.0, -4.0 + 6.0 * (j - 1) / std::max(1, n - 2)));
        k2s.push_back(j == 0 ? 0.0 : g0 * std::pow(10.0, -3.0 + 5.0 * (j - 1) / std::max(1, n - 2)));
    }
    auto fail = [&](const std::string& s) {
        r.passed = false;
        if (r.failures.size() < 20) r.failures.push_back(s);
    };
    const double y000 = Y(0, 0, 0), x000 = X(0, 0, 0);
    for (double a : lr)
        for (double b : li2)
            for (double k : k2s) {
                ++r.points;
                const double sc = g0 + a + 2.0 * k;
                const double hr = 1e-4 * sc, hi = 1e-4 * sc * sc;
                const double y = Y(a, b, k);
                const double dXdI = (X(a, b + hi, k) - X(a, b, k)) / hi;
                const double dYdI = (Y(a, b + hi, k) - y) / hi;
                const double dYdR = (Y(a + hr, b, k) - y) / hr;
                r.worst_dX_dI2 = std::max(r.worst_dX_dI2, dXdI);
                r.worst_dY_dI2 = std::max(r.worst_dY_dI2, dYdI);
                r.worst_dY_dR = std::max(r.worst_dY_dR, dYdR);
                if (!(dXdI < 0 && dYdI < 0 && dYdR < 0)) {
                    ++r.sign_failures;
                    fail("derivative sign at (" + fmt(a) + ", " + fmt(b) + ", " + fmt(k) + ")");
                }
                if (a == 0 && b == 0 && k == 0) continue;
                r.max_y_over_tau_star = std::max(r.max_y_over_tau_star, y / tau_star_);
                if (!(y < tau_star_)) fail("Y >= tau* at (" + fmt(a) + ", " + fmt(b) + ", " + fmt(k) + ")");
            }
    for (double k : k2s) {
        const double h = 1e-4 * (g0 + 2.0 * k);
        const double y = Y(0, 0, k);
        const double dX = (X(h, 0, k) - X(-h, 0, k)) / (2.0 * h);
        r.identity_error = std::max(r.identity_error, std::abs(dX + y) / y);
        const double dYk = (Y(0, 0, k + h) - Y(0, 0, k - h)) / (2.0 * h);
        const double dYr = (Y(2.0 * h, 0, k) - Y(-2.0 * h, 0, k)) / (4.0 * h);
        r.shift_identity_error = std::max(r.shift_identity_error, std::abs(0.5 * dYk - dYr) / std::abs(dYr));
    }
    if (!(r.identity_error < 1e-6)) fail("dX/dlamR(0,0,k2) = -Y identity error " + fmt(r.identity_error));
    if (!(r.shift_identity_error < 1e-6)) fail("shift identity error " + fmt(r.shift_identity_error));
    r.x000_minus_rho = x000 - rho0_;
    if (!(r.x000_minus_rho > 0)) fail("X(0,0,0) <= rho0*");
    const double big = 1e6 * g0;
    r.limit_k2 = std::max(X(0, 0, big) / x000, Y(0, 0, big) / y000);
    r.limit_I2 = std::max(X(0, big * big, 0) / x000, Y(0, big * big, 0) / y000);
    if (!(r.limit_k2 < 1e-3 && r.limit_I2 < 1e-3)) fail("X, Y do not vanish in the large-k2 / large-lamI limits");
    return r;
}

}  // namespace layerstab
