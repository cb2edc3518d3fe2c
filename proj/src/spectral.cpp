#include "layerstab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "layerstab/grid.hpp"
#include "layerstab/kinetics.hpp"
#include "layerstab/numerics.hpp"
#include "layerstab/sums.hpp"

namespace layerstab {

namespace {
std::atomic<long> g_eigen_solves{0};
}

long eigen_solve_count() { return g_eigen_solves.load(); }
void count_eigen_solve() { ++g_eigen_solves; }

SpectralBasis solve_sturm_liouville(const std::vector<double>& x, double d, const std::vector<double>& q_left,
                                    const std::vector<double>& q_right, int modes, int star_index,
                                    bool keep_vectors) {
    const int n = static_cast<int>(x.size());
    if (modes > n) throw RegimeError("more modes requested than grid nodes");
    std::vector<double> w(n, 0.0), diag(n, 0.0), off(n - 1, 0.0);
    for (int i = 0; i + 1 < n; ++i) {
        const double h = x[i + 1] - x[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
        diag[i] += d / h + 0.5 * h * q_right[i];
        diag[i + 1] += d / h + 0.5 * h * q_left[i + 1];
        off[i] = -d / h;
    }
    // Symmetric form W^{-1/2} K W^{-1/2}.
    std::vector<double> ws(n);
    for (int i = 0; i < n; ++i) ws[i] = std::sqrt(w[i]);
    for (int i = 0; i < n; ++i) diag[i] /= w[i];
    for (int i = 0; i + 1 < n; ++i) off[i] /= ws[i] * ws[i + 1];
    ++g_eigen_solves;
    auto te = tridiag_eigen(diag, off, 0, modes - 1);

    SpectralBasis b;
    b.d = d;
    b.ell = x.back() - x.front();
    b.star_index = star_index;
    b.x_star = x[star_index];
    b.gamma = te.values;
    b.psi_at_xstar.resize(modes);
    b.x = x;
    for (int k = 0; k < modes; ++k) {
        auto& y = te.vectors[k];
        for (int i = 0; i < n; ++i) y[i] /= ws[i];
        if (y[0] < 0) {
            for (double& e : y) e = -e;
        }
        b.psi_at_xstar[k] = y[star_index];
        if (keep_vectors) b.psi.push_back(y);
    }
    // Mean potential by the trapezoid rule on one-sided values.
    double qi = 0.0;
    b.q_min = 1e300;
    b.q_max = -1e300;
    for (int i = 0; i + 1 < n; ++i) {
        qi += 0.5 * (x[i + 1] - x[i]) * (q_right[i] + q_left[i + 1]);
        b.q_min = std::min({b.q_min, q_right[i], q_left[i + 1]});
        b.q_max = std::max({b.q_max, q_right[i], q_left[i + 1]});
    }
    b.q_mean = qi / b.ell;
    return b;
}

double slow_potential(const ReducedProfile& p, double xq, Branch side) {
    const double v = p.V_at(xq);
    const double u = p.U_at(xq, side);
    const auto k = kinetics(u, v, p.a, p.sigma);
    return k.det() / (-k.f_u);
}

SpectralBasis eig_slow(const ReducedProfile& profile, const SlowOptions& opt) {
    int star = 0;
    const auto x = split_uniform_grid(profile.ell, profile.x_star, opt.nodes, &star);
    const int n = static_cast<int>(x.size());
    std::vector<double> ql(n), qr(n);
    for (int i = 0; i < n; ++i) {
        ql[i] = slow_potential(profile, x[i], i <= star ? Branch::Minus : Branch::Plus);
        qr[i] = slow_potential(profile, x[i], i < star ? Branch::Minus : Branch::Plus);
    }
    for (int i = 0; i < n; ++i) {
        if (!(ql[i] > 0) || !(qr[i] > 0)) {
            std::ostringstream msg;
            msg << "slow potential not positive at x=" << x[i] << " (outer branch not stable)";
            throw RegimeError(msg.str());
        }
    }
    return solve_sturm_liouville(x, profile.d, ql, qr, opt.modes, star, opt.keep_vectors);
}

FastSpectrum eig_fast(const LayeredStateEps& s, int modes) {
    const int n = s.size();
    const FvLaplacian lap(s.x);
    const auto c = linearize_coeffs(s);
    const double e2 = s.eps * s.eps;
    std::vector<double> diag(n), off(n - 1), ws(n);
    for (int i = 0; i < n; ++i) ws[i] = std::sqrt(lap.w[i]);
    // Negated operator so the largest eigenvalues come first from an ascending solver.
    for (int i = 0; i < n; ++i) {
        double k = 0;
        if (i + 1 < n) k += lap.cond[i];
        if (i > 0) k += lap.cond[i - 1];
        diag[i] = e2 * k / lap.w[i] - c.f_u[i];
    }
    for (int i = 0; i + 1 < n; ++i) off[i] = -e2 * lap.cond[i] / (ws[i] * ws[i + 1]);
    ++g_eigen_solves;
    auto te = tridiag_eigen(diag, off, 0, modes - 1);

    FastSpectrum f;
    f.eps = s.eps;
    for (double m : te.values) f.mu.push_back(-m);
    f.mu0 = f.mu[0];
    f.mu1 = f.mu.size() > 1 ? f.mu[1] : std::nan("");
    if (f.mu1 >= 0) {
        throw NumericalError("fast operator has more than one nonnegative eigenvalue; refine the grid");
    }
    f.rho = f.mu0 / s.eps;
    auto& y = te.vectors[0];
    for (int i = 0; i < n; ++i) y[i] /= ws[i];
    double norm = 0, peak = 0;
    for (int i = 0; i < n; ++i) {
        norm += lap.w[i] * y[i] * y[i];
        if (std::abs(y[i]) > std::abs(peak)) peak = y[i];
    }
    const double sc = (peak < 0 ? -1.0 : 1.0) / std::sqrt(norm);
    for (double& e : y) e *= sc;
    f.phi0 = y;

    // Smallest C with 90% of the mass inside |x - x*| <= C eps.
    auto mass_within = [&](double r) {
        double m = 0;
        for (int i = 0; i < n; ++i) {
            if (std::abs(s.x[i] - s.x_star) <= r) m += lap.w[i] * f.phi0[i] * f.phi0[i];
        }
        return m;
    };
    double lo = 0, hi = s.ell / s.eps;
    for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        (mass_within(mid * s.eps) >= 0.9 ? hi : lo) = mid;
    }
    f.concentration_C = hi;
    return f;
}

RhoExtrapolation extrapolate_rho0(const std::vector<double>& eps, const std::vector<double>& rho) {
    const size_t m = eps.size();
    if (m < 3 || rho.size() != m) throw RegimeError("extrapolation needs at least three samples");
    for (size_t k = 1; k < m; ++k) {
        if (!(eps[k] < eps[k - 1])) throw RegimeError("extrapolation samples must have decreasing eps");
    }
    RhoExtrapolation r;
    // Neville: T[k][j] uses samples k-j..k, evaluated at eps = 0.
    r.table.assign(m, std::vector<double>());
    for (size_t k = 0; k < m; ++k) {
        r.table[k].push_back(rho[k]);
        for (size_t j = 1; j <= k; ++j) {
            const double e_new = eps[k], e_old = eps[k - j];
            const double t = (e_old * r.table[k][j - 1] - e_new * r.table[k - 1][j - 1]) / (e_old - e_new);
            r.table[k].push_back(t);
        }
    }
    r.value = r.table[m - 1][m - 1];
    r.error = std::abs(r.table[m - 1][m - 1] - r.table[m - 1][m - 2]);
    bool inc = true, dec = true;
    for (size_t k = 1; k < m; ++k) {
        inc = inc && rho[k] >= rho[k - 1];
        dec = dec && rho[k] <= rho[k - 1];
    }
    r.reliable = inc || dec;
    return r;
}

DeltaConstants delta_limit_constants(const std::vector<LayeredStateEps>& states,
                                     const std::vector<FastSpectrum>& fast, double x_star,
                                     const std::vector<TestFunction>& tests) {
    DeltaConstants out;
    std::vector<double> eps;
    for (const auto& s : states) eps.push_back(s.eps);
    double best1 = 0, best2 = 0;
    int used = 0;
    for (const auto& w : tests) {
        const double wx = w(x_star);
        if (std::abs(wx) < 1e-12) continue;
        std::vector<double> c1s, c2s;
        for (size_t k = 0; k < states.size(); ++k) {
            const auto& s = states[k];
            const FvLaplacian lap(s.x);
            const auto c = linearize_coeffs(s);
            double i1 = 0, i2 = 0;
            for (int i = 0; i < s.size(); ++i) {
                const double wi = lap.w[i] * fast[k].phi0[i] * w(s.x[i]);
                i1 += wi * c.f_v[i];
                i2 += wi * c.g_u[i];
            }
            c1s.push_back(-i1 / std::sqrt(s.eps) / wx);
            c2s.push_back(i2 / std::sqrt(s.eps) / wx);
        }
        const auto e1 = extrapolate_rho0(eps, c1s);
        const auto e2 = extrapolate_rho0(eps, c2s);
        out.c1_by_test.push_back(c1s);
        out.c2_by_test.push_back(c2s);
        out.c1_extrapolated_by_test.push_back(e1.value);
        out.c2_extrapolated_by_test.push_back(e2.value);
        best1 += e1.value;
        best2 += e2.value;
        out.c1_error = std::max(out.c1_error, e1.error);
        out.c2_error = std::max(out.c2_error, e2.error);
        ++used;
    }
    if (used == 0) throw RegimeError("all test functions vanish at x*");
    out.c1 = best1 / used;
    out.c2 = best2 / used;
    for (int t = 0; t < used; ++t) {
        out.c1_error = std::max(out.c1_error, std::abs(out.c1_extrapolated_by_test[t] - out.c1));
        out.c2_error = std::max(out.c2_error, std::abs(out.c2_extrapolated_by_test[t] - out.c2));
    }
    return out;
}

double c2_over_kappa(double v_hat, double hm, double hp) {
    return hp - hm + (hm / (1.0 + hm * hm) - hp / (1.0 + hp * hp)) * v_hat;
}

SlepConstants build_constants(const ModelParams& params, const ConstantsOptions& opt) {
    const auto profile = solve_reduced(params, opt.reduced);
    return build_constants(params, profile, opt);
}

SlepConstants build_constants(const ModelParams& params, const ReducedProfile& profile, const ConstantsOptions& opt) {
    SlepConstants k;
    k.a = params.a;
    k.sigma = params.sigma;
    k.d = params.d;
    k.ell = params.ell;
    k.v_hat = profile.v_hat;
    k.h_minus = profile.h_minus;
    k.h_plus = profile.h_plus;
    k.M_prime = profile.M_prime;
    k.x_star = profile.x_star;
    k.int_g_left = integral_g_left(profile);

    std::vector<LayeredStateEps> states;
    std::vector<FastSpectrum> fast;
    double max_mu1 = -1e300;
    for (double e : opt.eps) {
        ModelParams pe = params;
        pe.eps = e;
        states.push_back(solve_layered_eps(pe, profile, opt.steady));
        fast.push_back(eig_fast(states.back()));
        k.eps_samples.push_back(e);
        k.rho_samples.push_back(fast.back().rho);
        k.mu1_samples.push_back(fast.back().mu1);
        max_mu1 = std::max(max_mu1, fast.back().mu1);
    }
    const auto ex = extrapolate_rho0(k.eps_samples, k.rho_samples);
    k.rho0_star = ex.value;
    k.rho0_error = ex.error;
    if (!(k.rho0_star > 0)) throw NumericalError("extrapolated rho0* is not positive");
    const double kap2 = k.rho0_star * params.d / (k.M_prime * k.int_g_left);
    if (!(kap2 > 0)) throw NumericalError("kappa*^2 from the rho0* relation is not positive");
    k.kappa_star = std::sqrt(kap2);
    k.c1_star = -k.kappa_star * k.M_prime;
    k.c2_star = k.kappa_star * c2_over_kappa(k.v_hat, k.h_minus, k.h_plus);
    k.c1c2 = k.c1_star * k.c2_star;
    k.fast_gap = 0.5 * max_mu1;

    const double ell = params.ell;
    k.delta = delta_limit_constants(states, fast, profile.x_star,
                                    {[](double) { return 1.0; },
                                     [ell](double x) { return 2.0 + std::cos(3.141592653589793 * x / ell); }});

    k.basis = eig_slow(profile, opt.slow);
    k.mu_star = 0.5 * k.basis.q_min;
    const SpectralSums sums(k.basis, k.c1c2);
    k.tau_star = sums.Y(0.0, 0.0, 0.0);
    return k;
}

}  // namespace layerstab
