#include "layerstab/reduced.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "layerstab/grid.hpp"
#include "layerstab/numerics.hpp"

namespace layerstab {

namespace {

using State = std::array<double, 2>;  // (V, dV/ds)

struct Piece {
    const NullclineBranches& nb;
    Branch branch;
    double d;

    double field(double v) const {
        const double vc = branch == Branch::Minus ? std::max(v, nb.v_lo) : std::min(v, nb.v_hi);
        return outer_field(nb, vc, branch);
    }
    State rhs(const State& y) const { return {y[1], -field(y[0]) / d}; }
    State rk4(const State& y, double h) const {
        const State k1 = rhs(y);
        const State k2 = rhs({y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]});
        const State k3 = rhs({y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]});
        const State k4 = rhs({y[0] + h * k3[0], y[1] + h * k3[1]});
        return {y[0] + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                y[1] + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
    }
};

struct ShotResult {
    double length = 0;  // arclength from the boundary to the v_hat crossing
    double slope = 0;   // |dV/ds| at the crossing
};

// Integrates from a Neumann end with V(0)=start until V hits v_hat (adaptive step doubling).
ShotResult shoot(const Piece& pc, double start, double v_hat, double length_cap) {
    const double dir = v_hat > start ? 1.0 : -1.0;
    State y{start, 0.0};
    double s = 0.0;
    double h = 1e-3 * std::sqrt(pc.d);
    const double tol = 1e-13;
    for (int guard = 0; guard < 2000000; ++guard) {
        const State full = pc.rk4(y, h);
        const State half = pc.rk4(pc.rk4(y, 0.5 * h), 0.5 * h);
        const double err = std::max(std::abs(full[0] - half[0]), std::abs(full[1] - half[1])) / 15.0;
        if (err > tol && h > 1e-12) {
            h *= std::max(0.2, 0.9 * std::pow(tol / err, 0.2));
            continue;
        }
        if (dir * (half[0] - v_hat) >= 0) {
            // Newton on the partial step length.
            double th = h * (v_hat - y[0]) / (half[0] - y[0]);
            for (int k = 0; k < 8; ++k) {
                const State z = pc.rk4(pc.rk4(y, 0.5 * th), 0.5 * th);
                const double dth = (z[0] - v_hat) / z[1];
                th -= dth;
                if (std::abs(dth) < 1e-15 * (1.0 + s)) break;
            }
            const State z = pc.rk4(pc.rk4(y, 0.5 * th), 0.5 * th);
            return {s + th, std::abs(z[1])};
        }
        y = half;
        s += h;
        if (s > length_cap) throw NumericalError("shooting did not reach v_hat within the length cap");
        h *= std::min(4.0, 0.9 * std::pow(tol / std::max(err, 1e-300), 0.2));
    }
    throw NumericalError("shooting step budget exhausted");
}

double integrate_field(const Piece& pc, double lo, double hi) {
    if (lo == hi) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate([&](double v) { return pc.field(v); }, lo,
                                                                          hi, 10, 1e-13);
}

}  // namespace

ReducedProfile solve_reduced(const ModelParams& params, const ReducedOptions& opt) {
    params.validate();
    ReducedProfile p;
    p.a = params.a;
    p.sigma = params.sigma;
    p.d = params.d;
    p.ell = params.ell;
    p.branches = fold_points(params.a);
    const auto vh = find_vhat(p.branches, params.sigma);
    p.v_hat = vh.v_hat;
    p.h_minus = vh.h_minus;
    p.h_plus = vh.h_plus;
    p.M_prime = vh.M_prime;
    const auto& nb = p.branches;
    const Piece left{nb, Branch::Minus, params.d};
    const Piece right{nb, Branch::Plus, params.d};
    const double cap = 1e3 * (params.ell + std::sqrt(params.d));

    // Energy E_L(V0) = int_{V0}^{v_hat} -G_-, E_R(Vl) = int_{v_hat}^{Vl} G_+; matching slopes need E_L = E_R.
    const double e_right_max = integrate_field(right, p.v_hat, nb.v_hi);
    auto matched_vell = [&](double v0) -> double {
        const double el = -integrate_field(left, v0, p.v_hat);
        if (el >= e_right_max) return std::nan("");
        return find_root([&](double vl) { return integrate_field(right, p.v_hat, vl) - el; }, p.v_hat, nb.v_hi,
                         1e-15);
    };
    auto total_length = [&](double v0) -> double {
        const double vl = matched_vell(v0);
        if (std::isnan(vl)) return std::nan("");
        return shoot(left, v0, p.v_hat, cap).length + shoot(right, vl, p.v_hat, cap).length;
    };

    // Coarse scan in V(0) for a sign change of total length - ell.
    const double span = p.v_hat - nb.v_lo;
    double lo = std::nan(""), hi = std::nan(""), tmin = 1e300, tmax = -1e300;
    double prev_v = std::nan(""), prev_r = std::nan("");
    for (int k = 0; k < opt.scan_points; ++k) {
        const double t = 1e-4 + (1.0 - 2e-4) * k / (opt.scan_points - 1);
        const double v0 = nb.v_lo + span * t;
        const double len = total_length(v0);
        if (std::isnan(len)) continue;
        tmin = std::min(tmin, len);
        tmax = std::max(tmax, len);
        const double r = len - params.ell;
        if (!std::isnan(prev_r) && (prev_r > 0) != (r > 0)) {
            lo = prev_v;
            hi = v0;
        }
        prev_v = v0;
        prev_r = r;
    }
    if (std::isnan(lo)) {
        std::ostringstream msg;
        msg << "no layered solution at this d: d=" << params.d << ", ell=" << params.ell
            << "; attainable total lengths over V(0) in (" << nb.v_lo << ", " << p.v_hat << ") span [" << tmin << ", "
            << tmax << "]";
        throw RegimeError(msg.str());
    }
    const double v0_seed = find_root([&](double v0) { return total_length(v0) - params.ell; }, lo, hi, 1e-9);

    // 2x2 Newton on (V(0), V(ell)): residuals (x*_left + s_right - ell, slope mismatch).
    double v0 = v0_seed, vl = matched_vell(v0_seed);
    auto residual = [&](double a0, double al, ShotResult& sl, ShotResult& sr) {
        sl = shoot(left, a0, p.v_hat, cap);
        sr = shoot(right, al, p.v_hat, cap);
        return std::array<double, 2>{sl.length + sr.length - params.ell, sl.slope - sr.slope};
    };
    ShotResult sl, sr;
    auto r = residual(v0, vl, sl, sr);
    int it = 0;
    for (; it < 30; ++it) {
        if (std::abs(r[0]) < opt.tol * params.ell && std::abs(r[1]) < opt.tol * std::max(sl.slope, 1e-300)) break;
        const double h0 = 1e-7 * span, h1 = 1e-7 * (nb.v_hi - p.v_hat);
        ShotResult t1, t2;
        const auto ra = residual(v0 + h0, vl, t1, t2);
        const auto rb = residual(v0, vl + h1, t1, t2);
        const double j00 = (ra[0] - r[0]) / h0, j10 = (ra[1] - r[1]) / h0;
        const double j01 = (rb[0] - r[0]) / h1, j11 = (rb[1] - r[1]) / h1;
        const double det = j00 * j11 - j01 * j10;
        if (det == 0.0) throw NumericalError("singular matching Jacobian");
        double dv0 = -(j11 * r[0] - j01 * r[1]) / det;
        double dvl = -(-j10 * r[0] + j00 * r[1]) / det;
        v0 += dv0;
        vl += dvl;
        const double margin_lo = (v0 - nb.v_lo) / (nb.v_hi - nb.v_lo);
        const double margin_hi = (nb.v_hi - vl) / (nb.v_hi - nb.v_lo);
        if (margin_lo < 1e-8 || margin_hi < 1e-8) {
            throw RegimeError("shooting approached a fold point (V(0) near v_lo or V(ell) near v_hi)");
        }
        r = residual(v0, vl, sl, sr);
    }
    p.newton_iterations = it;
    p.V0 = v0;
    p.Vell = vl;
    p.x_star = sl.length;
    p.slope_left = sl.slope;
    p.slope_right = sr.slope;
    p.slope_mismatch = std::abs(sl.slope - sr.slope);
    if (!(p.x_star > 0 && p.x_star < params.ell)) throw RegimeError("layer position outside (0, ell)");

    // Dense storage by fixed-substep RK4 from each Neumann end.
    p.x = graded_grid(params.ell, p.x_star, opt.grid_nodes, 0.1 * params.ell, 0.3, true);
    const int n = static_cast<int>(p.x.size());
    p.star_index = static_cast<int>(std::find(p.x.begin(), p.x.end(), p.x_star) - p.x.begin());
    p.V.assign(n, 0.0);
    p.dV.assign(n, 0.0);
    const double hmax = params.ell / 40000.0;
    {
        State y{v0, 0.0};
        double s = 0.0;
        p.V[0] = v0;
        for (int i = 1; i <= p.star_index; ++i) {
            const double target = p.x[i];
            const int m = std::max(1, static_cast<int>(std::ceil((target - s) / hmax)));
            const double h = (target - s) / m;
            for (int k = 0; k < m; ++k) y = left.rk4(y, h);
            s = target;
            p.V[i] = y[0];
            p.dV[i] = y[1];
        }
    }
    {
        State y{vl, 0.0};
        double s = 0.0;
        p.V[n - 1] = vl;
        for (int i = n - 2; i > p.star_index; --i) {
            const double target = params.ell - p.x[i];
            const int m = std::max(1, static_cast<int>(std::ceil((target - s) / hmax)));
            const double h = (target - s) / m;
            for (int k = 0; k < m; ++k) y = right.rk4(y, h);
            s = target;
            p.V[i] = y[0];
            p.dV[i] = -y[1];
        }
    }
    p.V[p.star_index] = p.v_hat;
    p.dV[p.star_index] = 0.5 * (p.slope_left + p.slope_right);
    return p;
}

double ReducedProfile::V_at(double xq) const {
    if (xq < 0 || xq > ell) throw RegimeError("sample_profile: x outside [0, ell]");
    if (xq >= x.back()) return V.back();
    const size_t j = std::max<size_t>(1, std::upper_bound(x.begin(), x.end(), xq) - x.begin());
    const double h = x[j] - x[j - 1];
    const double t = (xq - x[j - 1]) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * V[j - 1] + h10 * h * dV[j - 1] + h01 * V[j] + h11 * h * dV[j];
}

double ReducedProfile::dV_at(double xq) const {
    if (xq < 0 || xq > ell) throw RegimeError("sample_profile: x outside [0, ell]");
    if (xq >= x.back()) return dV.back();
    const size_t j = std::max<size_t>(1, std::upper_bound(x.begin(), x.end(), xq) - x.begin());
    const double h = x[j] - x[j - 1];
    const double t = (xq - x[j - 1]) / h;
    const double d00 = 6 * t * t - 6 * t, d10 = 3 * t * t - 4 * t + 1;
    const double d01 = -6 * t * t + 6 * t, d11 = 3 * t * t - 2 * t;
    return (d00 * V[j - 1] + d01 * V[j]) / h + d10 * dV[j - 1] + d11 * dV[j];
}

double ReducedProfile::U_at(double xq, Branch side) const {
    const double v = V_at(xq);
    if (side == Branch::Minus) return branches.eval(std::max(v, branches.v_lo), Branch::Minus);
    return branches.eval(std::min(v, branches.v_hi), Branch::Plus);
}

std::pair<double, double> ReducedProfile::sample(double xq) const {
    const double v = V_at(xq);
    const Branch side = xq <= x_star ? Branch::Minus : Branch::Plus;
    return {U_at(xq, side), v};
}

double integral_g_left(const ReducedProfile& p) {
    std::vector<double> xs(p.x.begin(), p.x.begin() + p.star_index + 1);
    std::vector<double> gs(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) gs[i] = outer_field(p.branches, std::max(p.V[i], p.branches.v_lo), Branch::Minus);
    return trapezoid(xs, gs);
}

double energy_defect(const ReducedProfile& p) {
    const Piece left{p.branches, Branch::Minus, p.d};
    const Piece right{p.branches, Branch::Plus, p.d};
    using Gauss = boost::math::quadrature::gauss<double, 20>;
    const double scale = 0.5 * p.d * p.slope_left * p.slope_left;
    const int n = static_cast<int>(p.x.size());
    double worst = 0.0;
    // Potential accumulated node to node from each Neumann end.
    double phi = 0.0;
    for (int i = 0; i <= p.star_index; ++i) {
        if (i > 0) phi += Gauss::integrate([&](double v) { return left.field(v); }, p.V[i - 1], p.V[i]);
        const double dv = i == p.star_index ? p.slope_left : p.dV[i];
        worst = std::max(worst, std::abs(0.5 * p.d * dv * dv + phi));
    }
    phi = 0.0;
    for (int i = n - 1; i >= p.star_index; --i) {
        if (i < n - 1) phi += Gauss::integrate([&](double v) { return right.field(v); }, p.V[i + 1], p.V[i]);
        const double dv = i == p.star_index ? p.slope_right : p.dV[i];
        worst = std::max(worst, std::abs(0.5 * p.d * dv * dv + phi));
    }
    return worst / scale;
}

}  // namespace layerstab
