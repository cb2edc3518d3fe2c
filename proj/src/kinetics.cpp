#include "layerstab/kinetics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "layerstab/numerics.hpp"
#include "layerstab/params.hpp"

namespace layerstab {

void ModelParams::validate() const {
    std::ostringstream msg;
    if (!(a > sigmoidal_threshold())) {
        msg << "non-sigmoidal regime: a=" << a << " must exceed (5/3)sqrt(15)=" << sigmoidal_threshold();
    } else if (!(sigma > 0)) {
        msg << "sigma must be positive (got " << sigma << ")";
    } else if (!(eps > 0) || !(tau > 0) || !(d > 0) || !(ell > 0)) {
        msg << "eps, tau, d, ell must be positive";
    } else if (!(k1 >= 0) || !(k2 >= 0)) {
        msg << "k1, k2 must be nonnegative";
    } else if (!(alpha > 0)) {
        msg << "alpha must be positive or infinite";
    } else {
        return;
    }
    throw RegimeError(msg.str());
}

ReducedParams reduce_parameters(const OriginalParams& p) {
    if (!(p.d1 > 0 && p.d2 > 0 && p.a > 0 && p.b > 0 && p.sigma > 1 && p.k1_orig >= 0 && p.k2 >= 0)) {
        throw RegimeError("original parameters must be positive with sigma > 1");
    }
    ReducedParams r;
    r.params.a = p.a;
    r.params.sigma = p.sigma;
    r.params.eps = std::sqrt(p.d1 / p.sigma);
    r.params.tau = p.b * std::sqrt(p.sigma / p.d1);
    r.params.d = p.d2 / p.b;
    r.params.k1 = p.k1_orig * std::sqrt(p.sigma / p.d1);
    r.params.k2 = p.k2 / p.b;
    r.time_scale = p.b;
    return r;
}

KineticsEval kinetics(double u, double v, double a, double sigma) {
    if (!(u > 0)) throw RegimeError("kinetics: u must be positive (got " + std::to_string(u) + ")");
    const double s = 1.0 + u * u;
    KineticsEval k;
    k.f = (a - u - 4.0 * u * v / s) / sigma;
    k.g = u - u * v / s;
    const double ds = (1.0 - u * u) / (s * s);
    k.f_u = -(1.0 + 4.0 * v * ds) / sigma;
    k.f_v = -4.0 * u / (sigma * s);
    k.g_u = 1.0 - v * ds;
    k.g_v = -u / s;
    return k;
}

double kinetics_det(double u, double sigma) { return 5.0 * u / (sigma * (1.0 + u * u)); }

std::pair<double, double> constant_steady_state(double a) {
    if (!(a > 0)) throw RegimeError("constant_steady_state: a must be positive");
    return {a / 5.0, 1.0 + a * a / 25.0};
}

const char* branch_name(Branch b) {
    switch (b) {
        case Branch::Minus: return "h-";
        case Branch::Zero: return "h0";
        case Branch::Plus: return "h+";
    }
    return "?";
}

double NullclineBranches::v_of_u(double u) const { return (a - u) * (1.0 + u * u) / (4.0 * u); }

bool NullclineBranches::in_domain(double v, Branch b) const {
    switch (b) {
        case Branch::Minus: return v >= v_lo;
        case Branch::Zero: return v > v_lo && v < v_hi;
        case Branch::Plus: return v > 0 && v <= v_hi;
    }
    return false;
}

namespace {

// Roots of u^3 - a u^2 + (1+4v) u - a, ascending.
std::vector<double> nullcline_roots(double a, double v, bool force_three) {
    const double b = -a, c = 1.0 + 4.0 * v, d = -a;
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const double shift = -b / 3.0;
    std::vector<double> roots;
    const double disc = 4.0 * p * p * p + 27.0 * q * q;
    if ((disc < 0 || force_three) && p < 0) {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        const double th = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) roots.push_back(shift + m * std::cos(th - 2.0 * std::numbers::pi * k / 3.0));
    } else {
        const double sq = std::sqrt(std::max(disc / 108.0, 0.0));
        const double t = std::cbrt(-q / 2.0 + sq) + std::cbrt(-q / 2.0 - sq);
        roots.push_back(shift + t);
    }
    for (double& r : roots) {
        const double fr = ((r - a) * r + c) * r - a;
        const double dfr = (3.0 * r - 2.0 * a) * r + c;
        if (std::abs(dfr) > 1e-6 * (1.0 + std::abs(c))) r -= fr / dfr;
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

}  // namespace

double NullclineBranches::eval(double v, Branch b) const {
    if (!in_domain(v, b)) {
        std::ostringstream msg;
        msg << "branch " << branch_name(b) << " undefined at v=" << v << "; valid interval ";
        if (b == Branch::Minus) msg << "[" << v_lo << ", inf)";
        if (b == Branch::Zero) msg << "(" << v_lo << ", " << v_hi << ")";
        if (b == Branch::Plus) msg << "(0, " << v_hi << "]";
        throw RegimeError(msg.str());
    }
    if (b == Branch::Minus && v == v_lo) return u_lo;
    if (b == Branch::Plus && v == v_hi) return u_hi;
    const bool three = v > v_lo && v < v_hi;
    const auto r = nullcline_roots(a, v, three);
    if (r.size() == 3) {
        return b == Branch::Minus ? r[0] : (b == Branch::Zero ? r[1] : r[2]);
    }
    return r[0];
}

NullclineBranches fold_points_unchecked(double a) {
    if (!(a * a > 27.0)) throw RegimeError("fold points missing: need a > sqrt(27)");
    auto cubic = [a](double u) { return (2.0 * u - a) * u * u + a; };
    NullclineBranches nb;
    nb.a = a;
    const double um = a / 3.0;
    nb.u_lo = find_root(cubic, 0.0, um, 1e-16);
    nb.u_hi = find_root(cubic, um, a / 2.0, 1e-16);
    nb.v_lo = nb.v_of_u(nb.u_lo);
    nb.v_hi = nb.v_of_u(nb.u_hi);
    return nb;
}

NullclineBranches fold_points(double a) {
    if (!(a > sigmoidal_threshold())) {
        throw RegimeError("non-sigmoidal regime: a=" + std::to_string(a) +
                          " must exceed (5/3)sqrt(15)=" + std::to_string(sigmoidal_threshold()));
    }
    return fold_points_unchecked(a);
}

double branch_eval(double v, Branch b, double a) { return fold_points(a).eval(v, b); }

double outer_field(const NullclineBranches& nb, double v, Branch b) {
    const double u = nb.eval(v, b);
    return u - u * v / (1.0 + u * u);
}

namespace {
double antiderivative_f(double s, double v, double a, double sigma) {
    return (a * s - 0.5 * s * s - 2.0 * v * std::log1p(s * s)) / sigma;
}
}  // namespace

double M_of_v(const NullclineBranches& nb, double v, double sigma) {
    const double hm = nb.eval(v, Branch::Minus);
    const double hp = nb.eval(v, Branch::Plus);
    return antiderivative_f(hp, v, nb.a, sigma) - antiderivative_f(hm, v, nb.a, sigma);
}

double M_prime(const NullclineBranches& nb, double v, double sigma) {
    const double hm = nb.eval(v, Branch::Minus);
    const double hp = nb.eval(v, Branch::Plus);
    return -(2.0 / sigma) * (std::log1p(hp * hp) - std::log1p(hm * hm));
}

VhatResult find_vhat(const NullclineBranches& nb, double sigma) {
    const double m_lo = M_of_v(nb, nb.v_lo, sigma);
    const double m_hi = M_of_v(nb, nb.v_hi, sigma);
    if (!(m_lo > 0 && m_hi < 0)) {
        std::ostringstream msg;
        msg << "M(v) not bracketed: M(v_lo)=" << m_lo << ", M(v_hi)=" << m_hi;
        throw NumericalError(msg.str());
    }
    VhatResult r;
    r.v_hat = find_root([&](double v) { return M_of_v(nb, v, sigma); }, nb.v_lo, nb.v_hi, 1e-16);
    r.h_minus = nb.eval(r.v_hat, Branch::Minus);
    r.h_plus = nb.eval(r.v_hat, Branch::Plus);
    r.M_prime = M_prime(nb, r.v_hat, sigma);
    return r;
}

}  // namespace layerstab
