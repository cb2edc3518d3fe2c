#include "layerstab/grid.hpp"

#include <algorithm>
#include <cmath>

#include "layerstab/numerics.hpp"
#include "layerstab/params.hpp"

namespace layerstab {

namespace {

struct Density {
    double xc, w, amp, ell;
    double cum(double x) const { return x + amp * w * (std::tanh((x - xc) / w) - std::tanh(-xc / w)); }
    double inverse(double c) const {
        if (c <= 0) return 0.0;
        if (c >= cum(ell)) return ell;
        return find_root([&](double x) { return cum(x) - c; }, 0.0, ell, 1e-15);
    }
};

}  // namespace

std::vector<double> graded_grid(double ell, double xc, int n, double halfwidth, double fraction, bool center_node) {
    if (n < 4) throw RegimeError("grid needs at least 4 nodes");
    if (!(xc > 0 && xc < ell)) throw RegimeError("grid centre must lie inside (0, ell)");
    Density den{xc, 0.3 * halfwidth, 0.0, ell};
    const double lo = std::max(0.0, xc - halfwidth), hi = std::min(ell, xc + halfwidth);
    auto frac_of = [&](double amp) {
        den.amp = amp;
        return (den.cum(hi) - den.cum(lo)) / den.cum(ell);
    };
    const double base = frac_of(0.0);
    if (fraction > base) {
        double amp_hi = 1.0;
        while (frac_of(amp_hi) < fraction && amp_hi < 1e12) amp_hi *= 4.0;
        den.amp = find_root([&](double amp) { return frac_of(amp) - fraction; }, 0.0, amp_hi, 1e-12);
    }
    const double total = den.cum(ell);
    std::vector<double> x(n);
    if (!center_node) {
        for (int i = 0; i < n; ++i) x[i] = den.inverse(total * i / (n - 1));
    } else {
        const double cc = den.cum(xc);
        int nl = static_cast<int>(std::lround((n - 1) * cc / total));
        nl = std::clamp(nl, 1, n - 2);
        const int nr = n - 1 - nl;
        for (int i = 0; i <= nl; ++i) x[i] = den.inverse(cc * i / nl);
        for (int j = 1; j <= nr; ++j) x[nl + j] = den.inverse(cc + (total - cc) * j / nr);
        x[nl] = xc;
    }
    x.front() = 0.0;
    x.back() = ell;
    return x;
}

std::vector<double> split_uniform_grid(double ell, double xc, int n, int* center_index) {
    int nl = static_cast<int>(std::lround((n - 1) * xc / ell));
    nl = std::clamp(nl, 1, n - 2);
    const int nr = n - 1 - nl;
    std::vector<double> x(n);
    for (int i = 0; i <= nl; ++i) x[i] = xc * i / nl;
    for (int j = 1; j <= nr; ++j) x[nl + j] = xc + (ell - xc) * j / nr;
    x[nl] = xc;
    x.back() = ell;
    if (center_index) *center_index = nl;
    return x;
}

FvLaplacian::FvLaplacian(const std::vector<double>& x) : w(x.size(), 0.0), cond(x.size() - 1) {
    for (size_t i = 0; i + 1 < x.size(); ++i) {
        const double h = x[i + 1] - x[i];
        cond[i] = 1.0 / h;
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
}

double FvLaplacian::apply(const std::vector<double>& u, size_t i) const {
    double flux = 0.0;
    if (i + 1 < w.size()) flux += cond[i] * (u[i + 1] - u[i]);
    if (i > 0) flux -= cond[i - 1] * (u[i] - u[i - 1]);
    return flux / w[i];
}

double interp_linear(const std::vector<double>& x, const std::vector<double>& y, double xq) {
    if (xq <= x.front()) return y.front();
    if (xq >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), xq);
    const size_t j = static_cast<size_t>(it - x.begin());
    const double t = (xq - x[j - 1]) / (x[j] - x[j - 1]);
    return (1.0 - t) * y[j - 1] + t * y[j];
}

}  // namespace layerstab
