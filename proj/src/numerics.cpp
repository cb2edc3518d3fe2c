#include "layerstab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "layerstab/params.hpp"

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>


namespace layerstab {

template <typename T>
std::vector<T> BandMatrix<T>::multiply(const std::vector<T>& x) const {
    std::vector<T> y(n_, T(0));
    for (int j = 0; j < n_; ++j) {
        const int i0 = std::max(0, j - ku_);
        const int i1 = std::min(n_ - 1, j + kl_);
        for (int i = i0; i <= i1; ++i) y[i] += (*this)(i, j) * x[j];
    }
    return y;
}

template class BandMatrix<double>;
template class BandMatrix<cdouble>;

namespace {

template <typename T>
double band_one_norm(const BandMatrix<T>& a) {
    double best = 0.0;
    for (int j = 0; j < a.n(); ++j) {
        double s = 0.0;
        const int i0 = std::max(0, j - a.ku());
        const int i1 = std::min(a.n() - 1, j + a.kl());
        for (int i = i0; i <= i1; ++i) s += std::abs(a(i, j));
        best = std::max(best, s);
    }
    return best;
}

}  // namespace

template <>
BandLU<double>::BandLU(BandMatrix<double> a) : lu_(std::move(a)), ipiv_(lu_.n()) {
    anorm_ = band_one_norm(lu_);
    const int n = lu_.n();
    const int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, lu_.kl(), lu_.ku(), lu_.data(), lu_.ldab(), ipiv_.data());
    if (info > 0) throw NumericalError("banded LU: exactly singular pivot at row " + std::to_string(info));
    if (info < 0) throw NumericalError("banded LU: invalid argument");
}

template <>
double BandLU<double>::rcond() const {
    if (rcond_ < 0) {
        const int info = LAPACKE_dgbcon(LAPACK_COL_MAJOR, '1', lu_.n(), lu_.kl(), lu_.ku(), lu_.data(), lu_.ldab(),
                                         ipiv_.data(), anorm_, &rcond_);
        if (info != 0) rcond_ = 0.0;
    }
    return rcond_;
}

template <>
void BandLU<double>::solve(std::vector<double>& rhs) const {
    const int n = lu_.n();
    const int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, lu_.kl(), lu_.ku(), 1, lu_.data(), lu_.ldab(),
                                    ipiv_.data(), rhs.data(), n);
    if (info != 0) throw NumericalError("banded solve failed");
}

template <>
BandLU<cdouble>::BandLU(BandMatrix<cdouble> a) : lu_(std::move(a)), ipiv_(lu_.n()) {
    anorm_ = band_one_norm(lu_);
    const int n = lu_.n();
    const int info = LAPACKE_zgbtrf(LAPACK_COL_MAJOR, n, n, lu_.kl(), lu_.ku(), lu_.data(), lu_.ldab(), ipiv_.data());
    if (info > 0) throw NumericalError("complex banded LU: exactly singular pivot at row " + std::to_string(info));
    if (info < 0) throw NumericalError("complex banded LU: invalid argument");
}

template <>
double BandLU<cdouble>::rcond() const {
    if (rcond_ < 0) {
        const int info = LAPACKE_zgbcon(LAPACK_COL_MAJOR, '1', lu_.n(), lu_.kl(), lu_.ku(), lu_.data(), lu_.ldab(),
                                         ipiv_.data(), anorm_, &rcond_);
        if (info != 0) rcond_ = 0.0;
    }
    return rcond_;
}

template <>
void BandLU<cdouble>::solve(std::vector<cdouble>& rhs) const {
    const int n = lu_.n();
    const int info = LAPACKE_zgbtrs(LAPACK_COL_MAJOR, 'N', n, lu_.kl(), lu_.ku(), 1, lu_.data(), lu_.ldab(),
                                    ipiv_.data(), rhs.data(), n);
    if (info != 0) throw NumericalError("complex banded solve failed");
}

void solve_tridiagonal(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c,
                       std::vector<double>& d) {
    const size_t n = b.size();
    std::vector<double> cp(n), dp(n);
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for (size_t i = 1; i < n; ++i) {
        const double m = b[i] - a[i] * cp[i - 1];
        cp[i] = (i + 1 < n) ? c[i] / m : 0.0;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    d[n - 1] = dp[n - 1];
    for (size_t i = n - 1; i-- > 0;) d[i] = dp[i] - cp[i] * d[i + 1];
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double rel_tol, int max_iter) {
    const double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) {
        throw NumericalError("root not bracketed on [" + std::to_string(lo) + ", " + std::to_string(hi) +
                             "]: f = " + std::to_string(flo) + ", " + std::to_string(fhi));
    }
    auto tol = [rel_tol](double x, double y) {
        return std::abs(x - y) <= rel_tol * std::max(std::abs(x), std::abs(y)) + 1e-300;
    };
    std::uintmax_t it = static_cast<std::uintmax_t>(max_iter);
    auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, it);
    const double x = 0.5 * (r.first + r.second);
    if (!std::isfinite(x)) throw NumericalError("root finder produced a non-finite value");
    return x;
}

double expand_upper(const std::function<double(double)>& f, double lo, double hi, double factor, int max_steps) {
    const double flo = f(lo);
    for (int k = 0; k < max_steps; ++k) {
        const double fhi = f(hi);
        if ((fhi > 0) != (flo > 0) || fhi == 0.0) return hi;
        hi = lo + (hi - lo) * factor;
    }
    throw NumericalError("bracket expansion failed from " + std::to_string(lo));
}

TridiagEigen tridiag_eigen(const std::vector<double>& diag, const std::vector<double>& off, int il, int iu) {
    const int n = static_cast<int>(diag.size());
    if (il < 0 || iu >= n || il > iu) throw NumericalError("tridiag_eigen: bad index range");
    const int m_req = iu - il + 1;
    std::vector<double> d = diag, e = off;
    e.resize(std::max(n - 1, 1));
    std::vector<double> w(n);
    std::vector<lapack_int> iblock(n), isplit(n);
    lapack_int m = 0, nsplit = 0;
    const double abstol = 2.0 * LAPACKE_dlamch('S');
    int info = LAPACKE_dstebz('I', 'B', n, 0.0, 0.0, il + 1, iu + 1, abstol, d.data(), e.data(), &m, &nsplit,
                              w.data(), iblock.data(), isplit.data());
    if (info != 0 || m != m_req) throw NumericalError("bisection (stebz) failed, info=" + std::to_string(info));
    std::vector<double> z(static_cast<size_t>(n) * m);
    std::vector<lapack_int> ifail(m);
    info = LAPACKE_dstein(LAPACK_COL_MAJOR, n, d.data(), e.data(), m, w.data(), iblock.data(), isplit.data(),
                          z.data(), n, ifail.data());
    if (info != 0) throw NumericalError("inverse iteration (stein) failed, info=" + std::to_string(info));

    std::vector<int> order(m);
    for (int k = 0; k < m; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](int p, int q) { return w[p] < w[q]; });
    TridiagEigen out;
    out.values.reserve(m);
    out.vectors.reserve(m);
    for (int k : order) {
        out.values.push_back(w[k]);
        out.vectors.emplace_back(z.begin() + static_cast<long>(k) * n, z.begin() + static_cast<long>(k + 1) * n);
    }
    return out;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

}  // namespace layerstab
