#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace layerstab {

using cdouble = std::complex<double>;

// General band matrix in LAPACK layout, with kl extra rows reserved for pivoting fill.
template <typename T>
class BandMatrix {
public:
    BandMatrix() = default;
    BandMatrix(int n, int kl, int ku) : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1), ab_(static_cast<size_t>(ldab_) * n, T(0)) {}

    int n() const { return n_; }
    int kl() const { return kl_; }
    int ku() const { return ku_; }
    int ldab() const { return ldab_; }

    T& operator()(int i, int j) { return ab_[static_cast<size_t>(j) * ldab_ + (kl_ + ku_ + i - j)]; }
    T operator()(int i, int j) const { return ab_[static_cast<size_t>(j) * ldab_ + (kl_ + ku_ + i - j)]; }
    bool in_band(int i, int j) const { return i - j <= kl_ && j - i <= ku_; }
    void add(int i, int j, T v) { (*this)(i, j) += v; }

    // y = A x
    std::vector<T> multiply(const std::vector<T>& x) const;

    T* data() { return ab_.data(); }
    const T* data() const { return ab_.data(); }

private:
    int n_ = 0, kl_ = 0, ku_ = 0, ldab_ = 1;
    std::vector<T> ab_;
};

// LU factorization with partial pivoting (LAPACK gbtrf/gbtrs).
template <typename T>
class BandLU {
public:
    explicit BandLU(BandMatrix<T> a);
    void solve(std::vector<T>& rhs) const;
    // Reciprocal condition estimate in the 1-norm (computed on first request).
    double rcond() const;

private:
    BandMatrix<T> lu_;
    std::vector<int> ipiv_;
    double anorm_ = 0.0;
    mutable double rcond_ = -1.0;
};

// Thomas algorithm; a sub, b diag, c super. Overwrites d with the solution.
void solve_tridiagonal(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c,
                       std::vector<double>& d);

// Bracketed root (TOMS 748). Throws NumericalError if f(lo), f(hi) share a sign.
double find_root(const std::function<double(double)>& f, double lo, double hi, double rel_tol = 1e-14,
                 int max_iter = 200);

// Expands hi geometrically until f changes sign relative to f(lo); returns the new hi.
double expand_upper(const std::function<double(double)>& f, double lo, double hi, double factor = 2.0,
                    int max_steps = 200);

// Symmetric tridiagonal eigenpairs for indices [il, iu] (0-based, ascending) via bisection and inverse iteration.
struct TridiagEigen {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;
};
TridiagEigen tridiag_eigen(const std::vector<double>& diag, const std::vector<double>& off, int il, int iu);

// Composite trapezoid on a nonuniform grid.
double trapezoid(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace layerstab
