#pragma once

#include <vector>

#include "layerstab/numerics.hpp"

namespace layerstab {

struct SpectralBasis;

// Resolvent-type sums C * sum_n psi_n(x*)^2 / (gamma_n + z)^k over the full spectrum: computed modes plus a tail
// taken from the constant-coefficient Neumann Green's function with potential q_mean.
class SpectralSums {
public:
    SpectralSums(const SpectralBasis& basis, double C);

    // X = C sum (g+a) psi^2 / ((g+a)^2 + b2),  Y = C sum psi^2 / ((g+a)^2 + b2),  a = lamR + 2 k2, b2 = lamI^2.
    double X(double lamR, double lamI2, double k2) const;
    double Y(double lamR, double lamI2, double k2) const;

    // C sum psi^2 / (gamma + z) and C sum psi^2 / (gamma + z)^2.
    cdouble R(cdouble z) const;
    cdouble R2(cdouble z) const;

    double gamma0() const { return gamma_.front(); }
    double C() const { return C_; }
    int modes() const { return static_cast<int>(gamma_.size()); }
    // Relative size of the analytic tail in Y(0,0,0), and the mismatch between computed and model modes near
    // the truncation index (a proxy for the tail's relative error).
    double tail_fraction() const;
    double model_mismatch() const { return mismatch_; }

    // Constant-coefficient Green's function at (x*, x*) and its z-derivative.
    cdouble green(cdouble z) const;
    cdouble green_prime(cdouble z) const;

private:
    void check(double re_shift) const;
    cdouble tail1(cdouble z) const;
    cdouble tail2(cdouble z) const;
    double tail_y(double a, double b) const;

    std::vector<double> gamma_, psi2_;
    std::vector<double> model_gamma_, model_psi2_;
    double C_ = 0, d_ = 0, ell_ = 0, xs_ = 0, qbar_ = 0, mismatch_ = 0;
};

}  // namespace layerstab
