#include "layerstab/sums.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "layerstab/params.hpp"
#include "layerstab/spectral.hpp"

namespace layerstab {

SpectralSums::SpectralSums(const SpectralBasis& b, double C)
    : gamma_(b.gamma), C_(C), d_(b.d), ell_(b.ell), xs_(b.x_star), qbar_(b.q_mean) {
    const int n = b.modes();
    psi2_.resize(n);
    model_gamma_.resize(n);
    model_psi2_.resize(n);
    for (int k = 0; k < n; ++k) {
        psi2_[k] = b.psi_at_xstar[k] * b.psi_at_xstar[k];
        const double kk = k * std::numbers::pi / ell_;
        model_gamma_[k] = qbar_ + d_ * kk * kk;
        const double c = std::cos(kk * xs_);
        model_psi2_[k] = k == 0 ? 1.0 / ell_ : 2.0 / ell_ * c * c;
    }
    // Mismatch over the upper half of the computed modes, weighted like the Y summand.
    double num = 0, den = 0;
    for (int k = n / 2; k < n; ++k) {
        const double t = psi2_[k] / (gamma_[k] * gamma_[k]);
        const double m = model_psi2_[k] / (model_gamma_[k] * model_gamma_[k]);
        num += std::abs(t - m);
        den += std::abs(t);
    }
    mismatch_ = den > 0 ? num / den : 0.0;
}

void SpectralSums::check(double re_shift) const {
    if (!(gamma_.front() + re_shift > 0)) {
        std::ostringstream msg;
        msg << "resolvent violation: gamma0 + shift = " << gamma_.front() + re_shift << " <= 0";
        throw RegimeError(msg.str());
    }
}

cdouble SpectralSums::green(cdouble z) const {
    const cdouble k = std::sqrt((qbar_ + z) / d_);
    const cdouble e1 = std::exp(-2.0 * k * xs_), e2 = std::exp(-2.0 * k * (ell_ - xs_)), e3 = std::exp(-2.0 * k * ell_);
    return (1.0 + e1) * (1.0 + e2) / (2.0 * d_ * k * (1.0 - e3));
}

cdouble SpectralSums::green_prime(cdouble z) const {
    const cdouble k = std::sqrt((qbar_ + z) / d_);
    const cdouble e1 = std::exp(-2.0 * k * xs_), e2 = std::exp(-2.0 * k * (ell_ - xs_)), e3 = std::exp(-2.0 * k * ell_);
    const cdouble g = (1.0 + e1) * (1.0 + e2) / (2.0 * d_ * k * (1.0 - e3));
    const cdouble dlog = -2.0 * xs_ * e1 / (1.0 + e1) - 2.0 * (ell_ - xs_) * e2 / (1.0 + e2) - 1.0 / k -
                         2.0 * ell_ * e3 / (1.0 - e3);
    return g * dlog / (2.0 * d_ * k);
}

cdouble SpectralSums::tail1(cdouble z) const {
    cdouble partial = 0;
    for (size_t k = 0; k < model_gamma_.size(); ++k) partial += model_psi2_[k] / (model_gamma_[k] + z);
    return green(z) - partial;
}

cdouble SpectralSums::tail2(cdouble z) const {
    cdouble partial = 0;
    for (size_t k = 0; k < model_gamma_.size(); ++k) {
        const cdouble r = 1.0 / (model_gamma_[k] + z);
        partial += model_psi2_[k] * r * r;
    }
    return -green_prime(z) - partial;
}

// Tail of sum psi^2 / ((g+a)^2 + b^2). Small b uses the b = 0 limit (relative error (b/gamma_N)^2).
double SpectralSums::tail_y(double a, double b) const {
    const double gN = model_gamma_.back() + a;
    if (b > 1e-4 * std::abs(gN)) return -tail1(cdouble(a, b)).imag() / b;
    return tail2(cdouble(a, 0.0)).real();
}

double SpectralSums::X(double lamR, double lamI2, double k2) const {
    const double a = lamR + 2.0 * k2;
    check(a);
    double s = 0;
    for (size_t k = 0; k < gamma_.size(); ++k) {
        const double g = gamma_[k] + a;
        s += psi2_[k] * g / (g * g + lamI2);
    }
    const double b = std::sqrt(std::max(lamI2, 0.0));
    return C_ * (s + tail1(cdouble(a, b)).real());
}

double SpectralSums::Y(double lamR, double lamI2, double k2) const {
    const double a = lamR + 2.0 * k2;
    check(a);
    double s = 0;
    for (size_t k = 0; k < gamma_.size(); ++k) {
        const double g = gamma_[k] + a;
        s += psi2_[k] / (g * g + lamI2);
    }
    return C_ * (s + tail_y(a, std::sqrt(std::max(lamI2, 0.0))));
}

cdouble SpectralSums::R(cdouble z) const {
    check(z.real());
    cdouble s = 0;
    for (size_t k = 0; k < gamma_.size(); ++k) s += psi2_[k] / (gamma_[k] + z);
    return C_ * (s + tail1(z));
}

cdouble SpectralSums::R2(cdouble z) const {
    check(z.real());
    cdouble s = 0;
    for (size_t k = 0; k < gamma_.size(); ++k) {
        const cdouble r = 1.0 / (gamma_[k] + z);
        s += psi2_[k] * r * r;
    }
    return C_ * (s + tail2(z));
}

double SpectralSums::tail_fraction() const {
    const double t = tail2(cdouble(0, 0)).real();
    double s = 0;
    for (size_t k = 0; k < gamma_.size(); ++k) s += psi2_[k] / (gamma_[k] * gamma_[k]);
    return std::abs(t) / (s + t);
}

}  // namespace layerstab
