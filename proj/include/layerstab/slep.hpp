#pragma once

#include <string>
#include <vector>

#include "layerstab/spectral.hpp"
#include "layerstab/sums.hpp"

namespace layerstab {

enum class Region { Gamma1, Gamma2, Gamma3_1, Gamma3_2, Boundary };
std::string region_name(Region r);

struct RegionPoint {
    double k1 = 0, k2 = 0;
    Region label = Region::Boundary;
    double xi_k1 = kInfinite;  // finite only for k1 < rho0*/2
};

struct HopfCrossing {
    double alpha = 0, lambda = 0;
    int multiplicity = 1;
};

struct HopfSolution {
    double alpha_H = 0, lamIH = 0;
    double alpha0 = 0, alpha2 = 0;
    double alpha1 = kInfinite;      // finite only when it exists
    double k2hat_star = kInfinite;  // finite only for k1 < 2 rho0*/3
    std::vector<HopfCrossing> crossings;  // ascending in alpha
    double dlamR_dalpha = 0;
    std::string case_tag;           // "H1", "3.88a", "3.88b", "3.88c"
    bool ordering_holds = true;     // alpha2 < lamIH < alpha_H < alpha0 (checked in 3.88a/3.88b)
    bool lambda_below_alpha2 = false;  // lamIH < alpha2 < alpha_H < alpha0
    double residual = 0;            // |G*(i lamIH, alpha_H)|
    int scan_points = 0;
};

struct Transversality {
    double value = 0;       // d lamR / d alpha at the Hopf point
    double I1 = 0, I2 = 0, denominator = 0;
    double h_bound = 0;     // alpha0/sqrt(3) - 2 k2
    bool gamma0_exceeds_h = false;
};

struct Slep1Report {
    bool passed = true;
    double xhat_margin = 0;       // Xhat(0,0) - rho0*
    double yhat_margin = 0;       // min over samples of tau + k1 alpha/(alpha^2+lam^2) - Yhat(0,lam^2)
    double yhat_over_tau_star = 0;  // max over lam > 0 of Yhat(0,lam^2)/tau*
    int samples = 0;
    std::vector<std::string> violations;
};

struct Prop31Report {
    bool passed = true;
    int points = 0;
    int sign_failures = 0;
    double worst_dX_dI2 = -kInfinite, worst_dY_dI2 = -kInfinite, worst_dY_dR = -kInfinite;  // max (should be < 0)
    double identity_error = 0;   // max relative |dX/dlamR(0,0,k2) + Y(0,0,k2)| / Y
    double shift_identity_error = 0;
    double x000_minus_rho = 0;
    double max_y_over_tau_star = 0;  // off the origin, should be < 1
    double limit_k2 = 0, limit_I2 = 0;  // max(X,Y ratio) at large k2 / large lamI^2
    std::vector<std::string> failures;
};

class SlepModel {
public:
    SlepModel(const SlepConstants& constants, double tau);

    double X(double lamR, double lamI2, double k2) const { return sums_.X(lamR, lamI2, k2); }
    double Y(double lamR, double lamI2, double k2) const { return sums_.Y(lamR, lamI2, k2); }
    const SpectralSums& sums() const { return sums_; }
    double rho0() const { return rho0_; }
    double tau() const { return tau_; }
    double tau_star() const { return tau_star_; }
    double mu_star() const { return mu_star_; }
    double gamma0() const { return sums_.gamma0(); }

    double turing_curve_xi(double k1) const;
    RegionPoint classify(double k1, double k2) const;

    double alpha0(double k1, double k2) const;
    double alpha1(double k1, double k2) const;
    double alpha2(double k1, double k2) const;
    double k2hat_star(double k1) const;

    double lambda_I1(double alpha, double k1, double k2) const;
    double lambda_I2(double alpha, double k1, double k2) const;

    HopfSolution find_hopf(double k1, double k2) const;
    Transversality transversality(const HopfSolution& h, double k1, double k2) const;
    // d lamR / d alpha by tracking the complex root of G* at alpha_H +- delta.
    double transversality_fd(const HopfSolution& h, double k1, double k2, double rel_delta = 1e-5) const;

    // F*(lam) = rho0 - 2k1 - tau lam - R(lam + 2k2);  G*(lam, alpha) = rho0 - tau lam - k1(alpha/(alpha+lam) + 1) - R(lam + 2k2).
    cdouble F_star(cdouble lam, double k1, double k2) const;
    cdouble dF_star(cdouble lam, double k1, double k2) const;
    cdouble G_star(cdouble lam, double alpha, double k1, double k2) const;
    cdouble dG_star(cdouble lam, double alpha, double k1, double k2) const;
    cdouble dG_dalpha(cdouble lam, double alpha, double k1) const;

    cdouble complex_root_F(cdouble seed, double k1, double k2) const;
    cdouble complex_root_G(cdouble seed, double alpha, double k1, double k2) const;

    Slep1Report slep1_no_crossing_check(double k1, const std::vector<double>& alpha_grid,
                                        const std::vector<double>& lambda_grid = {}) const;

    Prop31Report validate_prop31(int n = 10) const;

private:
    void require_tau() const;
    cdouble newton(cdouble seed, double k2, const std::function<cdouble(cdouble)>& f,
                   const std::function<cdouble(cdouble)>& df) const;
    double hopf_gap(double alpha, double k1, double k2) const;
    std::vector<double> scan_grid(double alpha0, double alpha2, int n) const;

    SpectralSums sums_;
    double rho0_ = 0, tau_ = 0, tau_star_ = 0, mu_star_ = 0;
};

// Root of a function decreasing in t = log(s) on s in (0, inf), starting the bracket search from guess.
double solve_decreasing_log(const std::function<double(double)>& f, double guess, const char* what);

}  // namespace layerstab
