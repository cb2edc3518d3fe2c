#pragma once

#include <atomic>
#include <functional>
#include <string>
#include <vector>

#include "layerstab/reduced.hpp"
#include "layerstab/steady.hpp"

namespace layerstab {

// Eigenpairs of -d u'' + q u on (0, ell), Neumann, with q possibly discontinuous at a node.
struct SpectralBasis {
    double d = 0, ell = 0, x_star = 0;
    int star_index = 0;
    std::vector<double> gamma;          // ascending
    std::vector<double> psi_at_xstar;   // L2-normalised, sign fixed by psi(0) > 0
    double q_mean = 0;                  // (1/ell) int q, the O(1) shift of the asymptotic law
    double q_min = 0, q_max = 0;
    std::vector<double> x;                   // discretisation grid
    std::vector<std::vector<double>> psi;    // eigenfunctions on x, kept only on request
    int modes() const { return static_cast<int>(gamma.size()); }
};

struct SlowOptions {
    int nodes = 4097;
    int modes = 400;
    bool keep_vectors = false;
};

// Generic Sturm-Liouville solve. q_left[i]/q_right[i] are the potential at node i seen from the cell on its
// left/right (they differ only at a discontinuity).
SpectralBasis solve_sturm_liouville(const std::vector<double>& x, double d, const std::vector<double>& q_left,
                                    const std::vector<double>& q_right, int modes, int star_index,
                                    bool keep_vectors);

// Potential (f_u g_v - f_v g_u)/(-f_u) along the reduced profile on the given side.
double slow_potential(const ReducedProfile& p, double x, Branch side);

SpectralBasis eig_slow(const ReducedProfile& profile, const SlowOptions& opt = {});

struct FastSpectrum {
    double eps = 0;
    double mu0 = 0, mu1 = 0;
    std::vector<double> mu;            // descending, requested count
    std::vector<double> phi0;          // on the state grid, trapezoid-normalised, positive peak
    double rho = 0;                    // mu0 / eps
    double concentration_C = 0;        // 90% of int phi0^2 lies within |x - x*| <= C eps
};

FastSpectrum eig_fast(const LayeredStateEps& state, int modes = 4);

struct RhoExtrapolation {
    double value = 0;
    double error = 0;
    bool reliable = true;
    std::vector<std::vector<double>> table;  // Neville table, row k uses samples 0..k
};

// Polynomial extrapolation of rho(eps) to eps = 0.
RhoExtrapolation extrapolate_rho0(const std::vector<double>& eps, const std::vector<double>& rho);

struct DeltaConstants {
    double c1 = 0, c2 = 0;
    double c1_error = 0, c2_error = 0;
    std::vector<std::vector<double>> c1_by_test;   // [test][eps]
    std::vector<std::vector<double>> c2_by_test;
    std::vector<double> c1_extrapolated_by_test, c2_extrapolated_by_test;
};

using TestFunction = std::function<double(double)>;

DeltaConstants delta_limit_constants(const std::vector<LayeredStateEps>& states,
                                     const std::vector<FastSpectrum>& fast, double x_star,
                                     const std::vector<TestFunction>& tests);

struct SlepConstants {
    double a = 0, sigma = 0, d = 0, ell = 0;
    double rho0_star = 0, rho0_error = 0;
    double kappa_star = 0;
    double c1_star = 0, c2_star = 0, c1c2 = 0;
    double tau_star = 0;
    double mu_star = 0;      // half the infimum of the slow potential (> 0)
    double fast_gap = 0;     // half the largest mu1 over the sampled eps (< 0)
    double v_hat = 0, h_minus = 0, h_plus = 0, M_prime = 0, x_star = 0, int_g_left = 0;
    std::vector<double> eps_samples, rho_samples, mu1_samples;
    DeltaConstants delta;
    SpectralBasis basis;
};

struct ConstantsOptions {
    std::vector<double> eps = {0.08, 0.04, 0.02};
    SteadyOptions steady;
    SlowOptions slow;
    ReducedOptions reduced;
};

SlepConstants build_constants(const ModelParams& params, const ConstantsOptions& opt = {});
SlepConstants build_constants(const ModelParams& params, const ReducedProfile& profile, const ConstantsOptions& opt);

// c2/kappa from the closed form: h+ - h- + (h-/(1+h-^2) - h+/(1+h+^2)) v_hat.
double c2_over_kappa(double v_hat, double h_minus, double h_plus);

// Count of eigen-solves performed in this process (cache bookkeeping).
long eigen_solve_count();
void count_eigen_solve();

}  // namespace layerstab
