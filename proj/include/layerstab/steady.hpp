#pragma once

#include <vector>

#include "layerstab/params.hpp"
#include "layerstab/reduced.hpp"

namespace layerstab {

struct CoeffFields {
    std::vector<double> f_u, f_v, g_u, g_v;
};

struct LayeredStateEps {
    double eps = 0;
    double a = 0, sigma = 0, d = 0, ell = 0;
    double x_star = 0;  // layer position of the reduced profile used to build the grid
    std::vector<double> x;
    std::vector<double> u, v;
    double newton_residual = 0;      // max_i |w_i F_i| / mean spacing, inhibitor rows divided by d
    double raw_residual = 0;         // max_i |F_i|
    int newton_iterations = 0;       // at the final continuation step

    int size() const { return static_cast<int>(x.size()); }
};

struct SteadyOptions {
    int nodes = 2001;
    double window = 40.0;     // half-width of the refined window, in units of eps
    double fraction = 0.5;    // share of nodes inside the window
    double tol = 1e-10;
    int max_newton = 60;
    double first_eps = 0.2;
    double min_eps_step = 1e-4;
    bool constant_guess = false;  // start from the constant state instead of the reduced profile
};

// Geometric schedule from opt.first_eps down to target (target only if it is already larger).
std::vector<double> default_eps_schedule(double target, double first = 0.2);

LayeredStateEps solve_layered_eps(const ModelParams& params, const ReducedProfile& profile,
                                  const std::vector<double>& eps_schedule, const SteadyOptions& opt = {});

// Convenience: default schedule ending at params.eps.
LayeredStateEps solve_layered_eps(const ModelParams& params, const ReducedProfile& profile,
                                  const SteadyOptions& opt = {});

// Single Newton solve on a prescribed grid from a prescribed guess.
LayeredStateEps newton_steady(const ModelParams& params, double eps, const std::vector<double>& x,
                              std::vector<double> u, std::vector<double> v, const SteadyOptions& opt);

CoeffFields linearize_coeffs(const LayeredStateEps& s);

}  // namespace layerstab
