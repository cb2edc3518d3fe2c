#pragma once

#include <utility>
#include <vector>

#include "layerstab/kinetics.hpp"
#include "layerstab/params.hpp"

namespace layerstab {

struct ReducedOptions {
    double tol = 1e-11;      // Newton tolerance on the matching residuals
    int grid_nodes = 2049;   // storage grid (x* is a node)
    int scan_points = 48;    // coarse seed scan over V(0)
};

struct ReducedProfile {
    double a = 0, sigma = 0, d = 0, ell = 0;
    NullclineBranches branches;
    double v_hat = 0;
    double h_minus = 0;   // h-(v_hat)
    double h_plus = 0;    // h+(v_hat)
    double M_prime = 0;   // M'(v_hat)
    double x_star = 0;
    int star_index = 0;   // grid index of x*
    double V0 = 0;        // V*(0)
    double Vell = 0;      // V*(ell)
    double slope_left = 0;   // V'(x*-)
    double slope_right = 0;  // V'(x*+)
    double slope_mismatch = 0;
    int newton_iterations = 0;

    std::vector<double> x;
    std::vector<double> V;
    std::vector<double> dV;

    // (U, V) at x; at x == x* U is the left limit (use sample_jump for both sides).
    std::pair<double, double> sample(double xq) const;
    std::pair<double, double> sample_jump() const { return {h_minus, h_plus}; }
    double V_at(double xq) const;
    double dV_at(double xq) const;
    // U on a given side of the layer.
    double U_at(double xq, Branch side) const;
};

ReducedProfile solve_reduced(const ModelParams& params, const ReducedOptions& opt = {});

// int_0^{x*} g(U*, V*) dx by the trapezoid rule on the stored grid.
double integral_g_left(const ReducedProfile& p);

// Energy defect max |d/2 V'^2 + int_{V(end)}^{V} G_i| over each piece, relative to d/2 V'(x*)^2.
double energy_defect(const ReducedProfile& p);

}  // namespace layerstab
