#pragma once

#include <utility>

namespace layerstab {

struct KineticsEval {
    double f = 0.0;
    double g = 0.0;
    double f_u = 0.0;
    double f_v = 0.0;
    double g_u = 0.0;
    double g_v = 0.0;

    double det() const { return f_u * g_v - f_v * g_u; }
};

// f = (a - u - 4uv/(1+u^2))/sigma,  g = u - uv/(1+u^2).  Requires u > 0.
KineticsEval kinetics(double u, double v, double a, double sigma);

// Closed form of the Jacobian determinant; independent of v.
double kinetics_det(double u, double sigma);

std::pair<double, double> constant_steady_state(double a);

enum class Branch { Minus, Zero, Plus };

const char* branch_name(Branch b);

struct NullclineBranches {
    double a = 0.0;
    double u_lo = 0.0;
    double u_hi = 0.0;
    double v_lo = 0.0;
    double v_hi = 0.0;

    // v(u) along f = 0.
    double v_of_u(double u) const;
    // Throws RegimeError outside the branch domain.
    double eval(double v, Branch b) const;
    bool in_domain(double v, Branch b) const;
};

// Fold roots of 2u^3 - a u^2 + a = 0. Rejects a <= (5/3)sqrt(15).
NullclineBranches fold_points(double a);
// Same computation guarded only by the existence of two positive roots (a > sqrt(27)).
NullclineBranches fold_points_unchecked(double a);

double branch_eval(double v, Branch b, double a);

// G_i(v) = g(h_i(v), v) along an outer branch.
double outer_field(const NullclineBranches& nb, double v, Branch b);

// M(v) = int_{h-(v)}^{h+(v)} f(s, v) ds from the closed antiderivative.
double M_of_v(const NullclineBranches& nb, double v, double sigma);
double M_prime(const NullclineBranches& nb, double v, double sigma);

struct VhatResult {
    double v_hat = 0.0;
    double h_minus = 0.0;
    double h_plus = 0.0;
    double M_prime = 0.0;
};

VhatResult find_vhat(const NullclineBranches& nb, double sigma);

}  // namespace layerstab
