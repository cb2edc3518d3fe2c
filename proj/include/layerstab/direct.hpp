#pragma once

#include <string>
#include <vector>

#include "layerstab/numerics.hpp"
#include "layerstab/params.hpp"
#include "layerstab/steady.hpp"

namespace layerstab {

enum class SystemKind { Decoupled2, Coupled4, Coupled6Delayed };
enum class Mode { Symmetric, Antisymmetric };

std::string system_name(SystemKind s);
SystemKind parse_system(const std::string& s);

// Linearisation about the (duplicated) layered state, one mode of the split:
//   eps^2 w'' + (f_u + eps k1 c_w) w + s eps k1 U + f_v z = eps tau lam w
//   d z'' + g_u w + (g_v + k2 c_z) z = lam z
//   alpha (w - U) = lam U                      (delayed only)
// with (c_w, c_z, s) = (0, 0, -) decoupled, (-1 -/+ 1, 0/-2, -) coupled and (-1, 0/-2, +1/-1) delayed,
// the first/second entry belonging to the symmetric/antisymmetric mode.
struct LinearOperator {
    int n = 0, fields = 2;
    BandMatrix<double> A;
    std::vector<double> mass;  // diagonal
    int size() const { return n * fields; }
};

LinearOperator assemble_linear(SystemKind system, Mode mode, const ModelParams& params, const LayeredStateEps& state);

struct DirectOptions {
    std::vector<cdouble> shifts;  // empty: automatic
    int krylov = 60;
    int restarts = 12;
    double tol = 1e-10;
    bool dense = false;           // full dense eigen-decomposition (small grids only)
};

// Rightmost eigenvalues of A x = lam M x, sorted by descending real part.
std::vector<cdouble> eigs_rightmost(const LinearOperator& op, int n_rightmost, const DirectOptions& opt = {});
std::vector<cdouble> eigs_dense(const LinearOperator& op);

// Union over the modes of the split (decoupled: the single 2-field problem).
std::vector<cdouble> direct_eigs(SystemKind system, const ModelParams& params, const LayeredStateEps& state,
                                 int n_rightmost, const DirectOptions& opt = {});
std::vector<cdouble> direct_eigs_mode(SystemKind system, Mode mode, const ModelParams& params,
                                      const LayeredStateEps& state, int n_rightmost, const DirectOptions& opt = {});

// Eigenvector of the eigenvalue nearest `lam` (w, z[, U] interleaved per node).
std::vector<cdouble> eigenvector_near(const LinearOperator& op, cdouble lam);

// Real part of the rightmost eigenvalue of one mode, as a function of a named parameter (tau, k1, k2, alpha).
double rightmost_real(SystemKind system, Mode mode, const ModelParams& params, const LayeredStateEps& state,
                      const DirectOptions& opt = {});

struct ThresholdResult {
    double value = 0;
    double lo = 0, hi = 0;
    cdouble eigenvalue;  // rightmost eigenvalue at the threshold
    int evaluations = 0;
};

// Root of rightmost_real in the named parameter on [lo, hi] (the bracket must straddle a sign change).
ThresholdResult eig_threshold(SystemKind system, Mode mode, const std::string& param, double lo, double hi,
                              const ModelParams& base, const LayeredStateEps& state, double rel_tol = 1e-6,
                              const DirectOptions& opt = {});

// Mutable reference to a named ModelParams field.
double& param_ref(ModelParams& p, const std::string& name);

}  // namespace layerstab
