#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace layerstab {

// Regime/domain violations map to exit code 2, numerical failures to 3.
class RegimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

// Threshold (5/3)sqrt(15) for a; below it the constant state is not activator-inhibitor.
inline double sigmoidal_threshold() { return 5.0 / 3.0 * std::sqrt(15.0); }

struct OriginalParams {
    double d1 = 0.0;
    double d2 = 0.0;
    double a = 0.0;
    double b = 0.0;
    double sigma = 0.0;
    double k1_orig = 0.0;
    double k2 = 0.0;
};

struct ModelParams {
    double a = 10.0;
    double sigma = 8.0;
    double eps = 0.02;
    double tau = 1.2;
    double d = 64.0;
    double k1 = 0.0;
    double k2 = 0.0;
    double alpha = kInfinite;
    double ell = 8.0;

    bool delayed() const { return std::isfinite(alpha); }
    // Throws RegimeError naming the first violated condition.
    void validate() const;
};

struct ReducedParams {
    ModelParams params;
    double time_scale = 1.0;  // t_original = t_reduced / time_scale
};

ReducedParams reduce_parameters(const OriginalParams& p);

}  // namespace layerstab
