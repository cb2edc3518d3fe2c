#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "layerstab/direct.hpp"
#include "layerstab/params.hpp"
#include "layerstab/steady.hpp"

namespace layerstab {

enum class Scheme { BDF2, Strang };
enum class Perturbation { Eigenfunction, Bump };
enum class Verdict { Decay, Growth, SustainedOscillation, Inconclusive };

std::string verdict_name(Verdict v);

struct SimConfig {
    SystemKind system = SystemKind::Coupled4;
    ModelParams params;
    double dt = 0;             // 0: default min(h/2, eps tau sigma / 4) for Strang, 0.02 * t_end / 100 bounded for BDF2
    double t_end = 100;
    Mode mode = Mode::Antisymmetric;
    Perturbation perturbation = Perturbation::Eigenfunction;
    double amplitude = 1e-6;
    double noise = 0;          // extra uniform noise amplitude, drawn from the seeded generator
    std::uint64_t seed = 1;
    int stride = 10;           // record every stride steps
    int snapshot_stride = 0;   // 0: no field snapshots
    Scheme scheme = Scheme::BDF2;
    double window_fraction = 0.15;  // share of the run used for the initial/final amplitude windows
    // Optional source term: forcing(t, x, field, reactor) added to the right-hand side.
    std::function<double(double, double, int, int)> forcing;
};

// Fields per node, interleaved: u1 v1 [u2 v2 [U1 U2]].
struct SimState {
    int n = 0, fields = 2;
    std::vector<double> y;
    double& u(int r, int i) { return y[static_cast<size_t>(i) * fields + 2 * r]; }
    double& v(int r, int i) { return y[static_cast<size_t>(i) * fields + 2 * r + 1]; }
    double& U(int r, int i) { return y[static_cast<size_t>(i) * fields + 4 + r]; }
    double u(int r, int i) const { return y[static_cast<size_t>(i) * fields + 2 * r]; }
    double v(int r, int i) const { return y[static_cast<size_t>(i) * fields + 2 * r + 1]; }
    double U(int r, int i) const { return y[static_cast<size_t>(i) * fields + 4 + r]; }
    int reactors() const { return fields == 2 ? 1 : 2; }
};

struct ModeSplit {
    std::vector<double> w_s, w_a, z_s, z_a;
};
ModeSplit split_modes(const SimState& s);

struct Snapshot {
    double t = 0;
    std::vector<double> u1, v1, u2, v2;
};

struct DiagnosticsSeries {
    std::vector<double> times, asym_norm, dev_norm;
    int peaks = 0;
    double log_slope = 0;
    double growth_ratio = 0;   // final-window amplitude / initial-window amplitude
    double peak_drift = 0;
    bool oscillatory = false;
    Verdict verdict = Verdict::Inconclusive;
    const std::vector<double>& observable(SystemKind s) const { return s == SystemKind::Decoupled2 ? dev_norm : asym_norm; }
};

struct SimResult {
    DiagnosticsSeries series;
    SimState final_state;
    std::vector<Snapshot> snapshots;
    std::vector<double> x;
    double dt = 0;
    int steps = 0, dt_halvings = 0;
};

SimState symmetric_state(SystemKind system, const LayeredStateEps& base);
SimState initial_state(const SimConfig& cfg, const LayeredStateEps& base);

// Time derivative of the full system (without forcing).
void sim_rhs(const SimConfig& cfg, const std::vector<double>& x, const SimState& s, std::vector<double>& out);

SimResult simulate(const SimConfig& cfg, const LayeredStateEps& base);
SimResult simulate_from(const SimConfig& cfg, const LayeredStateEps& base, const SimState& start);

// Verdict rules as a pure function of an observable series.
void classify_series(DiagnosticsSeries& d, const std::vector<double>& obs, double window_fraction);

struct SimThreshold {
    double value = 0;
    double lo = 0, hi = 0;
    Verdict verdict_lo = Verdict::Inconclusive, verdict_hi = Verdict::Inconclusive;
    bool resolved = false;   // false: an inconclusive probe stopped the bisection
    int runs = 0;
};

// Bisection on the simulation verdict in a named parameter (unstable/stable verdicts must differ at the ends).
SimThreshold sim_threshold(const SimConfig& cfg, const LayeredStateEps& base, const std::string& param, double lo,
                           double hi, double rel_tol = 1e-3, int max_runs = 24);

}  // namespace layerstab
