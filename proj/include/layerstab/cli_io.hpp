#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "layerstab/params.hpp"

namespace layerstab {

inline constexpr const char* kArtifactName = "layerstab";
inline constexpr const char* kArtifactVersion = "1.0.0";

// Usage errors (bad flags, unknown config keys, missing parameters); exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown after --help output has been printed.
struct HelpShown {};

struct Axis {
    std::string name;
    double min = 0, max = 0;
    int count = 1;
    bool log = false;
    std::vector<double> values() const;
};

// "name:min:max:count" with an optional ":log" suffix.
Axis parse_axis(const std::string& spec);

struct SweepJob {
    std::vector<Axis> axes;
    std::string task = "classify";  // classify | hopf
    int threads = 1;
};

struct SweepRow {
    std::vector<double> point;
    std::vector<std::string> values;
    std::string error;
};

// Row-major enumeration of the axes (first axis slowest).
std::vector<std::vector<double>> sweep_points(const std::vector<Axis>& axes);

// Dynamic-scheduled parallel map; results are stored by point index so the order never depends on threads.
// A throwing task fills the row's error field and leaves values empty.
std::vector<SweepRow> parallel_map(const std::vector<std::vector<double>>& points, int threads,
                                   const std::function<std::vector<std::string>(const std::vector<double>&)>& task);

struct RunConfig {
    std::string command;
    std::string target;  // validate target
    ModelParams params;
    // Every result-affecting option with its final value, in declaration order.
    std::vector<std::pair<std::string, std::string>> resolved;

    std::string out;     // empty: stdout
    std::string format;  // empty: the command's own default
    std::string cache_dir;
    bool no_cache = false;
    int threads = 1;
    std::uint64_t seed = 1;

    // numerics
    int modes = 400;
    int slow_nodes = 4097;
    int steady_nodes = 2001;
    int samples = 200;

    // turing-curve / sweep / hopf
    double k1_min = 0, k1_max = 0;  // 0: automatic, fractions of rho0*
    std::vector<std::string> axes;
    std::string task = "classify";
    std::string curve_out, lambda_out;
    int alpha_count = 200;

    // simulate / scan
    std::string system = "COUPLED4";
    std::string mode = "anti";
    std::string scheme = "bdf2";
    std::string perturbation = "eigen";
    double t_end = 100, dt = 0, amplitude = 1e-6, noise = 0;
    int stride = 10, snapshot_stride = 0;
    std::string snapshots;
    std::string param = "k2";
    double pmin = 0, pmax = 0;
    int count = 5;
    bool bisect = false;
};

// Parses argv; `--config <file>` supplies `key = value` lines that command-line flags override.
RunConfig parse_cli(int argc, const char* const* argv);

// Executes a parsed configuration; returns the process exit code. Diagnostics go to `err`.
int run(const RunConfig& cfg, std::ostream& err);

// parse_cli + run with exceptions mapped to exit codes (1 usage, 2 regime, 3 numerical).
int main_entry(int argc, const char* const* argv, std::ostream& err);

// Comment header shared by CSV outputs.
std::string csv_header(const RunConfig& cfg, const std::vector<std::pair<std::string, std::string>>& results = {});

}  // namespace layerstab
