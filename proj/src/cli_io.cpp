#include "layerstab/cli_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "layerstab/cache.hpp"
#include "layerstab/direct.hpp"
#include "layerstab/kinetics.hpp"
#include "layerstab/reduced.hpp"
#include "layerstab/simulate.hpp"
#include "layerstab/slep.hpp"
#include "layerstab/spectral.hpp"
#include "layerstab/steady.hpp"

namespace layerstab {

using ojson = nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

// JSON has no infinity; non-finite values become null.
ojson jnum(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson jvec(const std::vector<double>& v) {
    ojson a = ojson::array();
    for (double x : v) a.push_back(jnum(x));
    return a;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_alpha(const std::string& s) {
    std::string t = s;
    std::transform(t.begin(), t.end(), t.begin(), ::tolower);
    if (t == "inf" || t == "infinity") return kInfinite;
    try {
        size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw UsageError("--alpha expects a number or 'inf', got '" + s + "'");
    }
}

Mode parse_mode(const std::string& s) {
    if (s == "anti" || s == "antisymmetric") return Mode::Antisymmetric;
    if (s == "sym" || s == "symmetric") return Mode::Symmetric;
    throw UsageError("--mode expects sym or anti, got '" + s + "'");
}

Scheme parse_scheme(const std::string& s) {
    if (s == "bdf2") return Scheme::BDF2;
    if (s == "strang") return Scheme::Strang;
    throw UsageError("--scheme expects bdf2 or strang, got '" + s + "'");
}

Perturbation parse_perturbation(const std::string& s) {
    if (s == "eigen") return Perturbation::Eigenfunction;
    if (s == "bump") return Perturbation::Bump;
    throw UsageError("--perturbation expects eigen or bump, got '" + s + "'");
}

// Options that do not change any emitted number stay out of the header.
bool in_header(const std::string& name) {
    static const char* skip[] = {"help", "config", "threads", "cache-dir", "no-cache", "out",
                                 "json", "csv",    "curve-out", "lambda-out", "snapshots"};
    return std::none_of(std::begin(skip), std::end(skip), [&](const char* s) { return name == s; });
}

std::string option_key(const CLI::Option* o) {
    std::string n = o->get_name();
    while (!n.empty() && n.front() == '-') n.erase(n.begin());
    return n;
}

std::string option_value(const CLI::Option* o) {
    if (o->count() == 0) return o->get_default_str();
    std::string v;
    for (const auto& r : o->results()) v += (v.empty() ? "" : ",") + r;
    return v;
}

ojson header_json(const RunConfig& cfg) {
    ojson c = ojson::object();
    for (const auto& [k, v] : cfg.resolved) c[k] = v;
    return {{"artifact", kArtifactName}, {"version", kArtifactVersion}, {"command", cfg.command}, {"config", c}};
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericalError("cannot open output file " + path);
    out << content;
}

void emit_json(const RunConfig& cfg, ojson payload, const std::string& path) {
    ojson j;
    j["header"] = header_json(cfg);
    for (auto it = payload.begin(); it != payload.end(); ++it) j[it.key()] = it.value();
    emit(path, j.dump(2) + "\n");
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string s;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) s += ',';
        const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
        if (quote) {
            s += '"';
            for (char c : cells[i]) s += c == '"' ? std::string("\"\"") : std::string(1, c);
            s += '"';
        } else {
            s += cells[i];
        }
    }
    return s + "\n";
}

struct Context {
    const RunConfig& cfg;
    Cache cache;
    std::ostream& err;

    ConstantsOptions constants_options() const {
        ConstantsOptions o;
        o.slow.nodes = cfg.slow_nodes;
        o.slow.modes = cfg.modes;
        o.steady.nodes = cfg.steady_nodes;
        return o;
    }
    SlepConstants constants() { return cached_constants(cache, cfg.params, constants_options()); }
    LayeredStateEps state() {
        SteadyOptions o;
        o.nodes = cfg.steady_nodes;
        return cached_state(cache, cfg.params, o);
    }
};

ojson cell_json(const std::string& c) {
    if (c.empty()) return nullptr;
    char* end = nullptr;
    const double v = std::strtod(c.c_str(), &end);
    if (end && *end == '\0') return jnum(v);
    if (c == "true" || c == "false") return c == "true";
    return c;
}

// Row-oriented output shared by the tabular commands.
void emit_table(const RunConfig& cfg, const std::string& path,
                const std::vector<std::pair<std::string, std::string>>& summary,
                const std::vector<std::string>& columns, const std::vector<std::vector<std::string>>& rows) {
    if (cfg.format == "csv") {
        std::string s = csv_header(cfg, summary) + csv_row(columns);
        for (const auto& r : rows) s += csv_row(r);
        emit(path, s);
        return;
    }
    ojson sum = ojson::object();
    for (const auto& [k, v] : summary) sum[k] = cell_json(v);
    ojson rs = ojson::array();
    for (const auto& r : rows) {
        ojson a = ojson::array();
        for (const auto& c : r) a.push_back(cell_json(c));
        rs.push_back(a);
    }
    emit_json(cfg, {{"summary", sum}, {"columns", columns}, {"rows", rs}}, path);
}

int cmd_nullclines(Context& cx) {
    const auto& p = cx.cfg.params;
    const auto nb = fold_points(p.a);
    const auto vh = find_vhat(nb, p.sigma);
    const int n = std::max(2, cx.cfg.samples);
    std::vector<std::array<double, 4>> rows;
    for (int i = 0; i < n; ++i) {
        const double v = nb.v_lo + (nb.v_hi - nb.v_lo) * i / (n - 1);
        std::array<double, 4> r{v, NAN, NAN, NAN};
        const Branch br[3] = {Branch::Minus, Branch::Zero, Branch::Plus};
        for (int b = 0; b < 3; ++b)
            if (nb.in_domain(v, br[b])) r[b + 1] = nb.eval(v, br[b]);
        rows.push_back(r);
    }
    const std::vector<std::pair<std::string, std::string>> summary = {
        {"u_lo", fmt(nb.u_lo)}, {"u_hi", fmt(nb.u_hi)},       {"v_lo", fmt(nb.v_lo)},
        {"v_hi", fmt(nb.v_hi)}, {"v_hat", fmt(vh.v_hat)},     {"h_minus", fmt(vh.h_minus)},
        {"h_plus", fmt(vh.h_plus)}, {"M_prime", fmt(vh.M_prime)}};
    if (cx.cfg.format == "csv") {
        std::string s = csv_header(cx.cfg, summary) + csv_row({"v", "h_minus", "h_zero", "h_plus"});
        for (const auto& r : rows)
            s += csv_row({fmt(r[0]), std::isnan(r[1]) ? "" : fmt(r[1]), std::isnan(r[2]) ? "" : fmt(r[2]),
                          std::isnan(r[3]) ? "" : fmt(r[3])});
        emit(cx.cfg.out, s);
    } else {
        ojson j = {{"u_lo", nb.u_lo}, {"u_hi", nb.u_hi},       {"v_lo", nb.v_lo},       {"v_hi", nb.v_hi},
                   {"v_hat", vh.v_hat}, {"h_minus", vh.h_minus}, {"h_plus", vh.h_plus}, {"M_prime", vh.M_prime}};
        ojson br = ojson::array();
        for (const auto& r : rows)
            br.push_back({{"v", r[0]}, {"h_minus", jnum(r[1])}, {"h_zero", jnum(r[2])}, {"h_plus", jnum(r[3])}});
        j["branches"] = br;
        emit_json(cx.cfg, j, cx.cfg.out);
    }
    return 0;
}

int cmd_reduced(Context& cx) {
    const auto pr = solve_reduced(cx.cfg.params);
    const size_t k = static_cast<size_t>(pr.star_index);
    std::vector<double> ul, ur;
    for (size_t i = 0; i <= k; ++i) ul.push_back(pr.U_at(pr.x[i], Branch::Minus));
    for (size_t i = k; i < pr.x.size(); ++i) ur.push_back(pr.U_at(pr.x[i], Branch::Plus));
    // the left piece may sit on either outer branch; pick the one matching V at x = 0
    if (pr.sample(pr.x.front()).first != ul.front()) {
        ul.clear();
        ur.clear();
        for (size_t i = 0; i <= k; ++i) ul.push_back(pr.U_at(pr.x[i], Branch::Plus));
        for (size_t i = k; i < pr.x.size(); ++i) ur.push_back(pr.U_at(pr.x[i], Branch::Minus));
    }
    if (cx.cfg.format == "csv") {
        std::string s = csv_header(cx.cfg, {{"x_star", fmt(pr.x_star)},
                                            {"v_hat", fmt(pr.v_hat)},
                                            {"slope_mismatch", fmt(pr.slope_mismatch)}}) +
                        csv_row({"x", "V", "U"});
        for (size_t i = 0; i < pr.x.size(); ++i)
            s += csv_row({fmt(pr.x[i]), fmt(pr.V[i]), fmt(i <= k ? ul[i] : ur[i - k])});
        emit(cx.cfg.out, s);
    } else {
        emit_json(cx.cfg,
                  {{"x_star", pr.x_star},
                   {"v_hat", pr.v_hat},
                   {"grid", jvec(pr.x)},
                   {"V", jvec(pr.V)},
                   {"U_left_of_layer", jvec(ul)},
                   {"U_right_of_layer", jvec(ur)},
                   {"slope_mismatch", pr.slope_mismatch}},
                  cx.cfg.out);
    }
    return 0;
}

int cmd_steady(Context& cx) {
    const auto st = cx.state();
    const auto co = linearize_coeffs(st);
    if (cx.cfg.format == "csv") {
        std::string s = csv_header(cx.cfg, {{"x_star", fmt(st.x_star)},
                                            {"newton_residual", fmt(st.newton_residual)},
                                            {"raw_residual", fmt(st.raw_residual)}}) +
                        csv_row({"x", "u", "v", "f_u", "f_v", "g_u", "g_v"});
        for (int i = 0; i < st.size(); ++i)
            s += csv_row({fmt(st.x[i]), fmt(st.u[i]), fmt(st.v[i]), fmt(co.f_u[i]), fmt(co.f_v[i]), fmt(co.g_u[i]),
                          fmt(co.g_v[i])});
        emit(cx.cfg.out, s);
    } else {
        emit_json(cx.cfg,
                  {{"eps", st.eps},
                   {"x_star", st.x_star},
                   {"newton_residual", st.newton_residual},
                   {"raw_residual", st.raw_residual},
                   {"newton_iterations", st.newton_iterations},
                   {"x", jvec(st.x)},
                   {"u", jvec(st.u)},
                   {"v", jvec(st.v)},
                   {"f_u", jvec(co.f_u)},
                   {"f_v", jvec(co.f_v)},
                   {"g_u", jvec(co.g_u)},
                   {"g_v", jvec(co.g_v)}},
                  cx.cfg.out);
    }
    return 0;
}

int cmd_spectral(Context& cx) {
    SlowOptions o;
    o.nodes = cx.cfg.slow_nodes;
    o.modes = cx.cfg.modes;
    const auto b = cached_basis(cx.cache, cx.cfg.params, o);
    if (cx.cfg.format == "csv") {
        std::string s = csv_header(cx.cfg, {{"x_star", fmt(b.x_star)}, {"q_mean", fmt(b.q_mean)}}) +
                        csv_row({"n", "gamma", "psi_at_xstar"});
        for (int n = 0; n < b.modes(); ++n)
            s += csv_row({std::to_string(n), fmt(b.gamma[n]), fmt(b.psi_at_xstar[n])});
        emit(cx.cfg.out, s);
    } else {
        emit_json(cx.cfg,
                  {{"d", b.d},
                   {"ell", b.ell},
                   {"x_star", b.x_star},
                   {"modes", b.modes()},
                   {"q_mean", b.q_mean},
                   {"q_min", b.q_min},
                   {"q_max", b.q_max},
                   {"gamma", jvec(b.gamma)},
                   {"psi_at_xstar", jvec(b.psi_at_xstar)}},
                  cx.cfg.out);
    }
    return 0;
}

ojson constants_json(const SlepConstants& c) {
    return {{"rho0_star", c.rho0_star},
            {"rho0_error", c.rho0_error},
            {"kappa_star", c.kappa_star},
            {"c1_star", c.c1_star},
            {"c2_star", c.c2_star},
            {"c1c2", c.c1c2},
            {"delta_c1", c.delta.c1},
            {"delta_c2", c.delta.c2},
            {"delta_c1_error", c.delta.c1_error},
            {"delta_c2_error", c.delta.c2_error},
            {"tau_star", c.tau_star},
            {"mu_star", c.mu_star},
            {"fast_gap", c.fast_gap},
            {"gamma0", c.basis.gamma.empty() ? ojson(nullptr) : ojson(c.basis.gamma.front())},
            {"v_hat", c.v_hat},
            {"h_minus", c.h_minus},
            {"h_plus", c.h_plus},
            {"M_prime", c.M_prime},
            {"x_star", c.x_star},
            {"int_g_left", c.int_g_left},
            {"eps_samples", jvec(c.eps_samples)},
            {"rho_samples", jvec(c.rho_samples)},
            {"mu1_samples", jvec(c.mu1_samples)},
            {"modes", c.basis.modes()}};
}

int cmd_constants(Context& cx) {
    emit_json(cx.cfg, constants_json(cx.constants()), cx.cfg.out);
    return 0;
}

int cmd_turing(Context& cx) {
    const auto k = cx.constants();
    const SlepModel m(k, cx.cfg.params.tau);
    const double r = k.rho0_star;
    const double lo = cx.cfg.k1_min > 0 ? cx.cfg.k1_min : 0.02 * r;
    const double hi = cx.cfg.k1_max > 0 ? cx.cfg.k1_max : 0.48 * r;
    if (!(lo < hi)) throw UsageError("--k1-min must be below --k1-max");
    const int n = std::max(2, cx.cfg.samples);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < n; ++i) pts.push_back({lo + (hi - lo) * i / (n - 1)});
    const auto rows = parallel_map(pts, cx.cfg.threads, [&](const std::vector<double>& p) {
        return std::vector<std::string>{fmt(m.turing_curve_xi(p[0]))};
    });
    std::vector<std::vector<std::string>> out;
    for (const auto& row : rows) out.push_back({fmt(row.point[0]), row.values.empty() ? "" : row.values[0], row.error});
    emit_table(cx.cfg, cx.cfg.out, {{"rho0_star", fmt(r)}}, {"k1", "xi_k1", "error"}, out);
    return 0;
}

ojson hopf_json(const SlepModel& m, double k1, double k2) {
    const auto h = m.find_hopf(k1, k2);
    ojson cr = ojson::array();
    for (const auto& c : h.crossings) cr.push_back({{"alpha", c.alpha}, {"lambda", c.lambda}, {"multiplicity", c.multiplicity}});
    ojson j = {{"k1", k1},
               {"k2", k2},
               {"alpha_H", h.alpha_H},
               {"lambda_I_H", h.lamIH},
               {"alpha0", h.alpha0},
               {"alpha1", jnum(h.alpha1)},
               {"alpha2", h.alpha2},
               {"k2hat_star", jnum(h.k2hat_star)},
               {"case", h.case_tag},
               {"crossings", cr},
               {"ordering_alpha2_lam_alphaH_alpha0", h.ordering_holds},
               {"ordering_lam_alpha2_alphaH_alpha0", h.lambda_below_alpha2},
               {"residual", h.residual},
               {"scan_points", h.scan_points},
               {"dlamR_dalpha", h.dlamR_dalpha}};
    const auto t = m.transversality(h, k1, k2);
    j["transversality"] = {{"value", t.value},
                           {"I1", t.I1},
                           {"I2", t.I2},
                           {"denominator", t.denominator},
                           {"h_bound", t.h_bound},
                           {"gamma0_exceeds_h", t.gamma0_exceeds_h}};
    return j;
}

int cmd_hopf(Context& cx) {
    const auto k = cx.constants();
    const SlepModel m(k, cx.cfg.params.tau);
    emit_json(cx.cfg, hopf_json(m, cx.cfg.params.k1, cx.cfg.params.k2), cx.cfg.out);
    return 0;
}

int cmd_classify(Context& cx) {
    const auto k = cx.constants();
    const SlepModel m(k, cx.cfg.params.tau);
    const auto rp = m.classify(cx.cfg.params.k1, cx.cfg.params.k2);
    emit_json(cx.cfg,
              {{"k1", rp.k1}, {"k2", rp.k2}, {"label", region_name(rp.label)}, {"xi_k1", jnum(rp.xi_k1)},
               {"rho0_star", k.rho0_star}},
              cx.cfg.out);
    return 0;
}

SimConfig sim_config(const RunConfig& c) {
    SimConfig s;
    s.system = parse_system(c.system);
    s.params = c.params;
    s.dt = c.dt;
    s.t_end = c.t_end;
    s.mode = parse_mode(c.mode);
    s.perturbation = parse_perturbation(c.perturbation);
    s.amplitude = c.amplitude;
    s.noise = c.noise;
    s.seed = c.seed;
    s.stride = c.stride;
    s.snapshot_stride = c.snapshot_stride;
    s.scheme = parse_scheme(c.scheme);
    if (s.system != SystemKind::Coupled6Delayed) s.params.alpha = kInfinite;
    if (s.system == SystemKind::Decoupled2) s.params.k1 = s.params.k2 = 0;
    return s;
}

std::vector<std::pair<std::string, std::string>> sim_summary(const SimResult& r) {
    return {{"verdict", verdict_name(r.series.verdict)},
            {"log_slope", fmt(r.series.log_slope)},
            {"growth_ratio", fmt(r.series.growth_ratio)},
            {"peaks", std::to_string(r.series.peaks)},
            {"peak_drift", fmt(r.series.peak_drift)},
            {"dt", fmt(r.dt)},
            {"steps", std::to_string(r.steps)},
            {"dt_halvings", std::to_string(r.dt_halvings)}};
}

int cmd_simulate(Context& cx) {
    const SimConfig sc = sim_config(cx.cfg);
    const auto base = cx.state();
    const auto res = simulate(sc, base);
    std::vector<std::vector<std::string>> out;
    for (size_t i = 0; i < res.series.times.size(); ++i)
        out.push_back({fmt(res.series.times[i]), fmt(res.series.asym_norm[i]), fmt(res.series.dev_norm[i])});
    emit_table(cx.cfg, cx.cfg.out, sim_summary(res), {"t", "asym_norm", "dev_norm"}, out);
    if (!cx.cfg.snapshots.empty()) {
        std::string f = csv_header(cx.cfg) + csv_row({"t", "x", "u1", "v1", "u2", "v2"});
        for (const auto& sn : res.snapshots)
            for (size_t i = 0; i < res.x.size(); ++i)
                f += csv_row({fmt(sn.t), fmt(res.x[i]), fmt(sn.u1[i]), fmt(sn.v1[i]), fmt(sn.u2[i]), fmt(sn.v2[i])});
        emit(cx.cfg.snapshots, f);
    }
    return 0;
}

int cmd_scan(Context& cx) {
    const auto& c = cx.cfg;
    if (c.param != "tau" && c.param != "k2" && c.param != "alpha" && c.param != "k1")
        throw UsageError("--param must be tau, k1, k2 or alpha");
    if (!(c.pmin < c.pmax)) throw UsageError("--min must be below --max");
    const SimConfig sc = sim_config(c);
    const auto base = cx.state();
    const Mode mode = sc.system == SystemKind::Decoupled2 ? Mode::Symmetric : sc.mode;
    std::vector<std::vector<double>> pts;
    const int n = std::max(1, c.count);
    for (int i = 0; i < n; ++i) pts.push_back({n == 1 ? c.pmin : c.pmin + (c.pmax - c.pmin) * i / (n - 1)});
    const auto rows = parallel_map(pts, c.threads, [&](const std::vector<double>& p) {
        SimConfig s = sc;
        param_ref(s.params, c.param) = p[0];
        const auto lam = direct_eigs_mode(s.system, mode, s.params, base, 1).front();
        const auto r = simulate(s, base);
        return std::vector<std::string>{fmt(lam.real()),        fmt(std::abs(lam.imag())),
                                        verdict_name(r.series.verdict), fmt(r.series.log_slope),
                                        fmt(r.series.growth_ratio),    std::to_string(r.series.peaks)};
    });
    std::vector<std::pair<std::string, std::string>> summary;
    if (c.bisect) {
        const auto th = sim_threshold(sc, base, c.param, c.pmin, c.pmax);
        summary = {{"threshold", fmt(th.value)},
                   {"threshold_lo", fmt(th.lo)},
                   {"threshold_hi", fmt(th.hi)},
                   {"threshold_resolved", th.resolved ? "true" : "false"},
                   {"threshold_runs", std::to_string(th.runs)}};
    }
    std::vector<std::vector<std::string>> out;
    for (const auto& row : rows) {
        std::vector<std::string> cells{fmt(row.point[0])};
        for (int q = 0; q < 6; ++q) cells.push_back(row.values.empty() ? "" : row.values[q]);
        cells.push_back(row.error);
        out.push_back(cells);
    }
    emit_table(c, c.out, summary, {c.param, "re_lambda", "im_lambda", "verdict", "log_slope", "growth_ratio", "peaks", "error"},
               out);
    return 0;
}

int cmd_sweep(Context& cx) {
    const auto& c = cx.cfg;
    const auto k = cx.constants();
    const SlepModel m(k, c.params.tau);
    const double r = k.rho0_star;
    SweepJob job;
    job.task = c.task;
    job.threads = c.threads;
    for (const auto& a : c.axes) job.axes.push_back(parse_axis(a));
    if (job.axes.empty()) {
        job.axes.push_back({"k1", 0.02 * r, 1.2 * r, 30, false});
        job.axes.push_back({"k2", 0.5, 100.0, 30, true});
    }
    for (const auto& a : job.axes)
        if (a.name != "k1" && a.name != "k2" && a.name != "tau")
            throw UsageError("sweep axis '" + a.name + "' must be k1, k2 or tau");
    std::vector<std::string> cols;
    if (job.task == "classify")
        cols = {"label", "xi_k1"};
    else if (job.task == "hopf")
        cols = {"alpha_H", "lambda_I_H", "alpha0", "alpha2", "case"};
    else
        throw UsageError("--task must be classify or hopf");

    const auto pts = sweep_points(job.axes);
    const auto rows = parallel_map(pts, job.threads, [&](const std::vector<double>& p) {
        ModelParams q = c.params;
        for (size_t i = 0; i < p.size(); ++i) param_ref(q, job.axes[i].name) = p[i];
        const SlepModel local(k, q.tau);
        if (job.task == "classify") {
            const auto rp = local.classify(q.k1, q.k2);
            return std::vector<std::string>{region_name(rp.label), std::isfinite(rp.xi_k1) ? fmt(rp.xi_k1) : ""};
        }
        const auto h = local.find_hopf(q.k1, q.k2);
        return std::vector<std::string>{fmt(h.alpha_H), fmt(h.lamIH), fmt(h.alpha0), fmt(h.alpha2), h.case_tag};
    });
    std::vector<std::string> head;
    for (const auto& a : job.axes) head.push_back(a.name);
    head.insert(head.end(), cols.begin(), cols.end());
    head.push_back("error");
    std::vector<std::vector<std::string>> out;
    for (const auto& row : rows) {
        std::vector<std::string> cells;
        for (double v : row.point) cells.push_back(fmt(v));
        for (size_t q = 0; q < cols.size(); ++q) cells.push_back(row.values.empty() ? "" : row.values[q]);
        cells.push_back(row.error);
        out.push_back(cells);
    }
    emit_table(c, c.out, {{"rho0_star", fmt(r)}}, head, out);

    if (!c.curve_out.empty()) {
        std::vector<std::vector<double>> kp;
        for (const auto& a : job.axes)
            if (a.name == "k1")
                for (double v : a.values())
                    if (v < 0.5 * r) kp.push_back({v});
        const auto cr = parallel_map(kp, job.threads, [&](const std::vector<double>& p) {
            return std::vector<std::string>{fmt(m.turing_curve_xi(p[0]))};
        });
        std::string f = csv_header(c, {{"rho0_star", fmt(r)}}) + csv_row({"k1", "xi", "error"});
        for (const auto& row : cr) f += csv_row({fmt(row.point[0]), row.values.empty() ? "" : row.values[0], row.error});
        emit(c.curve_out, f);
    }
    if (!c.lambda_out.empty()) {
        const double k1 = c.params.k1, k2 = c.params.k2;
        const double a0 = m.alpha0(k1, k2);
        std::vector<std::vector<double>> ap;
        const int n = std::max(2, c.alpha_count);
        for (int i = 1; i <= n; ++i) ap.push_back({a0 * i / (n + 1)});
        const auto lr = parallel_map(ap, job.threads, [&](const std::vector<double>& p) {
            return std::vector<std::string>{fmt(m.lambda_I1(p[0], k1, k2)), fmt(m.lambda_I2(p[0], k1, k2))};
        });
        std::string f = csv_header(c, {{"alpha0", fmt(a0)}, {"alpha2", fmt(m.alpha2(k1, k2))}}) +
                        csv_row({"alpha", "lamI1", "lamI2", "error"});
        for (const auto& row : lr)
            f += csv_row({fmt(row.point[0]), row.values.empty() ? "" : row.values[0],
                          row.values.empty() ? "" : row.values[1], row.error});
        emit(c.lambda_out, f);
    }
    return 0;
}

int cmd_validate(Context& cx) {
    if (cx.cfg.target != "slep") throw UsageError("validate target must be 'slep'");
    const auto k = cx.constants();
    const SlepModel m(k, cx.cfg.params.tau);
    const auto p = m.validate_prop31(10);
    ojson j;
    j["prop31"] = {{"passed", p.passed},
                   {"points", p.points},
                   {"sign_failures", p.sign_failures},
                   {"worst_dX_dI2", p.worst_dX_dI2},
                   {"worst_dY_dI2", p.worst_dY_dI2},
                   {"worst_dY_dR", p.worst_dY_dR},
                   {"identity_error", p.identity_error},
                   {"X000_minus_rho0", p.x000_minus_rho},
                   {"max_Y_over_tau_star", p.max_y_over_tau_star},
                   {"failures", p.failures}};
    std::vector<double> alphas;
    for (int i = 0; i < 24; ++i) alphas.push_back(1e-4 * std::pow(10.0, 6.0 * i / 23));
    ojson s1 = ojson::array();
    bool slep1_ok = true;
    for (double f : {0.1, 0.3, 0.6, 0.9}) {
        const auto rep = m.slep1_no_crossing_check(f * k.rho0_star, alphas);
        slep1_ok = slep1_ok && rep.passed;
        s1.push_back({{"k1", f * k.rho0_star},
                      {"passed", rep.passed},
                      {"xhat_margin", rep.xhat_margin},
                      {"yhat_margin", rep.yhat_margin},
                      {"samples", rep.samples},
                      {"violations", rep.violations}});
    }
    j["slep1"] = s1;
    emit_json(cx.cfg, j, cx.cfg.out);
    if (!slep1_ok) {
        cx.err << "SLEP-1 check failed\n";
        return 2;
    }
    if (!p.passed) {
        cx.err << "Prop31 suite failed\n";
        return 3;
    }
    return 0;
}

}  // namespace

std::vector<double> Axis::values() const {
    std::vector<double> v;
    if (count < 1) throw UsageError("axis '" + name + "' needs a positive count");
    if (log && !(min > 0 && max > 0)) throw UsageError("log axis '" + name + "' needs positive bounds");
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        v.push_back(log ? min * std::pow(max / min, t) : min + (max - min) * t);
    }
    return v;
}

Axis parse_axis(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(trim(p));
    if (parts.size() != 4 && !(parts.size() == 5 && (parts[4] == "log" || parts[4] == "lin")))
        throw UsageError("axis '" + spec + "' must be name:min:max:count[:log]");
    Axis a;
    a.name = parts[0];
    try {
        a.min = std::stod(parts[1]);
        a.max = std::stod(parts[2]);
        a.count = std::stoi(parts[3]);
    } catch (const std::exception&) {
        throw UsageError("axis '" + spec + "' has a non-numeric field");
    }
    a.log = parts.size() == 5 && parts[4] == "log";
    a.values();
    return a;
}

std::vector<std::vector<double>> sweep_points(const std::vector<Axis>& axes) {
    std::vector<std::vector<double>> pts{{}};
    for (const auto& a : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& p : pts)
            for (double v : a.values()) {
                auto q = p;
                q.push_back(v);
                next.push_back(std::move(q));
            }
        pts.swap(next);
    }
    return pts;
}

std::vector<SweepRow> parallel_map(const std::vector<std::vector<double>>& points, int threads,
                                   const std::function<std::vector<std::string>(const std::vector<double>&)>& task) {
    std::vector<SweepRow> rows(points.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i; (i = next.fetch_add(1)) < points.size();) {
            rows[i].point = points[i];
            try {
                rows[i].values = task(points[i]);
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        }
    };
    const int nt = std::max(1, std::min<int>(threads, static_cast<int>(points.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

std::string csv_header(const RunConfig& cfg, const std::vector<std::pair<std::string, std::string>>& results) {
    std::string s = std::string("# ") + kArtifactName + " " + kArtifactVersion + "\n# command = " + cfg.command + "\n";
    for (const auto& [k, v] : cfg.resolved) s += "# " + k + " = " + v + "\n";
    for (const auto& [k, v] : results) s += "# result." + k + " = " + v + "\n";
    return s;
}

RunConfig parse_cli(int argc, const char* const* argv) {
    RunConfig cfg;
    std::string alpha = "inf", config_path, json_out, csv_out;
    CLI::App app{"Layered steady states, Turing curve and delayed-coupling Hopf thresholds for two coupled "
                 "Lengyel-Epstein reactors"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.add_option("--config", config_path, "key = value file; command-line flags take precedence");

    struct Sub {
        const char* name;
        const char* help;
        std::vector<const char*> required;
    };
    const std::vector<Sub> subs = {
        {"nullclines", "fold points, v-hat and sampled branches", {}},
        {"reduced", "outer (eps = 0) layered profile", {}},
        {"steady", "layered steady state at eps > 0", {}},
        {"spectral", "slow Sturm-Liouville basis", {}},
        {"constants", "SLEP constants", {}},
        {"turing-curve", "Turing curve k2 = xi(k1)", {}},
        {"hopf", "delayed-coupling Hopf point", {"k1", "k2"}},
        {"classify", "region label of (k1, k2)", {"k1", "k2"}},
        {"simulate", "time integration of the reactor system", {}},
        {"scan", "simulation verdicts along one parameter", {"param", "min", "max"}},
        {"sweep", "parallel region map and curves", {}},
        {"validate", "property suites", {"target"}},
    };
    std::map<std::string, CLI::App*> apps;
    for (const auto& s : subs) {
        CLI::App* sc = app.add_subcommand(s.name, s.help);
        apps[s.name] = sc;
        auto& p = cfg.params;
        sc->add_option("--config", config_path, "key = value file; command-line flags take precedence");
        sc->add_option("--a", p.a, "feed parameter a");
        sc->add_option("--sigma", p.sigma, "sigma");
        sc->add_option("--d", p.d, "inhibitor diffusion d");
        sc->add_option("--ell", p.ell, "domain length");
        sc->add_option("--eps", p.eps, "layer width eps");
        sc->add_option("--tau", p.tau, "time constant tau");
        sc->add_option("--k1", p.k1, "activator coupling k1");
        sc->add_option("--k2", p.k2, "inhibitor coupling k2");
        sc->add_option("--alpha", alpha, "delay kernel rate (inf: no delay)");
        sc->add_option("--modes", cfg.modes, "slow eigenmodes");
        sc->add_option("--slow-nodes", cfg.slow_nodes, "nodes of the slow eigenproblem grid");
        sc->add_option("--nodes", cfg.steady_nodes, "nodes of the eps > 0 grid");
        sc->add_option("--out", cfg.out, "output path (default stdout)");
        auto* fj = sc->add_option("--json", json_out, "write JSON to this path");
        auto* fc = sc->add_option("--csv", csv_out, "write CSV to this path");
        fj->excludes(fc);
        sc->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
        auto* cd = sc->add_option("--cache-dir", cfg.cache_dir, "cache directory (default $LAYERSTAB_CACHE_DIR)");
        sc->add_flag("--no-cache", cfg.no_cache, "disable the cache")->excludes(cd);
        sc->add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
        sc->add_option("--seed", cfg.seed, "seed for noise perturbations");
        sc->add_option("--samples", cfg.samples, "sample count");
        const std::string n = s.name;
        if (n == "turing-curve" || n == "sweep") {
            sc->add_option("--k1-min", cfg.k1_min, "smallest k1 (0: 0.02 rho0*)");
            sc->add_option("--k1-max", cfg.k1_max, "largest k1 (0: 0.48 rho0*)");
        }
        if (n == "sweep") {
            sc->add_option("--axis", cfg.axes, "name:min:max:count[:log], row-major in the given order");
            sc->add_option("--task", cfg.task, "classify or hopf")->check(CLI::IsMember({"classify", "hopf"}));
            sc->add_option("--curve-out", cfg.curve_out, "CSV of (k1, xi)");
            sc->add_option("--lambda-out", cfg.lambda_out, "CSV of (alpha, lamI1, lamI2) at --k1 --k2");
            sc->add_option("--alpha-count", cfg.alpha_count, "alpha samples for --lambda-out");
        }
        if (n == "simulate" || n == "scan") {
            sc->add_option("--system", cfg.system, "DECOUPLED2, COUPLED4 or COUPLED6_DELAYED");
            sc->add_option("--mode", cfg.mode, "perturbed mode: sym or anti");
            sc->add_option("--scheme", cfg.scheme, "bdf2 or strang");
            sc->add_option("--perturbation", cfg.perturbation, "eigen or bump");
            sc->add_option("--t-end", cfg.t_end, "final time");
            sc->add_option("--dt", cfg.dt, "time step (0: automatic)");
            sc->add_option("--amplitude", cfg.amplitude, "perturbation amplitude");
            sc->add_option("--noise", cfg.noise, "uniform noise amplitude");
            sc->add_option("--stride", cfg.stride, "record every n steps");
            sc->add_option("--snapshot-stride", cfg.snapshot_stride, "field snapshot every n steps (0: none)");
            sc->add_option("--snapshots", cfg.snapshots, "CSV path for field snapshots");
        }
        if (n == "scan") {
            sc->add_option("--param", cfg.param, "tau, k1, k2 or alpha");
            sc->add_option("--min", cfg.pmin, "lower end");
            sc->add_option("--max", cfg.pmax, "upper end");
            sc->add_option("--count", cfg.count, "number of values");
            sc->add_flag("--bisect", cfg.bisect, "bisect the verdict flip on [min, max]");
        }
        if (n == "validate") sc->add_option("target", cfg.target, "suite name (slep)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, std::cout, std::cerr);
            throw HelpShown{};
        }
        throw UsageError(e.what());
    }
    CLI::App* sc = app.get_subcommands().front();
    cfg.command = sc->get_name();

    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw UsageError("cannot read config file " + config_path);
        std::string line;
        for (int ln = 1; std::getline(in, line); ++ln) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw UsageError(config_path + ":" + std::to_string(ln) + ": expected 'key = value'");
            std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            std::replace(key.begin(), key.end(), '_', '-');
            CLI::Option* opt = key == "target" ? sc->get_option_no_throw("target") : sc->get_option_no_throw("--" + key);
            if (!opt || key == "config")
                throw UsageError(config_path + ":" + std::to_string(ln) + ": unknown key '" + key + "' for " +
                                 cfg.command);
            if (opt->count() > 0) continue;  // flag wins
            try {
                opt->add_result(value);
                opt->run_callback();
            } catch (const CLI::Error& e) {
                throw UsageError(config_path + ":" + std::to_string(ln) + ": " + key + ": " + e.what());
            }
        }
    }

    for (const auto& s : subs) {
        if (cfg.command != s.name) continue;
        for (const char* r : s.required) {
            const CLI::Option* o =
                std::string(r) == "target" ? sc->get_option_no_throw("target") : sc->get_option_no_throw(std::string("--") + r);
            if (o->count() == 0)
                throw UsageError("missing required parameter " + std::string(r) + " for '" + cfg.command + "'");
        }
    }

    if (!json_out.empty()) {
        cfg.format = "json";
        cfg.out = json_out;
    }
    if (!csv_out.empty()) {
        cfg.format = "csv";
        cfg.out = csv_out;
    }
    if ((!json_out.empty() || !csv_out.empty()) && sc->get_option("--out")->count() > 0)
        throw UsageError("--out conflicts with --json/--csv");
    const bool tabular = cfg.command == "turing-curve" || cfg.command == "simulate" || cfg.command == "scan" ||
                         cfg.command == "sweep";
    const bool json_only = cfg.command == "constants" || cfg.command == "hopf" || cfg.command == "classify" ||
                           cfg.command == "validate";
    if (cfg.format.empty()) cfg.format = tabular ? "csv" : "json";
    if (json_only && cfg.format == "csv") throw UsageError("'" + cfg.command + "' writes JSON only");
    cfg.params.alpha = parse_alpha(alpha);
    if (!cfg.no_cache && cfg.cache_dir.empty()) cfg.cache_dir = Cache::default_dir();
    if (cfg.no_cache) cfg.cache_dir.clear();

    for (const CLI::Option* o : sc->get_options()) {
        const std::string k = option_key(o);
        if (k.empty() || !in_header(k)) continue;
        cfg.resolved.emplace_back(k, k == "format" ? cfg.format : option_value(o));
    }
    return cfg;
}

int run(const RunConfig& cfg, std::ostream& err) {
    cfg.params.validate();
    Context cx{cfg, Cache(cfg.cache_dir), err};
    const long solves0 = eigen_solve_count();
    int code = 0;
    const std::string& c = cfg.command;
    if (c == "nullclines") code = cmd_nullclines(cx);
    else if (c == "reduced") code = cmd_reduced(cx);
    else if (c == "steady") code = cmd_steady(cx);
    else if (c == "spectral") code = cmd_spectral(cx);
    else if (c == "constants") code = cmd_constants(cx);
    else if (c == "turing-curve") code = cmd_turing(cx);
    else if (c == "hopf") code = cmd_hopf(cx);
    else if (c == "classify") code = cmd_classify(cx);
    else if (c == "simulate") code = cmd_simulate(cx);
    else if (c == "scan") code = cmd_scan(cx);
    else if (c == "sweep") code = cmd_sweep(cx);
    else if (c == "validate") code = cmd_validate(cx);
    else throw UsageError("unknown command " + c);
    if (cx.cache.hits() + cx.cache.misses() > 0)
        err << "cache: " << cx.cache.hits() << " hit(s), " << cx.cache.misses() << " miss(es); eigen solves: "
            << eigen_solve_count() - solves0 << "\n";
    return code;
}

int main_entry(int argc, const char* const* argv, std::ostream& err) {
    try {
        return run(parse_cli(argc, argv), err);
    } catch (const HelpShown&) {
        return 0;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const RegimeError& e) {
        err << "regime error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "numerical error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace layerstab
