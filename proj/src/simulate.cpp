#include "layerstab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "layerstab/grid.hpp"
#include "layerstab/kinetics.hpp"

namespace layerstab {

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Decay: return "DECAY";
        case Verdict::Growth: return "GROWTH";
        case Verdict::SustainedOscillation: return "SUSTAINED_OSCILLATION";
        case Verdict::Inconclusive: return "INCONCLUSIVE";
    }
    return "?";
}

namespace {

int fields_of(SystemKind s) {
    switch (s) {
        case SystemKind::Decoupled2: return 2;
        case SystemKind::Coupled4: return 4;
        case SystemKind::Coupled6Delayed: return 6;
    }
    return 2;
}

void check_config(const SimConfig& c) {
    if (c.system == SystemKind::Coupled6Delayed && !c.params.delayed())
        throw RegimeError("COUPLED6_DELAYED needs a finite alpha; alpha = infinity is the COUPLED4 system");
    if (!(c.t_end > 0)) throw RegimeError("t_end must be positive");
    if (c.stride < 1) throw RegimeError("stride must be >= 1");
}

// Local (non-diffusive) terms at one node and their Jacobian, m x m row-major.
struct Local {
    const SimConfig& cfg;
    int m;
    void eval(const double* y, double t, double xi, double* r, double* jac) const {
        const auto& p = cfg.params;
        const double et = p.eps * p.tau;
        const int R = m == 2 ? 1 : 2;
        if (jac) std::fill(jac, jac + m * m, 0.0);
        for (int a = 0; a < R; ++a) {
            const int b = 1 - a;
            const int iu = 2 * a, iv = 2 * a + 1;
            const auto k = kinetics(y[iu], y[iv], p.a, p.sigma);
            r[iu] = k.f / et;
            r[iv] = k.g;
            if (jac) {
                jac[iu * m + iu] += k.f_u / et;
                jac[iu * m + iv] += k.f_v / et;
                jac[iv * m + iu] += k.g_u;
                jac[iv * m + iv] += k.g_v;
            }
            if (R == 2) {
                const int src = m == 6 ? 4 + b : 2 * b;  // U_j (delayed) or u_j
                r[iu] += p.k1 / p.tau * (y[src] - y[iu]);
                r[iv] += p.k2 * (y[2 * b + 1] - y[iv]);
                if (jac) {
                    jac[iu * m + src] += p.k1 / p.tau;
                    jac[iu * m + iu] -= p.k1 / p.tau;
                    jac[iv * m + 2 * b + 1] += p.k2;
                    jac[iv * m + iv] -= p.k2;
                }
            }
            if (m == 6) {
                const int iU = 4 + a;
                r[iU] = p.alpha * (y[iu] - y[iU]);
                if (jac) {
                    jac[iU * m + iu] += p.alpha;
                    jac[iU * m + iU] -= p.alpha;
                }
            }
            if (cfg.forcing) {
                r[iu] += cfg.forcing(t, xi, 0, a);
                r[iv] += cfg.forcing(t, xi, 1, a);
            }
        }
    }
};

struct Integrator {
    const SimConfig& cfg;
    const std::vector<double>& x;
    FvLaplacian lap;
    int n, m;
    Local local;
    double du, dv;  // diffusion coefficients in time units

    Integrator(const SimConfig& c, const std::vector<double>& xs)
        : cfg(c), x(xs), lap(xs), n(static_cast<int>(xs.size())), m(fields_of(c.system)), local{c, m},
          du(c.params.eps / c.params.tau), dv(c.params.d) {}

    double coef(int field) const {
        const int f = field % 2;
        if (field >= 4) return 0.0;
        return f == 0 ? du : dv;
    }

    void rhs(const std::vector<double>& y, double t, std::vector<double>& out) const {
        out.assign(y.size(), 0.0);
        for (int i = 0; i < n; ++i) local.eval(&y[static_cast<size_t>(i) * m], t, x[i], &out[static_cast<size_t>(i) * m], nullptr);
        for (int i = 0; i < n; ++i)
            for (int f = 0; f < m; ++f) {
                const double c = coef(f);
                if (c == 0.0) continue;
                double s = 0;
                if (i + 1 < n) s += lap.cond[i] * (y[(i + 1) * m + f] - y[i * m + f]);
                if (i > 0) s += lap.cond[i - 1] * (y[(i - 1) * m + f] - y[i * m + f]);
                out[i * m + f] += c * s / lap.w[i];
            }
    }

    // Solve y - gamma F(y, t) = b by Newton.
    void implicit_solve(std::vector<double>& y, const std::vector<double>& b, double gamma, double t) const {
        const int N = n * m;
        std::vector<double> F, jl(m * m), rl(m);
        for (int it = 0; it < 12; ++it) {
            BandMatrix<double> J(N, m, m);
            F.assign(N, 0.0);
            for (int i = 0; i < n; ++i) {
                local.eval(&y[static_cast<size_t>(i) * m], t, x[i], rl.data(), jl.data());
                for (int a = 0; a < m; ++a) {
                    F[i * m + a] = rl[a];
                    for (int c = 0; c < m; ++c) J(i * m + a, i * m + c) = -gamma * jl[a * m + c];
                }
            }
            for (int i = 0; i < n; ++i)
                for (int f = 0; f < m; ++f) {
                    const double c = coef(f);
                    if (c == 0.0) continue;
                    const int r = i * m + f;
                    if (i + 1 < n) {
                        const double k = c * lap.cond[i] / lap.w[i];
                        F[r] += k * (y[r + m] - y[r]);
                        J(r, r + m) -= gamma * k;
                        J(r, r) += gamma * k;
                    }
                    if (i > 0) {
                        const double k = c * lap.cond[i - 1] / lap.w[i];
                        F[r] += k * (y[r - m] - y[r]);
                        J(r, r - m) -= gamma * k;
                        J(r, r) += gamma * k;
                    }
                }
            std::vector<double> res(N);
            double ymax = 0;
            for (int k = 0; k < N; ++k) {
                res[k] = -(y[k] - gamma * F[k] - b[k]);
                J(k, k) += 1.0;
                ymax = std::max(ymax, std::abs(y[k]));
            }
            BandLU<double> lu(std::move(J));
            lu.solve(res);
            double step = 0;
            for (int k = 0; k < N; ++k) {
                y[k] += res[k];
                step = std::max(step, std::abs(res[k]));
            }
            for (int i = 0; i < n; ++i)
                if (!(y[static_cast<size_t>(i) * m] > 0)) throw NumericalError("activator lost positivity");
            if (step <= 1e-13 * (1.0 + ymax)) return;
        }
        throw NumericalError("implicit step: Newton did not converge");
    }

    void backward_euler(std::vector<double>& y, double t, double dt) const {
        std::vector<double> b = y;
        implicit_solve(y, b, dt, t + dt);
    }

    // Strang step: half reaction (trapezoid, per node), full diffusion (Crank-Nicolson), half reaction.
    void strang(std::vector<double>& y, double t, double dt) const {
        reaction(y, t, 0.5 * dt);
        diffusion(y, dt);
        reaction(y, t + 0.5 * dt, 0.5 * dt);
    }

    void reaction(std::vector<double>& y, double t, double h) const {
        std::vector<double> r0(m), r1(m), jl(m * m);
        for (int i = 0; i < n; ++i) {
            double* yi = &y[static_cast<size_t>(i) * m];
            local.eval(yi, t, x[i], r0.data(), nullptr);
            Eigen::VectorXd y0 = Eigen::Map<Eigen::VectorXd>(yi, m), z = y0;
            bool ok = false;
            for (int it = 0; it < 20; ++it) {
                local.eval(z.data(), t + h, x[i], r1.data(), jl.data());
                Eigen::VectorXd G(m);
                Eigen::MatrixXd JG = Eigen::MatrixXd::Identity(m, m);
                for (int a = 0; a < m; ++a) {
                    G[a] = z[a] - y0[a] - 0.5 * h * (r0[a] + r1[a]);
                    for (int c = 0; c < m; ++c) JG(a, c) -= 0.5 * h * jl[a * m + c];
                }
                const Eigen::VectorXd dz = JG.partialPivLu().solve(-G);
                z += dz;
                if (!(z[0] > 0) || (m > 2 && !(z[2] > 0))) throw NumericalError("activator lost positivity");
                if (dz.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + z.lpNorm<Eigen::Infinity>())) {
                    ok = true;
                    break;
                }
            }
            if (!ok) throw NumericalError("local reaction Newton did not converge");
            std::copy(z.data(), z.data() + m, yi);
        }
    }

    void diffusion(std::vector<double>& y, double dt) const {
        std::vector<double> a(n), b(n), c(n), d(n);
        for (int f = 0; f < m; ++f) {
            const double co = coef(f);
            if (co == 0.0) continue;
            for (int i = 0; i < n; ++i) {
                const double kl = i > 0 ? co * lap.cond[i - 1] / lap.w[i] : 0.0;
                const double kr = i + 1 < n ? co * lap.cond[i] / lap.w[i] : 0.0;
                const double yi = y[i * m + f];
                double lyi = -(kl + kr) * yi;
                if (i > 0) lyi += kl * y[(i - 1) * m + f];
                if (i + 1 < n) lyi += kr * y[(i + 1) * m + f];
                d[i] = yi + 0.5 * dt * lyi;
                a[i] = -0.5 * dt * kl;
                c[i] = -0.5 * dt * kr;
                b[i] = 1.0 + 0.5 * dt * (kl + kr);
            }
            solve_tridiagonal(a, b, c, d);
            for (int i = 0; i < n; ++i) y[i * m + f] = d[i];
        }
    }
};

double max_abs_diff(const SimState& s, bool asym, const SimState* base) {
    double du = 0, dv = 0;
    for (int i = 0; i < s.n; ++i) {
        if (asym) {
            du = std::max(du, std::abs(s.u(0, i) - s.u(1, i)));
            dv = std::max(dv, std::abs(s.v(0, i) - s.v(1, i)));
        } else {
            for (int r = 0; r < s.reactors(); ++r) du = std::max(du, std::abs(s.u(r, i) - base->u(r, i)));
        }
    }
    return asym ? du + dv : du;
}

}  // namespace

ModeSplit split_modes(const SimState& s) {
    if (s.reactors() != 2) throw RegimeError("mode split needs two reactors");
    ModeSplit m;
    for (int i = 0; i < s.n; ++i) {
        m.w_s.push_back(0.5 * (s.u(0, i) + s.u(1, i)));
        m.w_a.push_back(0.5 * (s.u(0, i) - s.u(1, i)));
        m.z_s.push_back(0.5 * (s.v(0, i) + s.v(1, i)));
        m.z_a.push_back(0.5 * (s.v(0, i) - s.v(1, i)));
    }
    return m;
}

SimState symmetric_state(SystemKind system, const LayeredStateEps& base) {
    SimState s;
    s.n = base.size();
    s.fields = fields_of(system);
    s.y.assign(static_cast<size_t>(s.n) * s.fields, 0.0);
    for (int i = 0; i < s.n; ++i)
        for (int r = 0; r < s.reactors(); ++r) {
            s.u(r, i) = base.u[i];
            s.v(r, i) = base.v[i];
            if (s.fields == 6) s.U(r, i) = base.u[i];
        }
    return s;
}

SimState initial_state(const SimConfig& cfg, const LayeredStateEps& base) {
    check_config(cfg);
    SimState s = symmetric_state(cfg.system, base);
    const int n = s.n;
    std::vector<double> pu(n, 0.0), pv(n, 0.0);
    if (cfg.amplitude != 0.0) {
        if (cfg.perturbation == Perturbation::Eigenfunction) {
            const Mode mode = cfg.system == SystemKind::Decoupled2 ? Mode::Symmetric : cfg.mode;
            const auto op = assemble_linear(cfg.system, mode, cfg.params, base);
            const cdouble lam = eigs_rightmost(op, 1).front();
            auto vec = eigenvector_near(op, lam);
            const int nf = op.fields;
            int kmax = 0;
            for (int i = 0; i < n; ++i)
                if (std::abs(vec[i * nf]) > std::abs(vec[kmax * nf])) kmax = i;
            const cdouble rot = std::conj(vec[kmax * nf]) / std::abs(vec[kmax * nf]);
            double mx = 0;
            for (int i = 0; i < n; ++i) {
                pu[i] = (vec[i * nf] * rot).real();
                pv[i] = (vec[i * nf + 1] * rot).real();
                mx = std::max({mx, std::abs(pu[i]), std::abs(pv[i])});
            }
            for (int i = 0; i < n; ++i) {
                pu[i] *= cfg.amplitude / mx;
                pv[i] *= cfg.amplitude / mx;
            }
        } else {
            const double w = 5.0 * cfg.params.eps;
            for (int i = 0; i < n; ++i) pu[i] = cfg.amplitude * std::exp(-std::pow((base.x[i] - base.x_star) / w, 2));
        }
    }
    if (cfg.noise > 0) {
        std::mt19937_64 gen(cfg.seed);
        std::uniform_real_distribution<double> U(-cfg.noise, cfg.noise);
        for (int i = 0; i < n; ++i) pu[i] += U(gen);
    }
    const double sgn = cfg.mode == Mode::Antisymmetric ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) {
        s.u(0, i) += pu[i];
        s.v(0, i) += pv[i];
        if (s.reactors() == 2) {
            s.u(1, i) += sgn * pu[i];
            s.v(1, i) += sgn * pv[i];
        }
        if (s.fields == 6) {
            s.U(0, i) = s.u(0, i);
            s.U(1, i) = s.u(1, i);
        }
    }
    return s;
}

void sim_rhs(const SimConfig& cfg, const std::vector<double>& x, const SimState& s, std::vector<double>& out) {
    SimConfig c = cfg;
    c.forcing = nullptr;
    Integrator I(c, x);
    I.rhs(s.y, 0.0, out);
}

void classify_series(DiagnosticsSeries& d, const std::vector<double>& obs, double wf) {
    const auto& t = d.times;
    const size_t N = obs.size();
    if (N < 4) {
        d.verdict = Verdict::Inconclusive;
        return;
    }
    const double T0 = t.front(), T1 = t.back(), span = T1 - T0;
    double a0 = 0, a1 = 0;
    for (size_t k = 0; k < N; ++k) {
        if (t[k] <= T0 + wf * span) a0 = std::max(a0, obs[k]);
        if (t[k] >= T1 - wf * span) a1 = std::max(a1, obs[k]);
    }
    d.growth_ratio = a0 > 0 ? a1 / a0 : kInfinite;

    std::vector<size_t> pk;
    for (size_t k = 1; k + 1 < N; ++k)
        if (obs[k] > obs[k - 1] && obs[k] >= obs[k + 1]) pk.push_back(k);
    d.peaks = static_cast<int>(pk.size());
    d.oscillatory = d.peaks >= 3;

    // log-slope over the second half: peak envelope when oscillating, raw samples otherwise
    const double mid = T0 + 0.5 * span;
    std::vector<double> tx, ly;
    std::vector<size_t> late;
    for (size_t k : pk)
        if (t[k] >= mid) late.push_back(k);
    if (late.size() >= 3) {
        for (size_t k : late) {
            tx.push_back(t[k]);
            ly.push_back(std::log(std::max(obs[k], 1e-300)));
        }
        d.peak_drift = std::abs(obs[late.back()] / obs[late.front()] - 1.0);
    } else {
        for (size_t k = 0; k < N; ++k)
            if (t[k] >= mid) {
                tx.push_back(t[k]);
                ly.push_back(std::log(std::max(obs[k], 1e-300)));
            }
    }
    if (tx.size() >= 2) {
        double mx = 0, my = 0;
        for (size_t k = 0; k < tx.size(); ++k) {
            mx += tx[k];
            my += ly[k];
        }
        mx /= tx.size();
        my /= tx.size();
        double sxy = 0, sxx = 0;
        for (size_t k = 0; k < tx.size(); ++k) {
            sxy += (tx[k] - mx) * (ly[k] - my);
            sxx += (tx[k] - mx) * (tx[k] - mx);
        }
        d.log_slope = sxx > 0 ? sxy / sxx : 0.0;
    }

    if (d.growth_ratio >= 10.0)
        d.verdict = Verdict::Growth;
    else if (d.growth_ratio <= 0.1)
        d.verdict = Verdict::Decay;
    else if (d.log_slope > 1e-3)
        d.verdict = Verdict::Growth;
    else if (d.log_slope < -1e-3)
        d.verdict = Verdict::Decay;
    else if (late.size() >= 10 && d.peak_drift < 0.05)
        d.verdict = Verdict::SustainedOscillation;
    else
        d.verdict = Verdict::Inconclusive;
}

SimResult simulate(const SimConfig& cfg, const LayeredStateEps& base) {
    return simulate_from(cfg, base, initial_state(cfg, base));
}

SimResult simulate_from(const SimConfig& cfg, const LayeredStateEps& base, const SimState& start) {
    check_config(cfg);
    const auto& p = cfg.params;
    Integrator I(cfg, base.x);
    if (start.fields != I.m || start.n != I.n) throw RegimeError("initial state does not match the system/grid");
    SimResult res;
    res.x = base.x;
    double hmin = kInfinite;
    for (int i = 0; i + 1 < I.n; ++i) hmin = std::min(hmin, base.x[i + 1] - base.x[i]);
    double dt = cfg.dt;
    if (!(dt > 0)) {
        dt = cfg.scheme == Scheme::Strang ? std::min(0.5 * hmin, p.eps * p.tau * p.sigma / 4.0) : cfg.t_end / 4000.0;
    }
    const int steps = static_cast<int>(std::ceil(cfg.t_end / dt - 1e-9));
    dt = cfg.t_end / steps;
    res.dt = dt;
    res.steps = steps;

    const SimState ref = symmetric_state(cfg.system, base);
    SimState s = start, prev = start;
    auto record = [&](double t) {
        res.series.times.push_back(t);
        res.series.asym_norm.push_back(s.reactors() == 2 ? max_abs_diff(s, true, nullptr) : 0.0);
        res.series.dev_norm.push_back(max_abs_diff(s, false, &ref));
    };
    auto snap = [&](double t) {
        Snapshot sn;
        sn.t = t;
        for (int i = 0; i < s.n; ++i) {
            sn.u1.push_back(s.u(0, i));
            sn.v1.push_back(s.v(0, i));
            sn.u2.push_back(s.reactors() == 2 ? s.u(1, i) : s.u(0, i));
            sn.v2.push_back(s.reactors() == 2 ? s.v(1, i) : s.v(0, i));
        }
        res.snapshots.push_back(std::move(sn));
    };
    record(0.0);
    if (cfg.snapshot_stride > 0) snap(0.0);

    for (int k = 0; k < steps; ++k) {
        const double t = k * dt;
        std::vector<double> y = s.y;
        bool done = false;
        try {
            if (cfg.scheme == Scheme::Strang) {
                I.strang(y, t, dt);
            } else if (k == 0) {
                I.backward_euler(y, t, dt);
            } else {
                std::vector<double> b(y.size());
                for (size_t q = 0; q < y.size(); ++q) b[q] = (4.0 * s.y[q] - prev.y[q]) / 3.0;
                I.implicit_solve(y, b, 2.0 * dt / 3.0, t + dt);
            }
            done = true;
        } catch (const std::exception&) {
            done = false;
        }
        for (int h = 1; !done && h <= 6; ++h) {
            ++res.dt_halvings;
            y = s.y;
            const int sub = 1 << h;
            try {
                for (int q = 0; q < sub; ++q) {
                    if (cfg.scheme == Scheme::Strang)
                        I.strang(y, t + q * dt / sub, dt / sub);
                    else
                        I.backward_euler(y, t + q * dt / sub, dt / sub);
                }
                done = true;
            } catch (const std::exception&) {
                done = false;
            }
        }
        if (!done) throw NumericalError("time step failed after repeated dt halving at t = " + std::to_string(t));
        prev.y.swap(s.y);
        s.y.swap(y);
        if ((k + 1) % cfg.stride == 0 || k + 1 == steps) record((k + 1) * dt);
        if (cfg.snapshot_stride > 0 && ((k + 1) % cfg.snapshot_stride == 0 || k + 1 == steps)) snap((k + 1) * dt);
    }
    classify_series(res.series, res.series.observable(cfg.system), cfg.window_fraction);
    res.final_state = s;
    return res;
}

SimThreshold sim_threshold(const SimConfig& cfg, const LayeredStateEps& base, const std::string& param, double lo,
                           double hi, double rel_tol, int max_runs) {
    SimThreshold r;
    auto run = [&](double v) {
        SimConfig c = cfg;
        param_ref(c.params, param) = v;
        ++r.runs;
        return simulate(c, base).series.verdict;
    };
    auto unstable = [](Verdict v) { return v == Verdict::Growth || v == Verdict::SustainedOscillation; };
    r.verdict_lo = run(lo);
    r.verdict_hi = run(hi);
    if (r.verdict_lo == Verdict::Inconclusive || r.verdict_hi == Verdict::Inconclusive ||
        unstable(r.verdict_lo) == unstable(r.verdict_hi))
        throw RegimeError("same-verdict bracket: " + verdict_name(r.verdict_lo) + " / " + verdict_name(r.verdict_hi));
    const bool lo_unstable = unstable(r.verdict_lo);
    r.resolved = true;
    while (std::abs(hi - lo) > rel_tol * std::abs(0.5 * (lo + hi)) && r.runs < max_runs) {
        const double mid = 0.5 * (lo + hi);
        const Verdict v = run(mid);
        if (v == Verdict::Inconclusive) {
            r.resolved = false;
            lo = hi = mid;
            break;
        }
        if (unstable(v) == lo_unstable)
            lo = mid;
        else
            hi = mid;
    }
    r.lo = std::min(lo, hi);
    r.hi = std::max(lo, hi);
    r.value = 0.5 * (lo + hi);
    return r;
}

}  // namespace layerstab
