#include "layerstab/steady.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "layerstab/grid.hpp"
#include "layerstab/kinetics.hpp"
#include "layerstab/numerics.hpp"

namespace layerstab {

std::vector<double> default_eps_schedule(double target, double first) {
    std::vector<double> s;
    double e = first;
    while (e > target * 1.5) {
        s.push_back(e);
        e *= 0.5;
    }
    s.push_back(target);
    return s;
}

namespace {

struct System {
    double a, sigma, d, eps;
    const std::vector<double>& x;
    FvLaplacian lap;
    double hbar;

    System(const ModelParams& p, double e, const std::vector<double>& grid)
        : a(p.a), sigma(p.sigma), d(p.d), eps(e), x(grid), lap(grid), hbar(p.ell / (grid.size() - 1)) {}

    // Weighted residual w_i F_i, interleaved (u_i, v_i).
    std::vector<double> residual(const std::vector<double>& z) const {
        const size_t n = x.size();
        std::vector<double> r(2 * n);
        for (size_t i = 0; i < n; ++i) {
            double fu = 0, fv = 0;
            if (i + 1 < n) {
                fu += lap.cond[i] * (z[2 * i + 2] - z[2 * i]);
                fv += lap.cond[i] * (z[2 * i + 3] - z[2 * i + 1]);
            }
            if (i > 0) {
                fu -= lap.cond[i - 1] * (z[2 * i] - z[2 * i - 2]);
                fv -= lap.cond[i - 1] * (z[2 * i + 1] - z[2 * i - 1]);
            }
            const auto k = kinetics(z[2 * i], z[2 * i + 1], a, sigma);
            r[2 * i] = eps * eps * fu + lap.w[i] * k.f;
            r[2 * i + 1] = d * fv + lap.w[i] * k.g;
        }
        return r;
    }

    BandMatrix<double> jacobian(const std::vector<double>& z) const {
        const int n = static_cast<int>(x.size());
        BandMatrix<double> J(2 * n, 2, 2);
        for (int i = 0; i < n; ++i) {
            const auto k = kinetics(z[2 * i], z[2 * i + 1], a, sigma);
            const int ru = 2 * i, rv = 2 * i + 1;
            J(ru, ru) = lap.w[i] * k.f_u;
            J(ru, rv) = lap.w[i] * k.f_v;
            J(rv, ru) = lap.w[i] * k.g_u;
            J(rv, rv) = lap.w[i] * k.g_v;
            if (i + 1 < n) {
                const double c = lap.cond[i];
                J(ru, ru) -= eps * eps * c;
                J(ru, ru + 2) += eps * eps * c;
                J(rv, rv) -= d * c;
                J(rv, rv + 2) += d * c;
            }
            if (i > 0) {
                const double c = lap.cond[i - 1];
                J(ru, ru) -= eps * eps * c;
                J(ru, ru - 2) += eps * eps * c;
                J(rv, rv) -= d * c;
                J(rv, rv - 2) += d * c;
            }
        }
        return J;
    }

    // Inhibitor rows are divided by d so both equations carry O(1) reaction terms.
    double measure(const std::vector<double>& r) const {
        double m = 0;
        for (size_t k = 0; k < r.size(); k += 2) m = std::max({m, std::abs(r[k]), std::abs(r[k + 1]) / d});
        return m / hbar;
    }
};

double sumsq(const std::vector<double>& r) {
    double s = 0;
    for (double e : r) s += e * e;
    return s;
}

}  // namespace

LayeredStateEps newton_steady(const ModelParams& params, double eps, const std::vector<double>& x,
                              std::vector<double> u, std::vector<double> v, const SteadyOptions& opt) {
    const System sys(params, eps, x);
    const size_t n = x.size();
    std::vector<double> z(2 * n);
    for (size_t i = 0; i < n; ++i) {
        z[2 * i] = u[i];
        z[2 * i + 1] = v[i];
    }
    auto r = sys.residual(z);
    double res = sys.measure(r);
    int it = 0;
    bool stalled = false;
    for (; it < opt.max_newton && res >= opt.tol && !stalled; ++it) {
        std::vector<double> dz(r.size());
        for (size_t k = 0; k < r.size(); ++k) dz[k] = -r[k];
        BandLU<double>(sys.jacobian(z)).solve(dz);
        double step = 0;
        for (size_t k = 0; k < z.size(); ++k) step = std::max(step, std::abs(dz[k]) / (1.0 + std::abs(z[k])));
        const double f0 = sumsq(r);
        double lam = 1.0;
        std::vector<double> zt(z.size()), rt;
        bool accepted = false;
        while (lam > 1e-6) {
            bool positive = true;
            for (size_t k = 0; k < z.size(); ++k) {
                zt[k] = z[k] + lam * dz[k];
                if (!(zt[k] > 0)) positive = false;
            }
            if (positive) {
                rt = sys.residual(zt);
                if (sumsq(rt) <= (1.0 - 2e-4 * lam) * f0) {
                    accepted = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if (!accepted) {
            // No decrease is possible once the residual sits at round-off level.
            if (step > 1e-9) {
                throw NumericalError("Newton line search failed at eps=" + std::to_string(eps) + " (residual " +
                                     std::to_string(res) + ")");
            }
            stalled = true;
            continue;
        }
        z.swap(zt);
        r.swap(rt);
        res = sys.measure(r);
        if (step < 1e-13) stalled = true;
    }
    if (!(res < opt.tol) && !stalled) {
        throw NumericalError("Newton did not converge at eps=" + std::to_string(eps) + " (residual " +
                             std::to_string(res) + ")");
    }
    LayeredStateEps s;
    s.eps = eps;
    s.a = params.a;
    s.sigma = params.sigma;
    s.d = params.d;
    s.ell = params.ell;
    s.x = x;
    s.u.resize(n);
    s.v.resize(n);
    double raw = 0;
    for (size_t i = 0; i < n; ++i) {
        s.u[i] = z[2 * i];
        s.v[i] = z[2 * i + 1];
        raw = std::max({raw, std::abs(r[2 * i] / sys.lap.w[i]), std::abs(r[2 * i + 1] / sys.lap.w[i])});
    }
    s.newton_residual = res;
    s.raw_residual = raw;
    s.newton_iterations = it;
    return s;
}

namespace {

void layered_guess(const ReducedProfile& prof, double eps, const std::vector<double>& x, std::vector<double>& u,
                   std::vector<double>& v) {
    u.resize(x.size());
    v.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const double vv = prof.V_at(x[i]);
        const double um = prof.U_at(x[i], Branch::Minus);
        const double up = prof.U_at(x[i], Branch::Plus);
        const double s = 0.5 * (1.0 + std::tanh((x[i] - prof.x_star) / (2.0 * eps)));
        u[i] = um * (1.0 - s) + up * s;
        v[i] = vv;
    }
}

}  // namespace

LayeredStateEps solve_layered_eps(const ModelParams& params, const ReducedProfile& profile,
                                  const std::vector<double>& eps_schedule, const SteadyOptions& opt) {
    params.validate();
    if (eps_schedule.empty()) throw RegimeError("empty eps schedule");
    for (size_t k = 1; k < eps_schedule.size(); ++k) {
        if (!(eps_schedule[k] < eps_schedule[k - 1])) throw RegimeError("eps schedule must be strictly decreasing");
    }
    auto grid_for = [&](double e) {
        return graded_grid(params.ell, profile.x_star, opt.nodes, opt.window * e, opt.fraction, false);
    };

    if (opt.constant_guess) {
        const double e = eps_schedule.back();
        const auto x = grid_for(e);
        const auto cs = constant_steady_state(params.a);
        auto s = newton_steady(params, e, x, std::vector<double>(x.size(), cs.first),
                               std::vector<double>(x.size(), cs.second), opt);
        s.x_star = profile.x_star;
        return s;
    }

    LayeredStateEps cur;
    bool have = false;
    double last_ok = std::nan("");
    std::vector<double> todo(eps_schedule.rbegin(), eps_schedule.rend());  // stack, next target at back
    while (!todo.empty()) {
        const double e = todo.back();
        const auto x = grid_for(e);
        std::vector<double> u, v;
        if (!have) {
            layered_guess(profile, e, x, u, v);
        } else {
            u.resize(x.size());
            v.resize(x.size());
            for (size_t i = 0; i < x.size(); ++i) {
                u[i] = interp_linear(cur.x, cur.u, x[i]);
                v[i] = interp_linear(cur.x, cur.v, x[i]);
            }
        }
        try {
            cur = newton_steady(params, e, x, std::move(u), std::move(v), opt);
            cur.x_star = profile.x_star;
            have = true;
            last_ok = e;
            todo.pop_back();
        } catch (const NumericalError& err) {
            if (!have) {
                throw NumericalError(std::string("no convergence at the first continuation value: ") + err.what());
            }
            const double mid = 0.5 * (last_ok + e);
            if (last_ok - mid < opt.min_eps_step) {
                std::ostringstream msg;
                msg << "continuation failed: last converged eps=" << last_ok << " while targeting eps=" << e;
                throw NumericalError(msg.str());
            }
            todo.push_back(mid);
        }
    }
    return cur;
}

LayeredStateEps solve_layered_eps(const ModelParams& params, const ReducedProfile& profile,
                                  const SteadyOptions& opt) {
    return solve_layered_eps(params, profile, default_eps_schedule(params.eps, opt.first_eps), opt);
}

CoeffFields linearize_coeffs(const LayeredStateEps& s) {
    CoeffFields c;
    const size_t n = s.x.size();
    c.f_u.resize(n);
    c.f_v.resize(n);
    c.g_u.resize(n);
    c.g_v.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const auto k = kinetics(s.u[i], s.v[i], s.a, s.sigma);
        c.f_u[i] = k.f_u;
        c.f_v[i] = k.f_v;
        c.g_u[i] = k.g_u;
        c.g_v[i] = k.g_v;
    }
    return c;
}

}  // namespace layerstab
