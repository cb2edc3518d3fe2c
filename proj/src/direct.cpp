#include "layerstab/direct.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "layerstab/grid.hpp"
#include "layerstab/spectral.hpp"

namespace layerstab {

std::string system_name(SystemKind s) {
    switch (s) {
        case SystemKind::Decoupled2: return "DECOUPLED2";
        case SystemKind::Coupled4: return "COUPLED4";
        case SystemKind::Coupled6Delayed: return "COUPLED6_DELAYED";
    }
    return "?";
}

SystemKind parse_system(const std::string& s) {
    if (s == "DECOUPLED2" || s == "decoupled") return SystemKind::Decoupled2;
    if (s == "COUPLED4" || s == "coupled") return SystemKind::Coupled4;
    if (s == "COUPLED6_DELAYED" || s == "delayed") return SystemKind::Coupled6Delayed;
    throw RegimeError("unknown system '" + s + "' (DECOUPLED2, COUPLED4, COUPLED6_DELAYED)");
}

LinearOperator assemble_linear(SystemKind system, Mode mode, const ModelParams& p, const LayeredStateEps& s) {
    if (system == SystemKind::Coupled6Delayed && !p.delayed())
        throw RegimeError("COUPLED6_DELAYED requires a finite alpha; use COUPLED4 for alpha = infinity");
    const bool anti = mode == Mode::Antisymmetric;
    double cw = 0, cz = 0, sU = 0;
    switch (system) {
        case SystemKind::Decoupled2: break;
        case SystemKind::Coupled4:
            cw = anti ? -2.0 : 0.0;
            cz = anti ? -2.0 : 0.0;
            break;
        case SystemKind::Coupled6Delayed:
            cw = -1.0;
            cz = anti ? -2.0 : 0.0;
            sU = anti ? -1.0 : 1.0;
            break;
    }
    const int nf = system == SystemKind::Coupled6Delayed ? 3 : 2;
    const int n = s.size();
    const FvLaplacian lap(s.x);
    const auto c = linearize_coeffs(s);
    const double e = s.eps, e2 = e * e;

    LinearOperator op;
    op.n = n;
    op.fields = nf;
    op.A = BandMatrix<double>(n * nf, nf, nf);
    op.mass.assign(static_cast<size_t>(n) * nf, 1.0);
    for (int i = 0; i < n; ++i) {
        const int w = nf * i, z = w + 1;
        op.mass[w] = e * p.tau;
        op.A(w, w) += c.f_u[i] + e * p.k1 * cw;
        op.A(w, z) += c.f_v[i];
        op.A(z, w) += c.g_u[i];
        op.A(z, z) += c.g_v[i] + p.k2 * cz;
        if (nf == 3) {
            const int u = w + 2;
            op.A(w, u) += sU * e * p.k1;
            op.A(u, w) += p.alpha;
            op.A(u, u) -= p.alpha;
        }
        for (int side : {-1, 1}) {
            const int j = i + side;
            if (j < 0 || j >= n) continue;
            const double k = (side < 0 ? lap.cond[i - 1] : lap.cond[i]) / lap.w[i];
            op.A(w, w) -= e2 * k;
            op.A(w, nf * j) += e2 * k;
            op.A(z, z) -= p.d * k;
            op.A(z, nf * j + 1) += p.d * k;
        }
    }
    return op;
}

namespace {

using CVec = Eigen::VectorXcd;

struct ShiftInvert {
    const LinearOperator& op;
    cdouble sigma;
    BandLU<cdouble> lu;
    ShiftInvert(const LinearOperator& o, cdouble s) : op(o), sigma(s), lu(build(o, s)) {}
    static BandMatrix<cdouble> build(const LinearOperator& o, cdouble s) {
        const int N = o.size();
        BandMatrix<cdouble> m(N, o.A.kl(), o.A.ku());
        for (int j = 0; j < N; ++j)
            for (int i = std::max(0, j - o.A.ku()); i <= std::min(N - 1, j + o.A.kl()); ++i) m(i, j) = o.A(i, j);
        for (int i = 0; i < N; ++i) m(i, i) -= s * o.mass[i];
        return m;
    }
    void apply(const CVec& x, CVec& y) const {
        std::vector<cdouble> r(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) r[i] = op.mass[i] * x[i];
        lu.solve(r);
        y = Eigen::Map<CVec>(r.data(), static_cast<Eigen::Index>(r.size()));
    }
};

struct RitzPair {
    cdouble lam;
    CVec vec;
    double resid;
};

// Arnoldi on (A - sigma M)^{-1} M with explicit restarts toward the `want` largest |theta|.
std::vector<RitzPair> arnoldi(const ShiftInvert& si, int want, int m, int restarts, double tol) {
    const int N = si.op.size();
    m = std::min(m, N - 1);
    want = std::min(want, m - 2);
    CVec start = CVec::Ones(N);
    for (int i = 0; i < N; ++i) start[i] = cdouble(1.0 + 0.1 * std::sin(0.7 * i), 0.05 * std::cos(1.3 * i));
    std::vector<RitzPair> out;
    for (int rs = 0; rs <= restarts; ++rs) {
        Eigen::MatrixXcd V(N, m + 1);
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
        V.col(0) = start.normalized();
        int k = 0;
        for (; k < m; ++k) {
            CVec w;
            si.apply(V.col(k), w);
            for (int pass = 0; pass < 2; ++pass) {
                const CVec h = V.leftCols(k + 1).adjoint() * w;
                w -= V.leftCols(k + 1) * h;
                H.block(0, k, k + 1, 1) += h;
            }
            const double nw = w.norm();
            H(k + 1, k) = nw;
            if (nw < 1e-14) {
                ++k;
                break;
            }
            V.col(k + 1) = w / nw;
        }
        const Eigen::MatrixXcd Hk = H.topLeftCorner(k, k);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Hk);
        std::vector<int> idx(k);
        for (int i = 0; i < k; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            return std::abs(es.eigenvalues()[a]) > std::abs(es.eigenvalues()[b]);
        });
        out.clear();
        bool all = true;
        CVec next = CVec::Zero(N);
        for (int t = 0; t < std::min(want, k); ++t) {
            const int i = idx[t];
            const cdouble th = es.eigenvalues()[i];
            const CVec y = es.eigenvectors().col(i);
            const double res = std::abs(H(k, k - 1)) * std::abs(y[k - 1]) / std::abs(th);
            CVec x = V.leftCols(k) * y;
            x.normalize();
            out.push_back({si.sigma + 1.0 / th, x, res});
            if (res > tol) all = false;
            next += x;
        }
        if (all) break;
        start = next;
    }
    return out;
}

std::vector<cdouble> default_shifts(const LinearOperator& op) {
    (void)op;
    return {cdouble(0.3, 0.0), cdouble(0.02, 0.05), cdouble(0.02, 0.3)};
}

}  // namespace

std::vector<cdouble> eigs_dense(const LinearOperator& op) {
    count_eigen_solve();
    const int N = op.size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    for (int j = 0; j < N; ++j)
        for (int i = std::max(0, j - op.A.ku()); i <= std::min(N - 1, j + op.A.kl()); ++i)
            A(i, j) = op.A(i, j) / op.mass[i];
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    std::vector<cdouble> v(es.eigenvalues().data(), es.eigenvalues().data() + N);
    std::sort(v.begin(), v.end(), [](cdouble a, cdouble b) {
        return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
    });
    return v;
}

std::vector<cdouble> eigs_rightmost(const LinearOperator& op, int n_rightmost, const DirectOptions& opt) {
    count_eigen_solve();
    std::vector<cdouble> all;
    if (opt.dense) {
        all = eigs_dense(op);
    } else {
        const auto shifts = opt.shifts.empty() ? default_shifts(op) : opt.shifts;
        for (cdouble s : shifts) {
            ShiftInvert si(op, s);
            for (const auto& r : arnoldi(si, std::max(12, 2 * n_rightmost + 6), opt.krylov, opt.restarts, opt.tol)) {
                if (r.resid > 1e3 * opt.tol) continue;
                all.push_back(r.lam);
            }
        }
        // real operator: close under conjugation, then deduplicate
        const size_t n0 = all.size();
        for (size_t i = 0; i < n0; ++i)
            if (std::abs(all[i].imag()) > 1e-12 * std::max(1.0, std::abs(all[i]))) all.push_back(std::conj(all[i]));
        std::sort(all.begin(), all.end(), [](cdouble a, cdouble b) {
            return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
        });
        std::vector<cdouble> uniq;
        for (cdouble z : all) {
            bool dup = false;
            for (cdouble u : uniq)
                if (std::abs(z - u) <= 1e-8 * std::max(1e-3, std::abs(u))) dup = true;
            if (!dup) uniq.push_back(z);
        }
        all.swap(uniq);
        if (all.empty()) throw NumericalError("shift-invert Arnoldi found no converged eigenvalues");
    }
    if (static_cast<int>(all.size()) > n_rightmost) all.resize(n_rightmost);
    return all;
}

std::vector<cdouble> direct_eigs_mode(SystemKind system, Mode mode, const ModelParams& params,
                                      const LayeredStateEps& state, int n_rightmost, const DirectOptions& opt) {
    return eigs_rightmost(assemble_linear(system, mode, params, state), n_rightmost, opt);
}

std::vector<cdouble> direct_eigs(SystemKind system, const ModelParams& params, const LayeredStateEps& state,
                                 int n_rightmost, const DirectOptions& opt) {
    auto v = direct_eigs_mode(system, Mode::Symmetric, params, state, n_rightmost, opt);
    if (system != SystemKind::Decoupled2) {
        auto a = direct_eigs_mode(system, Mode::Antisymmetric, params, state, n_rightmost, opt);
        v.insert(v.end(), a.begin(), a.end());
        std::sort(v.begin(), v.end(), [](cdouble x, cdouble y) {
            return x.real() != y.real() ? x.real() > y.real() : x.imag() > y.imag();
        });
        if (static_cast<int>(v.size()) > n_rightmost) v.resize(n_rightmost);
    }
    return v;
}

std::vector<cdouble> eigenvector_near(const LinearOperator& op, cdouble lam) {
    count_eigen_solve();
    ShiftInvert si(op, lam + cdouble(1e-7, 1e-7) * std::max(1.0, std::abs(lam)));
    auto r = arnoldi(si, 1, 20, 4, 1e-10);
    const CVec& x = r.front().vec;
    return std::vector<cdouble>(x.data(), x.data() + x.size());
}


double& param_ref(ModelParams& p, const std::string& name) {
    if (name == "tau") return p.tau;
    if (name == "k1") return p.k1;
    if (name == "k2") return p.k2;
    if (name == "alpha") return p.alpha;
    if (name == "eps") return p.eps;
    if (name == "d") return p.d;
    if (name == "a") return p.a;
    if (name == "sigma") return p.sigma;
    if (name == "ell") return p.ell;
    throw RegimeError("unknown parameter '" + name + "'");
}

double rightmost_real(SystemKind system, Mode mode, const ModelParams& params, const LayeredStateEps& state,
                      const DirectOptions& opt) {
    return direct_eigs_mode(system, mode, params, state, 1, opt).front().real();
}

ThresholdResult eig_threshold(SystemKind system, Mode mode, const std::string& param, double lo, double hi,
                              const ModelParams& base, const LayeredStateEps& state, double rel_tol,
                              const DirectOptions& opt) {
    ThresholdResult r;
    ModelParams p = base;
    auto f = [&](double x) {
        param_ref(p, param) = x;
        ++r.evaluations;
        return rightmost_real(system, mode, p, state, opt);
    };
    const double flo = f(lo), fhi = f(hi);
    if ((flo > 0) == (fhi > 0))
        throw RegimeError("same-sign bracket for " + param + " on [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    r.value = find_root(f, lo, hi, rel_tol);
    r.lo = lo;
    r.hi = hi;
    param_ref(p, param) = r.value;
    r.eigenvalue = direct_eigs_mode(system, mode, p, state, 1, opt).front();
    return r;
}

}  // namespace layerstab
