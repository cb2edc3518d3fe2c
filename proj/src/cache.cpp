#include "layerstab/cache.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "layerstab/reduced.hpp"

namespace layerstab {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

constexpr char kMagic[4] = {'L', 'S', 'T', 'B'};
constexpr std::uint32_t kFormat = 1;

class Writer {
public:
    Writer(char tag) {
        out_.append(kMagic, 4);
        u32(kFormat);
        out_.push_back(tag);
    }
    void u32(std::uint32_t v) { out_.append(reinterpret_cast<const char*>(&v), sizeof v); }
    void i32(int v) { out_.append(reinterpret_cast<const char*>(&v), sizeof v); }
    void f64(double v) { out_.append(reinterpret_cast<const char*>(&v), sizeof v); }
    void vec(const std::vector<double>& v) {
        u32(static_cast<std::uint32_t>(v.size()));
        if (!v.empty()) out_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    }
    void mat(const std::vector<std::vector<double>>& m) {
        u32(static_cast<std::uint32_t>(m.size()));
        for (const auto& r : m) vec(r);
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    Reader(const std::string& s, char tag) : s_(s) {
        if (s_.size() < 9 || std::memcmp(s_.data(), kMagic, 4) != 0) throw NumericalError("cache blob: bad magic");
        pos_ = 4;
        if (u32() != kFormat) throw NumericalError("cache blob: format version mismatch");
        if (s_[pos_++] != tag) throw NumericalError("cache blob: wrong object kind");
    }
    std::uint32_t u32() { return raw<std::uint32_t>(); }
    int i32() { return raw<int>(); }
    double f64() { return raw<double>(); }
    std::vector<double> vec() {
        const std::uint32_t n = u32();
        need(n * sizeof(double));
        std::vector<double> v(n);
        if (n) std::memcpy(v.data(), s_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return v;
    }
    std::vector<std::vector<double>> mat() {
        const std::uint32_t n = u32();
        std::vector<std::vector<double>> m(n);
        for (auto& r : m) r = vec();
        return m;
    }
    void end() const {
        if (pos_ != s_.size()) throw NumericalError("cache blob: trailing bytes");
    }

private:
    template <typename T>
    T raw() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, s_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void need(size_t n) const {
        if (pos_ + n > s_.size()) throw NumericalError("cache blob: truncated");
    }
    const std::string& s_;
    size_t pos_ = 0;
};

void put_basis(Writer& w, const SpectralBasis& b) {
    w.f64(b.d);
    w.f64(b.ell);
    w.f64(b.x_star);
    w.i32(b.star_index);
    w.vec(b.gamma);
    w.vec(b.psi_at_xstar);
    w.f64(b.q_mean);
    w.f64(b.q_min);
    w.f64(b.q_max);
    w.vec(b.x);
    w.mat(b.psi);
}

SpectralBasis get_basis(Reader& r) {
    SpectralBasis b;
    b.d = r.f64();
    b.ell = r.f64();
    b.x_star = r.f64();
    b.star_index = r.i32();
    b.gamma = r.vec();
    b.psi_at_xstar = r.vec();
    b.q_mean = r.f64();
    b.q_min = r.f64();
    b.q_max = r.f64();
    b.x = r.vec();
    b.psi = r.mat();
    return b;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string model_key(const ModelParams& p) {
    return "a=" + num(p.a) + ";sigma=" + num(p.sigma) + ";d=" + num(p.d) + ";ell=" + num(p.ell);
}

std::string reduced_key(const ReducedOptions& o) {
    return ";red=" + num(o.tol) + "," + std::to_string(o.grid_nodes) + "," + std::to_string(o.scan_points);
}

std::string steady_key(const SteadyOptions& o) {
    return ";steady=" + std::to_string(o.nodes) + "," + num(o.window) + "," + num(o.fraction) + "," + num(o.tol) + "," +
           std::to_string(o.max_newton) + "," + num(o.first_eps) + "," + num(o.min_eps_step) + "," +
           (o.constant_guess ? "c" : "r");
}

std::string slow_key(const SlowOptions& o) {
    return ";slow=" + std::to_string(o.nodes) + "," + std::to_string(o.modes) + "," + (o.keep_vectors ? "v" : "-");
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw NumericalError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_atomic(const fs::path& p, const std::string& bytes) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NumericalError("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    fs::rename(tmp, p);
}

}  // namespace

Cache::Cache(std::string dir) : dir_(std::move(dir)) {}

std::string Cache::default_dir() {
    if (const char* e = std::getenv("LAYERSTAB_CACHE_DIR"); e && *e) return e;
    return ".layerstab-cache";
}

std::optional<std::string> Cache::get(const std::string& key) const {
    if (!enabled()) return std::nullopt;
    const fs::path index = fs::path(dir_) / "index.json";
    const std::string kh = hex64(fnv1a64(key));
    if (fs::exists(index)) {
        const auto j = nlohmann::json::parse(read_file(index), nullptr, false);
        if (!j.is_discarded() && j.contains(kh) && j[kh].value("key", "") == key) {
            const fs::path blob = fs::path(dir_) / j[kh].value("blob", "");
            if (fs::exists(blob)) {
                std::string bytes = read_file(blob);
                if (hex64(fnv1a64(bytes)) + ".bin" == blob.filename().string()) {
                    ++hits_;
                    return bytes;
                }
            }
        }
    }
    ++misses_;
    return std::nullopt;
}

void Cache::put(const std::string& key, const std::string& kind, const std::string& bytes) {
    if (!enabled()) return;
    fs::create_directories(dir_);
    const std::string blob = hex64(fnv1a64(bytes)) + ".bin";
    if (!fs::exists(fs::path(dir_) / blob)) write_atomic(fs::path(dir_) / blob, bytes);
    const fs::path index = fs::path(dir_) / "index.json";
    nlohmann::json j = nlohmann::json::object();
    if (fs::exists(index)) {
        auto old = nlohmann::json::parse(read_file(index), nullptr, false);
        if (!old.is_discarded() && old.is_object()) j = std::move(old);
    }
    j[hex64(fnv1a64(key))] = {{"kind", kind}, {"key", key}, {"blob", blob}, {"bytes", bytes.size()}};
    write_atomic(index, j.dump(2) + "\n");
}

std::string serialize(const SpectralBasis& b) {
    Writer w('B');
    put_basis(w, b);
    return w.take();
}

SpectralBasis deserialize_basis(const std::string& bytes) {
    Reader r(bytes, 'B');
    SpectralBasis b = get_basis(r);
    r.end();
    return b;
}

std::string serialize(const SlepConstants& c) {
    Writer w('C');
    for (double v : {c.a, c.sigma, c.d, c.ell, c.rho0_star, c.rho0_error, c.kappa_star, c.c1_star, c.c2_star, c.c1c2,
                     c.tau_star, c.mu_star, c.fast_gap, c.v_hat, c.h_minus, c.h_plus, c.M_prime, c.x_star,
                     c.int_g_left})
        w.f64(v);
    w.vec(c.eps_samples);
    w.vec(c.rho_samples);
    w.vec(c.mu1_samples);
    const auto& d = c.delta;
    for (double v : {d.c1, d.c2, d.c1_error, d.c2_error}) w.f64(v);
    w.mat(d.c1_by_test);
    w.mat(d.c2_by_test);
    w.vec(d.c1_extrapolated_by_test);
    w.vec(d.c2_extrapolated_by_test);
    put_basis(w, c.basis);
    return w.take();
}

SlepConstants deserialize_constants(const std::string& bytes) {
    Reader r(bytes, 'C');
    SlepConstants c;
    for (double* v : {&c.a, &c.sigma, &c.d, &c.ell, &c.rho0_star, &c.rho0_error, &c.kappa_star, &c.c1_star,
                      &c.c2_star, &c.c1c2, &c.tau_star, &c.mu_star, &c.fast_gap, &c.v_hat, &c.h_minus, &c.h_plus,
                      &c.M_prime, &c.x_star, &c.int_g_left})
        *v = r.f64();
    c.eps_samples = r.vec();
    c.rho_samples = r.vec();
    c.mu1_samples = r.vec();
    auto& d = c.delta;
    for (double* v : {&d.c1, &d.c2, &d.c1_error, &d.c2_error}) *v = r.f64();
    d.c1_by_test = r.mat();
    d.c2_by_test = r.mat();
    d.c1_extrapolated_by_test = r.vec();
    d.c2_extrapolated_by_test = r.vec();
    c.basis = get_basis(r);
    r.end();
    return c;
}

std::string serialize(const LayeredStateEps& s) {
    Writer w('S');
    for (double v : {s.eps, s.a, s.sigma, s.d, s.ell, s.x_star, s.newton_residual, s.raw_residual}) w.f64(v);
    w.i32(s.newton_iterations);
    w.vec(s.x);
    w.vec(s.u);
    w.vec(s.v);
    return w.take();
}

LayeredStateEps deserialize_state(const std::string& bytes) {
    Reader r(bytes, 'S');
    LayeredStateEps s;
    for (double* v : {&s.eps, &s.a, &s.sigma, &s.d, &s.ell, &s.x_star, &s.newton_residual, &s.raw_residual})
        *v = r.f64();
    s.newton_iterations = r.i32();
    s.x = r.vec();
    s.u = r.vec();
    s.v = r.vec();
    r.end();
    return s;
}

std::string constants_key(const ModelParams& p, const ConstantsOptions& opt) {
    std::string k = "constants;" + model_key(p) + ";eps=";
    for (double e : opt.eps) k += num(e) + ",";
    return k + steady_key(opt.steady) + slow_key(opt.slow) + reduced_key(opt.reduced);
}

std::string basis_key(const ModelParams& p, const SlowOptions& opt, const ReducedOptions& ropt) {
    return "basis;" + model_key(p) + slow_key(opt) + reduced_key(ropt);
}

std::string state_key(const ModelParams& p, const SteadyOptions& opt, const ReducedOptions& ropt) {
    return "state;" + model_key(p) + ";eps=" + num(p.eps) + steady_key(opt) + reduced_key(ropt);
}

SlepConstants cached_constants(Cache& cache, const ModelParams& p, const ConstantsOptions& opt) {
    const std::string key = constants_key(p, opt);
    if (auto hit = cache.get(key)) return deserialize_constants(*hit);
    SlepConstants c = build_constants(p, opt);
    cache.put(key, "constants", serialize(c));
    return c;
}

SpectralBasis cached_basis(Cache& cache, const ModelParams& p, const SlowOptions& opt, const ReducedOptions& ropt) {
    const std::string key = basis_key(p, opt, ropt);
    if (auto hit = cache.get(key)) return deserialize_basis(*hit);
    SpectralBasis b = eig_slow(solve_reduced(p, ropt), opt);
    cache.put(key, "basis", serialize(b));
    return b;
}

LayeredStateEps cached_state(Cache& cache, const ModelParams& p, const SteadyOptions& opt,
                             const ReducedOptions& ropt) {
    const std::string key = state_key(p, opt, ropt);
    if (auto hit = cache.get(key)) return deserialize_state(*hit);
    LayeredStateEps s = solve_layered_eps(p, solve_reduced(p, ropt), opt);
    cache.put(key, "state", serialize(s));
    return s;
}

}  // namespace layerstab
