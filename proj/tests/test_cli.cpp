#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "layerstab/cli_io.hpp"
#include "layerstab/spectral.hpp"

using namespace layerstab;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("layerstab_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int call(std::vector<std::string> args, std::string* err_text = nullptr) {
    args.insert(args.begin(), "layerstab");
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream err;
    const int rc = main_entry(static_cast<int>(argv.size()), argv.data(), err);
    if (err_text) *err_text = err.str();
    return rc;
}

RunConfig parse(std::vector<std::string> args) {
    args.insert(args.begin(), "layerstab");
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    return parse_cli(static_cast<int>(argv.size()), argv.data());
}

std::string cache_dir() { return (scratch() / "cache").string(); }

}  // namespace

TEST_CASE("axis specifications") {
    const auto a = parse_axis("k2:1:100:3:log");
    CHECK(a.name == "k2");
    CHECK(a.log);
    const auto v = a.values();
    REQUIRE(v.size() == 3);
    CHECK(v[1] == doctest::Approx(10.0));
    CHECK(parse_axis("k1:0:1:5").values()[4] == 1.0);
    CHECK_THROWS_AS(parse_axis("k1:0:1"), UsageError);
    CHECK_THROWS_AS(parse_axis("k1:a:1:3"), UsageError);
    CHECK_THROWS_AS(parse_axis("k1:0:1:0"), UsageError);
}

TEST_CASE("sweep points are row-major and the parallel map keeps their order") {
    const auto pts = sweep_points({parse_axis("k1:1:2:2"), parse_axis("k2:10:30:3")});
    REQUIRE(pts.size() == 6);
    CHECK(pts[1] == std::vector<double>{1, 20});
    CHECK(pts[3] == std::vector<double>{2, 10});
    for (int threads : {1, 4}) {
        const auto rows = parallel_map(pts, threads, [](const std::vector<double>& p) -> std::vector<std::string> {
            if (p[1] == 20) throw RegimeError("bad point");
            return {std::to_string(p[0] * p[1])};
        });
        REQUIRE(rows.size() == 6);
        CHECK(rows[0].values[0] == std::to_string(10.0));
        CHECK(rows[1].error == "bad point");
        CHECK(rows[1].values.empty());
        CHECK(rows[5].point == std::vector<double>{2, 30});
    }
}

TEST_CASE("config file values yield to command-line flags") {
    const auto cfgp = scratch() / "run.cfg";
    std::ofstream(cfgp) << "# comment\na = 9\nk1 = 0.01\n\nk2 = 2.5\n";
    const auto c = parse({"hopf", "--config", cfgp.string(), "--a", "11"});
    CHECK(c.params.a == 11);
    CHECK(c.params.k1 == 0.01);
    CHECK(c.params.k2 == 2.5);
    bool found = false;
    for (const auto& [k, v] : c.resolved) found = found || (k == "a" && v == "11");
    CHECK(found);
}

TEST_CASE("usage errors exit with code 1") {
    const auto cfgp = scratch() / "bad.cfg";
    std::ofstream(cfgp) << "a = 9\nbogus = 1\n";
    std::string err;
    CHECK(call({"nullclines", "--config", cfgp.string()}, &err) == 1);
    CHECK(err.find("bogus") != std::string::npos);
    CHECK(call({"hopf", "--k1", "0.02"}) == 1);
    CHECK(call({"nullclines", "--json", "a.json", "--csv", "a.csv"}) == 1);
    CHECK(call({"nullclines", "--no-such-flag"}) == 1);
    CHECK(call({"validate"}) == 1);
}

TEST_CASE("regime violations exit with code 2") {
    const auto out = scratch() / "n.json";
    CHECK(call({"nullclines", "--a", "5", "--out", out.string()}) == 2);
    CHECK(call({"nullclines", "--eps", "-1", "--out", out.string()}) == 2);
}

TEST_CASE("nullclines output carries the header and is reproducible") {
    const auto a = scratch() / "n1.csv", b = scratch() / "n2.csv";
    REQUIRE(call({"nullclines", "--csv", a.string(), "--samples", "20"}) == 0);
    REQUIRE(call({"nullclines", "--csv", b.string(), "--samples", "20", "--threads", "3"}) == 0);
    const auto text = slurp(a);
    CHECK(text.rfind("# layerstab 1.0.0\n", 0) == 0);
    CHECK(text.find("# command = nullclines") != std::string::npos);
    CHECK(text.find("# samples = 20") != std::string::npos);
    CHECK(text.find("threads") == std::string::npos);
    CHECK(text == slurp(b));
}

TEST_CASE("classify uses the cache on a warm start") {
    const auto out = scratch() / "c.json";
    REQUIRE(call({"classify", "--k1", "0.1", "--k2", "5", "--json", out.string(), "--cache-dir", cache_dir()}) == 0);
    CHECK(slurp(out).find("Gamma3-2") != std::string::npos);
    const long before = eigen_solve_count();
    std::string err;
    REQUIRE(call({"classify", "--k1", "0.01", "--k2", "5", "--json", out.string(), "--cache-dir", cache_dir()}, &err) ==
            0);
    CHECK(eigen_solve_count() == before);
    CHECK(err.find("eigen solves: 0") != std::string::npos);
    CHECK(slurp(out).find("\"label\"") != std::string::npos);
}

TEST_CASE("sweep output does not depend on the thread count") {
    const auto a = scratch() / "s1.csv", b = scratch() / "s4.csv";
    const std::vector<std::string> common = {"sweep", "--axis", "k1:0.002:0.03:4", "--axis", "k2:0.5:50:3:log",
                                             "--cache-dir", cache_dir()};
    auto args = common;
    args.insert(args.end(), {"--csv", a.string(), "--threads", "1"});
    REQUIRE(call(args) == 0);
    args = common;
    args.insert(args.end(), {"--csv", b.string(), "--threads", "4"});
    REQUIRE(call(args) == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a).find("Gamma1") != std::string::npos);
}

TEST_CASE("help exits with code 0") { CHECK(call({"--help"}) == 0); }

TEST_CASE("tabular commands honour the JSON format") {
    const auto out = scratch() / "t.json";
    REQUIRE(call({"turing-curve", "--samples", "4", "--json", out.string(), "--cache-dir", cache_dir()}) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["header"]["command"] == "turing-curve");
    CHECK(j["columns"] == nlohmann::json::array({"k1", "xi_k1", "error"}));
    REQUIRE(j["rows"].size() == 4);
    CHECK(j["rows"][0][1].is_number());
    CHECK(j["rows"][0][2].is_null());
    CHECK(j["summary"]["rho0_star"].is_number());
    CHECK(call({"hopf", "--k1", "0.02", "--k2", "1000", "--format", "csv"}) == 1);
}
