#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "gpdex/geometry.hpp"

namespace fs = std::filesystem;

namespace {

const std::string cli = GPDEX_CLI_PATH;

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() / "gpdex_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
  const int status = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("generate writes the requested design") {
  TempDir t;
  const std::string out = t / "d.csv";
  CHECK(run("generate --family random-lhs --n 10 --d 2 --seed 7 --out " + out) == 0);
  const gpdex::DesignMatrix X = gpdex::read_design_csv(out);
  CHECK(X.n() == 10);
  CHECK(X.d() == 2);
  CHECK_NOTHROW(X.require_in_unit_box());
  // same invocation, same bytes
  const std::string out2 = t / "d2.csv";
  CHECK(run("generate --family random-lhs --n 10 --d 2 --seed 7 --out " + out2) == 0);
  CHECK(slurp(out) == slurp(out2));
}

TEST_CASE("argument errors exit with 2") {
  TempDir t;
  CHECK(run("generate --family no-such --n 5 --d 2 --out " + (t / "x.csv")) == 2);
  CHECK(run("generate --unknown-flag") == 2);
  CHECK(run("evaluate --design " + (t / "absent.csv") + " --kernel " + (t / "absent.json") +
            " --report " + (t / "r.json")) == 2);
  CHECK(run("nonsense") == 2);
}

TEST_CASE("evaluate emits a full report") {
  TempDir t;
  const std::string design = t / "d.csv";
  const std::string kernel = t / "k.json";
  const std::string report = t / "rep.json";
  REQUIRE(run("generate --family maximin-lhs --n 23 --d 2 --seed 1 --out " + design) == 0);
  write(kernel, R"({"sigma2": 1.0, "rho": [1.0, 1.0]})");
  CHECK(run("evaluate --design " + design + " --kernel " + kernel + " --basis constant" +
            " --report " + report) == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(report));
  for (const char* key : {"fill_distance", "separation_q", "nominal_bound", "stability_g",
                          "lambda_min_bound", "param_bound_sup", "rounding_bound"}) {
    INFO(key);
    REQUIRE(j.contains(key));
    REQUIRE_FALSE(j.at(key).is_null());
    CHECK(std::isfinite(j.at(key).get<double>()));
  }
  CHECK(j.at("flags").empty());
}

TEST_CASE("optimize improves the start and logs progress") {
  TempDir t;
  const std::string cfg = t / "cfg.json";
  const std::string out = t / "opt.csv";
  const std::string trace = t / "trace.csv";
  write(cfg, R"({
    "n": 8, "d": 2, "seed": 3,
    "kernel": {"sigma2": 1.0, "rho": [1.0, 1.0]},
    "grid_resolution": 21, "budget": 600
  })");
  CHECK(run("optimize --objective nominal-sup --config " + cfg + " --out " + out +
            " --trace " + trace) == 0);
  const gpdex::DesignMatrix X = gpdex::read_design_csv(out);
  CHECK(X.n() == 8);
  CHECK_NOTHROW(X.require_in_unit_box());
  const std::string log = slurp(trace);
  CHECK(log.rfind("iteration,best_value,simplex_diameter\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') >= 2);
}

TEST_CASE("bench output is reproducible byte for byte") {
  TempDir t;
  const std::string cfg = t / "bench.json";
  write(cfg, R"({
    "n": 8, "d": 2, "replications": 3, "n_test": 30, "seed": 5,
    "entries": ["maximin-lhs", "random-uniform"]
  })");
  CHECK(run("bench --config " + cfg + " --out-dir " + (t / "a")) == 0);
  CHECK(run("bench --config " + cfg + " --out-dir " + (t / "b")) == 0);
  CHECK(slurp(t / "a/bench_raw.csv") == slurp(t / "b/bench_raw.csv"));
  CHECK(slurp(t / "a/bench_result.json") == slurp(t / "b/bench_result.json"));
  CHECK_FALSE(slurp(t / "a/bench_raw.csv").empty());
}

TEST_CASE("figure preset drops design, trace and stats") {
  TempDir t;
  CHECK(run("figure --which fig2-left --budget 150 --out " + (t / "figs")) == 0);
  CHECK(fs::exists(t.dir / "figs/fig2-left_design.csv"));
  CHECK(fs::exists(t.dir / "figs/fig2-left_trace.csv"));
  const nlohmann::json j = nlohmann::json::parse(slurp(t / "figs/fig2-left_stats.json"));
  CHECK(j.at("name") == "fig2-left");
  CHECK(j.contains("nn_distance_cv"));
}

TEST_CASE("unwritable output reports a runtime failure, exit 1") {
  TempDir t;
  const std::string design = t / "d.csv";
  REQUIRE(run("generate --family random-lhs --n 5 --d 2 --seed 1 --out " + design) == 0);
  const std::string kernel = t / "k.json";
  write(kernel, R"({"sigma2": 1.0, "rho": [1.0, 1.0]})");
  CHECK(run("evaluate --design " + design + " --kernel " + kernel +
            " --report /proc/gpdex_nonexistent/r.json") == 1);
}
