#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gpdex/bench.hpp"
#include "gpdex/bounds.hpp"
#include "gpdex/designgen.hpp"
#include "gpdex/geometry.hpp"
#include "gpdex/gp.hpp"
#include "gpdex/kernels.hpp"
#include "gpdex/optimizer.hpp"

namespace {

using nlohmann::json;

gpdex::RegressionBasis basis_from_string(const std::string& name,
                                         const gpdex::DesignMatrix& X) {
  if (name == "none") return gpdex::RegressionBasis::none();
  if (name == "constant") return gpdex::RegressionBasis::constant();
  if (name == "constant-linear") return gpdex::RegressionBasis::constant_linear();
  if (name == "kernel-centers") return gpdex::RegressionBasis::kernel_centers(X.pts);
  throw std::invalid_argument(
      "unknown basis: " + name + " (none, constant, constant-linear, kernel-centers)");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_parent(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_text(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void write_trace_csv(const std::string& path,
                     const std::vector<gpdex::TracePoint>& trace) {
  std::ostringstream out;
  out << "iteration,best_value,simplex_diameter\n";
  char buf[96];
  for (const gpdex::TracePoint& t : trace) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g\n", t.eval, t.best, t.diameter);
    out << buf;
  }
  write_text(path, out.str());
}

int run_generate(const std::string& family, int n, int d, std::uint64_t seed,
                 const std::string& out) {
  const gpdex::DesignFamily fam = gpdex::design_family_from_string(family);
  const gpdex::DesignMatrix X = gpdex::generate_design(fam, n, d, seed);
  ensure_parent(out);
  gpdex::write_design_csv(out, X);
  std::printf("generate: %s n=%d d=%d seed=%llu -> %s\n", gpdex::to_string(fam).c_str(),
              n, d, static_cast<unsigned long long>(seed), out.c_str());
  return 0;
}

int run_evaluate(const std::string& design_path, const std::string& kernel_path,
                 const std::string& basis_name, double delta, int grid_res,
                 const std::string& report_path) {
  const gpdex::DesignMatrix X = gpdex::read_design_csv(design_path);
  const gpdex::KernelSpec spec = gpdex::load_kernel_spec(kernel_path);
  const gpdex::RegressionBasis basis = basis_from_string(basis_name, X);
  const gpdex::SpectralConfig spectral = gpdex::SpectralConfig::defaults(X.d());
  const gpdex::CandidateGrid grid = gpdex::CandidateGrid::regular(X.d(), grid_res);
  const gpdex::MetricReport rep = gpdex::evaluate_all(X, spec, basis, delta, spectral, grid);
  write_text(report_path, rep.to_json());
  std::printf("evaluate: n=%d d=%d grid=%d flags=%zu -> %s\n", rep.n, rep.d,
              rep.grid_resolution, rep.flags.size(), report_path.c_str());
  return 0;
}

int run_optimize(const std::string& objective_name, const std::string& config_path,
                 const std::string& init, const std::string& out_path,
                 const std::string& trace_path) {
  const json cfg = json::parse(slurp(config_path));
  const int n = cfg.value("n", 23);
  const int d = cfg.value("d", 2);
  const std::uint64_t seed = cfg.value("seed", std::uint64_t{1});
  if (!cfg.contains("kernel"))
    throw std::invalid_argument("optimize config needs a kernel");
  const gpdex::KernelSpec spec = gpdex::kernel_spec_from_json(cfg.at("kernel").dump());

  gpdex::DesignMatrix start;
  if (init == "lattice")
    start = gpdex::generate_design(gpdex::DesignFamily::TriangularLattice, n, d, seed);
  else
    start = gpdex::read_design_csv(init);
  if (start.n() != n || start.d() != d)
    throw std::invalid_argument("initial design shape does not match config n/d");

  const gpdex::RegressionBasis basis =
      basis_from_string(cfg.value("basis", std::string("none")), start);
  const gpdex::CandidateGrid grid =
      gpdex::CandidateGrid::regular(d, cfg.value("grid_resolution", 0));
  const gpdex::ObjectiveKind kind = gpdex::objective_kind_from_string(objective_name);
  const gpdex::Objective target = gpdex::Objective::make(kind, spec, basis, grid);

  gpdex::NmConfig nm;
  nm.max_evals = cfg.value("budget", nm.max_evals);
  nm.init_spread = cfg.value("init_spread", nm.init_spread);
  nm.tol_diam = cfg.value("tol_diam", nm.tol_diam);
  nm.tol_spread = cfg.value("tol_spread", nm.tol_spread);
  nm.penalty_coeff = cfg.value("penalty", nm.penalty_coeff);

  const int stages = cfg.value("stages", 1);
  gpdex::OptimResult res;
  if (stages > 1) {
    if (!cfg.contains("source"))
      throw std::invalid_argument("continuation (stages > 1) needs a source objective");
    const json& s = cfg.at("source");
    const gpdex::KernelSpec sspec =
        s.contains("kernel") ? gpdex::kernel_spec_from_json(s.at("kernel").dump()) : spec;
    const gpdex::RegressionBasis sbasis =
        s.contains("basis") ? basis_from_string(s.at("basis").get<std::string>(), start)
                            : basis;
    const gpdex::ObjectiveKind skind =
        gpdex::objective_kind_from_string(s.value("objective", objective_name));
    const gpdex::Objective source = gpdex::Objective::make(skind, sspec, sbasis, grid);
    gpdex::HomotopyConfig h;
    h.stages = stages;
    h.nm = nm;
    res = gpdex::homotopy_optimize(source, target, start, h);
  } else {
    res = gpdex::nelder_mead(target, start, nm);
  }

  ensure_parent(out_path);
  gpdex::write_design_csv(out_path, res.design);
  if (!trace_path.empty()) write_trace_csv(trace_path, res.trace);
  std::printf("optimize: %s value=%.17g evals=%ld converged=%d -> %s\n",
              gpdex::to_string(kind).c_str(), res.value, res.evals,
              res.converged ? 1 : 0, out_path.c_str());
  return 0;
}

int run_figure(const std::string& which, std::uint64_t seed, long budget,
               const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const gpdex::FigureResult fig = gpdex::reproduce_figure(which, seed, budget);
  const std::string base = out_dir + "/" + which;
  gpdex::write_design_csv(base + "_design.csv", fig.result.design);
  write_trace_csv(base + "_trace.csv", fig.result.trace);
  json stats;
  stats["name"] = fig.name;
  stats["value"] = fig.result.value;
  stats["evals"] = fig.result.evals;
  stats["converged"] = fig.result.converged;
  stats["nn_distance_cv"] = fig.nn_cv;
  stats["mean_corner_distance"] = fig.mean_corner_dist;
  stats["qj_mean_left"] = fig.qj_mean_left;
  stats["qj_mean_right"] = fig.qj_mean_right;
  write_text(base + "_stats.json", stats.dump(2) + "\n");
  std::printf("figure: %s value=%.17g evals=%ld -> %s_{design,trace,stats}\n",
              which.c_str(), fig.result.value, fig.result.evals, base.c_str());
  return 0;
}

int run_bench(const std::string& config_path, const std::string& out_dir) {
  const gpdex::BenchConfig cfg = gpdex::load_bench_config(config_path);
  std::filesystem::create_directories(out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const gpdex::BenchResult res = gpdex::run_benchmark(cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(out_dir + "/bench_result.json", res.result_json());
  write_text(out_dir + "/bench_raw.csv", res.raw_csv());
  std::printf("bench: %d replications x %zu families in %.1fs -> %s\n",
              res.replications, res.families.size(), secs, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian process emulation error bounds, designs and benchmarks"};
  app.require_subcommand(1);

  std::string g_family, g_out;
  int g_n = 0, g_d = 0;
  std::uint64_t g_seed = 1;
  CLI::App* gen = app.add_subcommand("generate", "Sample a design family to CSV");
  gen->add_option("--family", g_family,
                  "random-uniform|random-lhs|maximin-lhs|s-optimal-lhs|triangular-lattice")
      ->required();
  gen->add_option("--n", g_n, "number of points")->required();
  gen->add_option("--d", g_d, "dimension")->required();
  gen->add_option("--seed", g_seed, "random seed (default 1)");
  gen->add_option("--out", g_out, "output design CSV")->required();

  std::string e_design, e_kernel, e_basis = "none", e_report;
  double e_delta = 1e-15;
  int e_grid = 0;
  CLI::App* ev = app.add_subcommand("evaluate", "Error-bound report for a design");
  ev->add_option("--design", e_design, "design CSV")->required();
  ev->add_option("--kernel", e_kernel, "kernel spec JSON file")->required();
  ev->add_option("--basis", e_basis, "none|constant|constant-linear|kernel-centers");
  ev->add_option("--delta", e_delta, "unit roundoff for the rounding bound (default 1e-15)");
  ev->add_option("--grid", e_grid, "grid resolution per axis (0 = dimension default)");
  ev->add_option("--report", e_report, "output report JSON")->required();

  std::string o_objective, o_config, o_init = "lattice", o_out, o_trace;
  CLI::App* opt = app.add_subcommand("optimize", "Minimize a design objective");
  opt->add_option("--objective", o_objective,
                  "nominal-sup|nominal-two-regime|numeric-floor|numeric-floor-two-regime|param-sup")
      ->required();
  opt->add_option("--config", o_config, "optimizer config JSON")->required();
  opt->add_option("--init", o_init, "'lattice' or an initial design CSV (default lattice)");
  opt->add_option("--out", o_out, "output design CSV")->required();
  opt->add_option("--trace", o_trace, "progress CSV (iteration, best value, diameter)");

  std::string f_which, f_out;
  std::uint64_t f_seed = 1;
  long f_budget = 0;
  CLI::App* fig = app.add_subcommand("figure", "Run a named optimization preset");
  std::string which_help;
  for (const std::string& name : gpdex::figure_names())
    which_help += (which_help.empty() ? "" : "|") + name;
  fig->add_option("--which", f_which, which_help)->required();
  fig->add_option("--seed", f_seed, "random seed (default 1)");
  fig->add_option("--budget", f_budget, "per-stage evaluation budget override");
  fig->add_option("--out", f_out, "output directory")->required();

  std::string b_config, b_out;
  CLI::App* ben = app.add_subcommand("bench", "Monte-Carlo IMSPE design comparison");
  ben->add_option("--config", b_config, "bench config JSON")->required();
  ben->add_option("--out-dir", b_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return run_generate(g_family, g_n, g_d, g_seed, g_out);
    if (ev->parsed())
      return run_evaluate(e_design, e_kernel, e_basis, e_delta, e_grid, e_report);
    if (opt->parsed()) return run_optimize(o_objective, o_config, o_init, o_out, o_trace);
    if (fig->parsed()) return run_figure(f_which, f_seed, f_budget, f_out);
    if (ben->parsed()) return run_bench(b_config, b_out);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "gpdex: %s\n", e.what());
    return 2;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "gpdex: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gpdex: %s\n", e.what());
    return 1;
  }
  return 0;
}
