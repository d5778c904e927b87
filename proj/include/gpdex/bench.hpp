#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gpdex/designgen.hpp"
#include "gpdex/geometry.hpp"
#include "gpdex/gp.hpp"
#include "gpdex/kernels.hpp"

namespace gpdex {

// One design family under test: either a fixed point set benchmarked as-is
// on every replication, or a named generator redrawn per replication.
struct BenchEntry {
  std::string name;
  bool fixed = false;
  DesignMatrix design;                          // fixed entries
  DesignFamily family = DesignFamily::RandomLhs;  // generated entries

  static BenchEntry fixed_design(std::string name, DesignMatrix X);
  static BenchEntry generated(DesignFamily family);
};

struct BenchConfig {
  KernelSpec spec = KernelSpec::stationary_iso(1.0, 2, 1.0);  // exp(-|u-v|^2)
  int n = 23;
  int d = 2;
  int replications = 50;
  int n_test = 100;
  std::vector<BenchEntry> entries;
  std::uint64_t seed = 0;
  double sampling_nugget = 1e-10;  // surface draws only
  // Off by default: emulators fit the plain kernel matrix. When set, the
  // sampling nugget is also added to the emulators' kernel matrices (final
  // fits in both parameter modes; the likelihood search stays nugget-free).
  bool emulator_nugget = false;
  // Estimated-parameter mode: constant-trend profile likelihood started at
  // these length-scales. True-parameter mode interpolates with the known
  // zero-mean model.
  Eigen::VectorXd mle_start_rho;
  MleOptions mle;

  static BenchConfig desk();  // Table-1 layout at 50 replications
};

// Zero-mean draw with covariance Psi + nugget I over the rows of points,
// deterministic per seed.
Eigen::VectorXd draw_gp_surface(const KernelSpec& spec, const Eigen::MatrixXd& points,
                                double nugget, std::uint64_t seed);

struct BenchCell {
  double imspe = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
  std::string error;  // recorded, run continues
};

struct FamilySummary {
  std::string name;
  double true_mean = 0.0, true_median = 0.0;
  double est_mean = 0.0, est_median = 0.0;
  int true_count = 0, true_missing = 0;
  int est_count = 0, est_missing = 0;
};

// Raw cells are indexed (replication, entry, mode 0=true 1=estimated) and the
// whole table is bit-reproducible for a given config: every replication
// derives its own random streams from the master seed by counter, so thread
// scheduling cannot change any value.
struct BenchResult {
  std::vector<std::string> families;
  int replications = 0;
  // Config echo carried into the result file.
  int n = 0, d = 0, n_test = 0;
  std::uint64_t seed = 0;
  double sampling_nugget = 0.0;
  bool emulator_nugget = false;
  std::string kernel;  // kernel spec as JSON text
  std::vector<BenchCell> cells;

  const BenchCell& at(int rep, int entry, int mode) const;
  std::vector<FamilySummary> summarize() const;
  std::string raw_csv() const;      // replication,family,paramMode,imspe
  std::string result_json() const;  // aggregates; no timing, fully reproducible
};

// Per replication: generate this replication's random designs and a fresh
// uniform test set (test points colliding exactly with a design point are
// redrawn), then for every entry draw one surface on its design plus the
// test set and score both parameter modes by the mean squared prediction
// error over the test points. Replications run in parallel, capped by the
// GPDEX_THREADS environment variable.
//
// Stream layout (master seed m, F entries, replication r):
//   test points        stream r*(2F+1)
//   entry i generation stream r*(2F+1) + 1 + 2i
//   entry i draw       stream r*(2F+1) + 2 + 2i
BenchResult run_benchmark(const BenchConfig& cfg);

BenchConfig bench_config_from_json(const std::string& text);
BenchConfig load_bench_config(const std::string& path);

}  // namespace gpdex
