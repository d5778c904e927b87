#include "gpdex/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "json.hpp"

#include "gpdex/rng.hpp"

namespace gpdex {
namespace {

using nlohmann::json;

std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int thread_cap() {
  if (const char* env = std::getenv("GPDEX_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Emulator fit, optionally with a diagonal jitter. The jittered path builds
// the GLS solve against the jittered matrix by hand so the factorization the
// predictor reuses is the one that carried the jitter.
FittedGp fit_emulator(const DesignMatrix& X, const Eigen::VectorXd& f,
                      const KernelSpec& spec, const RegressionBasis& basis,
                      double nugget) {
  if (nugget <= 0.0) return fit_gp(X, f, spec, basis);
  FittedGp m;
  m.X = X;
  m.spec = spec;
  m.basis = basis;
  m.f = f;
  Eigen::MatrixXd K = kernel_matrix(spec, X.pts, X.pts);
  K.diagonal().array() += nugget;
  m.llt = factorize_spd(K, "emulator fit with nugget");
  m.H = basis.matrix(X, spec);
  if (m.H.cols() > 0) {
    const Eigen::MatrixXd KiH = m.llt.solve(m.H);
    m.beta = (m.H.transpose() * KiH).ldlt().solve(KiH.transpose() * f);
  }
  Eigen::VectorXd resid = f;
  if (m.beta.size() > 0) resid -= m.H * m.beta;
  m.alpha = m.llt.solve(resid);
  return m;
}

double imspe_on(const FittedGp& model, const Eigen::MatrixXd& test,
                const Eigen::VectorXd& f_test) {
  double acc = 0.0;
  for (int i = 0; i < test.rows(); ++i) {
    const double e = f_test[i] - blup_predict(model, test.row(i).transpose());
    acc += e * e;
  }
  return acc / static_cast<double>(test.rows());
}

}  // namespace

BenchEntry BenchEntry::fixed_design(std::string name, DesignMatrix X) {
  BenchEntry e;
  e.name = std::move(name);
  e.fixed = true;
  e.design = std::move(X);
  return e;
}

BenchEntry BenchEntry::generated(DesignFamily family) {
  BenchEntry e;
  e.name = to_string(family);
  e.family = family;
  return e;
}

BenchConfig BenchConfig::desk() {
  BenchConfig cfg;
  cfg.entries = {BenchEntry::generated(DesignFamily::RandomLhs),
                 BenchEntry::generated(DesignFamily::MaximinLhs),
                 BenchEntry::generated(DesignFamily::SOptimalLhs),
                 BenchEntry::generated(DesignFamily::RandomUniform)};
  return cfg;
}

Eigen::VectorXd draw_gp_surface(const KernelSpec& spec, const Eigen::MatrixXd& points,
                                double nugget, std::uint64_t seed) {
  const int m = static_cast<int>(points.rows());
  Eigen::MatrixXd K = kernel_matrix(spec, points, points);
  if (nugget > 0.0) K.diagonal().array() += nugget;
  const Eigen::LLT<Eigen::MatrixXd> llt = factorize_spd(K, "surface draw");
  Rng rng(seed);
  Eigen::VectorXd z(m);
  for (int i = 0; i < m; ++i) z[i] = rng.normal();
  return llt.matrixL() * z;
}

const BenchCell& BenchResult::at(int rep, int entry, int mode) const {
  return cells[(static_cast<std::size_t>(rep) * families.size() +
                static_cast<std::size_t>(entry)) * 2 + static_cast<std::size_t>(mode)];
}

std::vector<FamilySummary> BenchResult::summarize() const {
  const int F = static_cast<int>(families.size());
  std::vector<FamilySummary> out(static_cast<std::size_t>(F));
  for (int i = 0; i < F; ++i) {
    FamilySummary& s = out[static_cast<std::size_t>(i)];
    s.name = families[static_cast<std::size_t>(i)];
    for (int mode = 0; mode < 2; ++mode) {
      std::vector<double> vals;
      vals.reserve(static_cast<std::size_t>(replications));
      for (int r = 0; r < replications; ++r)
        if (at(r, i, mode).ok) vals.push_back(at(r, i, mode).imspe);
      const double mean =
          vals.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : std::accumulate(vals.begin(), vals.end(), 0.0) /
                             static_cast<double>(vals.size());
      const double med = median_of(vals);
      const int count = static_cast<int>(vals.size());
      const int missing = replications - count;
      if (mode == 0) {
        s.true_mean = mean;
        s.true_median = med;
        s.true_count = count;
        s.true_missing = missing;
      } else {
        s.est_mean = mean;
        s.est_median = med;
        s.est_count = count;
        s.est_missing = missing;
      }
    }
  }
  return out;
}

std::string BenchResult::raw_csv() const {
  std::ostringstream out;
  out << "replication,family,paramMode,imspe\n";
  const int F = static_cast<int>(families.size());
  for (int r = 0; r < replications; ++r)
    for (int i = 0; i < F; ++i)
      for (int mode = 0; mode < 2; ++mode) {
        const BenchCell& c = at(r, i, mode);
        out << r << ',' << families[static_cast<std::size_t>(i)] << ','
            << (mode ? "estimated" : "true") << ',';
        if (c.ok) out << format17(c.imspe);
        out << '\n';
      }
  return out.str();
}

std::string BenchResult::result_json() const {
  json j;
  j["replications"] = replications;
  json cfg;
  cfg["n"] = n;
  cfg["d"] = d;
  cfg["n_test"] = n_test;
  cfg["seed"] = seed;
  cfg["sampling_nugget"] = sampling_nugget;
  cfg["emulator_nugget"] = emulator_nugget;
  if (!kernel.empty()) cfg["kernel"] = json::parse(kernel);
  j["config"] = cfg;
  json fams = json::array();
  for (const FamilySummary& s : summarize()) {
    json block;
    block["family"] = s.name;
    block["true"] = {{"mean", s.true_mean},
                     {"median", s.true_median},
                     {"count", s.true_count},
                     {"missing", s.true_missing}};
    block["estimated"] = {{"mean", s.est_mean},
                          {"median", s.est_median},
                          {"count", s.est_count},
                          {"missing", s.est_missing}};
    fams.push_back(block);
  }
  j["families"] = fams;
  return j.dump(2) + "\n";
}

BenchResult run_benchmark(const BenchConfig& cfg) {
  if (cfg.entries.empty())
    throw std::invalid_argument("benchmark needs at least one design entry");
  if (cfg.replications < 1)
    throw std::invalid_argument("replication count must be >= 1");
  if (cfg.n < 1 || cfg.d < 1 || cfg.n_test < 1)
    throw std::invalid_argument("benchmark sizes must be positive");
  cfg.spec.validate();
  if (cfg.spec.d() != cfg.d)
    throw std::invalid_argument("kernel dimension does not match benchmark d");
  for (const BenchEntry& e : cfg.entries)
    if (e.fixed) {
      if (e.design.n() != cfg.n || e.design.d() != cfg.d)
        throw std::invalid_argument("fixed design " + e.name + " has the wrong shape");
      e.design.require_in_unit_box(1e-12);
    }

  Eigen::VectorXd rho0 = cfg.mle_start_rho;
  if (rho0.size() == 0) rho0 = Eigen::VectorXd::Constant(cfg.d, 3.0);
  if (rho0.size() != cfg.d)
    throw std::invalid_argument("mle_start_rho dimension mismatch");
  const KernelSpec start =
      KernelSpec::stationary(cfg.spec.sigma2, Eigen::MatrixXd(rho0.asDiagonal()));

  const int F = static_cast<int>(cfg.entries.size());
  const std::uint64_t stride = 2 * static_cast<std::uint64_t>(F) + 1;

  BenchResult out;
  out.replications = cfg.replications;
  out.n = cfg.n;
  out.d = cfg.d;
  out.n_test = cfg.n_test;
  out.seed = cfg.seed;
  out.sampling_nugget = cfg.sampling_nugget;
  out.emulator_nugget = cfg.emulator_nugget;
  out.kernel = kernel_spec_to_json(cfg.spec);
  for (const BenchEntry& e : cfg.entries)
    out.families.push_back(e.name.empty() ? to_string(e.family) : e.name);
  out.cells.assign(static_cast<std::size_t>(cfg.replications) *
                       static_cast<std::size_t>(F) * 2,
                   BenchCell{});

  const RegressionBasis true_basis = RegressionBasis::none();
  const RegressionBasis est_basis = RegressionBasis::constant();
  const double fit_nugget = cfg.emulator_nugget ? cfg.sampling_nugget : 0.0;

  auto cell = [&](int r, int i, int mode) -> BenchCell& {
    return out.cells[(static_cast<std::size_t>(r) * static_cast<std::size_t>(F) +
                      static_cast<std::size_t>(i)) * 2 + static_cast<std::size_t>(mode)];
  };

  auto run_rep = [&](int r) {
    const std::uint64_t base = static_cast<std::uint64_t>(r) * stride;

    std::vector<DesignMatrix> designs(static_cast<std::size_t>(F));
    try {
      for (int i = 0; i < F; ++i) {
        const BenchEntry& e = cfg.entries[static_cast<std::size_t>(i)];
        designs[static_cast<std::size_t>(i)] =
            e.fixed ? e.design
                    : generate_design(e.family, cfg.n, cfg.d,
                                      stream_seed(cfg.seed, base + 1 + 2 * static_cast<std::uint64_t>(i)));
      }
    } catch (const std::exception& ex) {
      for (int i = 0; i < F; ++i)
        for (int mode = 0; mode < 2; ++mode) cell(r, i, mode).error = ex.what();
      return;
    }

    // Fresh uniform test set; a point exactly equal to any design point of
    // this replication (or an earlier test point) is redrawn so every
    // design-plus-test point set is distinct.
    Rng trng(stream_seed(cfg.seed, base));
    Eigen::MatrixXd test(cfg.n_test, cfg.d);
    auto equals_row = [&](const Eigen::MatrixXd& m, int row, int t) {
      return (m.row(row).array() == test.row(t).array()).all();
    };
    for (int t = 0; t < cfg.n_test; ++t) {
      for (;;) {
        for (int jdim = 0; jdim < cfg.d; ++jdim) test(t, jdim) = trng.uniform01();
        bool clash = false;
        for (int i = 0; i < F && !clash; ++i)
          for (int a = 0; a < cfg.n && !clash; ++a)
            clash = equals_row(designs[static_cast<std::size_t>(i)].pts, a, t);
        for (int s = 0; s < t && !clash; ++s) clash = equals_row(test, s, t);
        if (!clash) break;
      }
    }

    for (int i = 0; i < F; ++i) {
      const DesignMatrix& X = designs[static_cast<std::size_t>(i)];
      BenchCell& ct = cell(r, i, 0);
      BenchCell& ce = cell(r, i, 1);

      Eigen::MatrixXd joint(cfg.n + cfg.n_test, cfg.d);
      joint.topRows(cfg.n) = X.pts;
      joint.bottomRows(cfg.n_test) = test;
      Eigen::VectorXd f_all;
      try {
        f_all = draw_gp_surface(cfg.spec, joint, cfg.sampling_nugget,
                                stream_seed(cfg.seed, base + 2 + 2 * static_cast<std::uint64_t>(i)));
      } catch (const std::exception& ex) {
        ct.error = ex.what();
        ce.error = ex.what();
        continue;
      }
      const Eigen::VectorXd f_design = f_all.head(cfg.n);
      const Eigen::VectorXd f_test = f_all.tail(cfg.n_test);

      try {
        const FittedGp m = fit_emulator(X, f_design, cfg.spec, true_basis, fit_nugget);
        ct.imspe = imspe_on(m, test, f_test);
        ct.ok = true;
      } catch (const std::exception& ex) {
        ct.error = ex.what();
      }

      try {
        const MleResult fit = mle_fit(X, f_design, start, est_basis, cfg.mle);
        const FittedGp m =
            cfg.emulator_nugget
                ? fit_emulator(X, f_design, fit.model.spec, est_basis, fit_nugget)
                : fit.model;
        ce.imspe = imspe_on(m, test, f_test);
        ce.ok = true;
      } catch (const std::exception& ex) {
        ce.error = ex.what();
      }
    }
  };

  const int workers = std::min(thread_cap(), cfg.replications);
  if (workers <= 1) {
    for (int r = 0; r < cfg.replications; ++r) run_rep(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const int r = next.fetch_add(1);
          if (r >= cfg.replications) return;
          run_rep(r);
        }
      });
    for (std::thread& t : pool) t.join();
  }
  return out;
}

BenchConfig bench_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  BenchConfig cfg = BenchConfig::desk();
  if (j.contains("kernel")) cfg.spec = kernel_spec_from_json(j.at("kernel").dump());
  cfg.n = j.value("n", cfg.n);
  cfg.d = j.value("d", cfg.d);
  cfg.replications = j.value("replications", cfg.replications);
  cfg.n_test = j.value("n_test", cfg.n_test);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.sampling_nugget = j.value("sampling_nugget", cfg.sampling_nugget);
  cfg.emulator_nugget = j.value("emulator_nugget", cfg.emulator_nugget);
  if (j.contains("mle_start_rho")) {
    const json& arr = j.at("mle_start_rho");
    cfg.mle_start_rho.resize(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
      cfg.mle_start_rho[static_cast<Eigen::Index>(i)] = arr.at(i).get<double>();
  }
  if (j.contains("mle")) {
    const json& m = j.at("mle");
    cfg.mle.fix_rho = m.value("fix_rho", cfg.mle.fix_rho);
    cfg.mle.max_evals = m.value("max_evals", cfg.mle.max_evals);
    cfg.mle.rho_min = m.value("rho_min", cfg.mle.rho_min);
    cfg.mle.rho_max = m.value("rho_max", cfg.mle.rho_max);
  }
  if (j.contains("entries")) {
    cfg.entries.clear();
    for (const json& e : j.at("entries")) {
      if (e.is_string()) {
        cfg.entries.push_back(
            BenchEntry::generated(design_family_from_string(e.get<std::string>())));
      } else {
        cfg.entries.push_back(BenchEntry::fixed_design(
            e.at("name").get<std::string>(),
            read_design_csv(e.at("design_csv").get<std::string>())));
      }
    }
  }
  return cfg;
}

BenchConfig load_bench_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open bench config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return bench_config_from_json(ss.str());
}

}  // namespace gpdex
