#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "gpdex/geometry.hpp"
#include "gpdex/rng.hpp"
#include "oracles.hpp"

using namespace gpdex;

namespace {

DesignMatrix single(double x, double y) {
  Eigen::MatrixXd p(1, 2);
  p << x, y;
  return DesignMatrix(p);
}

}  // namespace

TEST_CASE("metric distances under linear maps") {
  Eigen::VectorXd u(2), v(2);
  u << 0.3, 0.4;
  v << 0.0, 0.0;
  CHECK(mahalanobis_distance(Anisotropy::isotropic(2, 10.0), u, v) == doctest::Approx(5.0));
  CHECK(mahalanobis_distance(Anisotropy::isotropic(2, 2.0), u, v) == doctest::Approx(1.0));
  Eigen::VectorXd s(2);
  s << 1.0, 2.0;
  Eigen::VectorXd w(2);
  w << 1.0, 1.0;
  CHECK(mahalanobis_distance(Anisotropy::diagonal(s), w, v) == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("domain diameter is the worst corner pair") {
  CHECK(Anisotropy::isotropic(2, 1.0).domain_diameter() == doctest::Approx(std::sqrt(2.0)));
  Eigen::VectorXd s(2);
  s << 1.0, 2.0;
  CHECK(Anisotropy::diagonal(s).domain_diameter() == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("anisotropy rejects singular maps") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(Anisotropy{m}, std::invalid_argument);
}

TEST_CASE("regular grid includes the corners") {
  const CandidateGrid g = CandidateGrid::regular(2, 3);
  CHECK(g.pts.rows() == 9);
  bool corner = false;
  for (int i = 0; i < g.pts.rows(); ++i)
    corner = corner || (g.pts(i, 0) == 1.0 && g.pts(i, 1) == 1.0);
  CHECK(corner);
}

TEST_CASE("fill distance of the center point") {
  const DesignMatrix X = single(0.5, 0.5);
  const double h = fill_distance(X, Anisotropy::isotropic(2, 1.0), CandidateGrid::regular(2));
  CHECK(h == doctest::Approx(std::sqrt(0.5)));
  // scaling the metric scales the fill
  const double h2 = fill_distance(X, Anisotropy::isotropic(2, 3.0), CandidateGrid::regular(2));
  CHECK(h2 == doctest::Approx(3.0 * std::sqrt(0.5)));
}

TEST_CASE("separation radii") {
  Eigen::MatrixXd p(2, 2);
  p << 0.2, 0.5, 0.6, 0.5;
  const DesignMatrix X{p};
  const Separation s = separation(X, Anisotropy::isotropic(2, 1.0));
  CHECK(s.q == doctest::Approx(0.2));
  CHECK(s.qj(0) == doctest::Approx(0.2));
  CHECK(s.qj(1) == doctest::Approx(0.2));
  const Separation s2 = separation(X, Anisotropy::isotropic(2, 2.0));
  CHECK(s2.q == doctest::Approx(0.4));

  // single point and duplicate points degenerate to zero rather than throwing
  CHECK(separation(single(0.5, 0.5), Anisotropy::isotropic(2, 1.0)).q == 0.0);
  Eigen::MatrixXd dup(2, 2);
  dup << 0.5, 0.5, 0.5, 0.5;
  CHECK(separation(DesignMatrix{dup}, Anisotropy::isotropic(2, 1.0)).q == 0.0);
}

TEST_CASE("voronoi sup distances cover the box") {
  const CandidateGrid g = CandidateGrid::regular(2);
  const DesignMatrix X = single(0.5, 0.5);
  const VoronoiSup v = voronoi_sup_distances(X, Anisotropy::isotropic(2, 1.0), g);
  REQUIRE(v.sup_dist.size() == 1);
  CHECK(v.sup_dist(0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(v.owner.minCoeff() == 0);
  CHECK(v.owner.maxCoeff() == 0);

  Eigen::MatrixXd p(2, 2);
  p << 0.25, 0.5, 0.75, 0.5;
  const VoronoiSup v2 =
      voronoi_sup_distances(DesignMatrix{p}, Anisotropy::isotropic(2, 1.0), g);
  CHECK(v2.sup_dist(0) == doctest::Approx(v2.sup_dist(1)));
  CHECK(v2.sup_dist(0) == doctest::Approx(std::sqrt(0.25 * 0.25 + 0.25)));
}

TEST_CASE("union cell sup distances agree with plain voronoi for equal metrics") {
  Rng rng(4);
  const DesignMatrix X = oracle::random_design(rng, 6, 2);
  const CandidateGrid g = CandidateGrid::regular(2, 41);
  const Anisotropy A(Eigen::MatrixXd::Identity(2, 2) * 2.0);
  const VoronoiSup plain = voronoi_sup_distances(X, A, g);
  const UnionCellSup u = union_cell_sup_distances(X, A, A, g);
  for (int i = 0; i < X.n(); ++i) {
    CHECK(u.sup_d1(i) == doctest::Approx(plain.sup_dist(i)));
    CHECK(u.sup_d2(i) == doctest::Approx(plain.sup_dist(i)));
    CHECK(u.sup_euclid(i) == doctest::Approx(plain.sup_dist(i) / 2.0));
  }
}

TEST_CASE("star discrepancy closed cases") {
  CHECK(star_discrepancy(single(0.5, 0.5)) == doctest::Approx(0.75));
  CHECK(star_discrepancy(single(0.0, 0.0)) == doctest::Approx(1.0));
}

TEST_CASE("star discrepancy matches the box scan") {
  Rng rng(11);
  for (int t = 0; t < 5; ++t) {
    const DesignMatrix X = oracle::random_design(rng, 4 + 2 * t, 2);
    const double exact = star_discrepancy(X);
    const double scan = oracle::star_discrepancy_scan(X, 200);
    CHECK(std::abs(exact - scan) < 1e-12);
  }
}

TEST_CASE("design csv round trip is lossless") {
  Rng rng(7);
  const DesignMatrix X = oracle::random_design(rng, 9, 3);
  const std::string path =
      (std::filesystem::temp_directory_path() / "gpdex_test_design.csv").string();
  write_design_csv(path, X);
  const DesignMatrix Y = read_design_csv(path);
  REQUIRE(Y.n() == X.n());
  REQUIRE(Y.d() == X.d());
  CHECK((X.pts - Y.pts).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("observation csv round trip is lossless") {
  Eigen::VectorXd f(4);
  f << 0.1, -2.5, 3.25e-17, 11.0;
  const std::string path =
      (std::filesystem::temp_directory_path() / "gpdex_test_obs.csv").string();
  write_observations_csv(path, f);
  const Eigen::VectorXd g = read_observations_csv(path);
  REQUIRE(g.size() == f.size());
  CHECK((f - g).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("unit box gate names the offending coordinate") {
  Eigen::MatrixXd p(1, 2);
  p << 0.5, 1.5;
  CHECK_THROWS_AS(DesignMatrix{p}.require_in_unit_box(), std::invalid_argument);
  p << 0.5, 1.0;
  CHECK_NOTHROW(DesignMatrix{p}.require_in_unit_box());
}

TEST_CASE("rng streams are stable and decorrelated") {
  Rng a(stream_seed(42, 0));
  Rng b(stream_seed(42, 0));
  Rng c(stream_seed(42, 1));
  bool same = true, diff = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform01();
    same = same && x == b.uniform01();
    diff = diff || x != c.uniform01();
  }
  CHECK(same);
  CHECK(diff);
}
