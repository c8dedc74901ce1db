#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fkpz/grid.hpp"

using namespace fkpz;

TEST_CASE("interval grid at h=0.25 has the seven symmetric interior nodes") {
  DomainGrid g = build_grid(1, Shape::Interval, 0.25);
  CHECK(g.node_count() == 7);
  std::set<double> xs;
  for (const auto& p : g.nodes()) xs.insert(p[0]);
  for (double x : {-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75}) CHECK(xs.count(x) == 1);
  CHECK(g.delta(g.find(0)) == doctest::Approx(1.0));
  CHECK(g.delta(g.find(3)) == doctest::Approx(0.25));
  CHECK(g.delta(g.find(-3)) == doctest::Approx(0.25));
}

TEST_CASE("ball grid nodes are strictly inside with exact delta") {
  DomainGrid g = build_grid(2, Shape::Ball, 0.5);
  CHECK(g.node_count() == 9);
  for (int i = 0; i < g.node_count(); ++i) {
    double r = std::hypot(g.node(i)[0], g.node(i)[1]);
    CHECK(r < 1.0);
    CHECK(g.delta(i) == doctest::Approx(1.0 - r).epsilon(1e-15));
  }
}

TEST_CASE("box delta is the minimum over faces") {
  DomainGrid g = build_grid(2, Shape::Box, 0.25);
  int i = g.find(2, 3);  // (0.5, 0.75)
  REQUIRE(i >= 0);
  CHECK(g.delta(i) == doctest::Approx(0.25));
}

TEST_CASE("delta invariants: positivity, upper bound, Lipschitz across neighbors") {
  for (auto shape : {Shape::Ball, Shape::Box}) {
    DomainGrid g = build_grid(2, shape, 1.0 / 12);
    for (int i = 0; i < g.node_count(); ++i) {
      CHECK(g.delta(i) > 0.0);
      CHECK(g.delta(i) <= 0.5 * g.diameter() + 1e-15);
      const auto& c = g.lattice_coord(i);
      for (auto [di, dj] : {std::pair{1, 0}, {0, 1}}) {
        int j = g.find(c[0] + di, c[1] + dj);
        if (j >= 0) CHECK(std::abs(g.delta(i) - g.delta(j)) <= g.h() + 1e-15);
      }
    }
  }
}

TEST_CASE("node set is symmetric under reflection") {
  DomainGrid g = build_grid(2, Shape::Ball, 1.0 / 8);
  for (int i = 0; i < g.node_count(); ++i) {
    const auto& c = g.lattice_coord(i);
    CHECK(g.find(-c[0], -c[1]) >= 0);
    CHECK(g.find(c[0], -c[1]) >= 0);
    CHECK(g.find(-c[0], c[1]) >= 0);
  }
}

TEST_CASE("errors: unsupported shapes and too-coarse spacing") {
  CHECK_THROWS_AS(build_grid(2, Shape::Interval, 0.25), UnsupportedShape);
  CHECK_THROWS_AS(build_grid(1, Shape::Ball, 0.25), UnsupportedShape);
  CHECK_THROWS_AS(build_grid(3, Shape::Ball, 0.25), UnsupportedShape);
  CHECK_THROWS_AS(build_grid(2, Shape::Ball, 1.2), SpacingTooCoarse);
  CHECK_THROWS_AS(build_grid(1, Shape::Interval, 2.5), SpacingTooCoarse);
}

TEST_CASE("sample_function evaluates pointwise and rejects non-finite values") {
  DomainGrid g = build_grid(2, Shape::Ball, 0.5);
  Field ones = sample_function(g, [](const Point&) { return 1.0; });
  CHECK(ones.values.minCoeff() == 1.0);
  CHECK(ones.values.maxCoeff() == 1.0);

  const double s = 0.75;
  Field w = sample_function(g, [&](const Point& p) {
    double r2 = p[0] * p[0] + p[1] * p[1];
    return std::pow(std::max(0.0, 1.0 - r2), s);
  });
  CHECK(w.values[g.find(0, 0)] == doctest::Approx(1.0));
  int edge = g.find(1, 1);  // |x| = 0.707..., 1 - r^2 = 0.5
  CHECK(w.values[edge] == doctest::Approx(std::pow(0.5, 0.75)));

  CHECK_THROWS_AS(sample_function(g, [](const Point& p) { return 1.0 / (p[0] - p[0]); }),
                  NonFiniteSample);
}

TEST_CASE("even formulas sample symmetrically") {
  DomainGrid g = build_grid(1, Shape::Interval, 0.125);
  Field f = sample_function(g, [](const Point& p) { return p[0] * p[0]; });
  for (int i = 0; i < g.node_count(); ++i) {
    const auto& c = g.lattice_coord(i);
    int j = g.find(-c[0]);
    REQUIRE(j >= 0);
    CHECK(f.values[i] == doctest::Approx(f.values[j]));
  }
}

TEST_CASE("delta^s samples vanish at rate s toward the endpoints") {
  DomainGrid g = build_grid(1, Shape::Interval, 0.0625);
  const double s = 0.6;
  Field f = sample_function(g, [&](const Point& p) {
    return std::pow(1.0 - std::abs(p[0]), s);
  });
  int a = g.find(15);   // delta = 1/16
  int b = g.find(14);   // delta = 2/16
  CHECK(f.values[b] / f.values[a] == doctest::Approx(std::pow(2.0, s)));
}

TEST_CASE("manifest carries dimension, shape, h and node count") {
  DomainGrid g = build_grid(2, Shape::Ball, 0.25);
  std::string m = g.manifest_json();
  CHECK(m.find("\"dimension\": 2") != std::string::npos);
  CHECK(m.find("\"shape\": \"ball\"") != std::string::npos);
  CHECK(m.find("\"node_count\": " + std::to_string(g.node_count())) != std::string::npos);
}

TEST_CASE("space-time field invariants") {
  DomainGrid g = build_grid(1, Shape::Interval, 0.25);
  SpaceTimeField u;
  u.grid = &g;
  u.times = {0.0, 0.1, 0.2};
  u.levels.assign(3, Eigen::VectorXd::Zero(g.node_count()));
  CHECK_NOTHROW(u.validate());
  u.times = {0.1, 0.2, 0.3};
  CHECK_THROWS(u.validate());
  u.times = {0.0, 0.2, 0.2};
  CHECK_THROWS(u.validate());
}
