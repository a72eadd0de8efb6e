#include <catch_amalgamated.hpp>

#include <numbers>
#include <sstream>

#include "support.hpp"

using namespace rbv;
using Catch::Approx;

TEST_CASE("build_grid: full box, disk mask, empty domain", "[grid]") {
  auto g = build_grid(1, {0, 0, 0}, 0.01, {101, 1, 1});
  CHECK(g->size() == 101);
  CHECK(g->masked_count() == 101);
  CHECK(g->coord(100)[0] == Approx(1.0));

  auto disk = build_grid(2, {-1, -1, 0}, 0.1, {21, 21, 1}, [](const Point& x) { return norm(x, 2) < 1.0; });
  CHECK(!disk->masked(0));
  CHECK(!disk->masked(20));
  CHECK(disk->masked(disk->flat_index({10, 10, 0})));
  std::size_t expected = 0;  // direct count of lattice points in the open unit disk
  for (int a = -10; a <= 10; ++a)
    for (int b = -10; b <= 10; ++b)
      if (a * a + b * b < 100) ++expected;
  CHECK(disk->masked_count() == expected);

  try {
    build_grid(1, {0, 0, 0}, 0.5, {3, 1, 1}, [](const Point& x) { return x[0] > 10; });
    FAIL("expected EmptyDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_domain);
  }
  CHECK_THROWS_AS(build_grid(1, {0, 0, 0}, 0.5, {1, 1, 1}), Error);
}

TEST_CASE("sample_catalog: linear, power weight, unknown name", "[grid][catalog]") {
  auto g = test::line(0, 1, 0.125);
  auto f = sample_catalog(g, "linear", {{"slope", 1}});
  for (std::size_t i = 0; i < g->size(); ++i) CHECK(f[i] == g->coord(i)[0]);

  auto gw = test::line(-1, 1, 0.125);
  auto w = sample_catalog(gw, "power_weight", {{"alpha", 0.5}});
  CHECK(w.kind() == FieldKind::weight);
  for (std::size_t i = 0; i < gw->size(); ++i) {
    const double x = std::abs(gw->coord(i)[0]);
    if (x > 0) CHECK(w[i] == Approx(std::sqrt(x)).epsilon(1e-14));
  }
  try {
    sample_catalog(g, "nosuch");
    FAIL("expected UnknownCatalogEntry");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_catalog_entry);
  }
  CHECK_THROWS_AS(sample_catalog(g, "linear", {{"nosuch", 1}}), Error);
}

TEST_CASE("power_weight origin node carries a cell mean", "[catalog]") {
  const double h = 1.0 / 64;
  auto g = test::line(-1, 1, h);
  const std::size_t origin = 64;
  REQUIRE(g->coord(origin)[0] == 0.0);
  // 1D closed forms: mean of |x|^a over [-h/2, h/2] is (h/2)^a / (a + 1).
  auto neg = sample_catalog(g, "power_weight", {{"alpha", -0.5}});
  CHECK(neg[origin] == Approx(std::pow(h / 2, -0.5) / 0.5).epsilon(1e-12));
  auto pos = sample_catalog(g, "power_weight", {{"alpha", 0.5}});
  CHECK(pos[origin] == Approx(1.0 / (std::pow(h / 2, -0.5) / 0.5)).epsilon(1e-12));
  CHECK(sample_catalog(g, "power_weight", {{"alpha", 1.5}})[origin] == 0.0);
}

TEST_CASE("riemann_integral and weighted_measure", "[quadrature]") {
  const double h = 1e-3;
  auto g = test::line(0, 1, h);
  CHECK(riemann_integral(sample_catalog(g, "constant"), WholeDomain{}) == Approx(1.0).margin(h * (1 + 1e-9)));
  CHECK(riemann_integral(sample_catalog(g, "linear"), WholeDomain{}) == Approx(0.5).margin(h));
  try {
    riemann_integral(sample_catalog(g, "constant"), Ball{{0.5 + h / 2, 0, 0}, 1e-9});
    FAIL("expected EmptyRegion");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_region);
  }

  auto one = test::ones(g);
  CHECK(weighted_measure(one, Ball{{0.5, 0, 0}, 0.25}) == Approx(0.5).margin(2 * h));
  auto two = sample_catalog(g, "constant_weight", {{"value", 2}});
  CHECK(weighted_measure(two, Cube{{0, 0, 0}, 0.5}) == Approx(1.0).margin(4 * h));
  auto sq = sample_catalog(g, "power_weight", {{"alpha", 0.5}});
  CHECK(weighted_measure(sq, WholeDomain{}) == Approx(2.0 / 3.0).margin(0.01));
}

TEST_CASE("oscillation", "[quadrature]") {
  const double h = 1.0 / 256;
  auto g = test::line(-1, 1, h);
  auto x = sample_catalog(g, "linear");
  CHECK(oscillation(x, Ball{{0.5, 0, 0}, 0.25}) == Approx(0.5).margin(2 * h));
  CHECK(oscillation(sample_catalog(g, "constant", {{"value", 3}}), Ball{{0.1, 0, 0}, 0.3}) == 0.0);
  auto x2 = sample_catalog(g, "power", {{"beta", 2}});
  for (double r : {0.1, 0.25, 0.5}) CHECK(oscillation(x2, Ball{{0, 0, 0}, r}) == Approx(r * r).margin(2 * r * h));
}

TEST_CASE("gradient_fd exactness", "[gradient]") {
  auto g = test::line(0, 1, 0.01);
  auto d = gradient_fd(sample_catalog(g, "linear", {{"slope", 3}}))[0];
  for (std::size_t i = 0; i < g->size(); ++i) CHECK(d[i] == Approx(3.0).epsilon(1e-12));
  auto z = gradient_fd(sample_catalog(g, "constant", {{"value", 2}}))[0];
  for (std::size_t i = 0; i < g->size(); ++i) CHECK(z[i] == 0.0);
  auto q = gradient_fd(sample_catalog(g, "power", {{"beta", 2}}))[0];
  CHECK(q[50] == Approx(1.0).margin(1e-12));
}

namespace {

/// max |D f - f'| over nodes with both axis neighbours (central stencil).
double interior_gradient_error(double h) {
  auto g = test::square(0, 1, h);
  auto f = test::sample(g, [](const Point& x) { return std::sin(2 * x[0]) * std::cos(3 * x[1]); });
  auto grad = gradient_fd(f);
  double err = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    const auto k = g->multi_index(i);
    if (k[0] == 0 || k[1] == 0 || k[0] + 1 == g->shape()[0] || k[1] + 1 == g->shape()[1]) continue;
    const Point x = g->coord(i);
    err = std::max(err, std::abs(grad[0][i] - 2 * std::cos(2 * x[0]) * std::cos(3 * x[1])));
    err = std::max(err, std::abs(grad[1][i] + 3 * std::sin(2 * x[0]) * std::sin(3 * x[1])));
  }
  return err;
}

}  // namespace

TEST_CASE("gradient_fd converges at second order on smooth data", "[gradient]") {
  const double e1 = interior_gradient_error(1.0 / 32), e2 = interior_gradient_error(1.0 / 64),
               e3 = interior_gradient_error(1.0 / 128);
  CHECK(std::log2(e1 / e2) >= 1.8);
  CHECK(std::log2(e2 / e3) >= 1.8);

  for (const char* name : {"sinusoid", "bump"}) {
    std::vector<double> errs;
    for (double h : {1.0 / 64, 1.0 / 128, 1.0 / 256}) {
      auto g = test::line(-0.5, 0.5, h);
      auto d = gradient_fd(sample_catalog(g, name))[0];
      double err = 0.0;
      for (std::size_t i = 1; i + 1 < g->size(); ++i) {
        const double x = g->coord(i)[0];
        double exact;
        if (std::string(name) == "sinusoid") {
          exact = std::numbers::pi * std::cos(std::numbers::pi * x);
        } else {
          const double s = 1 - x * x;
          exact = std::exp(1 - 1 / s) * (-2 * x / (s * s));
        }
        err = std::max(err, std::abs(d[i] - exact));
      }
      errs.push_back(err);
    }
    INFO(name);
    CHECK(std::log2(errs[0] / errs[1]) >= 1.8);
    CHECK(std::log2(errs[1] / errs[2]) >= 1.8);
  }
}

TEST_CASE("node_set enumeration", "[grid]") {
  auto g = test::line(0, 1, 0.1);
  auto nodes = node_set(*g, Ball{{0.5, 0, 0}, 0.15});
  REQUIRE(nodes.size() == 3);
  CHECK(g->coord(nodes[0])[0] == Approx(0.4));
  CHECK(g->coord(nodes[2])[0] == Approx(0.6));
  CHECK(node_set(*g, Ball{{5, 0, 0}, 0.5}).empty());

  auto g2 = test::square(0, 2, 1.0);
  CHECK(node_set(*g2, Ball{{1, 1, 0}, 1.01}).size() == 5);
  // Open ball: the axis neighbours sit exactly on the sphere of radius 1.
  CHECK(node_set(*g2, Ball{{1, 1, 0}, 1.0}).size() == 1);
}

TEST_CASE("ball disjointness allows tangency", "[grid]") {
  CHECK(balls_disjoint(Ball{{0, 0, 0}, 0.25}, Ball{{0.5, 0, 0}, 0.25}, 1));
  CHECK(!balls_disjoint(Ball{{0, 0, 0}, 0.25}, Ball{{0.49, 0, 0}, 0.25}, 1));
}

TEST_CASE("grid file round trip", "[io]") {
  auto g = test::square(-1, 1, 0.25, [](const Point& x) { return norm(x, 2) < 0.9; });
  auto f = test::sample(g, [](const Point& x) { return std::exp(x[0]) / 3.0 - x[1]; });
  std::stringstream ss;
  write_grid_file(ss, f);
  auto back = read_grid_file(ss);
  REQUIRE(same_geometry(back.grid(), *g));
  CHECK(back.grid().masked_count() == g->masked_count());
  for (std::size_t i = 0; i < g->size(); ++i)
    if (g->masked(i)) CHECK(back[i] == f[i]);

  std::stringstream bad("dim 1\nshape 3\norigin 0\nspacing 0.5\ncount 2\n1 0\n1 1\n");
  CHECK_THROWS_AS(read_grid_file(bad), Error);
  std::stringstream junk("dim x\n");
  try {
    read_grid_file(junk);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
  }
}

TEST_CASE("counter RNG is a pure function of (seed, stream, counter)", "[rng]") {
  CounterRng a(42, 1), b(42, 1), c(42, 2);
  for (std::uint64_t k = 0; k < 100; ++k) {
    CHECK(a.draw(k) == b.draw(k));
    const double u = a.uniform(k);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(a.below(k, 7) < 7);
  }
  int same = 0;
  for (std::uint64_t k = 0; k < 100; ++k) same += a.draw(k) == c.draw(k);
  CHECK(same == 0);
}

TEST_CASE("parallel_map is independent of the worker count", "[parallel]") {
  auto run = [](int threads) {
    parallel::set_thread_count(threads);
    return parallel::parallel_map<double>(10000, [](std::size_t i) { return std::sin(0.001 * i); });
  };
  const auto one = run(1), four = run(4);
  parallel::set_thread_count(1);
  CHECK(one == four);
}
