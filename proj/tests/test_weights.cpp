#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace rbv;
using Catch::Approx;

namespace {

SampledField step_weight(const GridPtr& g) { return sample_catalog(g, "step_weight", {{"jump", 1}}); }

/// Cubes of side s whose corners sit at offset + k s inside [0, 1).
std::size_t tiles(double side, double offset) { return static_cast<std::size_t>(std::floor((1.0 - offset) / side + 1e-9)); }

}  // namespace

TEST_CASE("generate_cubes counts by tiling arithmetic", "[weights]") {
  auto g = test::line(0, 1, 1.0 / 64);
  auto fam = generate_cubes(*g, 1.0 / 16, 4, 1);
  std::size_t expected = 0;
  for (int l = 0; l < 4; ++l) expected += tiles(std::ldexp(1.0 / 16, l), 0.0);
  CHECK(expected == 30);
  CHECK(fam.cubes.size() == expected);
  CHECK(fam.provenance == CubeProvenance::dyadic);

  auto shifted = generate_cubes(*g, 1.0 / 16, 4, 2);
  for (int l = 0; l < 4; ++l) {
    const double s = std::ldexp(1.0 / 16, l);
    expected += tiles(s, s / 2);
  }
  CHECK(shifted.cubes.size() == expected);
  CHECK(shifted.provenance == CubeProvenance::shifted_dyadic);

  CHECK_THROWS_AS(generate_cubes(*g, 1.0 / 128, 2, 1), Error);
  auto coarse = test::line(0, 1, 0.5);
  try {
    generate_cubes(*coarse, 2.0, 1, 1);
    FAIL("expected NoCubes");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_cubes);
  }
}

TEST_CASE("ap_constant", "[weights]") {
  auto g = test::line(-1, 1, 1.0 / 512);
  auto fam = generate_cubes(*g, 1.0 / 16, 5, 2);
  CHECK(ap_constant(test::ones(g), 2, fam) == Approx(1.0).margin(1e-12));
  CHECK(ap_constant(sample_catalog(g, "constant_weight", {{"value", 7}}), 3, fam) == Approx(1.0).margin(1e-12));

  // On Q = [-1, 1]: <w> = 2/3 and <1/w> = 2 for w = |x|^(1/2).
  auto whole = generate_cubes(*g, 2.0, 1, 1);
  REQUIRE(whole.cubes.size() == 1);
  auto w = sample_catalog(g, "power_weight", {{"alpha", 0.5}});
  const double on_q = ap_constant(w, 2, whole);
  CHECK(on_q >= 4.0 / 3.0 - 0.02);
  CHECK(on_q == Approx(4.0 / 3.0).margin(0.02));

  // Monotone in p (Hoelder), nonincreasing.
  double prev = std::numeric_limits<double>::infinity();
  for (double p : {1.25, 1.5, 2.0, 3.0, 6.0}) {
    const double a = ap_constant(w, p, fam);
    CHECK(a <= prev * (1 + 1e-12));
    CHECK(a >= 1.0 - 1e-12);
    prev = a;
  }
}

TEST_CASE("ap_constant grows toward the A_2 boundary", "[weights]") {
  auto g = test::line(-1, 1, 1.0 / 512);
  auto fam = generate_cubes(*g, 0.125, 4, 2);
  const double base = ap_constant(test::ones(g), 2, fam);
  std::vector<double> by_alpha;
  for (double a : {0.25, 0.5, 0.75, 0.95}) by_alpha.push_back(ap_constant(sample_catalog(g, "power_weight", {{"alpha", a}}), 2, fam));
  for (std::size_t k = 1; k < by_alpha.size(); ++k) CHECK(by_alpha[k] > by_alpha[k - 1]);
  CHECK(by_alpha.front() < 3 * base);
  CHECK(by_alpha.back() > 10 * base);
}

TEST_CASE("a1_constant", "[weights]") {
  auto g = test::line(0, 1, 1.0 / 256);
  auto fam = generate_cubes(*g, 1.0 / 32, 6, 2);
  CHECK(a1_constant(test::ones(g), fam) == Approx(1.0).margin(1e-12));
  CHECK(a1_constant(sample_catalog(g, "constant_weight", {{"value", 5}}), fam) == Approx(1.0).margin(1e-12));
  auto whole = generate_cubes(*g, 1.0, 1, 1);
  CHECK(a1_constant(step_weight(g), whole) == Approx(1.5).margin(0.02));
}

TEST_CASE("rh_constant", "[weights]") {
  auto g = test::line(0, 1, 1.0 / 256);
  auto fam = generate_cubes(*g, 1.0 / 32, 6, 2);
  CHECK(rh_constant(test::ones(g), 2, fam) == Approx(1.0).margin(1e-12));
  CHECK(rh_constant(sample_catalog(g, "constant_weight", {{"value", 3}}), 4, fam) == Approx(1.0).margin(1e-12));
  auto whole = generate_cubes(*g, 1.0, 1, 1);
  CHECK(rh_constant(step_weight(g), 2, whole) == Approx(std::sqrt(2.5) / 1.5).margin(0.01));
}

TEST_CASE("estimate_rw", "[weights]") {
  auto g = test::line(-1, 1, 1.0 / 256);
  auto fam = generate_cubes(*g, 1.0 / 16, 5, 2);
  auto one = estimate_rw(test::ones(g), fam, 2.0, 1e-3);
  CHECK(one.bounded);
  CHECK(one.value <= 1.0 + 1e-3);

  auto w = sample_catalog(g, "power_weight", {{"alpha", 0.5}});
  auto est = estimate_rw(w, fam, 10.0, 1e-3);
  CHECK(est.bounded);
  CHECK(est.value > 1.0);
  CHECK(est.value < 2.0);
  // Oracle: dense scan of q -> [w]_{A_q} for the first q meeting the threshold.
  double scan = 0.0;
  for (int k = 1; k <= 4000; ++k) {
    const double q = 1.0 + k * 5e-4;
    if (ap_constant(w, q, fam) <= 10.0) {
      scan = q;
      break;
    }
  }
  CHECK(est.value == Approx(scan).margin(1.5e-3));

  // A zero node: the estimate is monotone in the threshold.
  auto z = sample_catalog(g, "power_weight", {{"alpha", 1.5}});
  auto lo = estimate_rw(z, fam, 10.0, 1e-3), hi = estimate_rw(z, fam, 100.0, 1e-3);
  CHECK(hi.value <= lo.value);
}

TEST_CASE("doubling_constant", "[weights]") {
  auto g = test::line(-1, 1, 1.0 / 512);
  std::vector<Ball> balls{{{0.1, 0, 0}, 0.2}, {{-0.3, 0, 0}, 0.25}, {{0, 0, 0}, 0.125}};
  CHECK(doubling_constant(test::ones(g), balls) == Approx(2.0).margin(0.05));

  auto g2 = test::square(-1, 1, 1.0 / 64);
  std::vector<Ball> discs{{{0, 0, 0}, 0.25}, {{0.2, -0.1, 0}, 0.3}};
  CHECK(doubling_constant(test::ones(g2), discs) == Approx(4.0).margin(0.1));

  auto w = sample_catalog(g, "power_weight", {{"alpha", 0.5}});
  std::vector<Ball> centred{{{0, 0, 0}, 0.25}};
  CHECK(doubling_constant(w, centred) == Approx(std::pow(2.0, 1.5)).margin(0.05));
}

TEST_CASE("dual_weight", "[weights]") {
  auto g = test::line(0, 1, 1.0 / 64);
  auto d1 = dual_weight(test::ones(g), 2);
  auto d4 = dual_weight(sample_catalog(g, "constant_weight", {{"value", 4}}), 2);
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(d1.sigma[i] == 1.0);
    CHECK(d4.sigma[i] == Approx(0.25).epsilon(1e-15));
  }
  auto w = sample_catalog(g, "power_weight", {{"alpha", 1.0}});
  auto d = dual_weight(w, 3);
  for (std::size_t i = 1; i < g->size(); ++i) CHECK(d.sigma[i] == Approx(std::pow(g->coord(i)[0], -0.5)).epsilon(1e-12));

  auto z = test::sample(g, [](const Point& x) { return x[0] < 0.5 ? 0.0 : 1.0; }, FieldKind::weight);
  auto dz = dual_weight(z, 2);
  CHECK(dz.infinite_nodes.size() == 32);
  CHECK(std::isinf(dz.sigma[0]));
}

TEST_CASE("weights reject bad input", "[weights]") {
  auto g = test::line(0, 1, 1.0 / 64);
  auto fam = generate_cubes(*g, 1.0 / 16, 2, 1);
  CHECK_THROWS_AS(ap_constant(test::ones(g), 1.0, fam), Error);
  CHECK_THROWS_AS(rh_constant(test::ones(g), 1.0, fam), Error);
  CHECK_THROWS_AS(dual_weight(test::ones(g), 1.0), Error);
  auto zero = sample_catalog(g, "constant_weight", {{"value", 0}});
  CHECK_THROWS_AS(ap_constant(zero, 2.0, fam), Error);
}
