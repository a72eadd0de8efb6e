#include <catch_amalgamated.hpp>

#include <numbers>

#include "support.hpp"

using namespace rbv;
using Catch::Approx;

namespace {

std::vector<double> dyadic(int kmin, int kmax) {
  std::vector<double> r;
  for (int k = kmin; k <= kmax; ++k) r.push_back(std::ldexp(1.0, -k));
  return r;
}

}  // namespace

TEST_CASE("riesz_variation of f(x) = x on (0,1)", "[riesz]") {
  auto g = test::line(0, 1, 1.0 / 1024);
  auto f = sample_catalog(g, "linear");
  for (double p : {2.0, 3.0, 4.0}) {
    const auto sol = riesz_variation(f, test::ones(g), p, dyadic(3, 9), PackingMethod::dp_1d_exact);
    INFO("p = " << p);
    // Analytic limit: sup sum 2^p * 2 r_k = 2^p |Omega|.
    CHECK(sol.variation == Approx(2.0).epsilon(0.05));
    CHECK(sol.variation <= 2.0);
  }
  const auto zero = riesz_variation(sample_catalog(g, "constant", {{"value", 4}}), test::ones(g), 2, dyadic(3, 9),
                                    PackingMethod::dp_1d_exact);
  CHECK(zero.variation == 0.0);
  CHECK_THROWS_AS(riesz_variation(f, test::ones(g), 0.5, dyadic(3, 9), PackingMethod::dp_1d_exact), Error);
}

TEST_CASE("riesz_variation is a seminorm on a fixed candidate set", "[riesz]") {
  auto g = test::line(0, 1, 1.0 / 256);
  auto w = sample_catalog(g, "step_weight", {{"jump", 2}});
  auto f = sample_catalog(g, "sinusoid", {{"frequency", 2}});
  auto h = sample_catalog(g, "power", {{"beta", 2}});
  const auto radii = dyadic(2, 6);
  auto V = [&](const SampledField& u, double p) {
    return riesz_variation(u, w, p, radii, PackingMethod::dp_1d_exact).variation;
  };
  for (double p : {1.0, 2.0, 3.5}) {
    INFO("p = " << p);
    CHECK(V(linear_combination(1, f, 1, h), p) <= V(f, p) + V(h, p) + 1e-12);
    CHECK(V(scaled(f, -2.5), p) == Approx(2.5 * V(f, p)).epsilon(1e-12));
  }
}

TEST_CASE("riesz_variation lower-bounds refine with the grid", "[riesz]") {
  std::vector<double> values;
  for (double h : {1.0 / 128, 1.0 / 256, 1.0 / 512}) {
    auto g = test::line(0, 1, h);
    values.push_back(riesz_variation(sample_catalog(g, "linear"), test::ones(g), 2, dyadic(3, 6),
                                     PackingMethod::dp_1d_exact)
                         .variation);
  }
  CHECK(values[1] >= values[0] - 1e-8);
  CHECK(values[2] >= values[1] - 1e-8);
}

TEST_CASE("riesz_variation methods in two dimensions", "[riesz]") {
  auto g = test::square(-1, 1, 1.0 / 16);
  auto f = sample_catalog(g, "hat", {{"width", 0.9}});
  auto w = sample_catalog(g, "power_weight", {{"alpha", 0.5}});
  CHECK_THROWS_AS(riesz_variation(f, w, 2, {0.25}, PackingMethod::dp_1d_exact), Error);
  const auto gr = riesz_variation(f, w, 2, {0.125, 0.25}, PackingMethod::greedy);
  const auto ls = riesz_variation(f, w, 2, {0.125, 0.25}, PackingMethod::greedy_plus_local_search);
  CHECK(ls.total >= gr.total);
  CHECK(pairwise_disjoint(ls.collection, 2));
}

TEST_CASE("classical_riesz_1d", "[riesz]") {
  const double h = 1e-3;
  auto g = test::line(0, 1, h);
  const auto finest = finest_partition(*g);
  auto x = sample_catalog(g, "linear");
  CHECK(classical_riesz_1d(x, 2, finest) == Approx(1.0).epsilon(1e-12));
  std::vector<std::size_t> coarse{0, 17, 400, 401, 999, 1000};
  CHECK(classical_riesz_1d(x, 2, coarse) == Approx(1.0).epsilon(1e-12));

  // Closed forms of the integral of |f'|^2 on [0, 1].
  CHECK(classical_riesz_1d(sample_catalog(g, "power", {{"beta", 2}}), 2, finest) == Approx(4.0 / 3.0).epsilon(0.01));
  const auto s = sample_catalog(g, "sinusoid");
  CHECK(classical_riesz_1d(s, 2, finest) == Approx(std::numbers::pi * std::numbers::pi / 2).epsilon(0.01));

  // Refining a partition never decreases the sum.
  std::vector<std::size_t> every10;
  for (std::size_t k = 0; k <= 1000; k += 10) every10.push_back(k);
  CHECK(classical_riesz_1d(s, 3, finest) >= classical_riesz_1d(s, 3, every10));

  std::vector<std::size_t> repeated{0, 5, 5, 10};
  try {
    classical_riesz_1d(x, 2, repeated);
    FAIL("expected BadPartition");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::bad_partition);
  }
}

TEST_CASE("lipschitz_field", "[riesz]") {
  const double h = 1.0 / 64;
  auto g = test::line(-2, 2, h);
  auto l3 = lipschitz_field(sample_catalog(g, "linear", {{"slope", 3}}), 3 * h);
  for (std::size_t i = 0; i < g->size(); ++i) CHECK(l3.values[i] == Approx(3.0).epsilon(1e-12));
  auto l0 = lipschitz_field(sample_catalog(g, "constant"), 3 * h);
  for (std::size_t i = 0; i < g->size(); ++i) CHECK(l0.values[i] == 0.0);

  const double shell = 3 * h;
  auto hat = lipschitz_field(sample_catalog(g, "hat"), shell);
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double x = std::abs(g->coord(i)[0]);
    if (x < 1 - shell - 1e-9 && x > shell + 1e-9) CHECK(hat.values[i] == Approx(1.0).epsilon(1e-12));
    if (x > 1 + shell + 1e-9) CHECK(hat.values[i] == 0.0);
  }
  CHECK_THROWS_AS(lipschitz_field(sample_catalog(g, "linear"), h / 2), Error);

  const std::vector<double> levels{0.5, 0.99, 1.01, 2.0};
  auto tail = lipschitz_tail_fractions(hat, levels);
  for (std::size_t k = 1; k < tail.size(); ++k) CHECK(tail[k] <= tail[k - 1]);
  CHECK(tail.back() == 0.0);
}

TEST_CASE("weak_type_check on the hat function", "[riesz][weak]") {
  auto g = test::line(-2, 2, 1.0 / 256);
  auto f = sample_catalog(g, "hat");
  WeakTypeOptions opts;
  opts.radii = dyadic(2, 7);
  for (double p : {1.0, 2.0}) {
    const auto one = weak_type_check(f, test::ones(g), p, opts);
    const auto step = weak_type_check(f, sample_catalog(g, "step_weight", {{"jump", 1}}), p, opts);
    INFO("p = " << p);
    CHECK(one.pass);
    CHECK(step.pass);
    CHECK(one.k_max == 32 * std::pow(2.0, p));
    CHECK(one.rows.back().status == Status::pass);
  }
  // Analytic value: t^2 |{L > t}| / V_2^2 -> 1 * 2 / 8.
  const auto two = weak_type_check(f, test::ones(g), 2, opts);
  CHECK(two.max_k <= 0.5);
  CHECK(two.max_k == Approx(0.25).margin(0.05));

  auto zero = sample_catalog(g, "constant", {{"value", 0}});
  CHECK(weak_type_check(zero, test::ones(g), 2, opts).max_k == 0.0);
  CHECK_THROWS_AS(weak_type_check(sample_catalog(g, "linear"), test::ones(g), 2, opts), Error);
}
