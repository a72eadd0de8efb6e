#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace rbv;
using Catch::Approx;

namespace {

ScoredCandidates intervals(std::vector<std::tuple<double, double, double>> items) {
  ScoredCandidates c;
  c.dim = 1;
  c.p = 2;
  for (auto [center, radius, score] : items) {
    BallScore b;
    b.ball = {{center, 0, 0}, radius};
    b.score = score;
    c.items.push_back(b);
  }
  return c;
}

/// Exhaustive optimum over subsets.
double brute_force(const ScoredCandidates& c) {
  const std::size_t n = c.items.size();
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double total = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1u)) continue;
      total += c.items[i].score;
      for (std::size_t j = 0; j < i && ok; ++j) {
        if (!(mask >> j & 1u)) continue;
        const auto &a = c.items[i].ball, &b = c.items[j].ball;
        ok = std::abs(a.center[0] - b.center[0]) >= a.radius + b.radius - 1e-12;
      }
    }
    if (ok) best = std::max(best, total);
  }
  return best;
}

ScoredCandidates random_set(std::uint64_t seed) {
  CounterRng rng(seed, 99);
  std::uint64_t k = 0;
  const std::size_t n = 1 + rng.below(k++, 16);
  std::vector<std::tuple<double, double, double>> items;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = static_cast<double>(rng.below(k++, 33)) / 32;
    const double r = static_cast<double>(1 + rng.below(k++, 8)) / 32;
    items.emplace_back(c, r, rng.uniform(k++));
  }
  return intervals(items);
}

ScoredCandidates catalog_candidates(const char* name, const Params& params, double p) {
  auto g = test::line(0, 1, 1.0 / 256);
  auto f = sample_catalog(g, name, params);
  auto balls = candidate_balls(*g, {1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4});
  return score_candidates(f, test::ones(g), balls, p);
}

}  // namespace

TEST_CASE("candidate_balls", "[packing]") {
  auto g = test::line(0, 1, 0.01);
  auto balls = candidate_balls(*g, {0.05});
  // Centres 0.05, 0.06, ..., 0.95.
  CHECK(balls.size() == 91);
  CHECK(balls.front().center[0] == Approx(0.05));
  CHECK(balls.back().center[0] == Approx(0.95));
  CHECK_THROWS_AS(candidate_balls(*g, {0.0025}), Error);
  auto tiny = test::line(0, 0.1, 0.05);
  try {
    candidate_balls(*tiny, {0.5});
    FAIL("expected NoCandidates");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_candidates);
  }
}

TEST_CASE("score_ball on f(x) = x", "[packing]") {
  const double h = 1.0 / 1024;
  auto g = test::line(0, 1, h);
  auto f = sample_catalog(g, "linear");
  const Ball b{{0.5, 0, 0}, 0.25};
  auto s2 = score_ball(f, test::ones(g), b, 2);
  CHECK(s2.oscillation == Approx(0.5).margin(2 * h));
  CHECK(s2.weight_mass == Approx(0.5).margin(2 * h));
  CHECK(s2.score == Approx(2.0).margin(0.1));
  CHECK(score_ball(f, test::ones(g), b, 1).score == Approx(1.0).margin(0.05));
  CHECK(score_ball(sample_catalog(g, "constant"), test::ones(g), b, 2).score == 0.0);
}

TEST_CASE("pack_1d_exact small cases", "[packing]") {
  auto overlap = intervals({{0.3, 0.2, 3}, {0.5, 0.2, 5}});
  auto s = pack_1d_exact(overlap);
  CHECK(s.total == 5);
  REQUIRE(s.chosen.size() == 1);
  CHECK(s.chosen[0] == 1);
  CHECK(pack_1d_exact(intervals({{0.2, 0.1, 3}, {0.6, 0.1, 5}})).total == 8);
  // Tangent intervals may both be chosen.
  CHECK(pack_1d_exact(intervals({{0.25, 0.25, 1}, {0.75, 0.25, 1}})).total == 2);
}

TEST_CASE("pack_1d_exact equals brute force", "[packing]") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto c = random_set(seed);
    INFO("seed " << seed);
    CHECK(pack_1d_exact(c).total == Approx(brute_force(c)).epsilon(1e-12));
  }
}

TEST_CASE("pack_1d_exact recovers the analytic packing limit", "[packing]") {
  auto g = test::line(0, 1, 1.0 / 1024);
  auto f = sample_catalog(g, "linear");
  auto cands = score_candidates(f, test::ones(g), candidate_balls(*g, {0.05, 0.1, 0.25}), 2);
  const auto sol = pack_1d_exact(cands);
  CHECK(sol.total == Approx(4.0).epsilon(0.05));
  CHECK(sol.variation == Approx(2.0).epsilon(0.05));
  CHECK(pairwise_disjoint(sol.collection, 1));
}

TEST_CASE("pack_greedy", "[packing]") {
  for (auto [name, p] : {std::pair{"linear", 2.0}, {"sinusoid", 2.0}, {"hat", 1.0}, {"bump", 3.0}}) {
    auto c = catalog_candidates(name, {}, p);
    const double opt = pack_1d_exact(c).total;
    const auto gr = pack_greedy(c);
    INFO(name);
    CHECK(gr.total >= 0.8 * opt);
    CHECK(pairwise_disjoint(gr.collection, 1));
  }
  auto single = intervals({{0.5, 0.1, 2}});
  CHECK(pack_greedy(single).total == 2);
  auto zeros = intervals({{0.2, 0.1, 0}, {0.6, 0.1, 0}});
  const auto z = pack_greedy(zeros);
  CHECK(z.collection.empty());
  CHECK(z.total == 0);
}

TEST_CASE("pack_local_search", "[packing]") {
  for (auto [name, p] : {std::pair{"linear", 2.0}, {"sinusoid", 2.0}, {"hat", 1.0}, {"bump", 3.0}}) {
    auto c = catalog_candidates(name, {}, p);
    const double opt = pack_1d_exact(c).total;
    const auto gr = pack_greedy(c);
    const auto ls = pack_local_search(gr, c, 10000);
    INFO(name);
    CHECK(ls.total >= gr.total);
    CHECK(ls.total >= 0.98 * opt);
    CHECK(ls.total <= opt * (1 + 1e-12));
    CHECK(pairwise_disjoint(ls.collection, 1));
  }
  auto c = catalog_candidates("linear", {}, 2);
  const auto opt = pack_1d_exact(c);
  CHECK(pack_local_search(opt, c, 10000).total == Approx(opt.total).epsilon(1e-14));
  const auto gr = pack_greedy(c);
  const auto none = pack_local_search(gr, c, 0);
  CHECK(none.chosen == gr.chosen);
  CHECK(none.total == gr.total);

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto r = random_set(seed);
    const auto g0 = pack_greedy(r);
    CHECK(pack_local_search(g0, r, 10000).total >= g0.total);
  }
}

TEST_CASE("local search in two dimensions", "[packing]") {
  auto g = test::square(-1, 1, 1.0 / 16);
  auto f = sample_catalog(g, "bump", {{"radius", 0.8}});
  auto cands = score_candidates(f, test::ones(g), candidate_balls(*g, {0.125, 0.25, 0.5}), 2);
  const auto gr = pack_greedy(cands);
  const auto ls = pack_local_search(gr, cands, 2000, 4);
  CHECK(ls.total >= gr.total);
  CHECK(pairwise_disjoint(ls.collection, 2));
  CHECK_THROWS_AS(pack_1d_exact(cands), Error);
}
