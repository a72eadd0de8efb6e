#pragma once

// Disjoint ball packings maximizing a sum of per-ball scores. The supremum
// over countable disjoint families is approximated by a finite candidate set
// (grid centers x radii); every packing found is a lower bound.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rbv/grid.hpp"
#include "rbv/parallel.hpp"
#include "rbv/quadrature.hpp"

namespace rbv {

struct BallScore {
  Ball ball;
  double oscillation = 0.0;
  double weight_mass = 0.0;  // w(B)
  double score = 0.0;        // (oscillation / radius)^p * weight_mass
};

struct ScoredCandidates {
  int dim = 1;
  double p = 1.0;
  std::vector<BallScore> items;
};

enum class PackingMethod { dp_1d_exact, greedy, greedy_plus_local_search };

inline std::string to_string(PackingMethod m) {
  switch (m) {
    case PackingMethod::dp_1d_exact: return "dp_1d_exact";
    case PackingMethod::greedy: return "greedy";
    case PackingMethod::greedy_plus_local_search: return "greedy_plus_local_search";
  }
  return "unknown";
}

inline PackingMethod parse_packing_method(const std::string& s) {
  if (s == "dp_1d_exact") return PackingMethod::dp_1d_exact;
  if (s == "greedy") return PackingMethod::greedy;
  if (s == "greedy_plus_local_search") return PackingMethod::greedy_plus_local_search;
  throw Error(ErrorCode::bad_params, "unknown packing method '" + s + "'");
}

struct PackingSolution {
  std::vector<Ball> collection;
  std::vector<BallScore> scores;
  std::vector<std::size_t> chosen;  // candidate indices, ascending
  double total = 0.0;
  double variation = 0.0;  // total^(1/p)
  double p = 1.0;
  PackingMethod method = PackingMethod::greedy;
};

/// Balls centered at every masked-in node, one per radius, kept when they
/// lie inside the domain. Order: node index, then radius ascending.
inline std::vector<Ball> candidate_balls(const Grid& grid, std::vector<double> radii) {
  require(!radii.empty(), ErrorCode::precondition, "empty radii list");
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  for (double r : radii)
    require(r >= 2.0 * grid.spacing() * (1.0 - 1e-12), ErrorCode::precondition,
            "candidate radius " + std::to_string(r) + " is below twice the grid spacing");
  std::vector<Ball> out;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    if (!grid.masked(idx)) continue;
    const Point c = grid.coord(idx);
    for (double r : radii) {
      Ball b{c, r};
      if (ball_inside_domain(grid, b)) out.push_back(b);
    }
  }
  require(!out.empty(), ErrorCode::no_candidates, "no candidate ball fits inside the domain");
  return out;
}

inline BallScore score_ball(const SampledField& f, const SampledField& w, const Ball& ball, double p) {
  require(p >= 1.0, ErrorCode::precondition, "score_ball needs p >= 1");
  require(w.kind() == FieldKind::weight, ErrorCode::precondition, "score_ball needs a weight field");
  require_same_grid(f, w);
  const auto nodes = node_set(f.grid(), ball);
  require(!nodes.empty(), ErrorCode::empty_region, "ball holds no masked-in node");
  require(nodes.size() >= 2, ErrorCode::precondition, "ball must hold at least 2 nodes");
  BallScore s;
  s.ball = ball;
  s.oscillation = oscillation_on(f, nodes);
  double mass = 0.0;
  for (auto i : nodes) mass += w[i];
  s.weight_mass = mass * f.grid().cell_volume();
  s.score = (s.oscillation == 0.0 || s.weight_mass == 0.0)
                ? 0.0
                : std::pow(s.oscillation / ball.radius, p) * s.weight_mass;
  return s;
}

inline ScoredCandidates score_candidates(const SampledField& f, const SampledField& w, std::span<const Ball> balls,
                                         double p) {
  ScoredCandidates out;
  out.dim = f.grid().dim();
  out.p = p;
  out.items = parallel::parallel_map<BallScore>(balls.size(),
                                                [&](std::size_t k) { return score_ball(f, w, balls[k], p); });
  return out;
}

/// Assembles a solution from chosen candidate indices; totals are summed in
/// ascending candidate order.
inline PackingSolution make_solution(const ScoredCandidates& cands, std::vector<std::size_t> chosen,
                                     PackingMethod method) {
  std::sort(chosen.begin(), chosen.end());
  PackingSolution sol;
  sol.p = cands.p;
  sol.method = method;
  for (auto k : chosen) {
    sol.collection.push_back(cands.items[k].ball);
    sol.scores.push_back(cands.items[k]);
    sol.total += cands.items[k].score;
  }
  sol.chosen = std::move(chosen);
  sol.variation = sol.total > 0.0 ? std::pow(sol.total, 1.0 / cands.p) : 0.0;
  return sol;
}

/// Weighted interval scheduling on the intervals [c - r, c + r]. Exact
/// optimum over all disjoint subsets of the candidates; ties prefer fewer balls.
inline PackingSolution pack_1d_exact(const ScoredCandidates& cands) {
  require(cands.dim == 1, ErrorCode::precondition, "pack_1d_exact needs dim = 1");
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < cands.items.size(); ++k)
    if (cands.items[k].score > 0.0) order.push_back(k);
  auto right = [&](std::size_t k) { return cands.items[k].ball.center[0] + cands.items[k].ball.radius; };
  auto left = [&](std::size_t k) { return cands.items[k].ball.center[0] - cands.items[k].ball.radius; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return right(a) < right(b); });

  const std::size_t m = order.size();
  std::vector<double> ends(m);
  for (std::size_t j = 0; j < m; ++j) ends[j] = right(order[j]);

  struct Cell {
    double total = 0.0;
    std::size_t count = 0;
    bool take = false;
    std::size_t prev = 0;  // number of intervals available before this one when taken
  };
  std::vector<Cell> best(m + 1);
  for (std::size_t j = 1; j <= m; ++j) {
    const std::size_t k = order[j - 1];
    const auto& b = cands.items[k].ball;
    // Compatible predecessors: right endpoint <= this left endpoint, with a
    // slack no larger than the one balls_disjoint allows.
    const double limit = left(k) + 1e-12 * b.radius;
    const std::size_t prev = static_cast<std::size_t>(std::upper_bound(ends.begin(), ends.begin() + (j - 1), limit) -
                                                      ends.begin());
    const double take_total = cands.items[k].score + best[prev].total;
    const std::size_t take_count = best[prev].count + 1;
    const Cell& skip = best[j - 1];
    if (take_total > skip.total || (take_total == skip.total && take_count < skip.count)) {
      best[j] = {take_total, take_count, true, prev};
    } else {
      best[j] = skip;
      best[j].take = false;
    }
  }
  std::vector<std::size_t> chosen;
  for (std::size_t j = m; j > 0;) {
    if (best[j].take) {
      chosen.push_back(order[j - 1]);
      j = best[j].prev;
    } else {
      --j;
    }
  }
  return make_solution(cands, std::move(chosen), PackingMethod::dp_1d_exact);
}

/// Highest score first, skipping candidates that meet an already chosen ball.
inline PackingSolution pack_greedy(const ScoredCandidates& cands) {
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < cands.items.size(); ++k)
    if (cands.items[k].score > 0.0) order.push_back(k);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cands.items[a].score > cands.items[b].score; });
  std::vector<std::size_t> chosen;
  for (auto k : order) {
    bool ok = true;
    for (auto c : chosen) {
      if (!balls_disjoint(cands.items[k].ball, cands.items[c].ball, cands.dim)) {
        ok = false;
        break;
      }
    }
    if (ok) chosen.push_back(k);
  }
  return make_solution(cands, std::move(chosen), PackingMethod::greedy);
}

namespace detail {

/// Uniform hash grid over ball centers; cell size is the largest diameter so
/// every conflicting ball sits in a neighbouring cell.
class CenterIndex {
 public:
  CenterIndex(const ScoredCandidates& cands, double cell) : cands_(&cands), cell_(cell) {}

  void insert(std::size_t k) { cells_[key_of(cands_->items[k].ball.center)].push_back(k); }

  void erase(std::size_t k) {
    auto& v = cells_[key_of(cands_->items[k].ball.center)];
    v.erase(std::find(v.begin(), v.end(), k));
  }

  /// Indexed balls that are not disjoint from `ball`, ascending.
  std::vector<std::size_t> conflicts(const Ball& ball, std::size_t cap) const {
    std::vector<std::size_t> out;
    const auto base = coords(ball.center);
    const int dim = cands_->dim;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = (dim > 1 ? -1 : 0); dy <= (dim > 1 ? 1 : 0); ++dy)
        for (int dz = (dim > 2 ? -1 : 0); dz <= (dim > 2 ? 1 : 0); ++dz) {
          auto it = cells_.find(pack({base[0] + dx, base[1] + dy, base[2] + dz}));
          if (it == cells_.end()) continue;
          for (auto k : it->second) {
            if (!balls_disjoint(ball, cands_->items[k].ball, dim)) {
              out.push_back(k);
              if (out.size() > cap) return out;
            }
          }
        }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::array<std::int64_t, 3> coords(const Point& c) const {
    std::array<std::int64_t, 3> k{0, 0, 0};
    for (int i = 0; i < cands_->dim; ++i) k[i] = static_cast<std::int64_t>(std::floor(c[i] / cell_));
    return k;
  }
  static std::int64_t pack(const std::array<std::int64_t, 3>& k) {
    return ((k[0] + (1 << 20)) << 42) ^ ((k[1] + (1 << 20)) << 21) ^ (k[2] + (1 << 20));
  }
  std::int64_t key_of(const Point& c) const { return pack(coords(c)); }

  const ScoredCandidates* cands_;
  double cell_;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

struct RebuildMove {
  std::vector<std::size_t> removed;  // ascending
  std::vector<std::size_t> added;
  double gain = 0.0;
};

/// Insert candidate c, drop every chosen ball it meets, then refill the freed
/// space greedily by score.
inline RebuildMove rebuild_move(const ScoredCandidates& cands, const std::vector<std::uint8_t>& selected,
                                const CenterIndex& index, const CenterIndex& nearby, std::size_t c) {
  const auto& items = cands.items;
  const std::size_t unbounded = std::numeric_limits<std::size_t>::max() - 1;
  RebuildMove move;
  move.removed = index.conflicts(items[c].ball, unbounded);
  move.added.push_back(c);
  move.gain = items[c].score;
  for (auto r : move.removed) move.gain -= items[r].score;

  std::vector<std::size_t> pool;
  for (auto r : move.removed) {
    for (auto d : nearby.conflicts(items[r].ball, unbounded)) {
      if (d == c || selected[d] || !balls_disjoint(items[c].ball, items[d].ball, cands.dim)) continue;
      const auto hit = index.conflicts(items[d].ball, move.removed.size());
      if (hit.size() > move.removed.size()) continue;
      if (!std::includes(move.removed.begin(), move.removed.end(), hit.begin(), hit.end())) continue;
      pool.push_back(d);
    }
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  std::stable_sort(pool.begin(), pool.end(),
                   [&](std::size_t x, std::size_t y) { return items[x].score > items[y].score; });
  for (auto d : pool) {
    bool ok = true;
    for (auto a : move.added) {
      if (!balls_disjoint(items[a].ball, items[d].ball, cands.dim)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    move.added.push_back(d);
    move.gain += items[d].score;
  }
  return move;
}

/// Selection state shared by the climbing and perturbation phases.
struct SearchState {
  std::vector<std::uint8_t> selected;
  CenterIndex index;
  double total = 0.0;

  void apply(const std::vector<std::size_t>& removed, const std::vector<std::size_t>& added, double gain) {
    for (auto r : removed) {
      if (!selected[r]) continue;
      selected[r] = 0;
      index.erase(r);
    }
    for (auto a : added) {
      selected[a] = 1;
      index.insert(a);
    }
    total += gain;
  }
};

/// The insert-drop-refill move of highest gain over all unselected positive
/// candidates; same moves as rebuild_move, with the conflict sets shared.
inline std::optional<RebuildMove> best_rebuild_move(const ScoredCandidates& cands, const SearchState& st) {
  const auto& items = cands.items;
  const std::size_t n = items.size();
  const std::size_t unbounded = std::numeric_limits<std::size_t>::max() - 1;
  std::vector<std::vector<std::size_t>> conf(n);
  std::unordered_map<std::size_t, std::vector<std::size_t>> meets;  // chosen ball -> candidates meeting it
  for (std::size_t d = 0; d < n; ++d) {
    if (st.selected[d] || items[d].score <= 0.0) continue;
    conf[d] = st.index.conflicts(items[d].ball, unbounded);
    for (auto r : conf[d]) meets[r].push_back(d);
  }

  std::optional<RebuildMove> best;
  std::vector<std::size_t> pool;
  for (std::size_t c = 0; c < n; ++c) {
    if (st.selected[c] || items[c].score <= 0.0) continue;
    RebuildMove move;
    move.removed = conf[c];
    move.added.push_back(c);
    move.gain = items[c].score;
    for (auto r : move.removed) move.gain -= items[r].score;
    pool.clear();
    for (auto r : move.removed) {
      for (auto d : meets[r]) {
        if (d == c || !balls_disjoint(items[c].ball, items[d].ball, cands.dim)) continue;
        if (!std::includes(move.removed.begin(), move.removed.end(), conf[d].begin(), conf[d].end())) continue;
        pool.push_back(d);
      }
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    std::stable_sort(pool.begin(), pool.end(),
                     [&](std::size_t x, std::size_t y) { return items[x].score > items[y].score; });
    for (auto d : pool) {
      bool ok = true;
      for (std::size_t a = 1; a < move.added.size() && ok; ++a)
        ok = balls_disjoint(items[move.added[a]].ball, items[d].ball, cands.dim);
      if (!ok) continue;
      move.added.push_back(d);
      move.gain += items[d].score;
    }
    if (!best || move.gain > best->gain) best = std::move(move);
  }
  return best;
}

/// Best-improvement climbing from `st`; consumes at most `budget` moves.
inline void climb(const ScoredCandidates& cands, SearchState& st, std::size_t& budget) {
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  const auto& items = cands.items;
  const auto& selected = st.selected;
  while (budget > 0) {
    --budget;
    // Conflict sets of every unselected positive candidate (capped at 3).
    std::vector<std::vector<std::size_t>> conf(items.size());
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> bucket;  // conflict set -> candidates
    auto key = [&](std::size_t a, std::size_t b) {
      return (static_cast<std::uint64_t>(a == none ? 0xffffffffu : a) << 32) |
             static_cast<std::uint64_t>(b == none ? 0xffffffffu : b);
    };
    for (std::size_t c = 0; c < items.size(); ++c) {
      if (selected[c] || items[c].score <= 0.0) continue;
      conf[c] = st.index.conflicts(items[c].ball, 2);
      if (conf[c].size() > 2) continue;
      const std::size_t a = conf[c].size() > 0 ? conf[c][0] : none;
      const std::size_t b = conf[c].size() > 1 ? conf[c][1] : none;
      bucket[key(a, b)].push_back(c);
    }
    for (auto& [k, v] : bucket)
      std::stable_sort(v.begin(), v.end(), [&](std::size_t x, std::size_t y) { return items[x].score > items[y].score; });

    double best_gain = 0.0;
    std::size_t best_c = none, best_d = none;
    for (std::size_t c = 0; c < items.size(); ++c) {
      if (selected[c] || items[c].score <= 0.0 || conf[c].size() > 2) continue;
      double removed = 0.0;
      for (auto r : conf[c]) removed += items[r].score;
      const double base = items[c].score - removed;
      auto consider = [&](double gain, std::size_t d) {
        if (gain > best_gain) {
          best_gain = gain;
          best_c = c;
          best_d = d;
        }
      };
      consider(base, none);
      // Companion d may only meet balls that c's insertion already removes.
      std::vector<std::uint64_t> keys{key(none, none)};
      if (conf[c].size() >= 1) keys.push_back(key(conf[c][0], none));
      if (conf[c].size() == 2) {
        keys.push_back(key(conf[c][1], none));
        keys.push_back(key(conf[c][0], conf[c][1]));
      }
      for (auto kk : keys) {
        auto it = bucket.find(kk);
        if (it == bucket.end()) continue;
        for (auto d : it->second) {
          if (d == c || !balls_disjoint(items[c].ball, items[d].ball, cands.dim)) continue;
          consider(base + items[d].score, d);
          break;  // buckets are sorted by score
        }
      }
    }

    const double min_gain = 1e-12 * std::max(1.0, std::abs(st.total));
    if (best_c != none && best_gain > min_gain) {
      std::vector<std::size_t> removed = conf[best_c];
      std::vector<std::size_t> added{best_c};
      if (best_d != none) {
        removed.insert(removed.end(), conf[best_d].begin(), conf[best_d].end());
        added.push_back(best_d);
      }
      st.apply(removed, added, best_gain);
      continue;
    }

    // Local optimum of the small moves: try the best insert-drop-refill move.
    auto best = best_rebuild_move(cands, st);
    if (!best || best->gain <= min_gain) break;
    st.apply(best->removed, best->added, best->gain);
  }
}

}  // namespace detail

/// Best-improvement hill climbing with perturbation. A climbing move inserts
/// one or two candidates and removes the (at most two) chosen balls they
/// meet, or inserts one candidate, drops everything it meets and refills
/// greedily; moves are taken only when the total strictly increases. From
/// each local optimum, up to `kicks` unselected candidates (highest score
/// first) are forced in and the climb restarted; a kick is kept only if it
/// ends strictly higher. `max_iters` bounds climbing moves plus kicks.
inline PackingSolution pack_local_search(const PackingSolution& initial, const ScoredCandidates& cands,
                                         std::size_t max_iters, std::size_t kicks = 32) {
  require(pairwise_disjoint(initial.collection, cands.dim), ErrorCode::precondition,
          "initial packing is not disjoint");
  if (max_iters == 0 || cands.items.empty()) return initial;

  double max_radius = 0.0;
  for (const auto& it : cands.items) max_radius = std::max(max_radius, it.ball.radius);
  detail::CenterIndex nearby(cands, 2.0 * max_radius);  // every positive candidate
  for (std::size_t k = 0; k < cands.items.size(); ++k)
    if (cands.items[k].score > 0.0) nearby.insert(k);

  detail::SearchState st{std::vector<std::uint8_t>(cands.items.size(), 0),
                         detail::CenterIndex(cands, 2.0 * max_radius), initial.total};
  for (auto k : initial.chosen) {
    st.selected[k] = 1;
    st.index.insert(k);
  }
  std::size_t budget = max_iters;
  detail::climb(cands, st, budget);

  const auto& items = cands.items;
  bool improved = true;
  while (improved && budget > 0) {
    improved = false;
    std::vector<std::size_t> order;
    for (std::size_t c = 0; c < items.size(); ++c)
      if (!st.selected[c] && items[c].score > 0.0) order.push_back(c);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return items[x].score > items[y].score; });
    if (order.size() > kicks) order.resize(kicks);
    for (auto c : order) {
      if (budget == 0) break;
      --budget;
      detail::SearchState trial = st;
      const auto move = detail::rebuild_move(cands, trial.selected, trial.index, nearby, c);
      trial.apply(move.removed, move.added, move.gain);
      detail::climb(cands, trial, budget);
      if (trial.total > st.total + 1e-12 * std::max(1.0, std::abs(st.total))) {
        st = std::move(trial);
        improved = true;
        break;
      }
    }
  }

  std::vector<std::size_t> chosen;
  for (std::size_t k = 0; k < items.size(); ++k)
    if (st.selected[k]) chosen.push_back(k);
  auto sol = make_solution(cands, std::move(chosen), PackingMethod::greedy_plus_local_search);
  // Never report less than the starting point (guards against rounding drift).
  if (sol.total < initial.total) {
    auto kept = initial;
    kept.method = PackingMethod::greedy_plus_local_search;
    return kept;
  }
  return sol;
}

inline PackingSolution pack(const ScoredCandidates& cands, PackingMethod method, std::size_t max_iters = 10000) {
  switch (method) {
    case PackingMethod::dp_1d_exact: return pack_1d_exact(cands);
    case PackingMethod::greedy: return pack_greedy(cands);
    case PackingMethod::greedy_plus_local_search: return pack_local_search(pack_greedy(cands), cands, max_iters);
  }
  return pack_greedy(cands);
}

}  // namespace rbv
