#pragma once

#include <chrono>
#include <optional>
#include <utility>
#include <vector>

#include "estimation.hpp"
#include "numeric.hpp"
#include "types.hpp"

namespace discfa {

// One evaluated step of the forward search: every pairwise-merge candidate of
// the incumbent, their AICs, and the pick.
struct SearchStep {
  std::vector<Partition> candidates;
  std::vector<double> aics;
  std::size_t chosen = 0;
  double chosen_aic = 0.0;
  int new_fits = 0;  // group optimizations this step triggered
};

struct SearchTrace {
  Partition start;
  double start_aic = 0.0;
  std::vector<SearchStep> steps;             // accepted merges, AIC strictly decreasing
  std::optional<SearchStep> stopped_step;    // final evaluation that failed to improve
  long total_fits = 0;
  long cache_hits = 0;
  double wall_time = 0.0;
};

struct SearchResult {
  FitResult best;
  SearchTrace trace;
};

// All pairwise merges of the incumbent's groups, canonicalized: exactly
// C(g, 2) distinct partitions, in a deterministic order. A single-group
// partition has no candidates.
inline std::vector<Partition> candidate_models(const Partition& p) {
  const int g = p.group_count();
  std::vector<Partition> out;
  if (g < 2) return out;
  out.reserve(static_cast<std::size_t>(g) * (g - 1) / 2);
  for (int i = 1; i <= g; ++i)
    for (int j = i + 1; j <= g; ++j) out.push_back(merge_groups(p, i, j));
  return out;
}

// Lowest AIC wins; ties within 1e-9 go to the fewer-parameter model, then to
// the lexicographically smallest canonical group listing.
inline std::size_t tie_break(std::span<const std::pair<Partition, FitResult>> candidates) {
  if (candidates.empty()) throw StructuralError("tie_break: empty candidate list");
  constexpr double kAicTie = 1e-9;
  double best_aic = candidates.front().second.aic;
  for (const auto& c : candidates) best_aic = std::min(best_aic, c.second.aic);
  std::size_t best = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].second.aic > best_aic + kAicTie) continue;
    if (best == candidates.size()) {
      best = i;
      continue;
    }
    const auto& cur = candidates[i];
    const auto& win = candidates[best];
    if (cur.second.p != win.second.p) {
      if (cur.second.p < win.second.p) best = i;
      continue;
    }
    if (cur.first < win.first) best = i;
  }
  return best;
}

// Greedy forward selection: start from the independence model, fit every
// pairwise merge of the incumbent, adopt the best candidate while it strictly
// lowers the AIC. The per-group cache makes each step after the first cost at
// most g-1 new group optimizations (only merges touching the group created in
// the previous step are new).
inline SearchResult forward_search(const Dataset& d, const ModelFamily& f,
                                   const OptimizerConfig& cfg, int threads = 1) {
  const auto t0 = std::chrono::steady_clock::now();
  f.validate();
  cfg.validate();
  if (d.n_cols() < 2)
    throw DataError("forward search needs at least two variables; the dataset has " +
                    std::to_string(d.n_cols()));
  GroupFitCache cache;
  SearchResult out;
  Partition incumbent = Partition::independence(d.n_cols());
  FitResult inc_fit = fit_model(d, incumbent, f, cfg, cache);
  out.trace.start = incumbent;
  out.trace.start_aic = inc_fit.aic;

  while (incumbent.group_count() > 1) {
    const std::vector<Partition> cands = candidate_models(incumbent);

    // The merged group is the only structure a candidate does not share with
    // the incumbent; fit the ones the cache has not seen, in parallel.
    std::vector<std::pair<std::string, std::vector<int>>> missing;
    for (const auto& cand : cands)
      for (const auto& group : cand.groups()) {
        const std::string key = GroupFitCache::key_for(f, group);
        bool queued = false;
        for (const auto& mk : missing) queued = queued || mk.first == key;
        if (!queued && !cache.lookup(key).has_value()) missing.emplace_back(key, group);
      }
    std::vector<GroupFit> fits(missing.size());
    parallel_for(missing.size(), threads, [&](std::size_t i) {
      OptimizerConfig gcfg = cfg;
      gcfg.seed = cfg.seed ^ fnv1a64(missing[i].first);
      fits[i] = missing[i].second.size() == 1
                    ? fit_singleton(d.column(missing[i].second.front() - 1), f, gcfg)
                    : fit_group(GroupData(d, missing[i].second), f, gcfg);
    });
    for (std::size_t i = 0; i < missing.size(); ++i)
      cache.insert(missing[i].first, std::move(fits[i]));

    std::vector<std::pair<Partition, FitResult>> scored;
    scored.reserve(cands.size());
    for (const auto& cand : cands)
      scored.emplace_back(cand, fit_model(d, cand, f, cfg, cache));

    SearchStep step;
    step.candidates = cands;
    step.aics.reserve(scored.size());
    for (const auto& s : scored) step.aics.push_back(s.second.aic);
    step.chosen = tie_break(scored);
    step.chosen_aic = scored[step.chosen].second.aic;
    step.new_fits = static_cast<int>(missing.size());

    if (step.chosen_aic < inc_fit.aic) {
      incumbent = scored[step.chosen].first;
      inc_fit = std::move(scored[step.chosen].second);
      out.trace.steps.push_back(std::move(step));
    } else {
      out.trace.stopped_step = std::move(step);
      break;
    }
  }

  out.best = std::move(inc_fit);
  out.trace.total_fits = cache.misses();
  out.trace.cache_hits = cache.hits();
  out.trace.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace discfa
