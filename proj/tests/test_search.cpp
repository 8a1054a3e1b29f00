#include <set>
#include <vector>

#include "discfa/search.hpp"
#include "discfa/simulate.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace discfa;

namespace {

std::multiset<int> size_multiset(const Partition& p) {
  const auto s = p.sizes();
  return {s.begin(), s.end()};
}

Dataset simulate_plain_poisson(const Partition& truth, double theta0, double theta_var,
                               int n, std::uint64_t seed) {
  SimSpec spec;
  spec.partition = truth;
  spec.family = ModelFamily::from_code("p");
  for (const auto& g : truth.groups()) {
    GroupParameters gp;
    if (g.size() >= 2) gp.factor = ComponentParams{BaseParams::poisson(theta0), 0.0};
    for (std::size_t j = 0; j < g.size(); ++j)
      gp.variables.push_back(ComponentParams{BaseParams::poisson(theta_var), 0.0});
    spec.params.push_back(gp);
  }
  spec.n = n;
  spec.seed = seed;
  return simulate(spec);
}

}  // namespace

TEST_CASE("candidate_models enumerates every pairwise merge") {
  const Partition indep5 = Partition::independence(5);
  const auto c1 = candidate_models(indep5);
  CHECK(c1.size() == 10);
  for (const auto& cand : c1) CHECK(size_multiset(cand) == std::multiset<int>{2, 1, 1, 1});

  const Partition p2 = canonicalize_partition({{1, 2}, {3}, {4}, {5}});
  const auto c2 = candidate_models(p2);
  CHECK(c2.size() == 6);
  int three = 0, two_two = 0;
  for (const auto& cand : c2) {
    const auto ms = size_multiset(cand);
    if (ms == std::multiset<int>{3, 1, 1}) ++three;
    if (ms == std::multiset<int>{2, 2, 1}) ++two_two;
  }
  CHECK(three == 3);
  CHECK(two_two == 3);

  // no duplicates by structure
  std::set<std::string> seen;
  for (const auto& cand : c2) seen.insert(cand.format_groups());
  CHECK(seen.size() == c2.size());

  CHECK(candidate_models(Partition::single_group(4)).empty());
}

TEST_CASE("tie_break: lowest aic, then fewer parameters, then lexicographic") {
  auto make = [](Partition p, double aic, int n_params) {
    FitResult r;
    r.partition = p;
    r.aic = aic;
    r.p = n_params;
    return std::pair<Partition, FitResult>(std::move(p), std::move(r));
  };
  const Partition a = canonicalize_partition({{1, 2}, {3}});
  const Partition b = canonicalize_partition({{1, 3}, {2}});
  const Partition c = canonicalize_partition({{1}, {2, 3}});

  std::vector<std::pair<Partition, FitResult>> v1{make(a, 10.0, 5), make(b, 9.5, 6),
                                                  make(c, 9.5, 4)};
  CHECK(tie_break(v1) == 2);

  std::vector<std::pair<Partition, FitResult>> v2{make(a, 3.0, 4), make(b, 2.0, 4),
                                                  make(c, 1.0, 4)};
  CHECK(tie_break(v2) == 2);

  std::vector<std::pair<Partition, FitResult>> v3{make(b, 7.0, 4), make(a, 7.0, 4)};
  CHECK(tie_break(v3) == 1);  // {{1,2},{3}} beats {{1,3},{2}}
}

TEST_CASE("independent columns keep the independence model") {
  SimSpec spec;
  spec.partition = Partition::independence(4);
  spec.family = ModelFamily::from_code("p");
  for (int j = 0; j < 4; ++j) {
    GroupParameters gp;
    gp.variables = {ComponentParams{BaseParams::poisson(0.8 + 0.4 * j), 0.0}};
    spec.params.push_back(gp);
  }
  spec.n = 2000;
  spec.seed = 77;
  const Dataset d = simulate(spec);

  const auto sr = forward_search(d, spec.family, OptimizerConfig{});
  CHECK(sr.best.partition == Partition::independence(4));
  CHECK(sr.trace.steps.empty());
  CHECK(sr.trace.stopped_step.has_value());
}

TEST_CASE("a planted pair is recovered") {
  const Partition truth = canonicalize_partition({{1, 2}, {3}});
  const Dataset d = simulate_plain_poisson(truth, 1.0, 1.0, 2000, 123);
  const auto sr = forward_search(d, ModelFamily::from_code("p"), OptimizerConfig{});
  CHECK(sr.best.partition == truth);
}

TEST_CASE("search trace invariants") {
  const Partition truth = canonicalize_partition({{1, 2, 3}, {4, 5}});
  const Dataset d = simulate_plain_poisson(truth, 1.2, 0.9, 1500, 321);
  const auto sr = forward_search(d, ModelFamily::from_code("p"), OptimizerConfig{});

  // strict AIC descent along accepted steps, bounded step count
  double last = sr.trace.start_aic;
  for (const auto& step : sr.trace.steps) {
    CHECK(step.chosen_aic < last);
    last = step.chosen_aic;
  }
  CHECK(static_cast<int>(sr.trace.steps.size()) <= d.n_cols() - 1);
  CHECK(sr.best.aic <= sr.trace.start_aic);

  // with caching, step k > 1 fits at most g-1 new groups
  for (std::size_t k = 1; k < sr.trace.steps.size(); ++k) {
    const int g_before =
        d.n_cols() - static_cast<int>(k);  // groups in the incumbent at step k+1
    CHECK(sr.trace.steps[k].new_fits <= g_before - 1);
  }
  if (sr.trace.stopped_step && !sr.trace.steps.empty()) {
    const int g_before = d.n_cols() - static_cast<int>(sr.trace.steps.size());
    CHECK(sr.trace.stopped_step->new_fits <= g_before - 1);
  }

  // every evaluated step enumerates C(g,2) candidates
  int g = d.n_cols();
  for (const auto& step : sr.trace.steps) {
    CHECK(static_cast<int>(step.candidates.size()) == g * (g - 1) / 2);
    --g;
  }
}

TEST_CASE("search is deterministic, including across thread counts") {
  const Partition truth = canonicalize_partition({{1, 2}, {3, 4}, {5}});
  SimSpec spec;
  spec.partition = truth;
  spec.family = ModelFamily::from_code("zip");
  for (const auto& g : truth.groups()) {
    GroupParameters gp;
    if (g.size() >= 2) gp.factor = ComponentParams{BaseParams::poisson(0.8), 0.15};
    for (std::size_t j = 0; j < g.size(); ++j)
      gp.variables.push_back(ComponentParams{BaseParams::poisson(1.0), 0.25});
    spec.params.push_back(gp);
  }
  spec.n = 300;
  spec.seed = 99;
  const Dataset d = simulate(spec);

  OptimizerConfig cfg;
  cfg.multistart = 2;
  cfg.seed = 5;
  const auto a = forward_search(d, spec.family, cfg, 1);
  const auto b = forward_search(d, spec.family, cfg, 1);
  const auto c = forward_search(d, spec.family, cfg, 2);

  CHECK(a.best.partition == b.best.partition);
  CHECK(a.best.log_lik == b.best.log_lik);
  CHECK(a.best.partition == c.best.partition);
  CHECK(a.best.log_lik == c.best.log_lik);
  REQUIRE(a.trace.steps.size() == c.trace.steps.size());
  for (std::size_t k = 0; k < a.trace.steps.size(); ++k) {
    CHECK(a.trace.steps[k].aics == c.trace.steps[k].aics);
    CHECK(a.trace.steps[k].chosen == c.trace.steps[k].chosen);
  }
  CHECK(a.trace.total_fits == c.trace.total_fits);
  CHECK(a.trace.cache_hits == c.trace.cache_hits);
}

TEST_CASE("search needs at least two variables") {
  const Dataset d({{0, 1, 2}}, {"only"});
  CHECK_THROWS_AS(forward_search(d, ModelFamily::from_code("p"), OptimizerConfig{}),
                  DataError);
}
