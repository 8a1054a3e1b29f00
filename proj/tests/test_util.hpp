#pragma once

// Shared hand-rolled generators for the randomized tests: random families,
// parameters, group bundles, and small count datasets, all driven by the
// library's deterministic uniform stream.

#include <algorithm>
#include <cmath>
#include <vector>

#include "discfa/simulate.hpp"
#include "discfa/types.hpp"

namespace testutil {

using discfa::Base;
using discfa::BaseParams;
using discfa::ComponentParams;
using discfa::GroupParameters;
using discfa::ModelFamily;
using discfa::Rng;

inline double uniform_in(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform();
}

inline int int_in(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.uniform() * (hi - lo + 1));
}

inline BaseParams random_base(Rng& rng, Base base) {
  if (base == Base::poisson) return BaseParams::poisson(uniform_in(rng, 0.2, 2.5));
  return BaseParams::negbin(uniform_in(rng, 0.4, 3.5), uniform_in(rng, 0.25, 0.85));
}

inline ComponentParams random_component(Rng& rng, const ModelFamily& f) {
  ComponentParams c;
  c.base = random_base(rng, f.base);
  if (f.zero_inflated) c.pi = uniform_in(rng, 0.0, 0.5);
  return c;
}

inline GroupParameters random_group_params(Rng& rng, const ModelFamily& f, int m) {
  GroupParameters gp;
  if (m >= 2) gp.factor = random_component(rng, f);
  for (int j = 0; j < m; ++j) gp.variables.push_back(random_component(rng, f));
  return gp;
}

inline ModelFamily family_by_index(int idx, int trunc_bound) {
  ModelFamily f;
  f.base = (idx & 1) ? Base::negbin : Base::poisson;
  f.zero_inflated = (idx & 2) != 0;
  if ((idx & 4) != 0) f.truncation = trunc_bound;
  return f;
}

inline std::vector<std::vector<int>> random_columns(Rng& rng, int m, int n, int max_count) {
  std::vector<std::vector<int>> cols(static_cast<std::size_t>(m));
  for (auto& c : cols) {
    c.resize(static_cast<std::size_t>(n));
    for (auto& v : c) v = int_in(rng, 0, max_count);
  }
  return cols;
}

inline bool close_rel(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace testutil
