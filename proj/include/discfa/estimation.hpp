#pragma once

#include <chrono>
#include <cmath>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "likelihood.hpp"
#include "optim.hpp"
#include "types.hpp"

namespace discfa {

// Positivity clamp used everywhere a rate or mean must stay strictly positive.
constexpr double kPositiveEps = 1e-8;

struct FitDiagnostics {
  bool converged = true;
  long iterations = 0;
  int n_starts_used = 0;
  std::vector<std::string> boundary_flags;  // parameters that ended on a box edge
};

// One fitted group: singleton fits leave factor empty, variables has one entry.
struct GroupFit {
  GroupParameters params;
  double log_lik = 0.0;
  FitDiagnostics diag;
};

namespace stats {

inline double sample_mean(std::span<const int> v) {
  KahanSum s;
  for (int x : v) s.add(static_cast<double>(x));
  return s.value() / static_cast<double>(v.size());
}

inline double sample_variance(std::span<const int> v) {
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  KahanSum s;
  for (int x : v) s.add((x - m) * (x - m));
  return s.value() / static_cast<double>(v.size() - 1);
}

inline double sample_covariance(std::span<const int> a, std::span<const int> b) {
  if (a.size() < 2) return 0.0;
  const double ma = sample_mean(a), mb = sample_mean(b);
  KahanSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add((a[i] - ma) * (b[i] - mb));
  return s.value() / static_cast<double>(a.size() - 1);
}

inline double zero_fraction(std::span<const int> v) {
  std::size_t z = 0;
  for (int x : v)
    if (x == 0) ++z;
  return static_cast<double>(z) / static_cast<double>(v.size());
}

// Mean of the pairwise sample covariances inside a group; within the model
// every such covariance estimates Var(U).
inline double mean_pairwise_covariance(const GroupData& g) {
  const int m = g.size();
  if (m < 2) return 0.0;
  KahanSum s;
  int pairs = 0;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      s.add(sample_covariance(g.columns()[static_cast<std::size_t>(a)],
                              g.columns()[static_cast<std::size_t>(b)]));
      ++pairs;
    }
  return s.value() / pairs;
}

}  // namespace stats

namespace transform {

// Natural-space boxes behind the log/logit reparameterizations.
constexpr double kRateLo = 1e-8;
constexpr double kRateHi = 1e8;
constexpr double kUnitLo = 1e-6;
constexpr double kUnitHi = 1.0 - 1e-6;

inline double rate_from_z(double z) {
  return std::exp(std::clamp(z, std::log(kRateLo), std::log(kRateHi)));
}
inline double rate_to_z(double x) { return std::log(std::clamp(x, kRateLo, kRateHi)); }

inline double unit_from_z(double z) { return kUnitLo + (kUnitHi - kUnitLo) * sigmoid(z); }
inline double unit_to_z(double u) {
  const double v = std::clamp((u - kUnitLo) / (kUnitHi - kUnitLo), 1e-12, 1.0 - 1e-12);
  return logit(v);
}

inline bool rate_at_boundary(double x) { return x <= 2.0 * kRateLo || x >= 0.99 * kRateHi; }
inline bool unit_at_boundary(double u) { return u <= 2.0 * kUnitLo || u >= 1.0 - 2.0 * kUnitLo; }

}  // namespace transform

namespace detail {

// Flat transformed-parameter layout for the full numeric fits. Entity order
// is [factor?, var_1 .. var_m]; base parameters first, then the
// zero-inflation pis in the same entity order.
struct ParamLayout {
  ModelFamily family;
  int m = 0;
  bool with_factor = false;
  struct Entry {
    std::string name;
    bool is_unit = false;  // logit-transformed; otherwise log-transformed rate
  };
  std::vector<Entry> entries;

  static ParamLayout make(const ModelFamily& f, int m, bool with_factor) {
    ParamLayout lay;
    lay.family = f;
    lay.m = m;
    lay.with_factor = with_factor;
    auto entity_label = [&](int e) { return std::to_string(e); };
    const int first = with_factor ? 0 : 1;
    for (int e = first; e <= m; ++e) {
      if (f.base == Base::poisson) {
        lay.entries.push_back({"theta" + entity_label(e), false});
      } else {
        lay.entries.push_back({"r" + entity_label(e), false});
        lay.entries.push_back({"p" + entity_label(e), true});
      }
    }
    if (f.zero_inflated)
      for (int e = first; e <= m; ++e) lay.entries.push_back({"pi" + entity_label(e), true});
    return lay;
  }

  std::size_t size() const { return entries.size(); }

  GroupParameters unpack(std::span<const double> z) const {
    GroupParameters gp;
    const int first = with_factor ? 0 : 1;
    const int n_entities = m - first + 1;
    std::vector<ComponentParams> entities(static_cast<std::size_t>(n_entities));
    std::size_t pos = 0;
    for (int e = 0; e < n_entities; ++e) {
      if (family.base == Base::poisson) {
        entities[static_cast<std::size_t>(e)].base =
            BaseParams::poisson(transform::rate_from_z(z[pos++]));
      } else {
        const double r = transform::rate_from_z(z[pos++]);
        const double p = transform::unit_from_z(z[pos++]);
        entities[static_cast<std::size_t>(e)].base = BaseParams::negbin(r, p);
      }
    }
    if (family.zero_inflated)
      for (int e = 0; e < n_entities; ++e)
        entities[static_cast<std::size_t>(e)].pi = transform::unit_from_z(z[pos++]);
    std::size_t v0 = 0;
    if (with_factor) {
      gp.factor = entities[0];
      v0 = 1;
    }
    gp.variables.assign(entities.begin() + static_cast<std::ptrdiff_t>(v0), entities.end());
    return gp;
  }

  std::vector<double> pack(const GroupParameters& gp) const {
    std::vector<double> z;
    z.reserve(size());
    std::vector<const ComponentParams*> entities;
    if (with_factor) entities.push_back(&*gp.factor);
    for (const auto& v : gp.variables) entities.push_back(&v);
    for (const auto* e : entities) {
      if (family.base == Base::poisson) {
        z.push_back(transform::rate_to_z(e->base.theta));
      } else {
        z.push_back(transform::rate_to_z(e->base.r));
        z.push_back(transform::unit_to_z(e->base.p));
      }
    }
    if (family.zero_inflated)
      for (const auto* e : entities)
        z.push_back(transform::unit_to_z(std::max(e->pi, transform::kUnitLo)));
    return z;
  }

  // Box-edge inspection of a fitted parameter vector in natural space.
  std::vector<std::string> boundary_flags(const GroupParameters& gp) const {
    std::vector<std::string> flags;
    std::vector<const ComponentParams*> entities;
    if (with_factor) entities.push_back(&*gp.factor);
    for (const auto& v : gp.variables) entities.push_back(&v);
    std::size_t pos = 0;
    for (const auto* e : entities) {
      if (family.base == Base::poisson) {
        if (transform::rate_at_boundary(e->base.theta)) flags.push_back(entries[pos].name);
        ++pos;
      } else {
        if (transform::rate_at_boundary(e->base.r)) flags.push_back(entries[pos].name);
        ++pos;
        if (transform::unit_at_boundary(e->base.p)) flags.push_back(entries[pos].name);
        ++pos;
      }
    }
    if (family.zero_inflated)
      for (const auto* e : entities) {
        if (e->pi != 0.0 && transform::unit_at_boundary(e->pi))
          flags.push_back(entries[pos].name);
        ++pos;
      }
    return flags;
  }
};

// Multistart driver: start 0 uses the supplied initial point, later starts
// jitter it by N(0, 0.5^2) per coordinate. Each start gets a shared budget of
// cfg.max_iter iterations split across BFGS and, when it stalls, a
// Nelder-Mead rescue followed by a BFGS polish.
inline MinimizeResult minimize_multistart(const Objective& fn, const std::vector<double>& z0,
                                          const OptimizerConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> jitter(0.0, 0.5);
  MinimizeResult best;
  long total_iterations = 0;
  for (int s = 0; s < cfg.multistart; ++s) {
    std::vector<double> z = z0;
    if (s > 0)
      for (auto& v : z) v += jitter(rng);
    int budget = cfg.max_iter;
    MinimizeResult r = bfgs_min(fn, z, cfg.rel_tol, budget);
    budget -= static_cast<int>(r.iterations);
    if (!r.converged && budget > 2) {
      MinimizeResult nm = nelder_mead(fn, r.x, cfg.rel_tol, budget / 2);
      budget -= static_cast<int>(nm.iterations);
      MinimizeResult polish =
          budget > 0 ? bfgs_min(fn, nm.x, cfg.rel_tol, budget) : nm;
      const MinimizeResult& better = polish.f <= nm.f ? polish : nm;
      if (better.f <= r.f) {
        const long spent = r.iterations + nm.iterations +
                           (budget > 0 ? polish.iterations : 0);
        r = better;
        r.iterations = spent;
      }
    }
    total_iterations += r.iterations;
    if (r.f < best.f || best.x.empty()) best = std::move(r);
  }
  best.iterations = total_iterations;
  return best;
}

}  // namespace detail

namespace detail {

inline double pi_init_from_zeros(std::span<const int> column) {
  const double ybar = stats::sample_mean(column);
  const double z_obs = stats::zero_fraction(column);
  const double z_pois = std::exp(-ybar);
  double pi = 0.01;
  if (z_pois < 1.0) pi = (z_obs - z_pois) / (1.0 - z_pois);
  return std::clamp(std::max(pi, 0.01), 0.01, 0.9);
}

inline double p_init_from_moments(std::span<const int> column) {
  const double ybar = stats::sample_mean(column);
  const double s2 = stats::sample_variance(column);
  const double p = s2 > 0.0 ? ybar / s2 : 0.95;
  return std::clamp(p, 0.05, 0.95);
}

inline ComponentParams init_component(const ModelFamily& f, double mean_init, double p_init,
                                      double pi_init) {
  ComponentParams c;
  mean_init = std::max(mean_init, 0.01);
  if (f.base == Base::poisson) {
    c.base = BaseParams::poisson(mean_init);
  } else {
    const double p = std::clamp(p_init, 0.05, 0.95);
    c.base = BaseParams::negbin(std::clamp(mean_init * p / (1.0 - p), transform::kRateLo,
                                           transform::kRateHi),
                                p);
  }
  if (f.zero_inflated) c.pi = std::clamp(pi_init, 0.01, 0.9);
  return c;
}

// Wraps the negated log-likelihood so the optimizer sees a finite ceiling
// instead of exceptions or NaNs from degenerate parameter corners.
template <class LogLik>
Objective negated_objective(const ParamLayout& lay, LogLik&& ll) {
  return [lay, ll](std::span<const double> z) -> double {
    try {
      const GroupParameters gp = lay.unpack(z);
      const double v = ll(gp);
      if (!std::isfinite(v)) return kObjectiveCeiling;
      return -v;
    } catch (const Error&) {
      return kObjectiveCeiling;
    }
  };
}

// Tries pi = 0 exactly for every pi that finished on the lower box edge and
// keeps the change when the likelihood does not get worse.
template <class LogLik>
void snap_boundary_pis(GroupParameters& gp, double& log_lik, LogLik&& ll) {
  GroupParameters snapped = gp;
  bool any = false;
  auto snap = [&](ComponentParams& c) {
    if (c.pi > 0.0 && c.pi <= 2.0 * transform::kUnitLo) {
      c.pi = 0.0;
      any = true;
    }
  };
  if (snapped.factor) snap(*snapped.factor);
  for (auto& v : snapped.variables) snap(v);
  if (!any) return;
  const double ll0 = ll(snapped);
  if (ll0 >= log_lik) {
    gp = std::move(snapped);
    log_lik = ll0;
  }
}

}  // namespace detail

// Maximum-likelihood fit of one column. Plain Poisson is closed-form
// (theta = sample mean); plain negative binomial pins the mean to the sample
// mean and searches p only; the zero-inflated and truncated variants run the
// full numeric optimizer.
inline GroupFit fit_singleton(std::span<const int> column, const ModelFamily& f,
                              const OptimizerConfig& cfg) {
  f.validate();
  cfg.validate();
  if (column.empty()) throw StructuralError("fit_singleton: empty column");
  if (f.truncated())
    for (int y : column)
      if (y > *f.truncation)
        throw DataError("data value " + std::to_string(y) +
                        " exceeds the truncation bound A = " + std::to_string(*f.truncation));

  GroupFit fit;
  fit.diag.n_starts_used = 0;
  const double ybar = stats::sample_mean(column);

  if (!f.zero_inflated && !f.truncated() && f.base == Base::poisson) {
    double theta = ybar;
    if (theta <= kPositiveEps) {
      theta = kPositiveEps;
      fit.diag.boundary_flags.push_back("theta1");
    }
    fit.params.variables = {ComponentParams{BaseParams::poisson(theta), 0.0}};
    fit.log_lik = singleton_log_lik(column, fit.params.variables.front(), f);
    return fit;
  }

  if (!f.zero_inflated && !f.truncated() && f.base == Base::negbin) {
    double mu = ybar;
    if (mu <= kPositiveEps) {
      mu = kPositiveEps;
      fit.diag.boundary_flags.push_back("r1");
    }
    auto make = [&](double p) {
      const double r =
          std::clamp(mu * p / (1.0 - p), transform::kRateLo, transform::kRateHi);
      return ComponentParams{BaseParams::negbin(r, p), 0.0};
    };
    auto objective = [&](double p) { return -singleton_log_lik(column, make(p), f); };
    const auto r =
        brent_min(objective, transform::kUnitLo, transform::kUnitHi, 1e-12, cfg.max_iter);
    double p_hat = r.x;
    double obj = r.f;
    for (double edge : {transform::kUnitLo, transform::kUnitHi}) {
      const double fe = objective(edge);
      if (fe < obj) {
        obj = fe;
        p_hat = edge;
      }
    }
    fit.params.variables = {make(p_hat)};
    fit.log_lik = singleton_log_lik(column, fit.params.variables.front(), f);
    fit.diag.iterations = r.iterations;
    fit.diag.n_starts_used = 1;
    fit.diag.converged = true;
    if (transform::unit_at_boundary(p_hat)) fit.diag.boundary_flags.push_back("p1");
    return fit;
  }

  const auto lay = detail::ParamLayout::make(f, 1, /*with_factor=*/false);
  GroupParameters init;
  init.variables = {detail::init_component(f, std::max(ybar, 0.01),
                                           detail::p_init_from_moments(column),
                                           detail::pi_init_from_zeros(column))};
  auto ll = [&column, &f](const GroupParameters& gp) {
    return singleton_log_lik(column, gp.variables.front(), f);
  };
  const auto obj = detail::negated_objective(lay, ll);
  const auto best = detail::minimize_multistart(obj, lay.pack(init), cfg);
  fit.params = lay.unpack(best.x);
  fit.log_lik = ll(fit.params);
  detail::snap_boundary_pis(fit.params, fit.log_lik, ll);
  fit.diag.converged = best.converged;
  fit.diag.iterations = best.iterations;
  fit.diag.n_starts_used = cfg.multistart;
  fit.diag.boundary_flags = lay.boundary_flags(fit.params);
  return fit;
}

namespace detail {

// Plain Poisson group: by the exponential-family mean identity the fitted
// means are pinned to the sample means, so only the factor rate theta0 is
// searched, over (eps, min_j ybar_j - eps), with theta_j = ybar_j - theta0.
inline GroupFit fit_group_poisson_reduced(const GroupData& g, const ModelFamily& f,
                                          const OptimizerConfig& cfg) {
  const int m = g.size();
  std::vector<double> means(static_cast<std::size_t>(m));
  double ymin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    means[static_cast<std::size_t>(j)] =
        stats::sample_mean(g.columns()[static_cast<std::size_t>(j)]);
    ymin = std::min(ymin, means[static_cast<std::size_t>(j)]);
  }
  auto build = [&](double theta0) {
    GroupParameters gp;
    gp.factor = ComponentParams{BaseParams::poisson(theta0), 0.0};
    gp.variables.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      const double tj = std::max(means[static_cast<std::size_t>(j)] - theta0, kPositiveEps);
      gp.variables.push_back(ComponentParams{BaseParams::poisson(tj), 0.0});
    }
    return gp;
  };
  GroupFit fit;
  fit.diag.n_starts_used = 1;
  const double lo = kPositiveEps;
  const double hi = ymin - kPositiveEps;
  if (!(hi > lo)) {
    // a column mean at (or below) the clamp: no room for a factor
    fit.params = build(kPositiveEps);
    fit.log_lik = group_log_lik(g, fit.params, f);
    fit.diag.boundary_flags.push_back("theta0");
    return fit;
  }
  auto objective = [&](double theta0) { return -group_log_lik(g, build(theta0), f); };
  const auto r = brent_min(objective, lo, hi, 1e-10 * std::max(1.0, ymin), cfg.max_iter);
  double theta0 = r.x;
  double obj = r.f;
  for (double edge : {lo, hi}) {
    const double fe = objective(edge);
    if (fe < obj) {
      obj = fe;
      theta0 = edge;
    }
  }
  fit.params = build(theta0);
  fit.log_lik = group_log_lik(g, fit.params, f);
  fit.diag.iterations = r.iterations;
  fit.diag.converged = true;
  if (theta0 <= lo * (1.0 + 1e-6) || theta0 >= hi - 1e-6 * std::max(1.0, ymin))
    fit.diag.boundary_flags.push_back("theta0");
  return fit;
}

// Plain negative binomial group: the mean identity pins mu_j = ybar_j - mu0,
// so the free parameters are the factor mean fraction mu0/ymin, p0, and the
// per-variable p_j; each r is recovered from its mean and p.
inline GroupFit fit_group_negbin_reduced(const GroupData& g, const ModelFamily& f,
                                         const OptimizerConfig& cfg) {
  const int m = g.size();
  std::vector<double> means(static_cast<std::size_t>(m));
  double ymin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    means[static_cast<std::size_t>(j)] =
        stats::sample_mean(g.columns()[static_cast<std::size_t>(j)]);
    ymin = std::min(ymin, means[static_cast<std::size_t>(j)]);
  }
  GroupFit fit;
  if (ymin <= 2.0 * kPositiveEps) {
    // degenerate: an all-zero column leaves no factor mass to allocate
    GroupParameters gp;
    gp.factor = ComponentParams{BaseParams::negbin(kPositiveEps, 0.5), 0.0};
    for (int j = 0; j < m; ++j) {
      const double mu = std::max(means[static_cast<std::size_t>(j)] - kPositiveEps, kPositiveEps);
      gp.variables.push_back(ComponentParams{BaseParams::negbin(mu, 0.5), 0.0});
    }
    fit.params = std::move(gp);
    fit.log_lik = group_log_lik(g, fit.params, f);
    fit.diag.boundary_flags.push_back("r0");
    fit.diag.n_starts_used = 1;
    return fit;
  }
  auto clamp_rate = [](double r) {
    return std::clamp(r, transform::kRateLo, transform::kRateHi);
  };
  auto build = [&](std::span<const double> z) {
    const double mu0 = ymin * transform::unit_from_z(z[0]);
    const double p0 = transform::unit_from_z(z[1]);
    GroupParameters gp;
    gp.factor = ComponentParams{BaseParams::negbin(clamp_rate(mu0 * p0 / (1.0 - p0)), p0), 0.0};
    gp.variables.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      const double pj = transform::unit_from_z(z[static_cast<std::size_t>(j) + 2]);
      const double mu = means[static_cast<std::size_t>(j)] - mu0;
      gp.variables.push_back(
          ComponentParams{BaseParams::negbin(clamp_rate(mu * pj / (1.0 - pj)), pj), 0.0});
    }
    return gp;
  };
  Objective obj = [&](std::span<const double> z) -> double {
    try {
      const double v = group_log_lik(g, build(z), f);
      return std::isfinite(v) ? -v : kObjectiveCeiling;
    } catch (const Error&) {
      return kObjectiveCeiling;
    }
  };
  const double mu0_init =
      std::clamp(stats::mean_pairwise_covariance(g), kPositiveEps, 0.9 * ymin);
  std::vector<double> z0(static_cast<std::size_t>(m) + 2);
  z0[0] = transform::unit_to_z(std::clamp(mu0_init / ymin, 1e-5, 1.0 - 1e-5));
  double p0_init = 0.0;
  for (int j = 0; j < m; ++j) {
    const double pj = p_init_from_moments(g.columns()[static_cast<std::size_t>(j)]);
    z0[static_cast<std::size_t>(j) + 2] = transform::unit_to_z(pj);
    p0_init += pj / m;
  }
  z0[1] = transform::unit_to_z(std::clamp(p0_init, 0.05, 0.95));
  const auto best = minimize_multistart(obj, z0, cfg);
  fit.params = build(best.x);
  fit.log_lik = group_log_lik(g, fit.params, f);
  fit.diag.converged = best.converged;
  fit.diag.iterations = best.iterations;
  fit.diag.n_starts_used = cfg.multistart;
  const double mu0_hat = ymin * transform::unit_from_z(best.x[0]);
  if (transform::unit_at_boundary(mu0_hat / ymin)) fit.diag.boundary_flags.push_back("mu0");
  if (transform::unit_at_boundary(fit.params.factor->base.p))
    fit.diag.boundary_flags.push_back("p0");
  for (int j = 0; j < m; ++j)
    if (transform::unit_at_boundary(fit.params.variables[static_cast<std::size_t>(j)].base.p))
      fit.diag.boundary_flags.push_back("p" + std::to_string(j + 1));
  return fit;
}

}  // namespace detail

// Maximum-likelihood fit of one group of size >= 2. Plain Poisson and plain
// negative binomial use the mean-identity reductions; zero inflation or
// truncation breaks the identity, so those variants optimize every group
// parameter numerically in transformed space.
inline GroupFit fit_group(const GroupData& g, const ModelFamily& f,
                          const OptimizerConfig& cfg) {
  f.validate();
  cfg.validate();
  if (g.size() < 2) throw StructuralError("fit_group requires a group of size >= 2");
  if (f.truncated() && g.max_value() > *f.truncation)
    throw DataError("data value " + std::to_string(g.max_value()) +
                    " exceeds the truncation bound A = " + std::to_string(*f.truncation));

  if (!f.zero_inflated && !f.truncated()) {
    return f.base == Base::poisson ? detail::fit_group_poisson_reduced(g, f, cfg)
                                   : detail::fit_group_negbin_reduced(g, f, cfg);
  }

  const int m = g.size();
  const auto lay = detail::ParamLayout::make(f, m, /*with_factor=*/true);
  std::vector<double> means(static_cast<std::size_t>(m));
  double ymin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    means[static_cast<std::size_t>(j)] =
        stats::sample_mean(g.columns()[static_cast<std::size_t>(j)]);
    ymin = std::min(ymin, means[static_cast<std::size_t>(j)]);
  }
  const double mu0_init = std::clamp(stats::mean_pairwise_covariance(g), kPositiveEps,
                                     std::max(0.9 * ymin, kPositiveEps));
  GroupParameters init;
  double p0_init = 0.0;
  for (int j = 0; j < m; ++j)
    p0_init += detail::p_init_from_moments(g.columns()[static_cast<std::size_t>(j)]) / m;
  init.factor = detail::init_component(f, mu0_init, p0_init, 0.01);
  for (int j = 0; j < m; ++j) {
    const auto& col = g.columns()[static_cast<std::size_t>(j)];
    init.variables.push_back(detail::init_component(
        f, means[static_cast<std::size_t>(j)] - mu0_init, detail::p_init_from_moments(col),
        detail::pi_init_from_zeros(col)));
  }
  auto ll = [&g, &f](const GroupParameters& gp) {
    return f.truncated() ? truncated_group_log_lik(g, gp, f) : group_log_lik(g, gp, f);
  };
  const auto obj = detail::negated_objective(lay, ll);
  const auto best = detail::minimize_multistart(obj, lay.pack(init), cfg);
  GroupFit fit;
  fit.params = lay.unpack(best.x);
  fit.log_lik = ll(fit.params);
  detail::snap_boundary_pis(fit.params, fit.log_lik, ll);
  fit.diag.converged = best.converged;
  fit.diag.iterations = best.iterations;
  fit.diag.n_starts_used = cfg.multistart;
  fit.diag.boundary_flags = lay.boundary_flags(fit.params);
  return fit;
}

// Cache of group fits keyed by (family, sorted member indices). Lookups and
// inserts are serialized; values for one key are deterministic given the
// config and seed, so a duplicated insert is benign.
class GroupFitCache {
public:
  static std::string key_for(const ModelFamily& f, std::span<const int> vars) {
    std::string key = f.code();
    if (f.truncated()) key += ":A=" + std::to_string(*f.truncation);
    key += "|";
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (i > 0) key += ",";
      key += std::to_string(vars[i]);
    }
    return key;
  }

  std::optional<GroupFit> lookup(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it == map_.end()) {
      ++misses_;
      return std::nullopt;
    }
    ++hits_;
    return it->second;
  }

  void insert(const std::string& key, GroupFit fit) {
    std::lock_guard<std::mutex> lock(mu_);
    map_.insert_or_assign(key, std::move(fit));
  }

  long hits() const { return hits_; }
  long misses() const { return misses_; }
  std::size_t entries() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
  }

private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, GroupFit> map_;
  mutable std::atomic<long> hits_{0};
  mutable std::atomic<long> misses_{0};
};

// Fits every group of a partition (through the cache) and assembles the
// model-level AIC bookkeeping.
inline FitResult fit_model(const Dataset& d, const Partition& p, const ModelFamily& f,
                           const OptimizerConfig& cfg, GroupFitCache& cache) {
  const auto t0 = std::chrono::steady_clock::now();
  f.validate();
  cfg.validate();
  if (p.n_vars() != d.n_cols())
    throw StructuralError("partition covers " + std::to_string(p.n_vars()) +
                          " variables; dataset has " + std::to_string(d.n_cols()));
  FitResult res;
  res.partition = p;
  res.family = f;
  KahanSum total;
  for (const auto& group : p.groups()) {
    const std::string key = GroupFitCache::key_for(f, group);
    std::optional<GroupFit> gf = cache.lookup(key);
    if (!gf) {
      OptimizerConfig gcfg = cfg;
      gcfg.seed = cfg.seed ^ fnv1a64(key);
      gf = group.size() == 1 ? fit_singleton(d.column(group.front() - 1), f, gcfg)
                             : fit_group(GroupData(d, group), f, gcfg);
      cache.insert(key, *gf);
    }
    total.add(gf->log_lik);
    if (!gf->diag.converged) res.converged = false;
    std::string prefix = "{";
    for (std::size_t i = 0; i < group.size(); ++i)
      prefix += (i ? "," : "") + std::to_string(group[i]);
    prefix += "}:";
    for (const auto& flag : gf->diag.boundary_flags) res.boundary_flags.push_back(prefix + flag);
    res.params.push_back(std::move(gf->params));
  }
  res.log_lik = total.value();
  res.p = parameter_count(p, f);
  res.aic = -2.0 * res.log_lik + 2.0 * res.p;
  res.aic_normalized = res.aic / d.n_rows();
  res.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace discfa
