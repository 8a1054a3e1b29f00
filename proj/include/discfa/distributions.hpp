#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"

namespace discfa {

enum class Base { poisson, negbin };

// Parameters of one base count distribution: a Poisson rate theta, or a
// negative binomial pair (r, p) with real r > 0 and success probability
// p in (0, 1). The negative binomial pmf uses the gamma-function form of the
// binomial coefficient, so non-integer r is supported. The Poisson mean and
// variance both equal theta; the negative binomial has mean r(1-p)/p and a
// larger variance r(1-p)/p^2 (overdispersion).
struct BaseParams {
  Base kind = Base::poisson;
  double theta = 1.0;  // poisson only
  double r = 1.0;      // negbin only
  double p = 0.5;      // negbin only

  static BaseParams poisson(double theta) {
    BaseParams b;
    b.kind = Base::poisson;
    b.theta = theta;
    b.validate();
    return b;
  }
  static BaseParams negbin(double r, double p) {
    BaseParams b;
    b.kind = Base::negbin;
    b.r = r;
    b.p = p;
    b.validate();
    return b;
  }

  void validate() const {
    if (kind == Base::poisson) {
      if (!(theta > 0.0) || !std::isfinite(theta))
        throw DomainError("poisson rate theta must be positive and finite");
    } else {
      if (!(r > 0.0) || !std::isfinite(r))
        throw DomainError("negative binomial r must be positive and finite");
      if (!(p > 0.0 && p < 1.0))
        throw DomainError("negative binomial p must lie in (0, 1)");
    }
  }

  double mean() const {
    return kind == Base::poisson ? theta : r * (1.0 - p) / p;
  }
};

inline double mean(const BaseParams& params) { return params.mean(); }

// log f(x), evaluated in log space via log-gamma so large x cannot overflow.
inline double log_pmf(int x, const BaseParams& params) {
  params.validate();
  if (x < 0) throw DomainError("log_pmf: x must be a non-negative integer");
  if (params.kind == Base::poisson)
    return x * std::log(params.theta) - params.theta - log_gamma(x + 1.0);
  return log_gamma(params.r + x) - log_gamma(params.r) - log_gamma(x + 1.0) +
         params.r * std::log(params.p) + x * std::log1p(-params.p);
}

// Zero-inflated log pmf: log(pi 1{x=0} + (1-pi) f(x)). The x = 0 branch is a
// two-term log-sum-exp; pi = 0 returns log_pmf unchanged.
inline double zi_log_pmf(int x, double pi, const BaseParams& params) {
  if (!(pi >= 0.0 && pi < 1.0)) throw DomainError("zi_log_pmf: pi must lie in [0, 1)");
  if (pi == 0.0) return log_pmf(x, params);
  const double lp = log_pmf(x, params);
  if (x != 0) return std::log1p(-pi) + lp;
  return logaddexp(std::log(pi), std::log1p(-pi) + lp);
}

// P(X <= k) by forward recurrence from f(0): one exp/pow, then k ratio steps.
// Falls back to log-space accumulation when f(0) underflows so the result
// stays inside (0, 1].
inline double cumulative_mass(const BaseParams& params, int k) {
  params.validate();
  if (k < 0) throw DomainError("cumulative_mass: k must be >= 0");
  double term = params.kind == Base::poisson
                    ? std::exp(-params.theta)
                    : std::exp(params.r * std::log(params.p));
  if (term > 0.0) {
    KahanSum sum;
    sum.add(term);
    for (int x = 0; x < k; ++x) {
      term *= params.kind == Base::poisson
                  ? params.theta / (x + 1.0)
                  : (params.r + x) * (1.0 - params.p) / (x + 1.0);
      sum.add(term);
    }
    return std::min(sum.value(), 1.0);
  }
  LogSumExp lse;
  for (int x = 0; x <= k; ++x) lse.add(log_pmf(x, params));
  return std::min(std::exp(lse.value()), 1.0);
}

inline std::vector<double> log_pmf_table(const BaseParams& params, int kmax) {
  std::vector<double> table(static_cast<std::size_t>(kmax) + 1);
  for (int x = 0; x <= kmax; ++x) table[static_cast<std::size_t>(x)] = log_pmf(x, params);
  return table;
}

inline std::vector<double> zi_log_pmf_table(double pi, const BaseParams& params, int kmax) {
  std::vector<double> table(static_cast<std::size_t>(kmax) + 1);
  for (int x = 0; x <= kmax; ++x)
    table[static_cast<std::size_t>(x)] = zi_log_pmf(x, pi, params);
  return table;
}

}  // namespace discfa
