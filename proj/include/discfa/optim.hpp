#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"

namespace discfa {

// Knobs for the numerical fits. Bounds are implied by the log/logit
// reparameterizations in the estimation layer; the optimizers themselves run
// unconstrained.
struct OptimizerConfig {
  double rel_tol = 1e-9;
  int max_iter = 500;
  int multistart = 3;
  std::uint64_t seed = 0;  // stream for the restart jitter

  void validate() const {
    if (!(rel_tol > 0.0)) throw ConfigError("rel_tol must be positive");
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (multistart < 1) throw ConfigError("multistart must be >= 1");
  }
};

using Objective = std::function<double(std::span<const double>)>;

struct ScalarMinResult {
  double x = 0.0;
  double f = 0.0;
  long iterations = 0;
  bool converged = false;
};

// Brent's parabolic-interpolation/golden-section minimizer on [lo, hi].
template <class F>
ScalarMinResult brent_min(F&& fn, double lo, double hi, double xtol, int max_iter = 200) {
  constexpr double gold = 0.3819660112501051;
  double a = lo, b = hi;
  double x = a + gold * (b - a), w = x, v = x;
  double fx = fn(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  ScalarMinResult res;
  for (int iter = 0; iter < max_iter; ++iter) {
    const double mid = 0.5 * (a + b);
    const double tol1 = xtol + std::numeric_limits<double>::epsilon() * std::fabs(x);
    const double tol2 = 2.0 * tol1;
    if (std::fabs(x - mid) <= tol2 - 0.5 * (b - a)) {
      res.converged = true;
      res.iterations = iter;
      break;
    }
    bool use_golden = true;
    if (std::fabs(e) > tol1) {
      // try a parabolic step through (v, w, x)
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::fabs(q);
      const double e_prev = e;
      e = d;
      if (std::fabs(p) < std::fabs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = mid > x ? tol1 : -tol1;
        use_golden = false;
      }
    }
    if (use_golden) {
      e = (x < mid ? b : a) - x;
      d = gold * e;
    }
    const double u = std::fabs(d) >= tol1 ? x + d : x + (d > 0.0 ? tol1 : -tol1);
    const double fu = fn(u);
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
    res.iterations = iter + 1;
  }
  res.x = x;
  res.f = fx;
  return res;
}

struct MinimizeResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  long iterations = 0;
  bool converged = false;
};

namespace detail {

constexpr double kObjectiveCeiling = 1e300;

inline double fd_step(double xi) { return 1e-5 * (1.0 + std::fabs(xi)); }

inline std::vector<double> fd_gradient(const Objective& fn, std::vector<double> x) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double h = fd_step(xi);
    x[i] = xi + h;
    const double fp = fn(x);
    x[i] = xi - h;
    const double fm = fn(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace detail

// Nelder-Mead simplex descent; robust on rough surfaces, used as a fallback
// when the quasi-Newton path stalls.
inline MinimizeResult nelder_mead(const Objective& fn, std::vector<double> x0,
                                  double rel_tol, int max_iter) {
  const std::size_t n = x0.size();
  MinimizeResult res;
  if (n == 0) throw StructuralError("nelder_mead: empty parameter vector");
  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> fvals(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += 0.25;
  for (std::size_t i = 0; i <= n; ++i) fvals[i] = fn(simplex[i]);

  auto order = [&] {
    std::vector<std::size_t> idx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
    std::vector<std::vector<double>> s2(n + 1);
    std::vector<double> f2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s2[i] = simplex[idx[i]];
      f2[i] = fvals[idx[i]];
    }
    simplex.swap(s2);
    fvals.swap(f2);
  };

  int iter = 0;
  for (; iter < max_iter; ++iter) {
    order();
    const double spread = fvals[n] - fvals[0];
    if (spread <= rel_tol * (std::fabs(fvals[0]) + rel_tol)) {
      res.converged = true;
      break;
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
    auto blend = [&](double coef) {
      std::vector<double> p(n);
      for (std::size_t k = 0; k < n; ++k)
        p[k] = centroid[k] + coef * (simplex[n][k] - centroid[k]);
      return p;
    };
    const auto reflected = blend(-1.0);
    const double fr = fn(reflected);
    if (fr < fvals[0]) {
      const auto expanded = blend(-2.0);
      const double fe = fn(expanded);
      if (fe < fr) {
        simplex[n] = expanded; fvals[n] = fe;
      } else {
        simplex[n] = reflected; fvals[n] = fr;
      }
    } else if (fr < fvals[n - 1]) {
      simplex[n] = reflected; fvals[n] = fr;
    } else {
      const auto contracted = blend(fr < fvals[n] ? -0.5 : 0.5);
      const double fc = fn(contracted);
      if (fc < std::min(fr, fvals[n])) {
        simplex[n] = contracted; fvals[n] = fc;
      } else {
        // shrink toward the best vertex
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t k = 0; k < n; ++k)
            simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
          fvals[i] = fn(simplex[i]);
        }
      }
    }
  }
  order();
  res.x = simplex[0];
  res.f = fvals[0];
  res.iterations = iter;
  return res;
}

// BFGS with central finite-difference gradients and Armijo backtracking.
// Accepted iterates decrease the objective monotonically.
inline MinimizeResult bfgs_min(const Objective& fn, std::vector<double> x0,
                               double rel_tol, int max_iter) {
  const std::size_t n = x0.size();
  MinimizeResult res;
  if (n == 0) throw StructuralError("bfgs_min: empty parameter vector");
  std::vector<double> x = std::move(x0);
  double f = fn(x);
  std::vector<double> g = detail::fd_gradient(fn, x);
  std::vector<double> h(n * n, 0.0);  // inverse-Hessian approximation
  auto reset_h = [&] {
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
  };
  reset_h();

  auto grad_tol_strict = [&](double fv) { return 1e-8 * std::max(1.0, std::fabs(fv)); };
  auto grad_tol_loose = [&](double fv) {
    return std::max(1e-4, 1e-7 * std::max(1.0, std::fabs(fv)));
  };

  int iter = 0;
  int stall_count = 0;
  bool reset_used = false;
  for (; iter < max_iter; ++iter) {
    if (detail::norm_inf(g) <= grad_tol_strict(f)) {
      res.converged = true;
      break;
    }
    // d = -H g
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) d[i] -= h[i * n + k] * g[k];
    double gd = 0.0;
    for (std::size_t i = 0; i < n; ++i) gd += g[i] * d[i];
    if (!(gd < 0.0)) {
      reset_h();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      gd = 0.0;
      for (std::size_t i = 0; i < n; ++i) gd += g[i] * d[i];
      if (!(gd < 0.0)) break;  // zero gradient
    }
    double step = 1.0;
    double fnew = std::numeric_limits<double>::infinity();
    std::vector<double> xnew(n);
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) xnew[i] = x[i] + step * d[i];
      fnew = fn(xnew);
      if (fnew <= f + 1e-4 * step * gd) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!reset_used) {
        reset_used = true;
        reset_h();
        continue;
      }
      res.converged = detail::norm_inf(g) <= grad_tol_loose(f);
      break;
    }
    std::vector<double> gnew = detail::fd_gradient(fn, xnew);
    std::vector<double> s(n), yv(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xnew[i] - x[i];
      yv[i] = gnew[i] - g[i];
    }
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) sy += s[i] * yv[i];
    if (sy > 1e-12) {
      // H <- (I - s y^T / sy) H (I - y s^T / sy) + s s^T / sy
      std::vector<double> hy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) hy[i] += h[i * n + k] * yv[k];
      double yhy = 0.0;
      for (std::size_t i = 0; i < n; ++i) yhy += yv[i] * hy[i];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
          h[i * n + k] += ((sy + yhy) * s[i] * s[k]) / (sy * sy) -
                          (hy[i] * s[k] + s[i] * hy[k]) / sy;
    } else {
      reset_h();
    }
    const double decrease = f - fnew;
    x.swap(xnew);
    f = fnew;
    g.swap(gnew);
    if (decrease <= rel_tol * (std::fabs(f) + rel_tol)) {
      if (++stall_count >= 2) {
        res.converged = detail::norm_inf(g) <= grad_tol_loose(f);
        break;
      }
    } else {
      stall_count = 0;
    }
  }
  res.x = std::move(x);
  res.f = f;
  res.iterations = iter;
  return res;
}

}  // namespace discfa
