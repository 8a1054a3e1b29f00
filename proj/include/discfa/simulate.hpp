#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace discfa {

// Deterministic uniform stream: mt19937_64 with an explicit 53-bit mantissa
// conversion, so identical seeds reproduce identical datasets on any
// platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }  // [0, 1)

private:
  std::mt19937_64 eng_;
};

// One draw from the base distribution by CDF inversion with the pmf forward
// recurrence. Rates large enough to underflow f(0) are handled by splitting
// the draw (both families are additive in their rate/size parameter).
inline int draw_base(const BaseParams& params, Rng& rng) {
  params.validate();
  if (params.kind == Base::poisson && params.theta > 500.0) {
    const BaseParams half = BaseParams::poisson(params.theta / 2.0);
    return draw_base(half, rng) + draw_base(half, rng);
  }
  if (params.kind == Base::negbin && params.r * std::log(params.p) < -500.0) {
    const BaseParams half = BaseParams::negbin(params.r / 2.0, params.p);
    return draw_base(half, rng) + draw_base(half, rng);
  }
  const double u = rng.uniform();
  double term = params.kind == Base::poisson ? std::exp(-params.theta)
                                             : std::exp(params.r * std::log(params.p));
  double cum = term;
  int x = 0;
  while (u >= cum) {
    term *= params.kind == Base::poisson
                ? params.theta / (x + 1.0)
                : (params.r + x) * (1.0 - params.p) / (x + 1.0);
    ++x;
    cum += term;
    if (term <= 0.0) break;  // mass exhausted by rounding; u sits in the far tail
  }
  return x;
}

// Component draw: with probability pi the zero-inflation mass fires and the
// draw is 0, otherwise the base distribution is sampled.
inline int draw_component(const ComponentParams& c, bool zero_inflated, Rng& rng) {
  if (zero_inflated) {
    const double u = rng.uniform();
    if (u < c.pi) return 0;
  }
  return draw_base(c.base, rng);
}

// A generating configuration: partition, family, per-group parameters, row
// count, and seed.
struct SimSpec {
  Partition partition;
  ModelFamily family;
  std::vector<GroupParameters> params;
  int n = 0;
  std::uint64_t seed = 0;

  void validate() const {
    family.validate();
    if (partition.n_vars() < 1) throw StructuralError("SimSpec: empty partition");
    if (n < 1) throw StructuralError("SimSpec: n must be >= 1");
    if (params.size() != static_cast<std::size_t>(partition.group_count()))
      throw StructuralError("SimSpec: parameter bundles do not cover every group");
    for (std::size_t k = 0; k < params.size(); ++k)
      params[k].validate(family, partition.groups()[k].size());
  }
};

// Generates a dataset from the model: per row and group, draw the latent
// factor U (absent for singletons) and each variable's own count, and set
// y_j = U + x_j. Under truncation at A the whole group row is redrawn until
// every member is <= A, which targets the truncated joint exactly. A single
// RNG stream and fixed visitation order keep the output reproducible.
inline Dataset simulate(const SimSpec& spec) {
  spec.validate();
  const int n_vars = spec.partition.n_vars();
  std::vector<std::vector<int>> columns(static_cast<std::size_t>(n_vars),
                                        std::vector<int>(static_cast<std::size_t>(spec.n)));
  Rng rng(spec.seed);
  const bool zi = spec.family.zero_inflated;
  const bool truncated = spec.family.truncated();
  const int bound = truncated ? *spec.family.truncation : 0;
  long long proposals = 0;
  long long accepted = 0;
  std::vector<int> draw;
  for (int i = 0; i < spec.n; ++i) {
    for (std::size_t k = 0; k < spec.params.size(); ++k) {
      const auto& group = spec.partition.groups()[k];
      const auto& gp = spec.params[k];
      draw.assign(group.size(), 0);
      while (true) {
        ++proposals;
        const int u = gp.factor ? draw_component(*gp.factor, zi, rng) : 0;
        bool ok = true;
        for (std::size_t j = 0; j < group.size(); ++j) {
          draw[j] = u + draw_component(gp.variables[j], zi, rng);
          if (truncated && draw[j] > bound) ok = false;
        }
        if (!truncated || ok) {
          ++accepted;
          break;
        }
        if (proposals >= 100000 &&
            static_cast<double>(accepted) < 1e-6 * static_cast<double>(proposals))
          throw NumericError("truncation bound incompatible with parameters: acceptance "
                             "probability below 1e-6 after " +
                             std::to_string(proposals) + " proposals");
      }
      for (std::size_t j = 0; j < group.size(); ++j)
        columns[static_cast<std::size_t>(group[j]) - 1][static_cast<std::size_t>(i)] = draw[j];
    }
  }
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n_vars));
  for (int v = 1; v <= n_vars; ++v) names.push_back("Var" + std::to_string(v));
  return Dataset(std::move(columns), std::move(names));
}

}  // namespace discfa
