#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"

namespace discfa {

// One of the eight model variants: base distribution, optional zero
// inflation, optional truncation at A. Codes follow the CLI surface:
// p, pt, zip, zipt, nb, nbt, zinb, zinbt.
struct ModelFamily {
  Base base = Base::poisson;
  bool zero_inflated = false;
  std::optional<int> truncation;

  bool truncated() const { return truncation.has_value(); }

  // Free parameters carried by one entity (the latent factor or one
  // variable): 1 for Poisson, 2 for negative binomial, +1 if zero-inflated.
  // Truncation adds none.
  int params_per_entity() const {
    return (base == Base::negbin ? 2 : 1) + (zero_inflated ? 1 : 0);
  }

  void validate() const {
    if (truncation && *truncation < 1)
      throw DomainError("truncation bound A must be a positive integer");
  }

  ModelFamily untruncated() const { return {base, zero_inflated, std::nullopt}; }

  std::string code() const {
    std::string s = zero_inflated ? "zi" : "";
    s += base == Base::poisson ? "p" : "nb";
    if (truncated()) s += "t";
    return s;
  }

  static bool code_requires_truncation(std::string_view code) {
    return !code.empty() && code.back() == 't';
  }

  static ModelFamily from_code(std::string_view code,
                               std::optional<int> truncation = std::nullopt) {
    std::string_view rest = code;
    ModelFamily f;
    if (rest.substr(0, 2) == "zi") {
      f.zero_inflated = true;
      rest.remove_prefix(2);
    }
    if (!rest.empty() && rest.back() == 't') {
      if (!truncation)
        throw ConfigError("family '" + std::string(code) +
                          "' requires a truncation bound (--trunc)");
      rest.remove_suffix(1);
    } else if (truncation) {
      throw ConfigError("family '" + std::string(code) +
                        "' does not accept a truncation bound");
    }
    if (rest == "p") {
      f.base = Base::poisson;
    } else if (rest == "nb") {
      f.base = Base::negbin;
    } else {
      throw ConfigError("unknown model family '" + std::string(code) + "'");
    }
    if (code_requires_truncation(code)) f.truncation = truncation;
    f.validate();
    return f;
  }

  static const std::array<const char*, 8>& all_codes() {
    static const std::array<const char*, 8> codes = {
        "p", "pt", "zip", "zipt", "nb", "nbt", "zinb", "zinbt"};
    return codes;
  }

  bool operator==(const ModelFamily&) const = default;
};

// A disjoint grouping of the variable indices 1..N into factors/singletons,
// kept in canonical order: indices sorted within each group, groups sorted by
// their smallest index. Displayed as the tuple of group sizes, "(1, 3, 4, 2)".
class Partition {
public:
  Partition() = default;

  int n_vars() const { return n_vars_; }
  int group_count() const { return static_cast<int>(groups_.size()); }
  const std::vector<std::vector<int>>& groups() const { return groups_; }

  std::vector<int> sizes() const {
    std::vector<int> s;
    s.reserve(groups_.size());
    for (const auto& g : groups_) s.push_back(static_cast<int>(g.size()));
    return s;
  }

  std::string display() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      if (i > 0) os << ", ";
      os << groups_[i].size();
    }
    os << ")";
    return os.str();
  }

  // "{1} {2,3,4} {5,6}" — the listing that, with the size tuple, round-trips
  // through parse_groups.
  std::string format_groups() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      if (i > 0) os << " ";
      os << "{";
      for (std::size_t k = 0; k < groups_[i].size(); ++k) {
        if (k > 0) os << ",";
        os << groups_[i][k];
      }
      os << "}";
    }
    return os.str();
  }

  static Partition parse_groups(const std::string& text);
  static Partition independence(int n_vars);
  static Partition single_group(int n_vars);

  bool operator==(const Partition&) const = default;

  // Canonical-listing order; used for deterministic tie-breaking.
  bool operator<(const Partition& other) const { return groups_ < other.groups_; }

private:
  friend Partition canonicalize_partition(std::vector<std::vector<int>> groups);
  std::vector<std::vector<int>> groups_;
  int n_vars_ = 0;
};

// Validates that the given index sets are non-empty, disjoint, and cover
// {1..N} exactly, then sorts them into canonical order. Idempotent.
inline Partition canonicalize_partition(std::vector<std::vector<int>> groups) {
  if (groups.empty()) throw StructuralError("partition must contain at least one group");
  std::size_t total = 0;
  for (auto& g : groups) {
    if (g.empty()) throw StructuralError("partition groups must be non-empty");
    std::sort(g.begin(), g.end());
    for (std::size_t k = 1; k < g.size(); ++k)
      if (g[k] == g[k - 1])
        throw StructuralError("duplicate variable index " + std::to_string(g[k]) +
                              " inside a group");
    total += g.size();
  }
  std::vector<int> all;
  all.reserve(total);
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  std::sort(all.begin(), all.end());
  for (std::size_t k = 0; k < all.size(); ++k) {
    const int expect = static_cast<int>(k) + 1;
    if (all[k] != expect) {
      if (k > 0 && all[k] == all[k - 1])
        throw StructuralError("groups overlap at variable index " +
                              std::to_string(all[k]));
      throw StructuralError("groups do not cover variable index " +
                            std::to_string(expect));
    }
  }
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  Partition p;
  p.groups_ = std::move(groups);
  p.n_vars_ = static_cast<int>(total);
  return p;
}

inline Partition Partition::independence(int n_vars) {
  if (n_vars < 1) throw StructuralError("a partition needs at least one variable");
  std::vector<std::vector<int>> groups;
  groups.reserve(static_cast<std::size_t>(n_vars));
  for (int v = 1; v <= n_vars; ++v) groups.push_back({v});
  return canonicalize_partition(std::move(groups));
}

inline Partition Partition::single_group(int n_vars) {
  if (n_vars < 1) throw StructuralError("a partition needs at least one variable");
  std::vector<int> g(static_cast<std::size_t>(n_vars));
  for (int v = 1; v <= n_vars; ++v) g[static_cast<std::size_t>(v) - 1] = v;
  return canonicalize_partition({std::move(g)});
}

inline Partition Partition::parse_groups(const std::string& text) {
  std::vector<std::vector<int>> groups;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    if (text[i] != '{') throw StructuralError("expected '{' in partition listing");
    ++i;
    std::vector<int> group;
    std::string num;
    for (; i < text.size() && text[i] != '}'; ++i) {
      if (text[i] == ',') {
        if (num.empty()) throw StructuralError("empty index in partition listing");
        group.push_back(std::stoi(num));
        num.clear();
      } else if (std::isdigit(static_cast<unsigned char>(text[i]))) {
        num += text[i];
      } else {
        throw StructuralError("unexpected character in partition listing");
      }
    }
    if (i == text.size()) throw StructuralError("unterminated group in partition listing");
    if (num.empty()) throw StructuralError("empty index in partition listing");
    group.push_back(std::stoi(num));
    groups.push_back(std::move(group));
    ++i;  // past '}'
  }
  return canonicalize_partition(std::move(groups));
}

// Merges groups i and j (1-based positions in canonical order) and
// re-canonicalizes; the group count drops by exactly one.
inline Partition merge_groups(const Partition& p, int i, int j) {
  const int g = p.group_count();
  if (i == j) throw StructuralError("merge_groups: group indices must differ");
  if (i < 1 || i > g || j < 1 || j > g)
    throw StructuralError("merge_groups: group index out of range");
  std::vector<std::vector<int>> groups = p.groups();
  auto& gi = groups[static_cast<std::size_t>(i) - 1];
  const auto& gj = groups[static_cast<std::size_t>(j) - 1];
  gi.insert(gi.end(), gj.begin(), gj.end());
  groups.erase(groups.begin() + (j - 1));
  return canonicalize_partition(std::move(groups));
}

// Number of free parameters of a (partition, family) model: every variable
// carries params_per_entity() of its own, and every group of size >= 2 adds
// one factor entity. Singletons have no latent component.
inline int parameter_count(const Partition& p, const ModelFamily& f) {
  f.validate();
  const int k = f.params_per_entity();
  int count = 0;
  for (const auto& g : p.groups()) {
    count += k * static_cast<int>(g.size());
    if (g.size() >= 2) count += k;
  }
  return count;
}

// Parameters of one entity: the base distribution plus the zero-inflation
// mass pi (meaningful only under zero-inflated families, otherwise 0).
struct ComponentParams {
  BaseParams base;
  double pi = 0.0;
};

// Parameter bundle for one group: a factor entity if and only if the group
// has two or more members, plus one entity per member variable.
struct GroupParameters {
  std::optional<ComponentParams> factor;
  std::vector<ComponentParams> variables;

  void validate(const ModelFamily& f, std::size_t group_size) const {
    f.validate();
    if (variables.size() != group_size)
      throw StructuralError("group parameters cover " + std::to_string(variables.size()) +
                            " variables; group has " + std::to_string(group_size));
    if (factor.has_value() != (group_size >= 2))
      throw StructuralError(group_size >= 2
                                ? "multi-variable group is missing factor parameters"
                                : "singleton group must not carry factor parameters");
    auto check = [&f](const ComponentParams& c, const char* who) {
      if (c.base.kind != f.base)
        throw StructuralError(std::string(who) + " parameters do not match the family's base");
      c.base.validate();
      if (f.zero_inflated) {
        if (!(c.pi >= 0.0 && c.pi < 1.0))
          throw DomainError(std::string(who) + " zero-inflation pi must lie in [0, 1)");
      } else if (c.pi != 0.0) {
        throw StructuralError(std::string(who) +
                              " carries a zero-inflation pi but the family is not zero-inflated");
      }
    };
    if (factor) check(*factor, "factor");
    for (const auto& v : variables) check(v, "variable");
  }
};

// Immutable n x N matrix of non-negative integer counts, stored by column,
// with unique variable names.
class Dataset {
public:
  Dataset(std::vector<std::vector<int>> columns, std::vector<std::string> names)
      : columns_(std::move(columns)), names_(std::move(names)) {
    if (columns_.empty()) throw DataError("dataset has no columns");
    if (names_.size() != columns_.size())
      throw DataError("dataset has " + std::to_string(columns_.size()) + " columns but " +
                      std::to_string(names_.size()) + " names");
    const std::size_t n = columns_.front().size();
    if (n == 0) throw DataError("dataset has no rows");
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (columns_[j].size() != n)
        throw DataError("column '" + names_[j] + "' has " +
                        std::to_string(columns_[j].size()) + " rows; expected " +
                        std::to_string(n));
      for (std::size_t i = 0; i < n; ++i) {
        if (columns_[j][i] < 0)
          throw DataError("negative values in the data (row " + std::to_string(i + 1) +
                          ", column '" + names_[j] + "')");
        max_value_ = std::max(max_value_, columns_[j][i]);
      }
    }
    for (std::size_t j = 0; j < names_.size(); ++j) {
      if (names_[j].empty()) throw DataError("empty variable name");
      for (std::size_t k = j + 1; k < names_.size(); ++k)
        if (names_[j] == names_[k])
          throw DataError("duplicate variable name '" + names_[j] + "'");
    }
  }

  int n_rows() const { return static_cast<int>(columns_.front().size()); }
  int n_cols() const { return static_cast<int>(columns_.size()); }
  const std::vector<int>& column(int j) const { return columns_.at(static_cast<std::size_t>(j)); }
  const std::vector<std::vector<int>>& columns() const { return columns_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(int j) const { return names_.at(static_cast<std::size_t>(j)); }
  int max_value() const { return max_value_; }

  bool operator==(const Dataset&) const = default;

private:
  std::vector<std::vector<int>> columns_;
  std::vector<std::string> names_;
  int max_value_ = 0;
};

// A fitted model: partition, family, per-group parameters, and the AIC
// bookkeeping. aic = -2 log_lik + 2 p holds exactly; aic_normalized divides
// by the row count.
struct FitResult {
  Partition partition;
  ModelFamily family;
  std::vector<GroupParameters> params;
  double log_lik = 0.0;
  int p = 0;
  double aic = 0.0;
  double aic_normalized = 0.0;
  double wall_time = 0.0;  // seconds
  bool converged = true;
  std::vector<std::string> boundary_flags;
};

}  // namespace discfa
