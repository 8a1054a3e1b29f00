#pragma once

#include <algorithm>
#include <span>
#include <sstream>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"
#include "numeric.hpp"
#include "types.hpp"

namespace discfa {

// The m data columns of one group plus the per-row minima that bound the
// latent-count convolution sum.
class GroupData {
public:
  GroupData(const Dataset& d, std::span<const int> vars /* 1-based indices */) {
    std::vector<std::vector<int>> cols;
    cols.reserve(vars.size());
    for (int v : vars) {
      if (v < 1 || v > d.n_cols())
        throw StructuralError("variable index " + std::to_string(v) + " out of range");
      cols.push_back(d.column(v - 1));
    }
    init(std::move(cols));
  }

  explicit GroupData(std::vector<std::vector<int>> columns) { init(std::move(columns)); }

  int size() const { return static_cast<int>(columns_.size()); }  // m
  int n_rows() const { return static_cast<int>(columns_.front().size()); }
  const std::vector<std::vector<int>>& columns() const { return columns_; }
  const std::vector<int>& row_mins() const { return row_mins_; }
  int col_max(int j) const { return col_max_.at(static_cast<std::size_t>(j)); }
  int max_row_min() const { return max_row_min_; }
  int max_value() const { return max_value_; }

private:
  void init(std::vector<std::vector<int>> columns) {
    columns_ = std::move(columns);
    if (columns_.empty()) throw StructuralError("group has no columns");
    const std::size_t n = columns_.front().size();
    if (n == 0) throw StructuralError("group has no rows");
    col_max_.assign(columns_.size(), 0);
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (columns_[j].size() != n) throw StructuralError("group columns differ in length");
      for (int y : columns_[j]) {
        if (y < 0) throw DataError("negative count in group data");
        col_max_[j] = std::max(col_max_[j], y);
        max_value_ = std::max(max_value_, y);
      }
    }
    row_mins_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      int mn = columns_[0][i];
      for (std::size_t j = 1; j < columns_.size(); ++j) mn = std::min(mn, columns_[j][i]);
      row_mins_[i] = mn;
      max_row_min_ = std::max(max_row_min_, mn);
    }
  }

  std::vector<std::vector<int>> columns_;
  std::vector<int> row_mins_;
  std::vector<int> col_max_;
  int max_row_min_ = 0;
  int max_value_ = 0;
};

namespace detail {

inline std::vector<double> component_table(const ComponentParams& c, bool zero_inflated,
                                           int kmax) {
  return zero_inflated ? zi_log_pmf_table(c.pi, c.base, kmax) : log_pmf_table(c.base, kmax);
}

// Sum of the per-row convolution log-likelihoods:
//   sum_i log sum_{u=0}^{min_i} f_U(u) prod_j f_j(y_ij - u)
// with the inner sum done by streaming log-sum-exp and the outer one by
// compensated addition.
inline double convolution_sum(const GroupData& g, const std::vector<double>& factor_table,
                              const std::vector<std::vector<double>>& var_tables) {
  const int m = g.size();
  const int n = g.n_rows();
  const auto& mins = g.row_mins();
  const auto& cols = g.columns();
  KahanSum total;
  for (int i = 0; i < n; ++i) {
    LogSumExp row;
    for (int u = 0; u <= mins[static_cast<std::size_t>(i)]; ++u) {
      double t = factor_table[static_cast<std::size_t>(u)];
      for (int j = 0; j < m; ++j) {
        const std::size_t sj = static_cast<std::size_t>(j);
        t += var_tables[sj][static_cast<std::size_t>(cols[sj][static_cast<std::size_t>(i)] - u)];
      }
      row.add(t);
    }
    total.add(row.value());
  }
  return total.value();
}

// Running log-cumulative table: out[k] = log sum_{x<=k} exp(table[x]).
inline std::vector<double> log_cumulative(const std::vector<double>& table) {
  std::vector<double> out(table.size());
  LogSumExp lse;
  for (std::size_t k = 0; k < table.size(); ++k) {
    lse.add(table[k]);
    out[k] = lse.value();
  }
  return out;
}

constexpr double kLogNormalizerFloor = -700.0;

}  // namespace detail

// Exact group log-likelihood for an untruncated family: the latent factor U
// is marginalized by summing the joint over u = 0..min_i per row.
inline double group_log_lik(const GroupData& g, const GroupParameters& gp,
                            const ModelFamily& f) {
  if (f.truncated())
    throw StructuralError("group_log_lik requires an untruncated family; use "
                          "truncated_group_log_lik");
  const int m = g.size();
  if (m < 2) throw StructuralError("group_log_lik requires a group of size >= 2");
  gp.validate(f, static_cast<std::size_t>(m));
  const auto fac = detail::component_table(*gp.factor, f.zero_inflated, g.max_row_min());
  std::vector<std::vector<double>> var(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j)
    var[static_cast<std::size_t>(j)] = detail::component_table(
        gp.variables[static_cast<std::size_t>(j)], f.zero_inflated, g.col_max(j));
  return detail::convolution_sum(g, fac, var);
}

// Truncated-at-A group log-likelihood: the untruncated numerator minus
// n log D, where the normalizer D = sum_u f_U(u) prod_j M_j(A-u) and
// M_j(k) = sum_{x<=k} f_j(x) is each variable's partial mass. All masses are
// the zero-inflated ones when the family is zero-inflated.
inline double truncated_group_log_lik(const GroupData& g, const GroupParameters& gp,
                                      const ModelFamily& f) {
  if (!f.truncated())
    throw StructuralError("truncated_group_log_lik requires a truncated family");
  const int A = *f.truncation;
  const int m = g.size();
  if (m < 2) throw StructuralError("truncated_group_log_lik requires a group of size >= 2");
  if (g.max_value() > A)
    throw DataError("data value " + std::to_string(g.max_value()) +
                    " exceeds the truncation bound A = " + std::to_string(A));
  gp.validate(f, static_cast<std::size_t>(m));
  const auto fac = detail::component_table(*gp.factor, f.zero_inflated, A);
  std::vector<std::vector<double>> var(static_cast<std::size_t>(m));
  std::vector<std::vector<double>> var_cum(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const std::size_t sj = static_cast<std::size_t>(j);
    var[sj] = detail::component_table(gp.variables[sj], f.zero_inflated, A);
    var_cum[sj] = detail::log_cumulative(var[sj]);
  }
  const double numerator = detail::convolution_sum(g, fac, var);
  LogSumExp dsum;
  for (int u = 0; u <= A; ++u) {
    double t = fac[static_cast<std::size_t>(u)];
    for (int j = 0; j < m; ++j)
      t += var_cum[static_cast<std::size_t>(j)][static_cast<std::size_t>(A - u)];
    dsum.add(t);
  }
  const double log_d = dsum.value();
  if (log_d < detail::kLogNormalizerFloor) {
    std::ostringstream os;
    os << "truncated normalizing constant underflowed (log D = " << log_d
       << ", A = " << A << ", m = " << m << ")";
    throw NumericError(os.str());
  }
  return numerator - g.n_rows() * log_d;
}

// Log-likelihood of a single column. A size-1 group has no latent component,
// so this is a plain sum of log pmfs; under truncation the normalizer is the
// column's partial mass up to A (pi + (1-pi) M(A) in the zero-inflated case).
inline double singleton_log_lik(std::span<const int> column, const ComponentParams& vp,
                                const ModelFamily& f) {
  f.validate();
  if (column.empty()) throw StructuralError("singleton_log_lik: empty column");
  if (vp.base.kind != f.base)
    throw StructuralError("variable parameters do not match the family's base");
  if (!f.zero_inflated && vp.pi != 0.0)
    throw StructuralError("zero-inflation pi given for a family without zero inflation");
  int cmax = 0;
  for (int y : column) {
    if (y < 0) throw DataError("negative count in column data");
    cmax = std::max(cmax, y);
  }
  int table_max = cmax;
  if (f.truncated()) {
    if (cmax > *f.truncation)
      throw DataError("data value " + std::to_string(cmax) +
                      " exceeds the truncation bound A = " + std::to_string(*f.truncation));
    table_max = *f.truncation;
  }
  const auto table = detail::component_table(vp, f.zero_inflated, table_max);
  KahanSum total;
  for (int y : column) total.add(table[static_cast<std::size_t>(y)]);
  if (!f.truncated()) return total.value();
  LogSumExp norm;
  for (int x = 0; x <= *f.truncation; ++x) norm.add(table[static_cast<std::size_t>(x)]);
  const double log_norm = norm.value();
  if (log_norm < detail::kLogNormalizerFloor)
    throw NumericError("truncated normalizing constant underflowed for a singleton");
  return total.value() - static_cast<double>(column.size()) * log_norm;
}

// Total model log-likelihood: groups are independent, so their
// log-likelihoods add.
inline double model_log_lik(const Dataset& d, const Partition& p, const ModelFamily& f,
                            std::span<const GroupParameters> params) {
  if (p.n_vars() != d.n_cols())
    throw StructuralError("partition covers " + std::to_string(p.n_vars()) +
                          " variables; dataset has " + std::to_string(d.n_cols()));
  if (params.size() != static_cast<std::size_t>(p.group_count()))
    throw StructuralError("parameter bundles do not cover every group");
  KahanSum total;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& group = p.groups()[k];
    if (group.size() == 1) {
      params[k].validate(f, 1);
      total.add(singleton_log_lik(d.column(group.front() - 1), params[k].variables.front(), f));
    } else {
      GroupData gd(d, group);
      total.add(f.truncated() ? truncated_group_log_lik(gd, params[k], f)
                              : group_log_lik(gd, params[k], f));
    }
  }
  return total.value();
}

}  // namespace discfa
