#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "estimation.hpp"
#include "json.hpp"
#include "search.hpp"
#include "types.hpp"

namespace discfa {

struct ColumnSummary {
  std::string name;
  double mean = 0.0;
  double zero_fraction = 0.0;
  int max_value = 0;
  bool constant = false;
};

struct PairCorrelationWarning {
  int var_a = 0, var_b = 0;  // 1-based
  std::string name_a, name_b;
  double correlation = 0.0;
};

struct DataCheck {
  std::vector<ColumnSummary> columns;
  std::vector<PairCorrelationWarning> negative_correlation_warnings;
  std::vector<std::string> notes;
};

// Pre-fit screening: per-column zero fraction and maximum (a truncation-bound
// advisory), plus a stability warning for every pair with Pearson correlation
// below -0.50. The shared-factor construction cannot represent negative
// correlation, so such pairs make the fitted structure unreliable. Constant
// columns have no defined correlation and are reported as notes.
inline DataCheck check_data(const Dataset& d) {
  DataCheck out;
  const int n_cols = d.n_cols();
  std::vector<double> sd(static_cast<std::size_t>(n_cols));
  for (int j = 0; j < n_cols; ++j) {
    const auto& col = d.column(j);
    ColumnSummary cs;
    cs.name = d.name(j);
    cs.mean = stats::sample_mean(col);
    cs.zero_fraction = stats::zero_fraction(col);
    cs.max_value = *std::max_element(col.begin(), col.end());
    const double var = stats::sample_variance(col);
    sd[static_cast<std::size_t>(j)] = std::sqrt(var);
    cs.constant = var == 0.0;
    if (cs.constant)
      out.notes.push_back("column '" + cs.name +
                          "' is constant; correlations involving it are undefined");
    out.columns.push_back(std::move(cs));
  }
  for (int a = 0; a < n_cols; ++a)
    for (int b = a + 1; b < n_cols; ++b) {
      if (out.columns[static_cast<std::size_t>(a)].constant ||
          out.columns[static_cast<std::size_t>(b)].constant)
        continue;
      const double rho = stats::sample_covariance(d.column(a), d.column(b)) /
                         (sd[static_cast<std::size_t>(a)] * sd[static_cast<std::size_t>(b)]);
      if (rho < -0.50)
        out.negative_correlation_warnings.push_back(
            {a + 1, b + 1, d.name(a), d.name(b), rho});
    }
  return out;
}

inline std::vector<std::string> warning_messages(const DataCheck& check) {
  std::vector<std::string> msgs;
  for (const auto& w : check.negative_correlation_warnings) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", w.correlation);
    msgs.push_back("high negative correlation (" + std::string(buf) + ") between '" +
                   w.name_a + "' and '" + w.name_b + "'; findings may not be stable");
  }
  return msgs;
}

// Everything one run produces: the fitted model, data screening, the
// optional search trace, and timing.
struct Report {
  std::string call;  // command-line echo
  FitResult fit;
  std::vector<std::string> var_names;
  int n_rows = 0;
  DataCheck check;
  std::optional<SearchTrace> trace;
  double wall_time = 0.0;  // seconds, whole run
};

namespace detail {

inline std::string fmt4(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

// Column-per-factor table in the package's layout: header Factor1..FactorG,
// one row per within-group position.
inline std::string render_factor_table(const std::vector<std::vector<std::string>>& cols) {
  std::size_t n_rows = 0;
  for (const auto& c : cols) n_rows = std::max(n_rows, c.size());
  std::vector<std::string> headers;
  std::vector<std::size_t> widths;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    headers.push_back("Factor" + std::to_string(k + 1));
    std::size_t w = headers.back().size();
    for (const auto& cell : cols[k]) w = std::max(w, cell.size());
    widths.push_back(w);
  }
  const std::size_t label_w = std::to_string(n_rows).size();
  std::ostringstream os;
  os << std::string(label_w + 1, ' ');
  for (std::size_t k = 0; k < cols.size(); ++k) {
    os << headers[k] << std::string(widths[k] - headers[k].size() + 1, ' ');
  }
  os << "\n";
  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::string label = std::to_string(r + 1);
    os << std::string(label_w - label.size(), ' ') << label << " ";
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::string cell = r < cols[k].size() ? cols[k][r] : "";
      os << cell << std::string(widths[k] - cell.size() + 1, ' ');
    }
    os << "\n";
  }
  return os.str();
}

inline std::string join_fmt4(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? " " : "") + fmt4(values[i]);
  return s;
}

}  // namespace detail

// Text rendering in the package's section order: call, warnings, model
// string, AIC, factor membership, parameter tables, factor parameters,
// diagnostics, timing.
inline std::string render_text(const Report& rep, bool include_timing = true) {
  const FitResult& fit = rep.fit;
  const ModelFamily& f = fit.family;
  std::ostringstream os;
  if (!rep.call.empty()) os << "Call:\n" << rep.call << "\n\n";
  for (const auto& msg : warning_messages(rep.check)) os << "Warning: " << msg << "\n";
  for (const auto& note : rep.check.notes) os << "Note: " << note << "\n";
  if (!warning_messages(rep.check).empty() || !rep.check.notes.empty()) os << "\n";

  bool independent = true;
  for (const auto& g : fit.partition.groups()) independent = independent && g.size() == 1;
  if (independent) os << "Independent model!\n\n";
  os << "This is a " << fit.partition.display() << " model.\n\n";
  os << "AIC value is " << detail::fmt4(fit.aic_normalized) << ".\n";
  os << "Total AIC " << detail::fmt4(fit.aic) << " over n = " << rep.n_rows
     << " rows (log-likelihood " << detail::fmt4(fit.log_lik) << ", " << fit.p
     << " parameters).\n\n";

  const auto& groups = fit.partition.groups();
  std::vector<std::vector<std::string>> member_cols(groups.size());
  for (std::size_t k = 0; k < groups.size(); ++k)
    for (int v : groups[k])
      member_cols[k].push_back(rep.var_names.at(static_cast<std::size_t>(v) - 1));
  os << "Factors and variables in each factor:\n"
     << detail::render_factor_table(member_cols) << "\n";

  auto variable_table = [&](auto&& get) {
    std::vector<std::vector<std::string>> cols(groups.size());
    for (std::size_t k = 0; k < groups.size(); ++k)
      for (const auto& v : fit.params[k].variables) cols[k].push_back(detail::fmt4(get(v)));
    return detail::render_factor_table(cols);
  };
  auto factor_line = [&](auto&& get) {
    std::vector<double> vals;
    for (std::size_t k = 0; k < groups.size(); ++k)
      if (fit.params[k].factor) vals.push_back(get(*fit.params[k].factor));
    return vals.empty() ? std::string("(none; all groups are singletons)")
                        : detail::join_fmt4(vals);
  };

  std::vector<std::string> sections;
  if (f.zero_inflated)
    sections.push_back(
        "Estimated zero-inflation parameters for each variable within each factor:\n" +
        variable_table([](const ComponentParams& c) { return c.pi; }));
  if (f.base == Base::poisson) {
    sections.push_back("Estimated parameters for each variable within each factor:\n" +
                       variable_table([](const ComponentParams& c) { return c.base.theta; }));
    sections.push_back("Estimated parameters for factors:\n" +
                       factor_line([](const ComponentParams& c) { return c.base.theta; }) +
                       "\n");
  } else {
    sections.push_back("Estimated r for each variable within each factor:\n" +
                       variable_table([](const ComponentParams& c) { return c.base.r; }));
    sections.push_back("Estimated p for each variable within each factor:\n" +
                       variable_table([](const ComponentParams& c) { return c.base.p; }));
    sections.push_back("Estimated r for factors:\n" +
                       factor_line([](const ComponentParams& c) { return c.base.r; }) + "\n");
    sections.push_back("Estimated p for factors:\n" +
                       factor_line([](const ComponentParams& c) { return c.base.p; }) + "\n");
  }
  if (f.zero_inflated)
    sections.push_back("Estimated zero-inflation parameters for factors:\n" +
                       factor_line([](const ComponentParams& c) { return c.pi; }) + "\n");
  for (std::size_t s = 0; s < sections.size(); ++s) os << sections[s] << (s + 1 < sections.size() ? "\n" : "");

  if (!fit.converged || !fit.boundary_flags.empty()) {
    os << "\nDiagnostics:\n";
    if (!fit.converged) os << "  optimizer did not converge on every group\n";
    for (const auto& flag : fit.boundary_flags) os << "  boundary: " << flag << "\n";
  }
  if (rep.trace) {
    os << "\nSearch: " << rep.trace->steps.size() << " accepted merges, "
       << rep.trace->total_fits << " group fits, " << rep.trace->cache_hits
       << " cache hits.\n";
  }
  if (include_timing) {
    os << "\nTiming:\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", rep.wall_time);
    os << "Elapsed " << buf << " secs\n";
  }
  return os.str();
}

namespace detail {

inline nlohmann::ordered_json component_to_json(const ComponentParams& c,
                                                const ModelFamily& f) {
  nlohmann::ordered_json j;
  if (f.base == Base::poisson) {
    j["theta"] = c.base.theta;
  } else {
    j["r"] = c.base.r;
    j["p"] = c.base.p;
  }
  if (f.zero_inflated) j["pi"] = c.pi;
  return j;
}

inline nlohmann::ordered_json trace_to_json(const SearchTrace& trace) {
  nlohmann::ordered_json jt;
  jt["start"] = trace.start.display();
  jt["start_aic"] = trace.start_aic;
  auto step_to_json = [](const SearchStep& step) {
    nlohmann::ordered_json js;
    js["chosen"] = step.candidates[step.chosen].format_groups();
    js["chosen_aic"] = step.chosen_aic;
    js["new_fits"] = step.new_fits;
    nlohmann::ordered_json jc = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < step.candidates.size(); ++i) {
      nlohmann::ordered_json one;
      one["model"] = step.candidates[i].display();
      one["groups"] = step.candidates[i].format_groups();
      one["aic"] = step.aics[i];
      jc.push_back(std::move(one));
    }
    js["candidates"] = std::move(jc);
    return js;
  };
  jt["steps"] = nlohmann::ordered_json::array();
  for (const auto& step : trace.steps) jt["steps"].push_back(step_to_json(step));
  if (trace.stopped_step) jt["stopped_step"] = step_to_json(*trace.stopped_step);
  jt["total_fits"] = trace.total_fits;
  jt["cache_hits"] = trace.cache_hits;
  return jt;
}

}  // namespace detail

// JSON rendering. Carries the same numbers as the text report at full
// precision, plus the search trace when requested. Timing is deliberately
// omitted so identical runs produce byte-identical documents.
inline nlohmann::ordered_json render_json(const Report& rep, bool include_trace) {
  const FitResult& fit = rep.fit;
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["call"] = rep.call;
  j["family"] = fit.family.code();
  if (fit.family.truncated())
    j["truncation"] = *fit.family.truncation;
  else
    j["truncation"] = nullptr;
  nlohmann::ordered_json jm;
  jm["display"] = fit.partition.display();
  jm["sizes"] = fit.partition.sizes();
  nlohmann::ordered_json jgroups = nlohmann::ordered_json::array();
  for (const auto& g : fit.partition.groups()) {
    nlohmann::ordered_json jg;
    jg["indices"] = g;
    std::vector<std::string> names;
    for (int v : g) names.push_back(rep.var_names.at(static_cast<std::size_t>(v) - 1));
    jg["names"] = names;
    jgroups.push_back(std::move(jg));
  }
  jm["groups"] = std::move(jgroups);
  j["model"] = std::move(jm);
  j["n"] = rep.n_rows;
  j["log_lik"] = fit.log_lik;
  j["n_parameters"] = fit.p;
  j["aic"] = fit.aic;
  j["aic_normalized"] = fit.aic_normalized;
  nlohmann::ordered_json jparams = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < fit.params.size(); ++k) {
    nlohmann::ordered_json jg;
    if (fit.params[k].factor)
      jg["factor"] = detail::component_to_json(*fit.params[k].factor, fit.family);
    else
      jg["factor"] = nullptr;
    nlohmann::ordered_json jv = nlohmann::ordered_json::array();
    const auto& group = fit.partition.groups()[k];
    for (std::size_t i = 0; i < fit.params[k].variables.size(); ++i) {
      nlohmann::ordered_json one =
          detail::component_to_json(fit.params[k].variables[i], fit.family);
      one["name"] = rep.var_names.at(static_cast<std::size_t>(group[i]) - 1);
      jv.push_back(std::move(one));
    }
    jg["variables"] = std::move(jv);
    jparams.push_back(std::move(jg));
  }
  j["parameters"] = std::move(jparams);
  nlohmann::ordered_json jd;
  jd["converged"] = fit.converged;
  jd["boundary_flags"] = fit.boundary_flags;
  if (rep.trace) {
    jd["total_fits"] = rep.trace->total_fits;
    jd["cache_hits"] = rep.trace->cache_hits;
  }
  j["diagnostics"] = std::move(jd);
  j["warnings"] = warning_messages(rep.check);
  j["notes"] = rep.check.notes;
  if (include_trace && rep.trace) j["trace"] = detail::trace_to_json(*rep.trace);
  return j;
}

// Check-only report (the `check` subcommand).
inline std::string render_check_text(const Dataset& d, const DataCheck& check) {
  std::ostringstream os;
  os << "Data check: " << d.n_rows() << " rows, " << d.n_cols() << " variables.\n\n";
  std::size_t name_w = 8;
  for (const auto& c : check.columns) name_w = std::max(name_w, c.name.size());
  os << "  " << "variable" << std::string(name_w - 8 + 2, ' ')
     << "mean      zero_frac  max\n";
  for (const auto& c : check.columns) {
    os << "  " << c.name << std::string(name_w - c.name.size() + 2, ' ');
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-9.4f %-10.4f %d", c.mean, c.zero_fraction, c.max_value);
    os << buf << "\n";
  }
  if (!check.notes.empty()) {
    os << "\nNotes:\n";
    for (const auto& n : check.notes) os << "  - " << n << "\n";
  }
  const auto warnings = warning_messages(check);
  if (!warnings.empty()) {
    os << "\nWarnings:\n";
    for (const auto& w : warnings) os << "  - " << w << "\n";
  }
  return os.str();
}

inline nlohmann::ordered_json render_check_json(const Dataset& d, const DataCheck& check) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["n"] = d.n_rows();
  j["n_variables"] = d.n_cols();
  nlohmann::ordered_json jc = nlohmann::ordered_json::array();
  for (const auto& c : check.columns) {
    nlohmann::ordered_json one;
    one["name"] = c.name;
    one["mean"] = c.mean;
    one["zero_fraction"] = c.zero_fraction;
    one["max"] = c.max_value;
    one["constant"] = c.constant;
    jc.push_back(std::move(one));
  }
  j["columns"] = std::move(jc);
  j["warnings"] = warning_messages(check);
  j["notes"] = check.notes;
  return j;
}

}  // namespace discfa
