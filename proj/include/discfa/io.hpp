#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "simulate.hpp"
#include "types.hpp"

namespace discfa {

namespace detail {

inline std::string trim(std::string s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && is_space(static_cast<unsigned char>(s[b]))) ++b;
  return s.substr(b);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

}  // namespace detail

// Reads a comma-separated count table: a header row of unique names, then
// integer cells. Negatives, non-integers, and missing cells are rejected with
// the offending row and column named.
inline Dataset load_csv(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> names = detail::split_csv_line(line);
  for (const auto& name : names)
    if (name.empty()) throw DataError(source + ": empty name in the header row");
  const std::size_t n_cols = names.size();
  std::vector<std::vector<int>> columns(n_cols);
  int row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != n_cols)
      throw DataError(source + ": row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells; expected " +
                      std::to_string(n_cols));
    for (std::size_t j = 0; j < n_cols; ++j) {
      const std::string& cell = cells[j];
      const std::string where =
          "row " + std::to_string(row) + ", column '" + names[j] + "'";
      if (cell.empty())
        throw DataError(source + ": missing value at " + where +
                        "; impute missing data before analysis");
      int value = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        if (cell.find('.') != std::string::npos)
          throw DataError(source + ": non-integer value '" + cell + "' at " + where);
        throw DataError(source + ": invalid value '" + cell + "' at " + where);
      }
      if (value < 0)
        throw DataError(source + ": negative values in the data (" + where + ")");
      columns[j].push_back(value);
    }
  }
  if (row == 0) throw DataError(source + ": no data rows");
  return Dataset(std::move(columns), names);
}

inline Dataset load_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return load_csv(in, path);
}

inline void write_csv(const Dataset& d, std::ostream& out) {
  for (int j = 0; j < d.n_cols(); ++j) out << (j ? "," : "") << d.name(j);
  out << "\n";
  for (int i = 0; i < d.n_rows(); ++i) {
    for (int j = 0; j < d.n_cols(); ++j)
      out << (j ? "," : "") << d.column(j)[static_cast<std::size_t>(i)];
    out << "\n";
  }
}

// y := y - k, rejecting any cell that would go negative.
inline Dataset shift_dataset(const Dataset& d, int k) {
  if (k == 0) return d;
  std::vector<std::vector<int>> columns = d.columns();
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (std::size_t i = 0; i < columns[j].size(); ++i) {
      columns[j][i] -= k;
      if (columns[j][i] < 0)
        throw DataError("shift by " + std::to_string(k) + " makes row " +
                        std::to_string(i + 1) + ", column '" + d.name(static_cast<int>(j)) +
                        "' negative");
    }
  return Dataset(std::move(columns), d.names());
}

namespace detail {

inline ComponentParams component_from_json(const nlohmann::json& j, const ModelFamily& f,
                                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a parameter object");
  ComponentParams c;
  try {
    if (f.base == Base::poisson) {
      if (!j.contains("theta")) throw ConfigError(where + ": missing 'theta'");
      c.base = BaseParams::poisson(j.at("theta").get<double>());
    } else {
      if (!j.contains("r") || !j.contains("p"))
        throw ConfigError(where + ": negative binomial parameters need 'r' and 'p'");
      c.base = BaseParams::negbin(j.at("r").get<double>(), j.at("p").get<double>());
    }
    if (j.contains("pi")) {
      c.pi = j.at("pi").get<double>();
      if (!f.zero_inflated && c.pi != 0.0)
        throw ConfigError(where + ": 'pi' given but the family is not zero-inflated");
      if (!(c.pi >= 0.0 && c.pi < 1.0))
        throw ConfigError(where + ": 'pi' must lie in [0, 1)");
    }
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return c;
}

}  // namespace detail

// Parses a SimSpec document:
//   { "partition": [[1],[2,3,4],...],
//     "family": {"base": "poisson"|"negbin", "zero_inflated": bool, "trunc": A?},
//     "params": [ {"factor": {...}?, "variables": [{...}, ...]}, ... ],
//     "n": rows, "seed": integer }
// Parameter bundles are given in the written group order and follow their
// groups through canonicalization.
inline SimSpec simspec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("SimSpec: expected a JSON object");
  SimSpec spec;
  try {
    const auto& fam = j.at("family");
    const std::string base = fam.at("base").get<std::string>();
    if (base == "poisson") {
      spec.family.base = Base::poisson;
    } else if (base == "negbin") {
      spec.family.base = Base::negbin;
    } else {
      throw ConfigError("SimSpec: unknown base '" + base + "' (use 'poisson' or 'negbin')");
    }
    spec.family.zero_inflated = fam.value("zero_inflated", false);
    if (fam.contains("trunc") && !fam.at("trunc").is_null())
      spec.family.truncation = fam.at("trunc").get<int>();
    spec.family.validate();

    const auto& jp = j.at("partition");
    if (!jp.is_array() || jp.empty()) throw ConfigError("SimSpec: 'partition' must be a non-empty array");
    const auto& jparams = j.at("params");
    if (!jparams.is_array() || jparams.size() != jp.size())
      throw ConfigError("SimSpec: 'params' must align with 'partition' (one bundle per group)");

    // Pair each written group with its bundle, sort members (permuting the
    // variable bundles identically), then order groups canonically.
    struct Entry {
      std::vector<int> group;
      GroupParameters params;
    };
    std::vector<Entry> entries;
    for (std::size_t k = 0; k < jp.size(); ++k) {
      Entry e;
      e.group = jp.at(k).get<std::vector<int>>();
      if (e.group.empty()) throw ConfigError("SimSpec: empty group in 'partition'");
      const auto& bundle = jparams.at(k);
      const std::string where = "params[" + std::to_string(k) + "]";
      if (bundle.contains("factor") && !bundle.at("factor").is_null()) {
        e.params.factor =
            detail::component_from_json(bundle.at("factor"), spec.family, where + ".factor");
      }
      const auto& vars = bundle.at("variables");
      if (!vars.is_array() || vars.size() != e.group.size())
        throw ConfigError(where + ": 'variables' must list one object per group member");
      std::vector<std::size_t> order(e.group.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return e.group[a] < e.group[b]; });
      std::vector<int> sorted_group;
      for (std::size_t idx : order) {
        sorted_group.push_back(e.group[idx]);
        e.params.variables.push_back(detail::component_from_json(
            vars.at(idx), spec.family,
            where + ".variables[" + std::to_string(idx) + "]"));
      }
      e.group = std::move(sorted_group);
      entries.push_back(std::move(e));
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.group.front() < b.group.front(); });
    std::vector<std::vector<int>> groups;
    for (auto& e : entries) groups.push_back(e.group);
    spec.partition = canonicalize_partition(std::move(groups));
    for (auto& e : entries) spec.params.push_back(std::move(e.params));

    spec.n = j.at("n").get<int>();
    spec.seed = j.value("seed", std::uint64_t{0});
  } catch (const StructuralError& e) {
    throw ConfigError(std::string("SimSpec: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("SimSpec: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("SimSpec: ") + e.what());
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("SimSpec: ") + e.what());
  }
  return spec;
}

inline SimSpec load_simspec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return simspec_from_json(j);
}

}  // namespace discfa
