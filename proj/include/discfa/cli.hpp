#pragma once

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "io.hpp"
#include "report.hpp"
#include "search.hpp"
#include "simulate.hpp"

namespace discfa::cli {

// Exit-code contract: 0 success, 2 data validation failure, 3 configuration
// error, 4 numeric failure, 1 anything unexpected.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kDataError = 2,
  kConfigError = 3,
  kNumericError = 4,
};

struct RunConfig {
  std::string command;  // fit | simulate | check
  std::string call;     // echoed into reports
  std::string input_path;
  std::string family_code = "p";
  std::optional<int> truncation;
  std::string output_format = "text";
  std::uint64_t seed = 0;
  int threads = 1;
  double rel_tol = 1e-9;
  int max_iter = 500;
  int multistart = 3;
  int shift = 0;
  bool allow_single = false;
  bool verbose = false;
  std::string spec_path;        // simulate input
  std::string out_path = "-";   // simulate output csv ("-" = stdout)
};

inline int run_fit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  Dataset d = load_csv_file(cfg.input_path);
  if (cfg.shift != 0) d = shift_dataset(d, cfg.shift);
  const ModelFamily family = ModelFamily::from_code(cfg.family_code, cfg.truncation);
  if (cfg.output_format != "text" && cfg.output_format != "json")
    throw ConfigError("unknown output format '" + cfg.output_format + "'");
  if (family.truncated() && d.max_value() > *family.truncation)
    throw DataError("data value " + std::to_string(d.max_value()) +
                    " exceeds the truncation bound A = " +
                    std::to_string(*family.truncation));

  Report rep;
  rep.call = cfg.call;
  rep.var_names = d.names();
  rep.n_rows = d.n_rows();
  rep.check = check_data(d);
  for (const auto& msg : warning_messages(rep.check)) err << "warning: " << msg << "\n";

  OptimizerConfig ocfg;
  ocfg.rel_tol = cfg.rel_tol;
  ocfg.max_iter = cfg.max_iter;
  ocfg.multistart = cfg.multistart;
  ocfg.seed = cfg.seed;

  if (d.n_cols() == 1) {
    if (!cfg.allow_single)
      throw DataError("the dataset has a single column; the forward search needs at "
                      "least two variables (pass --allow-single for a plain "
                      "single-variable fit)");
    GroupFitCache cache;
    rep.fit = fit_model(d, Partition::independence(1), family, ocfg, cache);
  } else {
    SearchResult sr = forward_search(d, family, ocfg, cfg.threads);
    rep.fit = std::move(sr.best);
    rep.trace = std::move(sr.trace);
  }
  rep.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (cfg.output_format == "json")
    out << render_json(rep, cfg.verbose).dump(2) << "\n";
  else
    out << render_text(rep);
  return kOk;
}

inline int run_simulate(const RunConfig& cfg, bool seed_overridden, std::ostream& out,
                        std::ostream& err) {
  SimSpec spec = load_simspec_file(cfg.spec_path);
  if (seed_overridden) spec.seed = cfg.seed;
  const Dataset d = simulate(spec);
  if (cfg.out_path == "-") {
    write_csv(d, out);
  } else {
    std::ofstream f(cfg.out_path, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + cfg.out_path + "'");
    write_csv(d, f);
  }
  err << "simulated " << d.n_cols() << " variables x " << d.n_rows()
      << " rows; family " << spec.family.code();
  if (spec.family.truncated()) err << " (A = " << *spec.family.truncation << ")";
  err << ", model " << spec.partition.display() << ", seed " << spec.seed << "\n";
  return kOk;
}

inline int run_check(const RunConfig& cfg, std::ostream& out) {
  const Dataset d = load_csv_file(cfg.input_path);
  const DataCheck check = check_data(d);
  if (cfg.output_format == "json")
    out << render_check_json(d, check).dump(2) << "\n";
  else if (cfg.output_format == "text")
    out << render_check_text(d, check);
  else
    throw ConfigError("unknown output format '" + cfg.output_format + "'");
  return kOk;
}

// Parses argv-style arguments (program name excluded) and dispatches.
inline int main_impl(const std::vector<std::string>& args, std::ostream& out,
                     std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"discfa: discrete factor analysis for non-negative count data"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--output", cfg.output_format, "Report format: text or json")
        ->default_str("text");
  };

  CLI::App* fit = app.add_subcommand("fit", "Fit a factor model by forward AIC search");
  fit->add_option("--input", cfg.input_path, "CSV file of counts")->required();
  fit->add_option("--family", cfg.family_code,
                  "Model family: p, pt, zip, zipt, nb, nbt, zinb, zinbt")
      ->default_str("p");
  int trunc_value = 0;
  CLI::Option* trunc_opt =
      fit->add_option("--trunc", trunc_value, "Truncation bound A (for *t families)");
  fit->add_option("--seed", cfg.seed, "Seed for the optimizer restarts");
  fit->add_option("--threads", cfg.threads, "Parallel candidate fits per search step");
  fit->add_option("--rel-tol", cfg.rel_tol, "Optimizer convergence tolerance");
  fit->add_option("--max-iter", cfg.max_iter, "Optimizer iteration cap");
  fit->add_option("--multistart", cfg.multistart, "Optimizer restarts per group fit");
  fit->add_option("--shift", cfg.shift, "Subtract k from every cell before fitting");
  fit->add_flag("--allow-single", cfg.allow_single, "Permit a one-column dataset");
  fit->add_flag("--verbose", cfg.verbose, "Include the search trace in JSON output");
  add_common(fit);

  CLI::App* sim = app.add_subcommand("simulate", "Generate a dataset from a SimSpec file");
  sim->add_option("--spec", cfg.spec_path, "SimSpec JSON file")->required();
  sim->add_option("--out", cfg.out_path, "Output CSV path ('-' = stdout)");
  CLI::Option* sim_seed = sim->add_option("--seed", cfg.seed, "Override the SimSpec seed");

  CLI::App* chk = app.add_subcommand("check", "Screen a CSV for stability issues");
  chk->add_option("--input", cfg.input_path, "CSV file of counts")->required();
  add_common(chk);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  // The echoed call records the semantic invocation only; execution knobs
  // (--threads, --output, --verbose) must not change report bytes.
  if (fit->parsed()) {
    cfg.call = "discfa fit --family " + cfg.family_code + " --input " + cfg.input_path;
    if (trunc_opt->count() > 0) cfg.call += " --trunc " + std::to_string(trunc_value);
    if (cfg.shift != 0) cfg.call += " --shift " + std::to_string(cfg.shift);
    if (cfg.seed != 0) cfg.call += " --seed " + std::to_string(cfg.seed);
    if (cfg.allow_single) cfg.call += " --allow-single";
  } else if (sim->parsed()) {
    cfg.call = "discfa simulate --spec " + cfg.spec_path;
  } else {
    cfg.call = "discfa check --input " + cfg.input_path;
  }

  try {
    if (fit->parsed()) {
      cfg.command = "fit";
      if (trunc_opt->count() > 0) cfg.truncation = trunc_value;
      return run_fit(cfg, out, err);
    }
    if (sim->parsed()) {
      cfg.command = "simulate";
      return run_simulate(cfg, sim_seed->count() > 0, out, err);
    }
    cfg.command = "check";
    return run_check(cfg, out);
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericError;
  } catch (const Error& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace discfa::cli
