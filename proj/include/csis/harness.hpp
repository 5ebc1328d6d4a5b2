#pragma once

// Experiment runner: replicated simulation -> screening -> thresholds ->
// aggregated report rows, with replication-level parallelism.  Reports are
// byte-deterministic for a given (config, seed) across worker counts; the
// only non-deterministic column, wall_seconds, can be disabled.

#include <cstdint>
#include <string>
#include <vector>

#include "csis/datagen.hpp"
#include "csis/thresholding.hpp"

namespace csis {

enum class Method { sis, mlr, csis, cmlr };

Method parse_method(const std::string& name);
const char* method_name(Method m);

struct ThresholdRule {
  enum class Kind { fixed_gamma, fdr, decoupling };
  Kind kind = Kind::fdr;
  double gamma = 0.0;   // fixed_gamma threshold
  double f = 0.0;       // fdr tolerated false positives; 0 = n/log(n)
  int repetitions = 5;  // decoupling repeats K
  double tau = 0.99;    // decoupling quantile level
};

struct RunConfig {
  ExperimentSpec spec;
  std::vector<Method> methods = {Method::csis};
  // At most one fdr rule and one decoupling rule; fixed_gamma is for the
  // single-dataset screen path, not for simulation reports.
  std::vector<ThresholdRule> rules;
  PermutationMode permutation = PermutationMode::joint;
  PoolMode pool = PoolMode::pooled;
  WaldMode wald_mode = WaldMode::inverse_information;
  int workers = 0;   // replication-level parallelism; 0 = hardware
  bool timing = true;  // false zeroes wall_seconds for byte-stable output
};

struct ReportRow {
  std::string method;
  double rho = 0.0;
  long n = 0;
  long p = 0;
  std::string family;
  double mmms = 0.0;
  double rsd = 0.0;
  double fp_pi = 0.0;   // decoupling rule; NaN when the rule was not run
  double fn_pi = 0.0;
  double fp_fdr = 0.0;  // fdr rule; NaN when the rule was not run
  double fn_fdr = 0.0;
  long replications = 0;
  long failed = 0;
  double wall_seconds = 0.0;
};

std::vector<ReportRow> run_experiment(const RunConfig& config);

enum class ReportFormat { csv, tsv, pretty };

ReportFormat parse_report_format(const std::string& name);

std::string format_report(const std::vector<ReportRow>& rows, ReportFormat format);

// Build a RunConfig from a JSON document (see README for the schema).
// Unknown keys are rejected.  Values given on the command line override the
// file; the CLI layers that on top.
RunConfig config_from_json(const std::string& json_text);

}  // namespace csis
