#pragma once

// Data-driven screening thresholds.
//
// FDR rule: with d candidates and a tolerated false-positive count f, select
// features whose Wald statistic exceeds delta = Phi^-1(1 - f/(2d)); under a
// null feature's asymptotic N(0,1) Wald law, about f nulls survive.
//
// Random decoupling: permute the rows of the candidate columns (breaking any
// tie to the response while preserving marginal laws), rerun the screen K
// times, pool the resulting null statistics, and use their tau-quantile as
// the threshold for the original statistics.

#include <cstdint>
#include <utility>
#include <vector>

#include "csis/screening.hpp"

namespace csis {

// Phi(z) for the standard normal.
double normal_cdf(double z);

// Phi^-1(p), absolute error below 1e-9: rational initial guess polished by
// two Halley steps against the erfc-based CDF.
double normal_quantile(double p);

struct FdrSelection {
  double delta = 0.0;        // realized Wald threshold
  std::vector<int> selected; // candidate columns with wald >= delta
};

// d must be the candidate-pool size; f in (0, 2d).  A common default for f is
// n/log(n).
FdrSelection fdr_select(const ScreenStatistics& stats, long d, double f);

enum class PermutationMode {
  joint,       // one shared row permutation for all candidate columns per repeat
  per_column,  // independent row permutation per candidate column
};

enum class PoolMode {
  pooled,              // tau-quantile over all K*d decoupled statistics
  per_repetition_max,  // tau-quantile over the K per-repetition maxima
};

struct DecouplingOptions {
  int repetitions = 5;   // K
  double tau = 0.99;     // quantile level in (0, 1]; tau = 1 gives the maximum
  std::uint64_t seed = 0;
  PermutationMode permutation = PermutationMode::joint;
  PoolMode pool = PoolMode::pooled;
  ScreenOptions screen;  // candidate subset, workers, Wald mode, solver knobs
};

struct DecouplingResult {
  double gamma_star = 0.0;   // threshold on |coef| (select |coef| > gamma_star)
  double gamma_tilde = 0.0;  // threshold on nll   (select nll < gamma_tilde)
  double baseline_nll = 0.0;
  long pooled_values = 0;    // statistics that entered each pool
  long fit_failures = 0;     // decoupled fits excluded from the pools
  std::vector<double> magnitude_pool;  // sorted ascending (for diagnostics)
  std::vector<double> reduction_pool;  // sorted ascending nll reductions
};

// Quantile convention: values sorted ascending, 1-based index ceil(tau*m).
DecouplingResult decoupling_threshold(const Dataset& data, const ConditioningSet& cond,
                                      Family family, const DecouplingOptions& opts);

}  // namespace csis
