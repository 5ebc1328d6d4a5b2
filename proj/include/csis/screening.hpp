#pragma once

// Conditional marginal screening: for every candidate column j, fit the GLM on
// [intercept | X_C | X_j] and record the candidate's fitted coefficient, the
// minimized mean negative log-likelihood, and a Wald statistic.  The
// unconditional variants (SIS / MLR) are the special case of an empty
// conditioning set.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csis/family.hpp"

namespace csis {

struct Dataset {
  Eigen::MatrixXd x;  // n x p, column-major
  Eigen::VectorXd y;  // length n
  std::vector<std::string> column_names;  // optional, size p when present
};

struct ConditioningSet {
  std::vector<int> indices;  // columns always included in every fit (may be empty)
  // The intercept is always included implicitly; candidates are the complement.
};

enum class WaldMode {
  inverse_information,  // se^2 = [I^-1]_jj / n  (partials out the conditioning set)
  raw_information,      // se^2 = 1 / (n * I_jj) (literal diagonal reading)
};

struct ScreenOptions {
  double tol = 1e-8;
  int max_iter = 100;
  double coef_bound = 1e4;
  WaldMode wald_mode = WaldMode::inverse_information;
  int workers = 0;  // 0 = hardware concurrency
  // Restrict the sweep to these columns (must avoid the conditioning set).
  // Empty means: all columns outside the conditioning set.  This keeps
  // rankings comparable when different conditioning sets are benchmarked over
  // a common candidate pool.
  std::vector<int> candidate_subset;
};

struct ScreenStatistics {
  std::vector<int> candidates;     // candidate column indices, ascending
  Eigen::VectorXd coef;            // fitted candidate coefficient per slot
  Eigen::VectorXd nll;             // minimized mean negative log-likelihood
  Eigen::VectorXd se;              // Wald standard error (may be +inf)
  Eigen::VectorXd wald;            // |coef| / se; +inf on separation
  std::vector<std::uint8_t> converged;
  std::vector<std::uint8_t> boundary;
  double baseline_nll = 0.0;       // fit on [intercept | X_C] alone
  Eigen::VectorXd baseline_coef;
  long n = 0;
  int q = 0;                       // conditioning-set size
};

ScreenStatistics screen_conditional(const Dataset& data, const ConditioningSet& cond,
                                    Family family, const ScreenOptions& opts = {});

// {j : |coef_j| > gamma}, converged slots only.
std::vector<int> select_by_magnitude(const ScreenStatistics& stats, double gamma);

// {j : nll_j < gamma_tilde}, converged slots only.
std::vector<int> select_by_likelihood(const ScreenStatistics& stats, double gamma_tilde);

enum class RankMethod { magnitude, likelihood, wald };

// Candidate columns ordered best-first: descending |coef|, ascending nll, or
// descending wald.  Raw |coef| depends on each candidate's conditional scale,
// so screening priority normally uses wald (the coefficient in standard-error
// units) or the likelihood drop; magnitude matches the selection rule that
// thresholds raw coefficients.  Non-converged slots rank after all converged
// ones; ties break by ascending column index, so the ordering is a
// deterministic permutation.
std::vector<int> rank_features(const ScreenStatistics& stats, RankMethod method);

}  // namespace csis
