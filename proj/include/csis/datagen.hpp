#pragma once

// Seeded generators for the benchmark simulation designs: equicorrelated
// Gaussian covariates, a factor model with mixed innovations (normal /
// double-exponential / normal-mixture thirds), sparse linear coefficient
// patterns, and exponential-family responses.  Every generator consumes draws
// from a counter-based Rng in a fixed documented order, so a (spec, seed)
// pair reproduces bit-for-bit on any platform and worker count.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "csis/family.hpp"
#include "csis/rng.hpp"
#include "csis/screening.hpp"

namespace csis {

struct CovariateModel {
  enum class Kind { equicorrelated, factor_mixture };
  Kind kind = Kind::equicorrelated;

  // equicorrelated: X_j = sqrt(rho) W + sqrt(1-rho) Z_j for the first
  // correlated_prefix columns; later columns are independent N(0,1).
  double rho = 0.0;
  long correlated_prefix = -1;  // -1 = all columns share the factor

  // factor_mixture: X_j = (eps_j + a_j eps) / sqrt(1 + a_j^2), innovations by
  // thirds (normal / double-exponential / mixture), all standardized to unit
  // variance.  The leading loaded_count columns carry the loading; the rest 0.
  long loaded_count = 0;
  double loading_value = 0.0;   // fixed loading a
  bool random_loadings = false; // draw a_j ~ max(0, N(loading_mean, 1)) per dataset
  double loading_mean = 0.0;
};

struct ExperimentSpec {
  std::string name = "custom";
  long n = 0;
  long p = 0;
  CovariateModel covariates;
  std::vector<std::pair<int, double>> beta_star;  // sparse (column, value)
  std::vector<int> conditioning;   // fixed conditioning columns
  bool random_conditioning = false;  // redraw the conditioning set per dataset
  Family family = Family::gaussian;
  long replications = 200;
  std::uint64_t seed = 1;
  double rho = 0.0;  // reported design correlation
  int cset_id = 1;   // which canned conditioning set (ex5)
};

// Equicorrelated design; pairwise correlation rho within the leading
// correlated_prefix columns (default: all), unit variance everywhere.
// Draw order: shared factor (n draws), then columns left to right (n each).
Eigen::MatrixXd gen_equicorrelated(long n, long p, double rho, Rng& rng,
                                   long correlated_prefix = -1);

// Factor design with innovation law by thirds: columns [0, p/3) standard
// normal, [p/3, 2p/3) double exponential scaled by 1/sqrt(2), [2p/3, p) the
// standardized equal mixture of N(-1,1) and N(1,0.5).  Remainder columns when
// 3 does not divide p join the last block.  Draw order: shared factor, then
// columns left to right.
Eigen::MatrixXd gen_factor_mixture(long n, long p, const Eigen::VectorXd& a, Rng& rng);

// Loading giving pairwise correlation rho between two equally loaded columns:
// a = sqrt(rho / (1 - rho)), inverting corr = a^2 / (1 + a^2).
double rho_to_loading(double rho);

// Mean of the truncated-normal random loadings a_j = max(0, N(mean, 1)) such
// that E[a/sqrt(1+a^2)]^2 = rho; solved by bisection against a fixed
// Monte-Carlo sample, so the result is deterministic.
double solve_random_loading_mean(double rho);

// Responses: gaussian y = eta + N(0,1); binomial y ~ Bernoulli(sigmoid(eta));
// poisson y ~ Poisson(exp(eta)).  For the latter two the linear predictor is
// clamped to [-30, 30] before exponentiation (simulation guard only).
// One response draw per row, in row order.
Eigen::VectorXd gen_response(const Eigen::MatrixXd& x,
                             const std::vector<std::pair<int, double>>& beta_star,
                             Family family, Rng& rng);

struct ExampleOptions {
  double rho = -1.0;  // -1 = example's default
  int cset = 1;       // ex5: 1, 2, or 3
  long n = 0;         // 0 = example's default
  long p = 0;
  long s = 0;         // number of active coefficients (ex3/ex4 patterns)
  long replications = 0;
  std::uint64_t seed = 1;
};

// Canned benchmark designs:
//   ex1: n=100, p=2000, equicorrelated rho=0.5, beta=(3,3,3,3,3,-7.5),
//        conditioning {0..4} — the signature column 5 is marginally
//        uncorrelated with the response.
//   ex2: n=100, p=2000, rho=0.9 among the first 1999 columns, column 1999
//        independent, beta_0=10, beta_1999=1, conditioning {0}.
//   ex3: p=5000, alternating 1/1.3 on the first s=12 columns, factor loadings
//        on the first 100 columns, conditioning {0..3}.
//   ex4: p=40000, s=6, random loadings on the first 50 columns, conditioning {0,1}.
//   ex5: p=10000, beta (1,2,1,2) on columns 0..3 and (1,2) on the last two,
//        loadings on the first 2000, conditioning sets: 1 -> {0,1},
//        2 -> {0,1,4,2000}, 3 -> random inactive draw per dataset.
ExperimentSpec example_spec(const std::string& id, Family family,
                            const ExampleOptions& opts = {});

// Materialize one dataset.  Draw order: random loadings (if any), covariates,
// response.  The conditioning set for random_conditioning specs is drawn by
// draw_conditioning *after* this, from the same stream.
Dataset draw_dataset(const ExperimentSpec& spec, Rng& rng);

// The conditioning set for one dataset (fixed copy, or the random draw).
std::vector<int> draw_conditioning(const ExperimentSpec& spec, Rng& rng);

// Active columns (support of beta_star) outside the given conditioning set.
std::vector<int> active_candidates(const ExperimentSpec& spec,
                                   const std::vector<int>& conditioning);

}  // namespace csis
