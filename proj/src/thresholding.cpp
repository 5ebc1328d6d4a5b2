#include "csis/thresholding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "csis/rng.hpp"

namespace csis {

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z * 0.70710678118654752440);
}

namespace {

// Rational approximation for the initial guess (relative error ~1e-9 in the
// central region, ~5e-4 in the tails before polishing).
double quantile_guess(double p) {
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    double r = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
           ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  }
  if (p > 1.0 - plow) {
    double r = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
           ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  }
  double u = p - 0.5;
  double r = u * u;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Ascending-sorted quantile at 1-based index ceil(tau*m).
double step_quantile(const std::vector<double>& sorted_values, double tau) {
  const auto m = sorted_values.size();
  auto idx = static_cast<size_t>(std::ceil(tau * static_cast<double>(m)));
  if (idx < 1) {
    idx = 1;
  }
  if (idx > m) {
    idx = m;
  }
  return sorted_values[idx - 1];
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie strictly inside (0,1)");
  }
  // Work in the lower tail, where 0.5*erfc(-x/sqrt(2)) keeps full relative
  // precision; 1-p is exact for p in [0.5, 1), so the reflection is free.
  if (p > 0.5) {
    return -normal_quantile(1.0 - p);
  }
  double x = quantile_guess(p);
  // Halley polish: with e = Phi(x) - p and phi the normal density,
  // x <- x - (e/phi) / (1 + (e/phi) x / 2).  Two steps take any sane initial
  // guess to full double precision.
  for (int i = 0; i < 2; ++i) {
    double e = normal_cdf(x) - p;
    double u = e * 2.50662827463100050242 * std::exp(0.5 * x * x);  // e / phi(x)
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

FdrSelection fdr_select(const ScreenStatistics& stats, long d, double f) {
  if (d < 1) {
    throw std::invalid_argument("fdr_select: d must be positive");
  }
  if (!(f > 0)) {
    throw std::invalid_argument("fdr_select: f must be positive");
  }
  if (f >= 2.0 * static_cast<double>(d)) {
    throw std::invalid_argument("fdr_select: need f < 2d for a finite threshold");
  }
  FdrSelection out;
  out.delta = normal_quantile(1.0 - f / (2.0 * static_cast<double>(d)));
  for (size_t i = 0; i < stats.candidates.size(); ++i) {
    if (stats.converged[i] && stats.wald[static_cast<Eigen::Index>(i)] >= out.delta) {
      out.selected.push_back(stats.candidates[i]);
    }
  }
  return out;
}

DecouplingResult decoupling_threshold(const Dataset& data, const ConditioningSet& cond,
                                      Family family, const DecouplingOptions& opts) {
  if (opts.repetitions < 1) {
    throw std::invalid_argument("decoupling_threshold: repetitions must be >= 1");
  }
  if (!(opts.tau > 0.0 && opts.tau <= 1.0)) {
    throw std::invalid_argument("decoupling_threshold: tau must lie in (0,1]");
  }
  const long n = data.x.rows();

  DecouplingResult out;
  Dataset permuted = data;  // conditioning columns and response stay intact

  // Candidate columns to permute: exactly those the screen will visit.
  std::vector<int> cand_cols = opts.screen.candidate_subset;
  if (cand_cols.empty()) {
    std::vector<char> in_cond(static_cast<size_t>(data.x.cols()), 0);
    for (int c : cond.indices) {
      if (c >= 0 && c < data.x.cols()) {
        in_cond[static_cast<size_t>(c)] = 1;
      }
    }
    for (int j = 0; j < data.x.cols(); ++j) {
      if (!in_cond[static_cast<size_t>(j)]) {
        cand_cols.push_back(j);
      }
    }
  } else {
    std::sort(cand_cols.begin(), cand_cols.end());
  }

  std::vector<Eigen::Index> perm(static_cast<size_t>(n));
  for (int k = 0; k < opts.repetitions; ++k) {
    Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(k)));

    if (opts.permutation == PermutationMode::joint) {
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm.begin(), perm.end());
      for (int j : cand_cols) {
        for (long i = 0; i < n; ++i) {
          permuted.x(i, j) = data.x(perm[static_cast<size_t>(i)], j);
        }
      }
    } else {
      for (int j : cand_cols) {
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm.begin(), perm.end());
        for (long i = 0; i < n; ++i) {
          permuted.x(i, j) = data.x(perm[static_cast<size_t>(i)], j);
        }
      }
    }

    ScreenStatistics stats = screen_conditional(permuted, cond, family, opts.screen);
    out.baseline_nll = stats.baseline_nll;

    std::vector<double> rep_mag, rep_red;
    rep_mag.reserve(stats.candidates.size());
    rep_red.reserve(stats.candidates.size());
    for (size_t i = 0; i < stats.candidates.size(); ++i) {
      if (!stats.converged[i]) {
        ++out.fit_failures;
        continue;
      }
      rep_mag.push_back(std::fabs(stats.coef[static_cast<Eigen::Index>(i)]));
      rep_red.push_back(stats.baseline_nll - stats.nll[static_cast<Eigen::Index>(i)]);
    }
    if (rep_mag.empty()) {
      continue;
    }
    if (opts.pool == PoolMode::pooled) {
      out.magnitude_pool.insert(out.magnitude_pool.end(), rep_mag.begin(), rep_mag.end());
      out.reduction_pool.insert(out.reduction_pool.end(), rep_red.begin(), rep_red.end());
    } else {
      out.magnitude_pool.push_back(*std::max_element(rep_mag.begin(), rep_mag.end()));
      out.reduction_pool.push_back(*std::max_element(rep_red.begin(), rep_red.end()));
    }
  }

  if (out.magnitude_pool.empty()) {
    throw std::runtime_error("decoupling_threshold: every decoupled fit failed");
  }
  std::sort(out.magnitude_pool.begin(), out.magnitude_pool.end());
  std::sort(out.reduction_pool.begin(), out.reduction_pool.end());
  out.pooled_values = static_cast<long>(out.magnitude_pool.size());
  out.gamma_star = step_quantile(out.magnitude_pool, opts.tau);
  out.gamma_tilde = out.baseline_nll - step_quantile(out.reduction_pool, opts.tau);
  return out;
}

}  // namespace csis
