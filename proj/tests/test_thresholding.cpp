#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <vector>

#include "csis/rng.hpp"
#include "csis/screening.hpp"
#include "csis/thresholding.hpp"

using namespace csis;

namespace {

// Independent inverse-CDF oracle: bisect the erfc-based CDF in the lower
// tail, where it keeps full relative precision, and reflect for p > 1/2.
double bisect_quantile(double p) {
  if (p > 0.5) {
    return -bisect_quantile(1.0 - p);
  }
  double lo = -42.0, hi = 42.0;
  for (int i = 0; i < 220; ++i) {
    double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Dataset gaussian_dataset(long n, long p, std::uint64_t seed,
                         double planted = 0.0, int planted_col = 2) {
  Rng rng(seed);
  Dataset data;
  data.x.resize(n, p);
  for (long j = 0; j < p; ++j) {
    for (long i = 0; i < n; ++i) {
      data.x(i, j) = rng.gaussian();
    }
  }
  data.y.resize(n);
  for (long i = 0; i < n; ++i) {
    data.y[i] = 0.6 * data.x(i, 0) + planted * data.x(i, planted_col) + rng.gaussian();
  }
  return data;
}

ScreenStatistics wald_stats(std::vector<double> wald, std::vector<uint8_t> converged) {
  ScreenStatistics s;
  const auto d = wald.size();
  s.candidates.resize(d);
  std::iota(s.candidates.begin(), s.candidates.end(), 0);
  s.wald = Eigen::Map<Eigen::VectorXd>(wald.data(), static_cast<Eigen::Index>(d));
  s.coef = s.wald;
  s.nll = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  s.se = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d));
  s.converged = std::move(converged);
  s.boundary.assign(d, 0);
  return s;
}

}  // namespace

TEST_CASE("normal cdf hand values and symmetry") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  for (double z : {-3.0, -1.2, 0.4, 2.5}) {
    CHECK(normal_cdf(z) + normal_cdf(-z) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("normal quantile matches a bisection oracle across the support") {
  const double ps[] = {1e-10, 1e-6,  1e-3,  0.01, 0.02425, 0.1,  0.25, 0.5,
                       0.75,  0.9,   0.975, 0.99, 0.9975,  0.999, 1 - 1e-6,
                       1 - 1e-10};
  for (double p : ps) {
    CHECK(std::fabs(normal_quantile(p) - bisect_quantile(p)) < 1e-9);
  }
}

TEST_CASE("normal quantile frozen reference points") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
  CHECK(normal_quantile(0.9975) == doctest::Approx(2.807033768343811).epsilon(1e-10));
  // Antisymmetry and round-trip.
  for (double p : {0.001, 0.2, 0.77, 0.9999}) {
    CHECK(normal_quantile(p) == doctest::Approx(-normal_quantile(1.0 - p)).epsilon(1e-10));
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("normal quantile rejects arguments outside the open unit interval") {
  CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(normal_quantile(1.0), std::domain_error);
  CHECK_THROWS_AS(normal_quantile(-0.5), std::domain_error);
  CHECK_THROWS_AS(normal_quantile(1.5), std::domain_error);
  CHECK_THROWS_AS(normal_quantile(std::nan("")), std::domain_error);
}

TEST_CASE("fdr threshold value and inclusive selection boundary") {
  double delta = normal_quantile(1.0 - 10.0 / (2.0 * 2000.0));
  CHECK(delta == doctest::Approx(2.807033768343811).epsilon(1e-9));

  ScreenStatistics s =
      wald_stats({delta - 1e-9, delta, delta + 1.0, 0.5}, {1, 1, 1, 1});
  FdrSelection sel = fdr_select(s, 2000, 10.0);
  CHECK(sel.delta == doctest::Approx(delta).epsilon(1e-15));
  CHECK(sel.selected == std::vector<int>{1, 2});  // wald >= delta, inclusive
}

TEST_CASE("fdr threshold is monotone in its inputs") {
  double base = fdr_select(wald_stats({0.0}, {1}), 2000, 10.0).delta;
  CHECK(fdr_select(wald_stats({0.0}, {1}), 2000, 50.0).delta < base);
  CHECK(fdr_select(wald_stats({0.0}, {1}), 8000, 10.0).delta > base);
}

TEST_CASE("fdr selection skips unconverged fits regardless of their statistic") {
  ScreenStatistics s = wald_stats({5.0, std::numeric_limits<double>::infinity()}, {1, 0});
  CHECK(fdr_select(s, 100, 1.0).selected == std::vector<int>{0});
}

TEST_CASE("fdr rejects degenerate tolerated-false-positive counts") {
  ScreenStatistics s = wald_stats({1.0}, {1});
  CHECK_THROWS_AS(fdr_select(s, 100, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(fdr_select(s, 100, -3.0), std::invalid_argument);
  CHECK_THROWS_AS(fdr_select(s, 100, 200.0), std::invalid_argument);
  CHECK_THROWS_AS(fdr_select(s, 0, 1.0), std::invalid_argument);
  CHECK_NOTHROW(fdr_select(s, 100, 199.9999));
}

TEST_CASE("decoupling pools have the advertised size, order, and quantile") {
  Dataset data = gaussian_dataset(40, 12, 99);
  ConditioningSet cond{{0, 1}};
  DecouplingOptions opts;
  opts.repetitions = 3;
  opts.seed = 7;
  DecouplingResult r = decoupling_threshold(data, cond, Family::gaussian, opts);

  CHECK(r.pooled_values == 30);  // 3 repetitions x 10 candidates
  CHECK(r.fit_failures == 0);
  REQUIRE(r.magnitude_pool.size() == 30);
  REQUIRE(r.reduction_pool.size() == 30);
  CHECK(std::is_sorted(r.magnitude_pool.begin(), r.magnitude_pool.end()));
  CHECK(std::is_sorted(r.reduction_pool.begin(), r.reduction_pool.end()));

  // tau = 0.99 over 30 values -> 1-based index ceil(29.7) = 30 (the maximum).
  CHECK(r.gamma_star == r.magnitude_pool[29]);
  CHECK(r.gamma_tilde == r.baseline_nll - r.reduction_pool[29]);

  DecouplingOptions half = opts;
  half.tau = 0.5;
  DecouplingResult rh = decoupling_threshold(data, cond, Family::gaussian, half);
  CHECK(rh.gamma_star == rh.magnitude_pool[14]);  // ceil(0.5 * 30) = 15
}

TEST_CASE("decoupling is reproducible and worker-count invariant") {
  Dataset data = gaussian_dataset(50, 15, 31);
  ConditioningSet cond{{0}};
  DecouplingOptions opts;
  opts.repetitions = 4;
  opts.seed = 1234;
  opts.screen.workers = 1;
  DecouplingResult a = decoupling_threshold(data, cond, Family::gaussian, opts);
  opts.screen.workers = 3;
  DecouplingResult b = decoupling_threshold(data, cond, Family::gaussian, opts);
  DecouplingResult c = decoupling_threshold(data, cond, Family::gaussian, opts);

  CHECK(a.gamma_star == b.gamma_star);
  CHECK(a.gamma_tilde == b.gamma_tilde);
  CHECK(b.gamma_star == c.gamma_star);
  REQUIRE(a.magnitude_pool.size() == b.magnitude_pool.size());
  CHECK(std::memcmp(a.magnitude_pool.data(), b.magnitude_pool.data(),
                    sizeof(double) * a.magnitude_pool.size()) == 0);
}

TEST_CASE("decoupling pool equals a by-hand replay of the permutation schedule") {
  Dataset data = gaussian_dataset(35, 9, 77);
  ConditioningSet cond{{0, 3}};
  DecouplingOptions opts;
  opts.repetitions = 3;
  opts.seed = 555;
  DecouplingResult r = decoupling_threshold(data, cond, Family::gaussian, opts);

  std::vector<int> cand_cols = {1, 2, 4, 5, 6, 7, 8};
  std::vector<double> replay_mag, replay_red;
  const long n = data.x.rows();
  for (int k = 0; k < opts.repetitions; ++k) {
    Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(k)));
    std::vector<Eigen::Index> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    Dataset permuted = data;
    for (int j : cand_cols) {
      for (long i = 0; i < n; ++i) {
        permuted.x(i, j) = data.x(perm[static_cast<size_t>(i)], j);
      }
    }
    ScreenStatistics stats = screen_conditional(permuted, cond, Family::gaussian);
    for (Eigen::Index i = 0; i < stats.coef.size(); ++i) {
      replay_mag.push_back(std::fabs(stats.coef[i]));
      replay_red.push_back(stats.baseline_nll - stats.nll[i]);
    }
  }
  std::sort(replay_mag.begin(), replay_mag.end());
  std::sort(replay_red.begin(), replay_red.end());
  REQUIRE(replay_mag.size() == r.magnitude_pool.size());
  for (size_t i = 0; i < replay_mag.size(); ++i) {
    CHECK(replay_mag[i] == r.magnitude_pool[i]);
    CHECK(replay_red[i] == r.reduction_pool[i]);
  }
}

TEST_CASE("joint permutation keeps candidate columns aligned; per-column breaks them") {
  Dataset data = gaussian_dataset(45, 8, 13);
  data.x.col(3) = data.x.col(2);  // duplicate candidates
  ConditioningSet cond{{0}};
  DecouplingOptions opts;
  opts.repetitions = 1;
  opts.seed = 21;

  auto has_adjacent_duplicate = [](const std::vector<double>& pool) {
    for (size_t i = 0; i + 1 < pool.size(); ++i) {
      if (pool[i] == pool[i + 1]) {
        return true;
      }
    }
    return false;
  };

  DecouplingResult joint = decoupling_threshold(data, cond, Family::gaussian, opts);
  CHECK(has_adjacent_duplicate(joint.magnitude_pool));

  opts.permutation = PermutationMode::per_column;
  DecouplingResult split = decoupling_threshold(data, cond, Family::gaussian, opts);
  CHECK_FALSE(has_adjacent_duplicate(split.magnitude_pool));
}

TEST_CASE("decoupled statistics never pass their own threshold at tau = 1") {
  Dataset data = gaussian_dataset(40, 10, 3, /*planted=*/2.0);
  ConditioningSet cond{{0, 1}};
  DecouplingOptions opts;
  opts.repetitions = 1;
  opts.tau = 1.0;
  opts.seed = 404;
  DecouplingResult r = decoupling_threshold(data, cond, Family::gaussian, opts);

  // Replay the single permuted dataset and screen it: at the max, the strict
  // comparison admits nothing.
  const long n = data.x.rows();
  Rng rng(derive_seed(opts.seed, 0));
  std::vector<Eigen::Index> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  Dataset permuted = data;
  for (int j = 2; j < 10; ++j) {
    for (long i = 0; i < n; ++i) {
      permuted.x(i, j) = data.x(perm[static_cast<size_t>(i)], j);
    }
  }
  ScreenStatistics null_stats = screen_conditional(permuted, cond, Family::gaussian);
  CHECK(select_by_magnitude(null_stats, r.gamma_star).empty());
  CHECK(select_by_likelihood(null_stats, r.gamma_tilde).empty());

  // The original data carry a strong planted signal on column 2; it survives.
  ScreenStatistics stats = screen_conditional(data, cond, Family::gaussian);
  auto picked = select_by_magnitude(stats, r.gamma_star);
  CHECK(std::find(picked.begin(), picked.end(), 2) != picked.end());
  auto picked_nll = select_by_likelihood(stats, r.gamma_tilde);
  CHECK(std::find(picked_nll.begin(), picked_nll.end(), 2) != picked_nll.end());
}

TEST_CASE("decoupling threshold grows with tau") {
  Dataset data = gaussian_dataset(40, 14, 90);
  ConditioningSet cond{{0}};
  DecouplingOptions opts;
  opts.repetitions = 3;
  opts.seed = 11;
  double prev_star = -1.0, prev_tilde = std::numeric_limits<double>::infinity();
  for (double tau : {0.25, 0.5, 0.75, 0.99, 1.0}) {
    opts.tau = tau;
    DecouplingResult r = decoupling_threshold(data, cond, Family::gaussian, opts);
    CHECK(r.gamma_star >= prev_star);
    CHECK(r.gamma_tilde <= prev_tilde);  // nll threshold tightens downward
    prev_star = r.gamma_star;
    prev_tilde = r.gamma_tilde;
  }
}

TEST_CASE("per-repetition-max pooling keeps one value per repeat") {
  Dataset data = gaussian_dataset(40, 11, 60);
  ConditioningSet cond{{0}};
  DecouplingOptions opts;
  opts.repetitions = 4;
  opts.seed = 8;
  opts.tau = 1.0;
  DecouplingResult pooled = decoupling_threshold(data, cond, Family::gaussian, opts);

  opts.pool = PoolMode::per_repetition_max;
  DecouplingResult maxes = decoupling_threshold(data, cond, Family::gaussian, opts);
  CHECK(maxes.pooled_values == 4);
  REQUIRE(maxes.magnitude_pool.size() == 4);
  // The largest per-repetition maximum is the pooled maximum.
  CHECK(maxes.gamma_star == pooled.gamma_star);
  for (double v : maxes.magnitude_pool) {
    CHECK(std::find(pooled.magnitude_pool.begin(), pooled.magnitude_pool.end(), v) !=
          pooled.magnitude_pool.end());
  }
}

TEST_CASE("decoupling respects an explicit candidate subset") {
  Dataset data = gaussian_dataset(30, 10, 17);
  ConditioningSet cond{{0}};
  DecouplingOptions opts;
  opts.repetitions = 2;
  opts.seed = 5;
  opts.screen.candidate_subset = {4, 5, 6};
  DecouplingResult r = decoupling_threshold(data, cond, Family::gaussian, opts);
  CHECK(r.pooled_values == 6);  // 2 repetitions x 3 candidates
}

TEST_CASE("permutations leave the conditional baseline untouched") {
  Dataset data = gaussian_dataset(40, 10, 23);
  ConditioningSet cond{{0, 1}};
  ScreenStatistics orig = screen_conditional(data, cond, Family::gaussian);
  DecouplingOptions opts;
  opts.repetitions = 2;
  opts.seed = 77;
  DecouplingResult r = decoupling_threshold(data, cond, Family::gaussian, opts);
  CHECK(r.baseline_nll == orig.baseline_nll);
}

TEST_CASE("decoupling rejects degenerate controls") {
  Dataset data = gaussian_dataset(20, 5, 1);
  DecouplingOptions opts;
  opts.repetitions = 0;
  CHECK_THROWS_AS(decoupling_threshold(data, {}, Family::gaussian, opts),
                  std::invalid_argument);
  opts.repetitions = 2;
  opts.tau = 0.0;
  CHECK_THROWS_AS(decoupling_threshold(data, {}, Family::gaussian, opts),
                  std::invalid_argument);
  opts.tau = 1.1;
  CHECK_THROWS_AS(decoupling_threshold(data, {}, Family::gaussian, opts),
                  std::invalid_argument);
}
