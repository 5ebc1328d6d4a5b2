#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "csis/datagen.hpp"
#include "csis/rng.hpp"

using namespace csis;

namespace {

double col_mean(const Eigen::MatrixXd& x, long j) { return x.col(j).mean(); }

double col_var(const Eigen::MatrixXd& x, long j) {
  double m = col_mean(x, j);
  return (x.col(j).array() - m).square().sum() / static_cast<double>(x.rows() - 1);
}

double col_corr(const Eigen::MatrixXd& x, long a, long b) {
  double ma = col_mean(x, a), mb = col_mean(x, b);
  double cov = ((x.col(a).array() - ma) * (x.col(b).array() - mb)).sum() /
               static_cast<double>(x.rows() - 1);
  return cov / std::sqrt(col_var(x, a) * col_var(x, b));
}

double col_kurtosis(const Eigen::MatrixXd& x, long j) {
  double m = col_mean(x, j);
  auto centered = x.col(j).array() - m;
  double v = centered.square().mean();
  return centered.pow(4).mean() / (v * v);
}

}  // namespace

TEST_CASE("equicorrelated design has the advertised first and second moments") {
  Rng rng(101);
  long n = 100000, p = 5;
  Eigen::MatrixXd x = gen_equicorrelated(n, p, 0.5, rng);
  for (long j = 0; j < p; ++j) {
    CHECK(std::fabs(col_mean(x, j)) < 0.02);
    CHECK(col_var(x, j) == doctest::Approx(1.0).epsilon(0.03));
  }
  for (long a = 0; a < p; ++a) {
    for (long b = a + 1; b < p; ++b) {
      CHECK(col_corr(x, a, b) == doctest::Approx(0.5).epsilon(0.03));
    }
  }
}

TEST_CASE("equicorrelated with rho 0 gives independent columns") {
  Rng rng(102);
  Eigen::MatrixXd x = gen_equicorrelated(100000, 4, 0.0, rng);
  for (long a = 0; a < 4; ++a) {
    for (long b = a + 1; b < 4; ++b) {
      CHECK(std::fabs(col_corr(x, a, b)) < 0.015);
    }
  }
}

TEST_CASE("a correlated prefix leaves the tail column independent") {
  Rng rng(103);
  long p = 6;
  Eigen::MatrixXd x = gen_equicorrelated(100000, p, 0.9, rng, p - 1);
  CHECK(col_corr(x, 0, 1) == doctest::Approx(0.9).epsilon(0.02));
  CHECK(col_corr(x, 2, 4) == doctest::Approx(0.9).epsilon(0.02));
  for (long a = 0; a < p - 1; ++a) {
    CHECK(std::fabs(col_corr(x, a, p - 1)) < 0.015);
  }
  CHECK(col_var(x, p - 1) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("factor mixture blocks follow their innovation laws when unloaded") {
  Rng rng(104);
  long n = 200000, p = 9;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd x = gen_factor_mixture(n, p, a, rng);

  // Block 1 (cols 0-2): standard normal.
  CHECK(col_var(x, 0) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(col_kurtosis(x, 1) == doctest::Approx(3.0).epsilon(0.06));
  // Block 2 (cols 3-5): double exponential scaled to unit variance, kurtosis 6.
  CHECK(col_var(x, 3) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(col_kurtosis(x, 4) == doctest::Approx(6.0).epsilon(0.10));
  // Block 3 (cols 6-8): standardized two-component normal mixture.
  CHECK(col_var(x, 6) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(std::fabs(col_mean(x, 7)) < 0.02);
  CHECK(col_kurtosis(x, 8) < 3.0);  // bimodal mixture is platykurtic

  // Unloaded columns are mutually independent across blocks.
  CHECK(std::fabs(col_corr(x, 0, 4)) < 0.01);
  CHECK(std::fabs(col_corr(x, 3, 7)) < 0.01);
}

TEST_CASE("factor loadings induce the inverted pairwise correlation") {
  CHECK(rho_to_loading(0.0) == doctest::Approx(0.0));
  CHECK(rho_to_loading(0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rho_to_loading(0.8) == doctest::Approx(2.0).epsilon(1e-12));

  Rng rng(105);
  long n = 200000, p = 6;
  Eigen::VectorXd a = Eigen::VectorXd::Constant(p, rho_to_loading(0.8));
  Eigen::MatrixXd x = gen_factor_mixture(n, p, a, rng);
  CHECK(col_corr(x, 0, 1) == doctest::Approx(0.8).epsilon(0.02));
  CHECK(col_corr(x, 2, 5) == doctest::Approx(0.8).epsilon(0.02));
  for (long j = 0; j < p; ++j) {
    CHECK(col_var(x, j) == doctest::Approx(1.0).epsilon(0.03));
  }
}

TEST_CASE("random loading mean calibrates the average correlation") {
  double mean = solve_random_loading_mean(0.5);
  CHECK(mean == solve_random_loading_mean(0.5));  // deterministic

  // Monte-Carlo check: with a_j = max(0, N(mean,1)), the average of
  // a/sqrt(1+a^2) should be sqrt(0.5).
  Rng rng(106);
  double acc = 0.0;
  const int m = 200000;
  for (int i = 0; i < m; ++i) {
    double a = std::max(0.0, mean + rng.gaussian());
    acc += a / std::sqrt(1.0 + a * a);
  }
  CHECK(acc / m == doctest::Approx(std::sqrt(0.5)).epsilon(0.01));
}

TEST_CASE("responses follow the stated conditional laws") {
  Rng rng(107);
  long n = 100000;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 2);

  // Null model: binomial mean 1/2, gaussian pure noise, poisson mean 1.
  Eigen::VectorXd yb = gen_response(x, {}, Family::binomial_logit, rng);
  double mb = yb.mean();
  CHECK(mb == doctest::Approx(0.5).epsilon(0.01));
  for (long i = 0; i < 50; ++i) {
    CHECK((yb[i] == 0.0 || yb[i] == 1.0));
  }

  Eigen::VectorXd yg = gen_response(x, {}, Family::gaussian, rng);
  CHECK(std::fabs(yg.mean()) < 0.02);
  CHECK((yg.array() - yg.mean()).square().sum() / static_cast<double>(n - 1) ==
        doctest::Approx(1.0).epsilon(0.02));

  Eigen::VectorXd yp = gen_response(x, {}, Family::poisson, rng);
  CHECK(yp.mean() == doctest::Approx(1.0).epsilon(0.02));
  CHECK(yp.minCoeff() >= 0.0);

  // With a coefficient, the gaussian response tracks the linear predictor.
  Rng rng2(108);
  Eigen::MatrixXd x2(n, 1);
  for (long i = 0; i < n; ++i) {
    x2(i, 0) = rng2.gaussian();
  }
  Eigen::VectorXd ys = gen_response(x2, {{0, 2.0}}, Family::gaussian, rng2);
  double cov = (x2.col(0).array() * (ys.array() - ys.mean())).mean();
  CHECK(cov == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("hidden-signature design: the big coefficient cancels marginally") {
  // With five equally weighted columns at pairwise correlation 1/2 and one
  // column weighted -7.5 sharing that correlation, Cov(X_5, eta) =
  // -7.5 + 0.5 * 15 = 0: the strong column is marginally invisible.
  Rng rng(109);
  long n = 1000000;
  Eigen::MatrixXd x = gen_equicorrelated(n, 6, 0.5, rng);
  std::vector<std::pair<int, double>> beta = {{0, 3}, {1, 3}, {2, 3},
                                              {3, 3}, {4, 3}, {5, -7.5}};
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  for (const auto& kv : beta) {
    eta += kv.second * x.col(kv.first);
  }
  double cov = (x.col(5).array() * (eta.array() - eta.mean())).mean();
  CHECK(std::fabs(cov) < 0.03);
  // ... while a conditioning-set column keeps a strong marginal signal.
  double cov0 = (x.col(0).array() * (eta.array() - eta.mean())).mean();
  CHECK(cov0 == doctest::Approx(3.0 * 1.0 + 0.5 * (3.0 * 3 + 3.0 - 7.5)).epsilon(0.05));
}

TEST_CASE("canned example specs carry the documented shapes") {
  ExperimentSpec e1 = example_spec("ex1", Family::gaussian);
  CHECK(e1.n == 100);
  CHECK(e1.p == 2000);
  CHECK(e1.rho == 0.5);
  CHECK(e1.conditioning == std::vector<int>{0, 1, 2, 3, 4});
  REQUIRE(e1.beta_star.size() == 6);
  CHECK(e1.beta_star[5].first == 5);
  CHECK(e1.beta_star[5].second == -7.5);
  CHECK(active_candidates(e1, e1.conditioning) == std::vector<int>{5});

  ExperimentSpec e2 = example_spec("ex2", Family::gaussian);
  CHECK(e2.covariates.rho == 0.9);
  CHECK(e2.covariates.correlated_prefix == e2.p - 1);
  CHECK(e2.conditioning == std::vector<int>{0});
  CHECK(active_candidates(e2, e2.conditioning) == std::vector<int>{1999});

  ExperimentSpec e3 = example_spec("ex3", Family::gaussian);
  CHECK(e3.p == 5000);
  CHECK(e3.covariates.kind == CovariateModel::Kind::factor_mixture);
  CHECK(e3.covariates.loaded_count == 100);
  REQUIRE(e3.beta_star.size() == 12);
  CHECK(e3.beta_star[0].second == 1.0);
  CHECK(e3.beta_star[1].second == 1.3);
  CHECK(e3.beta_star[10].second == 1.0);
  CHECK(e3.conditioning == std::vector<int>{0, 1, 2, 3});
  CHECK(active_candidates(e3, e3.conditioning) ==
        std::vector<int>{4, 5, 6, 7, 8, 9, 10, 11});

  ExperimentSpec e4 = example_spec("ex4", Family::binomial_logit);
  CHECK(e4.p == 40000);
  CHECK(e4.covariates.random_loadings);
  CHECK(e4.covariates.loaded_count == 50);
  CHECK(e4.beta_star.size() == 6);
  CHECK(e4.n == 500);

  ExampleOptions rho0;
  rho0.rho = 0.0;
  ExperimentSpec e4f = example_spec("ex4", Family::gaussian, rho0);
  CHECK(e4f.covariates.loaded_count == 0);  // rho 0: no shared factor
  CHECK(e4f.n == 200);

  ExperimentSpec e5 = example_spec("ex5", Family::gaussian);
  CHECK(e5.p == 10000);
  std::vector<std::pair<int, double>> want = {{0, 1}, {1, 2}, {2, 1},
                                              {3, 2}, {9998, 1}, {9999, 2}};
  CHECK(e5.beta_star == want);
  CHECK(e5.conditioning == std::vector<int>{0, 1});

  ExampleOptions c2;
  c2.cset = 2;
  CHECK(example_spec("ex5", Family::gaussian, c2).conditioning ==
        std::vector<int>{0, 1, 4, 2000});
  ExampleOptions c3;
  c3.cset = 3;
  CHECK(example_spec("ex5", Family::gaussian, c3).random_conditioning);
}

TEST_CASE("example options override the canned sizes") {
  ExampleOptions o;
  o.n = 64;
  o.p = 300;
  o.s = 6;
  o.rho = 0.25;
  o.replications = 7;
  o.seed = 42;
  ExperimentSpec e3 = example_spec("ex3", Family::poisson, o);
  CHECK(e3.n == 64);
  CHECK(e3.p == 300);
  CHECK(e3.beta_star.size() == 6);
  CHECK(e3.rho == 0.25);
  CHECK(e3.replications == 7);
  CHECK(e3.seed == 42);
  CHECK(e3.family == Family::poisson);
  CHECK(e3.covariates.loaded_count == 100);  // min(100, p)

  ExampleOptions tiny;
  tiny.p = 60;
  ExperimentSpec small = example_spec("ex3", Family::gaussian, tiny);
  CHECK(small.covariates.loaded_count == 60);
}

TEST_CASE("unknown example ids and bad conditioning ids are rejected") {
  CHECK_THROWS_AS(example_spec("ex9", Family::gaussian), std::invalid_argument);
  ExampleOptions bad;
  bad.cset = 4;
  CHECK_THROWS_AS(example_spec("ex5", Family::gaussian, bad), std::invalid_argument);
}

TEST_CASE("datasets are reproducible from the seed, bit for bit") {
  ExperimentSpec spec = example_spec("ex1", Family::binomial_logit);
  spec.n = 50;
  spec.p = 80;
  Rng a(derive_seed(spec.seed, 3));
  Rng b(derive_seed(spec.seed, 3));
  Dataset da = draw_dataset(spec, a);
  Dataset db = draw_dataset(spec, b);
  CHECK((da.x.array() == db.x.array()).all());
  CHECK((da.y.array() == db.y.array()).all());

  Rng c(derive_seed(spec.seed, 4));
  Dataset dc = draw_dataset(spec, c);
  CHECK_FALSE((da.x.array() == dc.x.array()).all());
}

TEST_CASE("drawn datasets have the requested shape and family support") {
  ExampleOptions o;
  o.n = 40;
  o.p = 90;
  ExperimentSpec spec = example_spec("ex3", Family::poisson, o);
  Rng rng(derive_seed(spec.seed, 0));
  Dataset d = draw_dataset(spec, rng);
  CHECK(d.x.rows() == 40);
  CHECK(d.x.cols() == 90);
  CHECK(d.y.size() == 40);
  for (long i = 0; i < d.y.size(); ++i) {
    CHECK(d.y[i] >= 0.0);
    CHECK(d.y[i] == std::floor(d.y[i]));
  }
}

TEST_CASE("the random conditioning draw avoids actives and spans both ranges") {
  ExampleOptions o;
  o.cset = 3;
  ExperimentSpec spec = example_spec("ex5", Family::gaussian, o);
  std::set<int> actives;
  for (const auto& kv : spec.beta_star) {
    actives.insert(kv.first);
  }
  Rng rng(derive_seed(spec.seed, 11));
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<int> cset = draw_conditioning(spec, rng);
    REQUIRE(cset.size() == 4);
    CHECK(std::is_sorted(cset.begin(), cset.end()));
    std::set<int> uniq(cset.begin(), cset.end());
    CHECK(uniq.size() == 4);
    int head = 0, tail = 0;
    for (int c : cset) {
      CHECK(actives.count(c) == 0);
      CHECK(c >= 0);
      CHECK(c < spec.p);
      (c < 2000 ? head : tail) += 1;
    }
    CHECK(head == 3);
    CHECK(tail == 1);
  }

  // Fixed conditioning specs just return their set.
  ExperimentSpec e1 = example_spec("ex1", Family::gaussian);
  Rng r2(5);
  CHECK(draw_conditioning(e1, r2) == e1.conditioning);
}

TEST_CASE("active candidates drop conditioned actives") {
  ExperimentSpec spec = example_spec("ex5", Family::gaussian);
  std::vector<int> cond = {0, 1, 9999};
  CHECK(active_candidates(spec, cond) == std::vector<int>{2, 3, 9998});
}
