#include "csis/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace csis {

Eigen::MatrixXd gen_equicorrelated(long n, long p, double rho, Rng& rng,
                                   long correlated_prefix) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::domain_error("gen_equicorrelated: rho must lie in [0,1)");
  }
  if (n < 1 || p < 1) {
    throw std::invalid_argument("gen_equicorrelated: n and p must be positive");
  }
  long prefix = correlated_prefix < 0 ? p : std::min(correlated_prefix, p);
  const double sr = std::sqrt(rho);
  const double sz = std::sqrt(1.0 - rho);
  Eigen::VectorXd w(n);
  for (long i = 0; i < n; ++i) {
    w[i] = rng.gaussian();
  }
  Eigen::MatrixXd x(n, p);
  for (long j = 0; j < p; ++j) {
    if (j < prefix) {
      for (long i = 0; i < n; ++i) {
        x(i, j) = sr * w[i] + sz * rng.gaussian();
      }
    } else {
      for (long i = 0; i < n; ++i) {
        x(i, j) = rng.gaussian();
      }
    }
  }
  return x;
}

Eigen::MatrixXd gen_factor_mixture(long n, long p, const Eigen::VectorXd& a, Rng& rng) {
  if (n < 1 || p < 1) {
    throw std::invalid_argument("gen_factor_mixture: n and p must be positive");
  }
  if (a.size() != p) {
    throw std::invalid_argument("gen_factor_mixture: loading vector must have length p");
  }
  if ((a.array() < 0).any()) {
    throw std::domain_error("gen_factor_mixture: loadings must be nonnegative");
  }
  const long third = p / 3;
  const double laplace_scale = 1.0 / std::sqrt(2.0);   // Laplace(0,1) variance is 2
  const double mixture_scale = 1.0 / std::sqrt(1.75);  // raw mixture variance is 1.75
  Eigen::VectorXd factor(n);
  for (long i = 0; i < n; ++i) {
    factor[i] = rng.gaussian();
  }
  Eigen::MatrixXd x(n, p);
  for (long j = 0; j < p; ++j) {
    const double aj = a[j];
    const double scale = 1.0 / std::sqrt(1.0 + aj * aj);
    for (long i = 0; i < n; ++i) {
      double eps;
      if (j < third) {
        eps = rng.gaussian();
      } else if (j < 2 * third) {
        eps = laplace_scale * rng.laplace();
      } else {
        eps = mixture_scale * rng.mixture_normal_raw();
      }
      x(i, j) = scale * (eps + aj * factor[i]);
    }
  }
  return x;
}

double rho_to_loading(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::domain_error("rho_to_loading: rho must lie in [0,1)");
  }
  return std::sqrt(rho / (1.0 - rho));
}

double solve_random_loading_mean(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::domain_error("solve_random_loading_mean: rho must lie in [0,1)");
  }
  if (rho < 1e-12) {
    return 0.0;  // caller disables loadings entirely at rho = 0
  }
  // E[corr] between two distinct loaded columns factorizes as
  // (E[a/sqrt(1+a^2)])^2 with a = max(0, N(mean,1)); match its square root.
  const double target = std::sqrt(rho);
  static const std::vector<double> z = [] {
    Rng r(0x10AD1265u);  // fixed internal stream: the solver is deterministic
    std::vector<double> v(200000);
    for (double& zi : v) {
      zi = r.gaussian();
    }
    return v;
  }();
  auto mean_corr_factor = [&](double m) {
    double s = 0.0;
    for (double zi : z) {
      double u = m + zi;
      if (u > 0) {
        s += u / std::sqrt(1.0 + u * u);
      }
    }
    return s / static_cast<double>(z.size());
  };
  double lo = -40.0, hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mean_corr_factor(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-10) {
      break;
    }
  }
  return 0.5 * (lo + hi);
}

Eigen::VectorXd gen_response(const Eigen::MatrixXd& x,
                             const std::vector<std::pair<int, double>>& beta_star,
                             Family family, Rng& rng) {
  const long n = x.rows();
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  for (const auto& [j, v] : beta_star) {
    if (j < 0 || j >= x.cols()) {
      throw std::invalid_argument("gen_response: coefficient index out of range");
    }
    eta += v * x.col(j);
  }
  Eigen::VectorXd y(n);
  switch (family) {
    case Family::gaussian:
      for (long i = 0; i < n; ++i) {
        y[i] = eta[i] + rng.gaussian();
      }
      break;
    case Family::binomial_logit:
      for (long i = 0; i < n; ++i) {
        double e = std::clamp(eta[i], -30.0, 30.0);
        double prob = 1.0 / (1.0 + std::exp(-e));
        y[i] = rng.uniform() < prob ? 1.0 : 0.0;
      }
      break;
    case Family::poisson:
      for (long i = 0; i < n; ++i) {
        double e = std::clamp(eta[i], -30.0, 30.0);
        y[i] = static_cast<double>(rng.poisson(std::exp(e)));
      }
      break;
  }
  return y;
}

namespace {

std::vector<std::pair<int, double>> alternating_pattern(long s) {
  std::vector<std::pair<int, double>> beta;
  beta.reserve(static_cast<size_t>(s));
  for (long j = 0; j < s; ++j) {
    beta.emplace_back(static_cast<int>(j), j % 2 == 0 ? 1.0 : 1.3);
  }
  return beta;
}

long default_n_ex3(Family family, double rho) {
  if (family == Family::gaussian) {
    return rho == 0.0 ? 300 : 100;
  }
  return 300;
}

}  // namespace

ExperimentSpec example_spec(const std::string& id, Family family,
                            const ExampleOptions& opts) {
  ExperimentSpec spec;
  spec.name = id;
  spec.family = family;
  spec.seed = opts.seed;
  spec.replications = opts.replications > 0 ? opts.replications : 200;
  spec.cset_id = opts.cset;

  auto pick = [](long override_value, long fallback) {
    return override_value > 0 ? override_value : fallback;
  };

  if (id == "ex1") {
    spec.n = pick(opts.n, 100);
    spec.p = pick(opts.p, 2000);
    spec.rho = opts.rho >= 0 ? opts.rho : 0.5;
    spec.covariates.kind = CovariateModel::Kind::equicorrelated;
    spec.covariates.rho = spec.rho;
    spec.covariates.correlated_prefix = -1;
    spec.beta_star = {{0, 3.0}, {1, 3.0}, {2, 3.0}, {3, 3.0}, {4, 3.0}, {5, -7.5}};
    spec.conditioning = {0, 1, 2, 3, 4};
  } else if (id == "ex2") {
    spec.n = pick(opts.n, 100);
    spec.p = pick(opts.p, 2000);
    spec.rho = opts.rho >= 0 ? opts.rho : 0.9;
    spec.covariates.kind = CovariateModel::Kind::equicorrelated;
    spec.covariates.rho = spec.rho;
    spec.covariates.correlated_prefix = spec.p - 1;  // last column independent
    spec.beta_star = {{0, 10.0}, {static_cast<int>(spec.p - 1), 1.0}};
    spec.conditioning = {0};
  } else if (id == "ex3") {
    spec.rho = opts.rho >= 0 ? opts.rho : 0.5;
    spec.n = pick(opts.n, default_n_ex3(family, spec.rho));
    spec.p = pick(opts.p, 5000);
    long s = pick(opts.s, 12);
    spec.covariates.kind = CovariateModel::Kind::factor_mixture;
    spec.covariates.loaded_count = std::min<long>(100, spec.p);
    spec.covariates.loading_value = rho_to_loading(spec.rho);
    spec.beta_star = alternating_pattern(s);
    spec.conditioning = {0, 1, 2, 3};
  } else if (id == "ex4") {
    spec.rho = opts.rho >= 0 ? opts.rho : 0.5;
    spec.n = pick(opts.n, family == Family::gaussian ? 200 : 500);
    spec.p = pick(opts.p, 40000);
    long s = pick(opts.s, 6);
    spec.covariates.kind = CovariateModel::Kind::factor_mixture;
    spec.covariates.loaded_count = std::min<long>(50, spec.p);
    if (spec.rho < 1e-12) {
      spec.covariates.loaded_count = 0;  // no common factor at rho = 0
      spec.covariates.random_loadings = false;
    } else {
      spec.covariates.random_loadings = true;
      spec.covariates.loading_mean = solve_random_loading_mean(spec.rho);
    }
    spec.beta_star = alternating_pattern(s);
    spec.conditioning = {0, 1};
  } else if (id == "ex5") {
    spec.rho = opts.rho >= 0 ? opts.rho : 0.5;
    spec.n = pick(opts.n, family == Family::gaussian ? 200 : 400);
    spec.p = pick(opts.p, 10000);
    spec.covariates.kind = CovariateModel::Kind::factor_mixture;
    spec.covariates.loaded_count = std::min<long>(2000, spec.p);
    spec.covariates.loading_value = rho_to_loading(spec.rho);
    spec.beta_star = {{0, 1.0}, {1, 2.0}, {2, 1.0}, {3, 2.0},
                      {static_cast<int>(spec.p - 2), 1.0},
                      {static_cast<int>(spec.p - 1), 2.0}};
    if (opts.cset == 1) {
      spec.conditioning = {0, 1};
    } else if (opts.cset == 2) {
      spec.conditioning = {0, 1, 4, 2000};
    } else if (opts.cset == 3) {
      spec.random_conditioning = true;
    } else {
      throw std::invalid_argument("example_spec: ex5 conditioning set must be 1, 2, or 3");
    }
  } else {
    throw std::invalid_argument("example_spec: unknown example id: " + id);
  }

  if (spec.p < 8) {
    throw std::invalid_argument("example_spec: p too small for this design");
  }
  for (const auto& kv : spec.beta_star) {
    if (kv.first >= spec.p) {
      throw std::invalid_argument("example_spec: coefficient index exceeds p");
    }
  }
  if (!spec.random_conditioning) {
    if (active_candidates(spec, spec.conditioning).empty()) {
      throw std::invalid_argument(
          "example_spec: no active column outside the conditioning set");
    }
  }
  return spec;
}

Dataset draw_dataset(const ExperimentSpec& spec, Rng& rng) {
  const CovariateModel& cm = spec.covariates;
  Dataset data;
  if (cm.kind == CovariateModel::Kind::equicorrelated) {
    data.x = gen_equicorrelated(spec.n, spec.p, cm.rho, rng, cm.correlated_prefix);
  } else {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(spec.p);
    if (cm.random_loadings) {
      for (long j = 0; j < cm.loaded_count; ++j) {
        a[j] = std::max(0.0, cm.loading_mean + rng.gaussian());
      }
    } else {
      for (long j = 0; j < cm.loaded_count; ++j) {
        a[j] = cm.loading_value;
      }
    }
    data.x = gen_factor_mixture(spec.n, spec.p, a, rng);
  }
  data.y = gen_response(data.x, spec.beta_star, spec.family, rng);
  return data;
}

std::vector<int> draw_conditioning(const ExperimentSpec& spec, Rng& rng) {
  if (!spec.random_conditioning) {
    return spec.conditioning;
  }
  // Random conditioning: 3 distinct inactive columns from the loaded block
  // [0, 2000) plus 1 inactive column from the tail, never overlapping the
  // active set.
  std::vector<char> active(static_cast<size_t>(spec.p), 0);
  for (const auto& kv : spec.beta_star) {
    active[static_cast<size_t>(kv.first)] = 1;
  }
  const long split = std::min<long>(2000, spec.p);
  std::vector<int> cond;
  while (cond.size() < 3) {
    int j = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(split)));
    if (active[static_cast<size_t>(j)]) {
      continue;
    }
    if (std::find(cond.begin(), cond.end(), j) != cond.end()) {
      continue;
    }
    cond.push_back(j);
  }
  if (spec.p > split) {
    while (cond.size() < 4) {
      int j = static_cast<int>(
          split + static_cast<long>(rng.bounded(static_cast<std::uint64_t>(spec.p - split))));
      if (active[static_cast<size_t>(j)]) {
        continue;
      }
      cond.push_back(j);
    }
  }
  std::sort(cond.begin(), cond.end());
  return cond;
}

std::vector<int> active_candidates(const ExperimentSpec& spec,
                                   const std::vector<int>& conditioning) {
  std::vector<int> actives;
  for (const auto& [j, v] : spec.beta_star) {
    if (v != 0.0 &&
        std::find(conditioning.begin(), conditioning.end(), j) == conditioning.end()) {
      actives.push_back(j);
    }
  }
  std::sort(actives.begin(), actives.end());
  return actives;
}

}  // namespace csis
