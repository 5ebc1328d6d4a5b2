#include "csis/screening.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

#include "csis/glm.hpp"

namespace csis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> resolve_candidates(long p, const ConditioningSet& cond,
                                    const std::vector<int>& subset) {
  std::vector<char> in_cond(static_cast<size_t>(p), 0);
  for (int c : cond.indices) {
    if (c < 0 || c >= p) {
      throw std::invalid_argument("screen_conditional: conditioning index out of range");
    }
    if (in_cond[static_cast<size_t>(c)]) {
      throw std::invalid_argument("screen_conditional: duplicate conditioning index");
    }
    in_cond[static_cast<size_t>(c)] = 1;
  }
  std::vector<int> cands;
  if (subset.empty()) {
    cands.reserve(static_cast<size_t>(p) - cond.indices.size());
    for (int j = 0; j < p; ++j) {
      if (!in_cond[static_cast<size_t>(j)]) {
        cands.push_back(j);
      }
    }
  } else {
    cands = subset;
    std::sort(cands.begin(), cands.end());
    for (size_t i = 0; i < cands.size(); ++i) {
      int j = cands[i];
      if (j < 0 || j >= p || in_cond[static_cast<size_t>(j)]) {
        throw std::invalid_argument(
            "screen_conditional: candidate subset overlaps conditioning set or is out of range");
      }
      if (i > 0 && cands[i] == cands[i - 1]) {
        throw std::invalid_argument("screen_conditional: duplicate candidate index");
      }
    }
  }
  if (cands.empty()) {
    throw std::invalid_argument("screen_conditional: no candidate columns");
  }
  return cands;
}

// Execute body(lo, hi) over a static partition of [0, count).  Each slot is
// written by exactly one worker, so the result is identical for any worker
// count.
void run_partitioned(size_t count, int workers, const std::function<void(size_t, size_t)>& body) {
  unsigned hw = std::thread::hardware_concurrency();
  size_t w = workers > 0 ? static_cast<size_t>(workers) : (hw > 0 ? hw : 1);
  if (w > count) {
    w = count;
  }
  if (w <= 1) {
    body(0, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (size_t t = 0; t < w; ++t) {
    size_t lo = count * t / w;
    size_t hi = count * (t + 1) / w;
    pool.emplace_back(body, lo, hi);
  }
  for (auto& th : pool) {
    th.join();
  }
}

}  // namespace

ScreenStatistics screen_conditional(const Dataset& data, const ConditioningSet& cond,
                                    Family family, const ScreenOptions& opts) {
  const long n = data.x.rows();
  const long p = data.x.cols();
  if (n < 2) {
    throw std::invalid_argument("screen_conditional: need at least 2 rows");
  }
  if (data.y.size() != n) {
    throw std::invalid_argument("screen_conditional: response length mismatch");
  }
  if (!data.x.allFinite() || !data.y.allFinite()) {
    throw std::invalid_argument("screen_conditional: non-finite entries in dataset");
  }

  std::vector<int> cands = resolve_candidates(p, cond, opts.candidate_subset);
  const int q = static_cast<int>(cond.indices.size());
  const long m = q + 2;  // intercept + conditioning + candidate
  if (n < m) {
    throw std::invalid_argument("screen_conditional: more coefficients than rows");
  }
  const size_t d = cands.size();
  const double dn = static_cast<double>(n);

  // Baseline design Z = [1 | X_C].
  Eigen::MatrixXd z(n, q + 1);
  z.col(0).setOnes();
  for (int k = 0; k < q; ++k) {
    z.col(k + 1) = data.x.col(cond.indices[static_cast<size_t>(k)]);
  }

  FitProblem base_problem{z, data.y, family, opts.coef_bound};
  FitOptions base_opts;
  base_opts.tol = opts.tol;
  base_opts.max_iter = opts.max_iter;
  base_opts.validate = false;
  FitResult base = fit_glm(base_problem, base_opts);
  if (!base.converged) {
    throw std::runtime_error("screen_conditional: baseline fit did not converge");
  }

  ScreenStatistics stats;
  stats.candidates = cands;
  stats.coef.setZero(static_cast<Eigen::Index>(d));
  stats.nll.setConstant(static_cast<Eigen::Index>(d), base.nll);
  stats.se.setConstant(static_cast<Eigen::Index>(d), kInf);
  stats.wald.setZero(static_cast<Eigen::Index>(d));
  stats.converged.assign(d, 0);
  stats.boundary.assign(d, 0);
  stats.baseline_nll = base.nll;
  stats.baseline_coef = base.coefficients;
  stats.n = n;
  stats.q = q;

  const bool gaussian_fast = family == Family::gaussian && opts.coef_bound >= 1e4;

  if (gaussian_fast) {
    // Least squares with a shared factorization.  With A = Z'Z and residual
    // r = y - Z bhat_C, bordering A by the candidate column x_j gives the
    // Schur complement s_j = x_j'x_j - u'A^{-1}u (u = Z'x_j), and
    //   coef_j = x_j'r / s_j
    //   nll_j  = baseline_nll - s_j coef_j^2 / (2n)
    //   [inv information]_last = n / s_j  =>  se_j = 1/sqrt(s_j).
    Eigen::MatrixXd gram = z.transpose() * z;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("screen_conditional: conditioning columns are collinear");
    }
    Eigen::VectorXd resid = data.y - z * base.coefficients;
    const double gram_scale = gram.diagonal().maxCoeff();

    run_partitioned(d, opts.workers, [&](size_t lo, size_t hi) {
      Eigen::VectorXd u(q + 1), w(q + 1);
      for (size_t slot = lo; slot < hi; ++slot) {
        const auto xj = data.x.col(cands[slot]);
        u.noalias() = z.transpose() * xj;
        w = llt.solve(u);
        double s = xj.squaredNorm() - u.dot(w);
        double scale = std::max(xj.squaredNorm(), gram_scale);
        if (!(s > 1e-12 * (scale > 0 ? scale : 1.0))) {
          continue;  // candidate lies in the span of [1 | X_C]: slot stays failed
        }
        double coef = xj.dot(resid) / s;
        stats.coef[static_cast<Eigen::Index>(slot)] = coef;
        stats.nll[static_cast<Eigen::Index>(slot)] = base.nll - s * coef * coef / (2.0 * dn);
        double se = opts.wald_mode == WaldMode::inverse_information
                        ? 1.0 / std::sqrt(s)
                        : 1.0 / std::sqrt(xj.squaredNorm());
        stats.se[static_cast<Eigen::Index>(slot)] = se;
        stats.wald[static_cast<Eigen::Index>(slot)] = std::fabs(coef) / se;
        stats.converged[slot] = 1;
      }
    });
    return stats;
  }

  // General families: refit per candidate, warm-started at the baseline
  // solution with a zero candidate coefficient.  The warm start's objective
  // equals baseline_nll, and the line search only ever decreases it, so
  // nll_j <= baseline_nll holds structurally.
  Eigen::VectorXd warm(m);
  warm.head(q + 1) = base.coefficients;
  warm[m - 1] = 0.0;

  run_partitioned(d, opts.workers, [&](size_t lo, size_t hi) {
    FitProblem prob;
    prob.design.resize(n, m);
    prob.design.leftCols(q + 1) = z;
    prob.response = data.y;
    prob.family = family;
    prob.coef_bound = opts.coef_bound;
    FitOptions fopts;
    fopts.tol = opts.tol;
    fopts.max_iter = opts.max_iter;
    fopts.validate = false;
    fopts.init = &warm;
    for (size_t slot = lo; slot < hi; ++slot) {
      prob.design.col(m - 1) = data.x.col(cands[slot]);
      FitResult fit;
      try {
        fit = fit_glm(prob, fopts);
      } catch (const std::runtime_error&) {
        continue;  // collinear candidate: slot stays failed
      }
      if (!fit.converged) {
        continue;
      }
      const Eigen::Index si = static_cast<Eigen::Index>(slot);
      stats.coef[si] = fit.coefficients[m - 1];
      stats.nll[si] = fit.nll;
      stats.converged[slot] = 1;
      stats.boundary[slot] = fit.boundary ? 1 : 0;
      if (fit.boundary) {
        // Separation: the candidate is infinitely informative at face value.
        stats.se[si] = 0.0;
        stats.wald[si] = kInf;
        continue;
      }
      double var_last;
      if (opts.wald_mode == WaldMode::inverse_information) {
        Eigen::LLT<Eigen::MatrixXd> fllt(fit.information);
        if (fllt.info() != Eigen::Success) {
          stats.se[si] = kInf;
          stats.wald[si] = 0.0;
          continue;
        }
        Eigen::VectorXd e_last = Eigen::VectorXd::Unit(m, m - 1);
        var_last = fllt.solve(e_last)[m - 1] / dn;
      } else {
        var_last = 1.0 / (dn * fit.information(m - 1, m - 1));
      }
      double se = std::sqrt(var_last);
      stats.se[si] = se;
      stats.wald[si] = se > 0 ? std::fabs(stats.coef[si]) / se : kInf;
    }
  });
  return stats;
}

std::vector<int> select_by_magnitude(const ScreenStatistics& stats, double gamma) {
  if (!(gamma >= 0)) {
    throw std::invalid_argument("select_by_magnitude: gamma must be >= 0");
  }
  std::vector<int> out;
  for (size_t i = 0; i < stats.candidates.size(); ++i) {
    if (stats.converged[i] && std::fabs(stats.coef[static_cast<Eigen::Index>(i)]) > gamma) {
      out.push_back(stats.candidates[i]);
    }
  }
  return out;
}

std::vector<int> select_by_likelihood(const ScreenStatistics& stats, double gamma_tilde) {
  std::vector<int> out;
  for (size_t i = 0; i < stats.candidates.size(); ++i) {
    if (stats.converged[i] && stats.nll[static_cast<Eigen::Index>(i)] < gamma_tilde) {
      out.push_back(stats.candidates[i]);
    }
  }
  return out;
}

std::vector<int> rank_features(const ScreenStatistics& stats, RankMethod method) {
  const size_t d = stats.candidates.size();
  std::vector<size_t> order(d);
  for (size_t i = 0; i < d; ++i) {
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    bool ca = stats.converged[a] != 0;
    bool cb = stats.converged[b] != 0;
    if (ca != cb) {
      return ca;  // converged slots first
    }
    if (ca) {
      if (method == RankMethod::magnitude) {
        double ma = std::fabs(stats.coef[static_cast<Eigen::Index>(a)]);
        double mb = std::fabs(stats.coef[static_cast<Eigen::Index>(b)]);
        if (ma != mb) {
          return ma > mb;
        }
      } else if (method == RankMethod::wald) {
        double wa = stats.wald[static_cast<Eigen::Index>(a)];
        double wb = stats.wald[static_cast<Eigen::Index>(b)];
        if (wa != wb) {
          return wa > wb;
        }
      } else {
        double na = stats.nll[static_cast<Eigen::Index>(a)];
        double nb = stats.nll[static_cast<Eigen::Index>(b)];
        if (na != nb) {
          return na < nb;
        }
      }
    }
    return stats.candidates[a] < stats.candidates[b];
  });
  std::vector<int> ranked(d);
  for (size_t i = 0; i < d; ++i) {
    ranked[i] = stats.candidates[order[i]];
  }
  return ranked;
}

}  // namespace csis
