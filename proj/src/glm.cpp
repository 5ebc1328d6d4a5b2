#include "csis/glm.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace csis {

namespace {

void validate_problem(const FitProblem& p) {
  const auto n = p.design.rows();
  const auto m = p.design.cols();
  if (m < 1 || n < m) {
    throw std::invalid_argument("fit_glm: need n >= m >= 1");
  }
  if (p.response.size() != n) {
    throw std::invalid_argument("fit_glm: response length does not match design rows");
  }
  if (!p.design.allFinite() || !p.response.allFinite()) {
    throw std::invalid_argument("fit_glm: non-finite entries in design or response");
  }
  if ((p.design.col(0).array() != 1.0).any()) {
    throw std::invalid_argument("fit_glm: first design column must be the intercept (all ones)");
  }
  if (!(p.coef_bound > 0)) {
    throw std::invalid_argument("fit_glm: coef_bound must be positive");
  }
}

// Find the first column that is (numerically) in the span of the preceding
// ones, for a useful error message when the normal equations are singular.
[[noreturn]] void throw_rank_deficiency(const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  const auto m = x.cols();
  Eigen::MatrixXd basis(n, m);
  Eigen::Index nbasis = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::VectorXd v = x.col(j);
    double scale = v.norm();
    for (Eigen::Index k = 0; k < nbasis; ++k) {
      v -= basis.col(k).dot(v) * basis.col(k);
    }
    if (v.norm() <= 1e-10 * (scale > 0 ? scale : 1.0)) {
      std::ostringstream msg;
      msg << "rank-deficient design: column " << j
          << " is linearly dependent on preceding columns";
      throw std::runtime_error(msg.str());
    }
    basis.col(nbasis++) = v / v.norm();
  }
  throw std::runtime_error("rank-deficient design: normal equations singular");
}

// Solve H d = -g with a Cholesky first and a pivoted factorization as backup.
Eigen::VectorXd newton_direction(const Eigen::MatrixXd& h, const Eigen::VectorXd& g,
                                 const Eigen::MatrixXd& design) {
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() == Eigen::Success) {
    return llt.solve(-g);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    double dmax = ldlt.vectorD().maxCoeff();
    if (ldlt.vectorD().minCoeff() > 1e-12 * (dmax > 0 ? dmax : 1.0)) {
      return ldlt.solve(-g);
    }
  }
  throw_rank_deficiency(design);
}

}  // namespace

Eigen::VectorXd glm_score(Family family, const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& response,
                          const Eigen::VectorXd& beta) {
  const auto n = design.rows();
  Eigen::VectorXd eta = design * beta;
  Eigen::VectorXd resid(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    resid[i] = cumulant(family, eta[i]).b1 - response[i];
  }
  return design.transpose() * resid / static_cast<double>(n);
}

Eigen::MatrixXd observed_information(Family family, const Eigen::MatrixXd& design,
                                     const Eigen::VectorXd& coefficients) {
  const auto n = design.rows();
  if (design.cols() != coefficients.size()) {
    throw std::invalid_argument("observed_information: dimension mismatch");
  }
  Eigen::VectorXd eta = design * coefficients;
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w[i] = cumulant(family, eta[i]).b2;
  }
  Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
  info /= static_cast<double>(n);
  return (info + info.transpose()) / 2.0;  // enforce exact symmetry
}

FitResult fit_glm(const FitProblem& problem, const FitOptions& opts) {
  if (opts.validate) {
    validate_problem(problem);
  }
  const Eigen::MatrixXd& x = problem.design;
  const Eigen::VectorXd& y = problem.response;
  const auto n = x.rows();
  const auto m = x.cols();
  const double dn = static_cast<double>(n);
  const double bound = problem.coef_bound;

  FitResult result;

  if (problem.family == Family::gaussian) {
    // Quadratic objective: one Newton step from anywhere is exact, so take
    // the closed-form least-squares solution directly.
    Eigen::MatrixXd gram = x.transpose() * x;
    Eigen::VectorXd xty = x.transpose() * y;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    Eigen::VectorXd beta;
    if (llt.info() == Eigen::Success) {
      beta = llt.solve(xty);
    } else {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
      double dmax = ldlt.info() == Eigen::Success ? ldlt.vectorD().maxCoeff() : 0.0;
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
          ldlt.vectorD().minCoeff() <= 1e-12 * (dmax > 0 ? dmax : 1.0)) {
        throw_rank_deficiency(x);
      }
      beta = ldlt.solve(xty);
    }
    bool clipped = false;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (std::fabs(beta[k]) > bound) {
        beta[k] = beta[k] > 0 ? bound : -bound;
        clipped = true;
      }
    }
    result.coefficients = beta;
    // At the interior optimum X'X b = X'y, the mean objective reduces to
    // -(1/2n) b'X'y.
    result.nll = clipped ? neg_loglik(Family::gaussian, x * beta, y)
                         : -0.5 * beta.dot(xty) / dn;
    result.information = gram / dn;
    result.boundary = clipped;
    result.iterations = 1;
    result.gradient_norm = clipped ? (gram * beta - xty).cwiseAbs().maxCoeff() / dn : 0.0;
    result.converged = true;
    if (opts.objective_trace) {
      opts.objective_trace->push_back(result.nll);
    }
    return result;
  }

  Eigen::VectorXd beta = opts.init ? *opts.init : Eigen::VectorXd::Zero(m);
  if (opts.init && opts.init->size() != m) {
    throw std::invalid_argument("fit_glm: warm start has wrong length");
  }

  Eigen::VectorXd eta = x * beta;
  double obj = neg_loglik(problem.family, eta, y);
  if (opts.objective_trace) {
    opts.objective_trace->push_back(obj);
  }

  Eigen::VectorXd mu(n), w(n);
  bool converged = false;
  bool boundary = false;
  double grad_norm = std::numeric_limits<double>::infinity();
  int iter = 0;

  for (; iter < opts.max_iter; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Cumulant c = cumulant(problem.family, eta[i]);
      mu[i] = c.b1;
      w[i] = c.b2;
    }
    Eigen::VectorXd grad = x.transpose() * (mu - y) / dn;
    grad_norm = grad.cwiseAbs().maxCoeff();
    if (grad_norm <= opts.tol) {
      converged = true;
      break;
    }
    Eigen::MatrixXd hess = x.transpose() * w.asDiagonal() * x / dn;
    Eigen::VectorXd dir = newton_direction(hess, grad, x);

    // Step-halving: shrink until the objective decreases (projected onto the
    // coefficient box), giving a monotone objective trace.
    auto try_step = [&](double step, double slack) {
      Eigen::VectorXd cand = beta + step * dir;
      bool clipped = false;
      for (Eigen::Index k = 0; k < m; ++k) {
        if (std::fabs(cand[k]) > bound) {
          cand[k] = cand[k] > 0 ? bound : -bound;
          clipped = true;
        }
      }
      Eigen::VectorXd eta_cand = x * cand;
      double obj_cand = neg_loglik(problem.family, eta_cand, y);
      if (obj_cand < obj || (slack > 0.0 && obj_cand <= obj + slack)) {
        beta = std::move(cand);
        eta = std::move(eta_cand);
        obj = obj_cand;
        boundary = clipped;
        if (opts.objective_trace) {
          opts.objective_trace->push_back(obj);
        }
        return true;
      }
      return false;
    };
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      if (try_step(step, 0.0)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // The objective is flat to machine precision along the Newton
      // direction (the decrease a descent direction guarantees underflows).
      // Take the full step anyway: in the quadratic-convergence zone it is
      // the move that actually zeroes the score, and the box projection
      // still catches separation pushing coefficients outward.
      accepted = try_step(1.0, 4.0 * std::numeric_limits<double>::epsilon() *
                                   std::max(1.0, std::fabs(obj)));
    }
    if (!accepted) {
      ++iter;
      break;
    }
    if (boundary) {
      // Separation: the unconstrained optimum lies outside the box.  Stop at
      // the projected point and flag it; the caller decides the policy.
      ++iter;
      converged = true;
      break;
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    Cumulant c = cumulant(problem.family, eta[i]);
    mu[i] = c.b1;
    w[i] = c.b2;
  }
  Eigen::VectorXd grad = x.transpose() * (mu - y) / dn;
  grad_norm = grad.cwiseAbs().maxCoeff();
  if (!boundary && grad_norm <= opts.tol) {
    converged = true;
  }

  result.coefficients = beta;
  result.nll = obj;
  Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x / dn;
  result.information = (info + info.transpose()) / 2.0;
  result.converged = converged;
  result.boundary = boundary;
  result.iterations = iter;
  result.gradient_norm = grad_norm;
  return result;
}

}  // namespace csis
