#pragma once

// Damped-Newton solver for low-dimensional GLM fits with canonical link.
// Problems here are (q+2)-dimensional at most, so exact-Hessian Newton with a
// step-halving line search is cheap and quadratically convergent.  The
// coefficient box |beta_k| <= B turns logistic separation into a detectable
// boundary condition instead of a divergence.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "csis/family.hpp"

namespace csis {

struct FitProblem {
  Eigen::MatrixXd design;    // n x m, first column all ones (intercept)
  Eigen::VectorXd response;  // length n
  Family family = Family::gaussian;
  double coef_bound = 1e4;   // box half-width B; hitting it signals separation
};

struct FitOptions {
  double tol = 1e-8;             // sup-norm tolerance on the mean score
  int max_iter = 100;
  int max_halvings = 50;         // line-search budget per Newton step
  bool validate = true;          // check finiteness/shape preconditions
  const Eigen::VectorXd* init = nullptr;   // warm start (defaults to zero)
  std::vector<double>* objective_trace = nullptr;  // appended per accepted step
};

struct FitResult {
  Eigen::VectorXd coefficients;  // length m
  double nll = 0.0;              // mean negative log-likelihood at the optimum
  Eigen::MatrixXd information;   // (1/n) sum b''(eta_i) x_i x_i', symmetric PSD
  bool converged = false;
  bool boundary = false;         // some coefficient sits on the box bound
  int iterations = 0;
  double gradient_norm = 0.0;    // final sup-norm of the mean score
};

// Mean score (1/n) X'(b'(X beta) - y).
Eigen::VectorXd glm_score(Family family, const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& response,
                          const Eigen::VectorXd& beta);

// Scaled observed information (1/n) X' diag(b''(X beta)) X.
Eigen::MatrixXd observed_information(Family family, const Eigen::MatrixXd& design,
                                     const Eigen::VectorXd& coefficients);

// Minimize the mean negative log-likelihood over the box |beta_k| <= B.
// Gaussian fits short-circuit to the exact least-squares solution.  A
// singular normal-equations matrix raises std::runtime_error naming the first
// linearly dependent column; hitting max_iter returns converged=false.
FitResult fit_glm(const FitProblem& problem, const FitOptions& opts = {});

}  // namespace csis
