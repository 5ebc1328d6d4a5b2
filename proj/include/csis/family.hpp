#pragma once

// Exponential-family members with canonical link.  The negative log-likelihood
// kernel is l(theta, y) = b(theta) - theta*y, with theta = x'beta; each family
// is fully described by its cumulant b and the first two derivatives
// (b' = mean function, b'' = variance function).  Dispersion is ignored
// throughout (Gaussian fits use unit dispersion).

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace csis {

enum class Family { gaussian, binomial_logit, poisson };

struct Cumulant {
  double b;   // b(theta)
  double b1;  // b'(theta)
  double b2;  // b''(theta), strictly positive for finite theta
};

// b, b', b'' for one natural-parameter value.
//   gaussian:        b = theta^2/2
//   binomial_logit:  b = log(1+e^theta), evaluated as theta + log1p(e^-theta)
//                    for theta > 0 so large predictors cannot overflow
//   poisson:         b = e^theta
inline Cumulant cumulant(Family family, double theta) {
  if (!std::isfinite(theta)) {
    throw std::domain_error("cumulant: theta must be finite");
  }
  switch (family) {
    case Family::gaussian:
      return {0.5 * theta * theta, theta, 1.0};
    case Family::binomial_logit: {
      double b, mu;
      if (theta > 0) {
        double e = std::exp(-theta);
        b = theta + std::log1p(e);
        mu = 1.0 / (1.0 + e);
      } else {
        double e = std::exp(theta);
        b = std::log1p(e);
        mu = e / (1.0 + e);
      }
      return {b, mu, mu * (1.0 - mu)};
    }
    case Family::poisson: {
      double e = std::exp(theta);
      return {e, e, e};
    }
  }
  throw std::invalid_argument("cumulant: unknown family");
}

// Mean negative log-likelihood (1/n) sum_i [b(eta_i) - eta_i*y_i].
inline double neg_loglik(Family family, const Eigen::VectorXd& eta,
                         const Eigen::VectorXd& y) {
  if (eta.size() != y.size() || eta.size() == 0) {
    throw std::invalid_argument("neg_loglik: eta and y must have equal, positive length");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    total += cumulant(family, eta[i]).b - eta[i] * y[i];
  }
  return total / static_cast<double>(eta.size());
}

inline const char* family_name(Family family) {
  switch (family) {
    case Family::gaussian: return "gaussian";
    case Family::binomial_logit: return "binomial";
    case Family::poisson: return "poisson";
  }
  return "?";
}

inline Family parse_family(const std::string& name) {
  if (name == "gaussian" || name == "normal") return Family::gaussian;
  if (name == "binomial" || name == "logistic" || name == "binomial_logit") {
    return Family::binomial_logit;
  }
  if (name == "poisson") return Family::poisson;
  throw std::invalid_argument("unknown family: " + name);
}

}  // namespace csis
