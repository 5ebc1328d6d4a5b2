#pragma once

// Screening-quality metrics: minimum model size (smallest ranking prefix that
// captures every active candidate), its median and robust spread over
// replications, false positive / negative counts for a selection, and the
// closed-form conditional max-eigenvalue diagnostic for equicorrelated
// designs.

#include <utility>
#include <vector>

namespace csis {

// Max over active candidates of their 1-based position in the ranking.
long minimum_model_size(const std::vector<int>& ranking,
                        const std::vector<int>& active_in_d);

struct MmsSummary {
  double mmms = 0.0;  // median
  double rsd = 0.0;   // interquartile range / 1.34
};

// Median and quartiles by linear interpolation at positions (m+1)*{1/4,1/2,3/4}.
MmsSummary summarize_mms(const std::vector<long>& mms_values);

// (false positives, false negatives) of `selected` against the active set.
std::pair<long, long> fp_fn(const std::vector<int>& selected,
                            const std::vector<int>& active_in_d);

struct EigenRatio {
  double lam_unc = 0.0;   // (1-r) + r d
  double lam_cond = 0.0;  // (1-r) + r d (1-r) / (1-r+r q)
  double ratio = 0.0;     // lam_unc / lam_cond
};

// Largest eigenvalue of the candidate covariance in an equicorrelated design
// with correlation r, before and after conditioning on q of the variables.
EigenRatio conditional_eigen_ratio(double r, long q, long d);

}  // namespace csis
