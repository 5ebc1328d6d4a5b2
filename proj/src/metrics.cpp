#include "csis/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace csis {

long minimum_model_size(const std::vector<int>& ranking,
                        const std::vector<int>& active_in_d) {
  if (active_in_d.empty()) {
    throw std::invalid_argument("minimum_model_size: active set is empty");
  }
  std::unordered_set<int> active(active_in_d.begin(), active_in_d.end());
  long found = 0;
  long worst = 0;
  for (size_t r = 0; r < ranking.size(); ++r) {
    if (active.count(ranking[r])) {
      worst = static_cast<long>(r + 1);
      if (++found == static_cast<long>(active.size())) {
        return worst;
      }
    }
  }
  throw std::invalid_argument("minimum_model_size: an active column is missing from the ranking");
}

namespace {

// Linear interpolation at 1-based position h = (m+1)*prob, clamped to [1, m].
double interpolated_quantile(const std::vector<double>& sorted_values, double prob) {
  const auto m = sorted_values.size();
  double h = (static_cast<double>(m) + 1.0) * prob;
  if (h <= 1.0) {
    return sorted_values.front();
  }
  if (h >= static_cast<double>(m)) {
    return sorted_values.back();
  }
  auto lo = static_cast<size_t>(h);
  double frac = h - static_cast<double>(lo);
  return sorted_values[lo - 1] + frac * (sorted_values[lo] - sorted_values[lo - 1]);
}

}  // namespace

MmsSummary summarize_mms(const std::vector<long>& mms_values) {
  if (mms_values.empty()) {
    throw std::invalid_argument("summarize_mms: no values");
  }
  std::vector<double> v(mms_values.begin(), mms_values.end());
  std::sort(v.begin(), v.end());
  MmsSummary s;
  s.mmms = interpolated_quantile(v, 0.5);
  s.rsd = (interpolated_quantile(v, 0.75) - interpolated_quantile(v, 0.25)) / 1.34;
  return s;
}

std::pair<long, long> fp_fn(const std::vector<int>& selected,
                            const std::vector<int>& active_in_d) {
  std::unordered_set<int> active(active_in_d.begin(), active_in_d.end());
  long fp = 0;
  std::unordered_set<int> hit;
  for (int j : selected) {
    if (active.count(j)) {
      hit.insert(j);
    } else {
      ++fp;
    }
  }
  long fn = static_cast<long>(active.size() - hit.size());
  return {fp, fn};
}

EigenRatio conditional_eigen_ratio(double r, long q, long d) {
  if (!(r >= 0.0 && r < 1.0)) {
    throw std::domain_error("conditional_eigen_ratio: r must lie in [0,1)");
  }
  if (q < 0 || d < 1) {
    throw std::invalid_argument("conditional_eigen_ratio: need q >= 0 and d >= 1");
  }
  EigenRatio out;
  const double dd = static_cast<double>(d);
  const double qq = static_cast<double>(q);
  out.lam_unc = (1.0 - r) + r * dd;
  out.lam_cond = (1.0 - r) + r * dd * (1.0 - r) / (1.0 - r + r * qq);
  out.ratio = out.lam_unc / out.lam_cond;
  return out;
}

}  // namespace csis
