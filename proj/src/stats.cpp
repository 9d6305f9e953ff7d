#include "splinemetric/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "splinemetric/error.hpp"

namespace splinemetric {

double stable_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) throw ArgumentError("mean of an empty sample");
  return stable_sum(values) / static_cast<double>(values.size());
}

double sample_variance(const std::vector<double>& values) {
  if (values.size() < 2) {
    throw ArgumentError("sample variance needs at least two values");
  }
  const double m = mean_of(values);
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    sq[i] = (values[i] - m) * (values[i] - m);
  }
  return stable_sum(std::move(sq)) / static_cast<double>(values.size() - 1);
}

double sample_sd(const std::vector<double>& values) {
  return std::sqrt(sample_variance(values));
}

double student_t_two_sided_p(double t, int df) {
  if (df < 1) throw ArgumentError("degrees of freedom must be >= 1");
  if (std::isinf(t)) return 0.0;
  const double nu = static_cast<double>(df);
  return boost::math::ibeta(nu / 2.0, 0.5, nu / (nu + t * t));
}

PairedTResult paired_t_test(const std::vector<double>& a,
                            const std::vector<double>& b, double level) {
  if (a.size() != b.size()) {
    throw DimensionError("paired samples have different lengths");
  }
  if (a.size() < 2) {
    throw ArgumentError("paired test needs at least two pairs (df >= 1)");
  }
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double m = mean_of(d);
  const double sd = sample_sd(d);
  PairedTResult result;
  if (sd == 0.0) {
    if (m == 0.0) return result;  // statistic 0, p 1
    result.statistic = m > 0.0 ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();
    result.p_value = 0.0;
    result.significant = true;
    return result;
  }
  const double n = static_cast<double>(d.size());
  result.statistic = m / (sd / std::sqrt(n));
  result.p_value =
      student_t_two_sided_p(result.statistic, static_cast<int>(d.size()) - 1);
  result.significant = result.p_value < level;
  return result;
}

}  // namespace splinemetric
