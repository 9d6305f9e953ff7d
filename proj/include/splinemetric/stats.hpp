#pragma once

#include <vector>

namespace splinemetric {

/// Sort-then-sum reduction; the result is independent of the order the
/// inputs were produced in.
double stable_sum(std::vector<double> values);

double mean_of(const std::vector<double>& values);

/// Sample standard deviation (n - 1 denominator).
double sample_sd(const std::vector<double>& values);

/// Sample variance (n - 1 denominator).
double sample_variance(const std::vector<double>& values);

/// Two-sided tail probability of Student's t with df degrees of freedom,
/// I_{df/(df+t^2)}(df/2, 1/2).
double student_t_two_sided_p(double t, int df);

struct PairedTResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

/// Two-sided paired Student test on the differences a - b. Zero-variance
/// differences degenerate to p = 0 (nonzero mean) or p = 1 (zero mean).
PairedTResult paired_t_test(const std::vector<double>& a,
                            const std::vector<double>& b, double level);

}  // namespace splinemetric
