#pragma once

#include <map>
#include <span>
#include <string>

namespace destrank::eval {

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// Student-t CDF with `df` degrees of freedom (df >= 1).
double student_t_cdf(double t, int df);
/// Upper tail 1 - cdf, computed without cancellation.
double student_t_sf(double t, int df);
/// Inverse CDF by bisection on student_t_cdf; p in (0, 1).
double student_t_quantile(double p, int df);

struct MeanCi {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;

  double half_width() const noexcept { return ci_high - mean; }
};

/// mean ± t_{(1+level)/2, n-1} · s / sqrt(n). Throws Error{TooFewValues} for n < 2.
MeanCi mean_and_ci(std::span<const double> values, double level = 0.95);

struct SignificanceResult {
  double t_statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;  // two-sided
  bool significant_at_01 = false;
};

/// Two-sided paired t-test on d_i = a_i - b_i over the shared qids.
/// Throws Error{KeyMismatch} when the key sets differ, Error{TooFewValues}
/// for fewer than two pairs and Error{ZeroVariance} when the differences
/// have no spread (including a == b).
SignificanceResult paired_t_test(const std::map<std::string, double>& a,
                                 const std::map<std::string, double>& b);

}  // namespace destrank::eval
