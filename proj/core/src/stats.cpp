#include "destrank/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "destrank/errors.hpp"

namespace destrank::eval {

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

namespace {

// P(T <= t); central-interval form for |t| < sqrt(nu), tail form beyond.
double lower_tail(double t, double nu) {
  const double t2 = t * t;
  if (t2 < nu) {
    const double half_central = 0.5 * incomplete_beta(0.5, nu / 2.0, t2 / (nu + t2));
    return t >= 0.0 ? 0.5 + half_central : 0.5 - half_central;
  }
  const double half_tail = 0.5 * incomplete_beta(nu / 2.0, 0.5, nu / (nu + t2));
  return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

void check_df(int df) {
  if (df < 1) throw Error(Errc::Usage, "degrees of freedom must be >= 1");
}

}  // namespace

double student_t_sf(double t, int df) {
  check_df(df);
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  return lower_tail(-t, df);
}

double student_t_cdf(double t, int df) {
  check_df(df);
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  return lower_tail(t, df);
}

double student_t_quantile(double p, int df) {
  if (!(p > 0.0 && p < 1.0)) throw Error(Errc::Usage, "quantile level must be in (0, 1)");
  double lo = -1.0, hi = 1.0;
  while (student_t_cdf(lo, df) > p) lo *= 2.0;
  while (student_t_cdf(hi, df) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    (student_t_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

struct Moments {
  double mean;
  double sd;  // sample standard deviation
};

Moments moments(std::span<const double> v) {
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  if (*mn == *mx) return {*mn, 0.0};
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

MeanCi mean_and_ci(std::span<const double> values, double level) {
  if (values.size() < 2) {
    throw Error(Errc::TooFewValues, "need at least 2 values, got " + std::to_string(values.size()));
  }
  const auto [mean, sd] = moments(values);
  if (sd == 0.0) return {mean, mean, mean};
  const int df = static_cast<int>(values.size()) - 1;
  const double tq = student_t_quantile((1.0 + level) / 2.0, df);
  const double half = tq * sd / std::sqrt(static_cast<double>(values.size()));
  return {mean, mean - half, mean + half};
}

SignificanceResult paired_t_test(const std::map<std::string, double>& a,
                                 const std::map<std::string, double>& b) {
  if (a.size() != b.size()) throw Error(Errc::KeyMismatch, "different number of queries");
  std::vector<double> diffs;
  diffs.reserve(a.size());
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) throw Error(Errc::KeyMismatch, ia->first + " vs " + ib->first);
    diffs.push_back(ia->second - ib->second);
  }
  if (diffs.size() < 2) throw Error(Errc::TooFewValues, "need at least 2 pairs");
  const auto [mean, sd] = moments(diffs);
  if (sd == 0.0) throw Error(Errc::ZeroVariance, "paired differences have zero variance");

  SignificanceResult r;
  r.degrees_of_freedom = static_cast<int>(diffs.size()) - 1;
  r.t_statistic = mean / (sd / std::sqrt(static_cast<double>(diffs.size())));
  r.p_value = std::min(1.0, 2.0 * student_t_sf(std::fabs(r.t_statistic), r.degrees_of_freedom));
  r.significant_at_01 = r.p_value < 0.01;
  return r;
}

}  // namespace destrank::eval
