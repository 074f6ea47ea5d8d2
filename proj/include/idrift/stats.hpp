#pragma once

// Turning Monte Carlo output into verdicts: empirical Laplace transforms,
// reference CDFs, Kolmogorov-Smirnov tests and a factorization check.

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idrift/network.hpp"

namespace idrift {

inline constexpr double kDefaultAlpha = 0.01;

struct TestReport {
  std::string name;
  double statistic = 0.0;
  std::optional<double> p_value;  // absent for standard-error band tests
  std::size_t n = 0;
  bool pass = false;
  std::string tolerance;  // e.g. "alpha=0.01" or "3 s.e."
};

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Mean and standard error of a sample, summed in index order.
inline MeanEstimate mean_and_error(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::EmptySample, "no samples");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = values.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

/// Mean and standard error of exp(-<lambda, beta>).
inline MeanEstimate empirical_laplace(std::span<const Vector> samples, const Vector& lambda) {
  if (samples.empty()) fail(ErrorKind::EmptySample, "empirical Laplace transform of no samples");
  std::vector<double> values;
  values.reserve(samples.size());
  for (const Vector& b : samples) values.push_back(std::exp(-lambda.dot(b)));
  return mean_and_error(values);
}

/// Band test |estimate - expected| <= k s.e.
inline TestReport standard_error_check(std::string name, const MeanEstimate& est, double expected,
                                       std::size_t n, double k = 3.0) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = est.std_error > 0.0 ? std::abs(est.mean - expected) / est.std_error
                                    : (est.mean == expected ? 0.0 : std::numeric_limits<double>::infinity());
  r.n = n;
  r.pass = std::abs(est.mean - expected) <= k * est.std_error;
  r.tolerance = std::to_string(k).substr(0, 3) + " s.e.";
  return r;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace detail {

// exp(a) * Phi(-z) for z >= 0 without overflowing exp(a) or underflowing Phi.
inline double exp_times_upper_normal_tail(double a, double z) {
  if (z < 30.0) {
    const double tail = normal_cdf(-z);
    if (tail > 0.0) return std::exp(a + std::log(tail));
  }
  // Phi(-z) = phi(z)/z * (1 - 1/z^2 + 3/z^4 - 15/z^6 + ...)
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return std::exp(a - 0.5 * z2) * series / (z * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace detail

/// Inverse Gaussian CDF with mean mu and shape lambda.
inline double ig_cdf(double mu, double shape, double x) {
  if (!(mu > 0.0) || !(shape > 0.0)) fail(ErrorKind::DomainViolation, "IG parameters must be positive");
  if (std::isnan(x) || x < 0.0) fail(ErrorKind::DomainViolation, "IG CDF needs x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double r = std::sqrt(shape / x);
  const double image = detail::exp_times_upper_normal_tail(2.0 * shape / mu, r * (x / mu + 1.0));
  if (x <= mu) return std::clamp(normal_cdf(r * (x / mu - 1.0)) + image, 0.0, 1.0);
  // Above the mean the survival function is the small, accurately computed side.
  const double survival = normal_cdf(-r * (x / mu - 1.0)) - image;
  return std::clamp(1.0 - survival, 0.0, 1.0);
}

/// Gamma(shape, rate) CDF: the regularized lower incomplete gamma P(shape, rate x).
inline double gamma_cdf(double shape, double rate, double x) {
  if (!(shape > 0.0) || !(rate > 0.0)) fail(ErrorKind::DomainViolation, "Gamma parameters must be positive");
  if (std::isnan(x) || x < 0.0) fail(ErrorKind::DomainViolation, "Gamma CDF needs x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(shape, rate * x);
}

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// p-value for statistic D with effective sample size ne (Stephens' correction).
inline double ks_p_value(double d, double ne) {
  const double root = std::sqrt(ne);
  return kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
}

inline TestReport ks_one_sample(std::string name, std::vector<double> samples,
                                const std::function<double(double)>& cdf,
                                double alpha = kDefaultAlpha) {
  if (samples.empty()) fail(ErrorKind::EmptySample, "KS test of no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  // Ties are stepped over as a block and compared against the left limit
  // F(v-), so reference laws with atoms (a stopped process at 0) are handled.
  double d = 0.0;
  std::size_t i = 0;
  while (i < samples.size()) {
    const double v = samples[i];
    std::size_t j = i;
    while (j < samples.size() && samples[j] == v) ++j;
    const double below = cdf(std::nextafter(v, -std::numeric_limits<double>::infinity()));
    d = std::max({d, static_cast<double>(j) / n - cdf(v), below - static_cast<double>(i) / n});
    i = j;
  }
  TestReport r;
  r.name = std::move(name);
  r.statistic = d;
  r.n = samples.size();
  r.p_value = ks_p_value(d, n);
  r.pass = *r.p_value > alpha;
  r.tolerance = "alpha=" + std::to_string(alpha);
  return r;
}

/// Two-sample KS; ties are handled by stepping both ECDFs past equal values.
inline TestReport ks_two_sample(std::string name, std::vector<double> a, std::vector<double> b,
                                double alpha = kDefaultAlpha) {
  if (a.empty() || b.empty()) fail(ErrorKind::EmptySample, "KS test of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  TestReport r;
  r.name = std::move(name);
  r.statistic = d;
  r.n = a.size() + b.size();
  r.p_value = ks_p_value(d, na * nb / (na + nb));
  r.pass = *r.p_value > alpha;
  r.tolerance = "alpha=" + std::to_string(alpha);
  return r;
}

/// Compares E[exp(-l1 a - l2 b)] with E[exp(-l1 a)] E[exp(-l2 b)]; the standard
/// error of the difference comes from its influence function (delta method).
inline TestReport independence_check(std::string name, std::span<const std::pair<double, double>> pairs,
                                     double lambda1, double lambda2, double k = 3.0) {
  if (pairs.empty()) fail(ErrorKind::EmptySample, "independence check of no samples");
  const std::size_t n = pairs.size();
  std::vector<double> f1(n), f2(n), f12(n);
  for (std::size_t i = 0; i < n; ++i) {
    f1[i] = std::exp(-lambda1 * pairs[i].first);
    f2[i] = std::exp(-lambda2 * pairs[i].second);
    f12[i] = std::exp(-lambda1 * pairs[i].first - lambda2 * pairs[i].second);
  }
  const double m1 = mean_and_error(f1).mean;
  const double m2 = mean_and_error(f2).mean;
  const double m12 = mean_and_error(f12).mean;
  std::vector<double> influence(n);
  for (std::size_t i = 0; i < n; ++i) {
    influence[i] = (f12[i] - m12) - m2 * (f1[i] - m1) - m1 * (f2[i] - m2);
  }
  const double se = mean_and_error(influence).std_error;
  const double diff = m12 - m1 * m2;
  TestReport r;
  r.name = std::move(name);
  r.statistic = se > 0.0 ? std::abs(diff) / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  r.n = n;
  r.pass = std::abs(diff) <= k * se;
  r.tolerance = std::to_string(k).substr(0, 3) + " s.e.";
  return r;
}

/// Per-test level after a Bonferroni correction over `tests` comparisons.
inline double bonferroni(double alpha, std::size_t tests) {
  return alpha / static_cast<double>(std::max<std::size_t>(tests, 1));
}

}  // namespace idrift
