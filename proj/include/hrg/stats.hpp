#pragma once

// Small statistics toolkit shared by the estimators: streaming moments,
// least-squares fits, KS distances and a few distribution tails.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace hrg {

/// Closed interval [lo, hi]; lo > hi denotes the empty set.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool empty() const { return lo > hi; }
  double width() const { return empty() ? 0.0 : hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Welford accumulator with Chan's pairwise merge.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double m2() const { return m2_; }
  /// Unbiased sample variance (0 below two observations).
  double variance() const;
  /// Standard error of the mean.
  double stderr_mean() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares; slope_se from the residual variance.
LinearFit fit_ols(std::span<const double> x, std::span<const double> y);

/// Weighted least squares with weights 1/sigma_i^2, treated as known
/// variances (slope_se = sqrt of the (X'WX)^{-1} entry).
LinearFit fit_wls(std::span<const double> x, std::span<const double> y, std::span<const double> w);

double mean_of(std::span<const double> x);
double quantile_sorted(std::span<const double> sorted, double q);
double median_of(std::vector<double> x);

/// One-sample KS distance of `sorted` against a continuous CDF.
double ks_distance(std::span<const double> sorted, const std::function<double(double)>& cdf);
/// Two-sample KS distance between sorted samples.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

struct ProportionCI {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};
ProportionCI wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

/// Upper tail P(X^2_dof >= x).
double chi_square_sf(double x, double dof);
/// Two-sided Student-t critical value for confidence `level`.
double t_critical(double dof, double level = 0.95);

}  // namespace hrg
