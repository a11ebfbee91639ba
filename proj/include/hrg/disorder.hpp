#pragma once

// Single-site densities, their tabulation on uniform grids, and seeded
// sampling of potentials.

#include <complex>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace hrg {

/// Piecewise-constant density on [lo, hi] with mass outside the window
/// carried explicitly as two atoms, one at each end of the real line.
struct GridDensity {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> values;  // density in each bin
  double tail_lo = 0.0;        // mass below lo
  double tail_hi = 0.0;        // mass above hi

  std::size_t bins() const { return values.size(); }
  double width() const { return (hi - lo) / static_cast<double>(values.size()); }
  double midpoint(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * width(); }
  double edge(std::size_t i) const { return lo + static_cast<double>(i) * width(); }
  double tail_mass() const { return tail_lo + tail_hi; }
  /// Mass inside the window.
  double grid_mass() const;
  double total_mass() const { return grid_mass() + tail_mass(); }
  double supnorm() const;
  double eval(double v) const;
  /// Including tail_lo; tends to total_mass as v -> infinity.
  double cdf(double v) const;
  void validate(double tol = 1e-8) const;
};

/// Window policy for tabulated densities: the window covers the quantile
/// range [q(t/2), q(1 - t/2)] for t = tail_target, clipped to
/// median +- iqr_span * IQR so heavy tails do not starve resolution.
struct GridOptions {
  std::size_t bins = 4096;
  double tail_target = 1e-4;
  double iqr_span = 32.0;
  /// Pushforward quadrature: max CDF variation of a monotone integrand piece.
  double var_tol = 1e-3;
  int max_depth = 40;
};

class DensityModel {
 public:
  enum class Kind { gaussian, cauchy, mixture, cauchy_convolved, tabulated };

  static DensityModel gaussian(double mu, double sigma);
  static DensityModel cauchy(double mu, double sigma);
  static DensityModel mixture(std::vector<double> weights, std::vector<DensityModel> components);
  /// Law of B + C with B ~ base and C ~ Cauchy(Re z, Im z) independent.
  static DensityModel cauchy_convolved(const DensityModel& base, std::complex<double> z);
  static DensityModel tabulated(GridDensity grid);

  Kind kind() const { return kind_; }
  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<DensityModel>& components() const { return components_; }
  const DensityModel& base() const { return *base_; }
  std::complex<double> z() const { return {mu_, sigma_}; }
  const GridDensity& grid() const { return *grid_; }

  double eval(double v) const;
  double cdf(double v) const;
  double quantile(double q) const;
  /// Numerical sup-norm (closed form where available).
  double supnorm() const;
  /// Law of V + delta. The shifted density of the energy convention is translated(-E).
  DensityModel translated(double delta) const;
  std::string describe() const;

 private:
  DensityModel() = default;

  Kind kind_ = Kind::gaussian;
  double mu_ = 0.0;     // location, or Re z for cauchy_convolved
  double sigma_ = 1.0;  // scale, or Im z for cauchy_convolved
  std::vector<double> weights_;
  std::vector<DensityModel> components_;
  std::shared_ptr<const DensityModel> base_;
  std::shared_ptr<const GridDensity> grid_;
};

double density_eval(const DensityModel& m, double v);

struct CauchyDomination {
  double c_hat = 0.0;
  bool ok = false;
  /// Exact sup of rho(v)(1+v^2) for centred gaussian/cauchy kinds, else NaN.
  double analytic = 0.0;
  /// Max over the outer decade divided by max over the decade before it.
  double tail_growth = 0.0;
};

/// Symmetric log-spaced grid: 0 and +-10^k for k in [log_lo, log_hi].
std::vector<double> default_domination_grid(double log_lo = -3.0, double log_hi = 4.0, std::size_t per_side = 4001);
CauchyDomination check_cauchy_domination(const DensityModel& m, const std::vector<double>& v_grid);
CauchyDomination check_cauchy_domination(const DensityModel& m);

/// Bin masses from exact CDF differences over the window chosen by `opt`.
GridDensity tabulate(const DensityModel& m, const GridOptions& opt = {});
GridDensity tabulate(const DensityModel& m, double lo, double hi, std::size_t bins);

/// Portable generator: mt19937_64 with hand-written transforms so streams do
/// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on (0, 1).
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  /// Marsaglia polar method.
  double normal();
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

double sample_one(const DensityModel& m, Rng& rng);
std::vector<double> sample_potential(const DensityModel& m, std::size_t count, std::uint64_t seed);
/// One draw per site from per-site models.
std::vector<double> sample_potential(const std::vector<DensityModel>& site_models, std::uint64_t seed);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// seed(index) = mix64(key + index * 0x9e3779b97f4a7c15) with
/// key = mix64(master) ^ mix64(stream * 0xd1b54a32d192ed03 + 0x8cb92ba72f3d8dd7).
/// The outer map is a bijection of key + index * odd, so distinct indices
/// never collide within a schedule.
struct SeedSchedule {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  std::uint64_t key() const;
};

std::uint64_t derive_seed(const SeedSchedule& s, std::uint64_t index);

}  // namespace hrg
