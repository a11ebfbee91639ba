#include "hrg/disorder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <fmt/format.h>

#include "hrg/errors.hpp"

namespace hrg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double gk_integrate(const std::function<double(double)>& f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  if (!(a < b)) return 0.0;
  double err = 0.0;
  return gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-11, &err);
}

// (1/pi) * integral over theta in (-pi/2, pi/2) of g(a + b tan theta), split at
// theta(x = pivot) where g is expected to have its feature.
double cauchy_average(const std::function<double(double)>& g, double a, double b, double pivot) {
  const double half = kPi / 2;
  const double tp = std::atan((pivot - a) / b);
  auto f = [&](double th) { return g(a + b * std::tan(th)); };
  const double left = gk_integrate(f, -half, tp);
  const double right = gk_integrate(f, tp, half);
  return (left + right) / kPi;
}

// Bisection for a non-decreasing function crossing `target`.
template <class F>
double invert_monotone(F&& f, double target, double guess_lo, double guess_hi) {
  double lo = guess_lo, hi = guess_hi;
  double span = std::max(1.0, hi - lo);
  for (int i = 0; i < 200 && f(lo) > target; ++i, span *= 2) lo -= span;
  span = std::max(1.0, hi - lo);
  for (int i = 0; i < 200 && f(hi) < target; ++i, span *= 2) hi += span;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (f(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> cumulative(const GridDensity& g) {
  std::vector<double> c(g.bins() + 1, 0.0);
  const double h = g.width();
  for (std::size_t i = 0; i < g.bins(); ++i) c[i + 1] = c[i] + g.values[i] * h;
  return c;
}

}  // namespace

// ---- GridDensity ----------------------------------------------------------

double GridDensity::grid_mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * width();
}

double GridDensity::supnorm() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

double GridDensity::eval(double v) const {
  if (!(v >= lo) || !(v < hi) || values.empty()) return 0.0;
  const auto i = std::min(values.size() - 1, static_cast<std::size_t>((v - lo) / width()));
  return values[i];
}

double GridDensity::cdf(double v) const {
  if (v < lo) return tail_lo;
  if (v >= hi) return tail_lo + grid_mass();
  const double h = width();
  const auto i = std::min(values.size() - 1, static_cast<std::size_t>((v - lo) / h));
  double s = 0.0;
  for (std::size_t k = 0; k < i; ++k) s += values[k];
  return tail_lo + s * h + (v - edge(i)) * values[i];
}

void GridDensity::validate(double tol) const {
  if (values.empty() || !(hi > lo)) throw InputError("grid density needs bins and hi > lo");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("grid density values must be finite and >= 0");
  }
  if (!(tail_lo >= 0.0) || !(tail_hi >= 0.0)) throw InputError("grid tail masses must be >= 0");
  const double m = total_mass();
  if (std::abs(m - 1.0) > tol) {
    throw InputError(fmt::format("grid density mass {} differs from 1 by more than {}", m, tol));
  }
}

// ---- DensityModel ---------------------------------------------------------

DensityModel DensityModel::gaussian(double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mu)) {
    throw InputError(fmt::format("gaussian needs finite mu and sigma > 0 (got {}, {})", mu, sigma));
  }
  DensityModel m;
  m.kind_ = Kind::gaussian;
  m.mu_ = mu;
  m.sigma_ = sigma;
  return m;
}

DensityModel DensityModel::cauchy(double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mu)) {
    throw InputError(fmt::format("cauchy needs finite mu and sigma > 0 (got {}, {})", mu, sigma));
  }
  DensityModel m;
  m.kind_ = Kind::cauchy;
  m.mu_ = mu;
  m.sigma_ = sigma;
  return m;
}

DensityModel DensityModel::mixture(std::vector<double> weights, std::vector<DensityModel> components) {
  if (weights.empty() || weights.size() != components.size()) {
    throw InputError("mixture needs one weight per component");
  }
  double s = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InputError("mixture weights must be non-negative");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-10) throw InputError(fmt::format("mixture weights sum to {}, not 1", s));
  DensityModel m;
  m.kind_ = Kind::mixture;
  m.weights_ = std::move(weights);
  m.components_ = std::move(components);
  return m;
}

DensityModel DensityModel::cauchy_convolved(const DensityModel& base, std::complex<double> z) {
  if (!(z.imag() > 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw InputError("cauchy_convolved needs Im z > 0");
  }
  // P_w * P_z = P_{w+z}
  if (base.kind_ == Kind::cauchy) return cauchy(base.mu_ + z.real(), base.sigma_ + z.imag());
  DensityModel m;
  m.kind_ = Kind::cauchy_convolved;
  m.mu_ = z.real();
  m.sigma_ = z.imag();
  m.base_ = std::make_shared<const DensityModel>(base);
  return m;
}

DensityModel DensityModel::tabulated(GridDensity grid) {
  grid.validate();
  DensityModel m;
  m.kind_ = Kind::tabulated;
  m.grid_ = std::make_shared<const GridDensity>(std::move(grid));
  return m;
}

double DensityModel::eval(double v) const {
  switch (kind_) {
    case Kind::gaussian: {
      const double t = (v - mu_) / sigma_;
      return std::exp(-0.5 * t * t) / (sigma_ * std::sqrt(2 * kPi));
    }
    case Kind::cauchy: {
      const double d = v - mu_;
      return sigma_ / (kPi * (d * d + sigma_ * sigma_));
    }
    case Kind::mixture: {
      double s = 0.0;
      for (std::size_t i = 0; i < weights_.size(); ++i) s += weights_[i] * components_[i].eval(v);
      return s;
    }
    case Kind::cauchy_convolved:
      return cauchy_average([&](double x) { return base_->eval(v - x); }, mu_, sigma_, v - base_->quantile(0.5));
    case Kind::tabulated:
      return grid_->eval(v);
  }
  return 0.0;
}

double DensityModel::cdf(double v) const {
  switch (kind_) {
    case Kind::gaussian:
      return 0.5 * std::erfc(-(v - mu_) / (sigma_ * std::numbers::sqrt2));
    case Kind::cauchy: {
      const double t = (v - mu_) / sigma_;
      // atan form loses precision in the far left tail; use the reflected form there.
      return t < 0 ? std::atan(-1.0 / t) / kPi : 0.5 + std::atan(t) / kPi;
    }
    case Kind::mixture: {
      double s = 0.0;
      for (std::size_t i = 0; i < weights_.size(); ++i) s += weights_[i] * components_[i].cdf(v);
      return s;
    }
    case Kind::cauchy_convolved:
      return cauchy_average([&](double x) { return base_->cdf(v - x); }, mu_, sigma_, v - base_->quantile(0.5));
    case Kind::tabulated:
      return grid_->cdf(v);
  }
  return 0.0;
}

double DensityModel::quantile(double q) const {
  if (!(q > 0.0 && q < 1.0)) throw InputError(fmt::format("quantile level {} outside (0, 1)", q));
  switch (kind_) {
    case Kind::gaussian:
      return mu_ + sigma_ * std::numbers::sqrt2 * boost::math::erf_inv(2 * q - 1);
    case Kind::cauchy:
      return mu_ + sigma_ * std::tan(kPi * (q - 0.5));
    case Kind::tabulated: {
      const auto& g = *grid_;
      if (q <= g.tail_lo) return g.lo;
      if (q >= g.tail_lo + g.grid_mass()) return g.hi;
      return invert_monotone([&](double x) { return g.cdf(x); }, q, g.lo, g.hi);
    }
    default:
      return invert_monotone([&](double x) { return cdf(x); }, q, -1.0, 1.0);
  }
}

double DensityModel::supnorm() const {
  switch (kind_) {
    case Kind::gaussian:
      return 1.0 / (sigma_ * std::sqrt(2 * kPi));
    case Kind::cauchy:
      return 1.0 / (kPi * sigma_);
    case Kind::tabulated:
      return grid_->supnorm();
    default:
      break;
  }
  // Scan between wide quantiles, then refine the best point by golden section.
  const double a = quantile(1e-4), b = quantile(1 - 1e-4);
  const int pts = 4001;
  double best = -1.0, arg = a;
  const double step = (b - a) / (pts - 1);
  for (int i = 0; i < pts; ++i) {
    const double x = a + step * i;
    const double y = eval(x);
    if (y > best) {
      best = y;
      arg = x;
    }
  }
  double lo = arg - step, hi = arg + step;
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int i = 0; i < 60; ++i) {
    const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    if (eval(x1) < eval(x2)) {
      lo = x1;
    } else {
      hi = x2;
    }
  }
  return std::max(best, eval(0.5 * (lo + hi)));
}

DensityModel DensityModel::translated(double delta) const {
  DensityModel m = *this;
  switch (kind_) {
    case Kind::gaussian:
    case Kind::cauchy:
      m.mu_ += delta;
      break;
    case Kind::mixture:
      for (auto& c : m.components_) c = c.translated(delta);
      break;
    case Kind::cauchy_convolved:
      m.base_ = std::make_shared<const DensityModel>(base_->translated(delta));
      break;
    case Kind::tabulated: {
      GridDensity g = *grid_;
      g.lo += delta;
      g.hi += delta;
      m.grid_ = std::make_shared<const GridDensity>(std::move(g));
      break;
    }
  }
  return m;
}

std::string DensityModel::describe() const {
  switch (kind_) {
    case Kind::gaussian:
      return fmt::format("gaussian({}, {})", mu_, sigma_);
    case Kind::cauchy:
      return fmt::format("cauchy({}, {})", mu_, sigma_);
    case Kind::mixture: {
      std::string s = "mixture(";
      for (std::size_t i = 0; i < weights_.size(); ++i) {
        s += fmt::format("{}{} {}", i ? ", " : "", weights_[i], components_[i].describe());
      }
      return s + ")";
    }
    case Kind::cauchy_convolved:
      return fmt::format("cauchy_convolved({}, {}+{}i)", base_->describe(), mu_, sigma_);
    case Kind::tabulated:
      return fmt::format("tabulated([{}, {}], {} bins)", grid_->lo, grid_->hi, grid_->bins());
  }
  return "?";
}

double density_eval(const DensityModel& m, double v) { return m.eval(v); }

// ---- Cauchy domination ----------------------------------------------------

std::vector<double> default_domination_grid(double log_lo, double log_hi, std::size_t per_side) {
  std::vector<double> g;
  g.reserve(2 * per_side + 1);
  for (std::size_t i = per_side; i-- > 0;) {
    const double e = log_lo + (log_hi - log_lo) * static_cast<double>(i) / static_cast<double>(per_side - 1);
    g.push_back(-std::pow(10.0, e));
  }
  g.push_back(0.0);
  for (std::size_t i = 0; i < per_side; ++i) {
    const double e = log_lo + (log_hi - log_lo) * static_cast<double>(i) / static_cast<double>(per_side - 1);
    g.push_back(std::pow(10.0, e));
  }
  return g;
}

CauchyDomination check_cauchy_domination(const DensityModel& m, const std::vector<double>& grid) {
  if (grid.empty()) throw InputError("empty domination grid");
  CauchyDomination r;
  double vmax = 0.0;
  for (double v : grid) vmax = std::max(vmax, std::abs(v));
  double outer = 0.0, inner = 0.0;
  for (double v : grid) {
    const double g = m.eval(v) * (1.0 + v * v);
    r.c_hat = std::max(r.c_hat, g);
    const double a = std::abs(v);
    if (a >= vmax / 10) {
      outer = std::max(outer, g);
    } else if (a >= vmax / 100) {
      inner = std::max(inner, g);
    }
  }
  r.tail_growth = inner > 0.0 ? outer / inner : (outer > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  r.ok = std::isfinite(r.c_hat) && r.tail_growth <= 1.05;
  r.analytic = kNaN;
  if (m.kind() == DensityModel::Kind::cauchy && m.mu() == 0.0) {
    r.analytic = std::max(m.sigma(), 1.0 / m.sigma()) / kPi;
  } else if (m.kind() == DensityModel::Kind::gaussian && m.mu() == 0.0) {
    const double s2 = m.sigma() * m.sigma();
    const double x = std::max(0.0, 2 * s2 - 1);
    r.analytic = (1 + x) * std::exp(-x / (2 * s2)) / (m.sigma() * std::sqrt(2 * kPi));
  }
  return r;
}

CauchyDomination check_cauchy_domination(const DensityModel& m) {
  return check_cauchy_domination(m, default_domination_grid());
}

// ---- tabulation -----------------------------------------------------------

GridDensity tabulate(const DensityModel& m, double lo, double hi, std::size_t bins) {
  if (!(hi > lo) || bins == 0) throw InputError("tabulate needs hi > lo and bins > 0");
  GridDensity g;
  g.lo = lo;
  g.hi = hi;
  g.values.resize(bins);
  const double h = g.width();
  double prev = m.cdf(lo);
  g.tail_lo = prev;
  for (std::size_t i = 0; i < bins; ++i) {
    const double next = i + 1 == bins ? m.cdf(hi) : m.cdf(g.edge(i + 1));
    g.values[i] = std::max(0.0, next - prev) / h;
    prev = next;
  }
  g.tail_hi = std::max(0.0, 1.0 - prev);
  return g;
}

GridDensity tabulate(const DensityModel& m, const GridOptions& opt) {
  const double t = opt.tail_target / 2;
  const double med = m.quantile(0.5);
  const double iqr = m.quantile(0.75) - m.quantile(0.25);
  const double lo = std::max(m.quantile(t), med - opt.iqr_span * iqr);
  const double hi = std::min(m.quantile(1 - t), med + opt.iqr_span * iqr);
  return tabulate(m, lo, hi, opt.bins);
}

// ---- sampling -------------------------------------------------------------

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2 * uniform() - 1;
    v = 2 * uniform() - 1;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw InputError("Rng::below(0)");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

namespace {

double sample_grid(const GridDensity& g, const std::vector<double>& cum, Rng& rng) {
  const double u = rng.uniform() * g.total_mass();
  // Tail draws: half-Cauchy beyond the window edge with scale equal to the window width.
  if (u < g.tail_lo) return g.lo - (g.hi - g.lo) * std::tan(kPi / 2 * rng.uniform());
  const double inner = u - g.tail_lo;
  if (inner >= cum.back()) return g.hi + (g.hi - g.lo) * std::tan(kPi / 2 * rng.uniform());
  const auto it = std::upper_bound(cum.begin(), cum.end(), inner);
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - cum.begin()) - 1));
  return g.edge(std::min(i, g.bins() - 1)) + rng.uniform() * g.width();
}

struct Sampler {
  const DensityModel& m;
  std::vector<double> cum;
  std::vector<Sampler> parts;

  explicit Sampler(const DensityModel& model) : m(model) {
    if (m.kind() == DensityModel::Kind::tabulated) cum = cumulative(m.grid());
    if (m.kind() == DensityModel::Kind::mixture) {
      for (const auto& c : m.components()) parts.emplace_back(c);
    }
    if (m.kind() == DensityModel::Kind::cauchy_convolved) parts.emplace_back(m.base());
  }

  double draw(Rng& rng) const {
    switch (m.kind()) {
      case DensityModel::Kind::gaussian:
        return m.mu() + m.sigma() * rng.normal();
      case DensityModel::Kind::cauchy:
        return m.mu() + m.sigma() * std::tan(kPi * (rng.uniform_open() - 0.5));
      case DensityModel::Kind::mixture: {
        const double u = rng.uniform();
        double acc = 0.0;
        const auto& w = m.weights();
        std::size_t i = 0;
        for (; i + 1 < w.size(); ++i) {
          acc += w[i];
          if (u < acc) break;
        }
        return parts[i].draw(rng);
      }
      case DensityModel::Kind::cauchy_convolved: {
        const double b = parts[0].draw(rng);
        return b + m.mu() + m.sigma() * std::tan(kPi * (rng.uniform_open() - 0.5));
      }
      case DensityModel::Kind::tabulated:
        return sample_grid(m.grid(), cum, rng);
    }
    return 0.0;
  }
};

}  // namespace

double sample_one(const DensityModel& m, Rng& rng) { return Sampler(m).draw(rng); }

std::vector<double> sample_potential(const DensityModel& m, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw InputError("sample_potential needs count >= 1");
  Rng rng(seed);
  Sampler s(m);
  std::vector<double> out(count);
  for (auto& v : out) v = s.draw(rng);
  return out;
}

std::vector<double> sample_potential(const std::vector<DensityModel>& site_models, std::uint64_t seed) {
  if (site_models.empty()) throw InputError("sample_potential needs at least one site");
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(site_models.size());
  for (const auto& m : site_models) out.push_back(Sampler(m).draw(rng));
  return out;
}

// ---- seeds ----------------------------------------------------------------

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t SeedSchedule::key() const {
  return mix64(master_seed) ^ mix64(stream_id * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL);
}

std::uint64_t derive_seed(const SeedSchedule& s, std::uint64_t index) {
  return mix64(s.key() + index * 0x9e3779b97f4a7c15ULL);
}

}  // namespace hrg
