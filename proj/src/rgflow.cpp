#include "hrg/rgflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hrg/errors.hpp"
#include "hrg/stats.hpp"

namespace hrg {

double harmonic_step(double v, double w, double p) {
  const double s = v + w;
  if (!(std::abs(s) > 1e-13 * std::max(std::abs(v), std::abs(w))) || !std::isfinite(s)) {
    throw SingularError(fmt::format("harmonic step singular for v = {}, w = {}", v, w));
  }
  return 2.0 * v * w / s + p;
}

namespace {

bool singular_pair(double v, double w) {
  const double s = v + w;
  return !(std::abs(s) > 1e-13 * std::max(std::abs(v), std::abs(w))) || !std::isfinite(s);
}

void check_resample_budget(std::size_t redraws, std::size_t pairs) {
  if (redraws * 1000 > pairs) {
    throw SingularError(
        fmt::format("{} of {} pairs were singular (limit 0.1%); the input law likely has an atom", redraws, pairs));
  }
}

}  // namespace

std::vector<double> flow_step_mc(std::span<const double> a, std::span<const double> b, double p, Rng& rng,
                                 std::size_t* resampled) {
  if (a.size() != b.size()) throw InputError("flow_step_mc needs inputs of equal length");
  std::vector<double> out(a.size());
  std::size_t redraws = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double v = a[i], w = b[i];
    while (singular_pair(v, w)) {
      ++redraws;
      check_resample_budget(redraws, a.size());
      v = a[rng.below(a.size())];
      w = b[rng.below(b.size())];
    }
    out[i] = 2.0 * v * w / (v + w) + p;
  }
  if (resampled) *resampled = redraws;
  return out;
}

// ---- grid pushforward -----------------------------------------------------

namespace {

// Finite part of a grid density, read as a mass-preserving parabola per bin
// matching the neighbouring bin averages (falls back to the bin average where
// the parabola would go negative). Reading bins as flat blurs the law by
// O(h^2) on every step, which compounds along a flow.
struct Reconstruction {
  double lo, hi, h;
  std::vector<double> val, slope, curv, cum;
  double mass;

  explicit Reconstruction(const GridDensity& g) : lo(g.lo), hi(g.hi), h(g.width()), val(g.values) {
    const std::size_t n = val.size();
    slope.assign(n, 0.0);
    curv.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double s = (val[i + 1] - val[i - 1]) / (2 * h);
      const double k = (val[i + 1] - 2 * val[i] + val[i - 1]) / (2 * h * h);
      if (min_on_bin(val[i], s, k) >= 0.0) {
        slope[i] = s;
        curv[i] = k;
      }
    }
    cum.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + val[i] * h;
    mass = cum.back();
  }

  double min_on_bin(double v, double s, double k) const {
    auto q = [&](double x) { return v + s * x + k * (x * x - h * h / 12); };
    double m = std::min(q(-h / 2), q(h / 2));
    if (k > 0) {
      const double x = -s / (2 * k);
      if (std::abs(x) < h / 2) m = std::min(m, q(x));
    }
    return m;
  }

  std::size_t bin(double w) const {
    auto i = static_cast<std::size_t>((w - lo) / h);
    return std::min(i, val.size() - 1);
  }
  double density(std::size_t i, double w) const {
    const double x = w - (lo + (static_cast<double>(i) + 0.5) * h);
    return val[i] + slope[i] * x + curv[i] * (x * x - h * h / 12);
  }
  // P(W <= w, W finite).
  double operator()(double w) const {
    if (!(w > lo)) return 0.0;
    if (!(w < hi)) return mass;
    const std::size_t i = bin(w);
    const double a = lo + static_cast<double>(i) * h;
    const double x = w - a - 0.5 * h, x0 = -0.5 * h;
    return cum[i] + val[i] * (w - a) + 0.5 * slope[i] * (x * x - x0 * x0) +
           curv[i] * ((x * x * x - x0 * x0 * x0) / 3 - h * h / 12 * (w - a));
  }
};

// CDF of 2VW/(V+W) for V ~ rho, W ~ rho2 with tails as atoms at +-infinity.
class PushforwardCdf {
 public:
  PushforwardCdf(const GridDensity& rho, const GridDensity& rho2, const GridOptions& opt)
      : fv_(rho), fw_(rho2), opt_(opt) {
    tau_ = rho.tail_lo + rho.tail_hi;
    tau2_ = rho2.tail_lo + rho2.tail_hi;
    atoms_lo_ = rho.tail_lo * rho2.tail_lo + 0.5 * (rho.tail_lo * rho2.tail_hi + rho.tail_hi * rho2.tail_lo);
    total_ = (fv_.mass + tau_) * (fw_.mass + tau2_);
    fw0_ = fw_(0.0);
    a0_ = integral(0.0);
  }

  double total() const { return total_; }

  double operator()(double t) const {
    double both;
    if (t > 0) {
      both = a0_ + fv_.mass * fw_.mass - integral(2.0 / t);
    } else if (t < 0) {
      both = a0_ - integral(2.0 / t);
    } else {
      both = a0_;
    }
    return both + tau2_ * fv_(t / 2) + tau_ * fw_(t / 2) + atoms_lo_;
  }

 private:
  // P(1/W <= y, W finite).
  double g_fin(double y) const {
    if (y > 0) return fw0_ + fw_.mass - fw_(1.0 / y);
    if (y < 0) return fw0_ - fw_(1.0 / y);
    return fw0_;
  }

  // Simpson on rho(v) G(c - 1/v) over [a, b] inside bin i; G is monotone on
  // the piece, so its endpoint variation bounds the local error.
  double piece(std::size_t i, double c, double a, double b, double ga, double gb, int depth) const {
    const double m = 0.5 * (a + b);
    const double gm = g_fin(c - 1.0 / m);
    if (gb - ga <= opt_.var_tol || depth >= opt_.max_depth) {
      return (b - a) * (fv_.density(i, a) * ga + 4.0 * fv_.density(i, m) * gm + fv_.density(i, b) * gb) / 6.0;
    }
    return piece(i, c, a, m, ga, gm, depth + 1) + piece(i, c, m, b, gm, gb, depth + 1);
  }

  double side(std::size_t i, double c, double a, double b) const {
    // 1/(+-0) gives -+inf, which g_fin maps to the correct one-sided limits.
    return piece(i, c, a, b, g_fin(c - 1.0 / a), g_fin(c - 1.0 / b), 0);
  }

  // A(c) = P(1/V + 1/W < c, both finite).
  double integral(double c) const {
    double s = 0.0;
    const double h = fv_.h;
    for (std::size_t i = 0; i < fv_.val.size(); ++i) {
      if (fv_.val[i] == 0.0) continue;
      const double a = fv_.lo + static_cast<double>(i) * h;
      const double b = a + h;
      if (a < 0.0 && b > 0.0) {
        s += side(i, c, a, -0.0) + side(i, c, 0.0, b);
      } else if (b <= 0.0) {
        s += side(i, c, a, b == 0.0 ? -0.0 : b);
      } else {
        s += side(i, c, a == 0.0 ? 0.0 : a, b);
      }
    }
    return s;
  }

  Reconstruction fv_, fw_;
  const GridOptions& opt_;
  double tau_ = 0, tau2_ = 0, atoms_lo_ = 0, total_ = 0, fw0_ = 0, a0_ = 0;
};

template <class F>
double cdf_quantile(const F& cdf, double target) {
  double lo = -1.0, hi = 1.0;
  int guard = 0;
  while (cdf(lo) > target) {
    lo *= 2;
    if (++guard > 1000 || !std::isfinite(lo)) return -std::numeric_limits<double>::infinity();
  }
  guard = 0;
  while (cdf(hi) < target) {
    hi *= 2;
    if (++guard > 1000 || !std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (cdf(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

template <class F>
GridDensity grid_from_cdf(const F& cdf, double total, double shift, const GridOptions& opt,
                          GridStepDiagnostics* diag) {
  const double t = opt.tail_target / 2;
  const double med = cdf_quantile(cdf, 0.5 * total);
  const double iqr = cdf_quantile(cdf, 0.75 * total) - cdf_quantile(cdf, 0.25 * total);
  if (!std::isfinite(med) || !(iqr > 0.0) || !std::isfinite(iqr)) {
    throw SingularError("pushforward collapsed: no finite interquartile range");
  }
  double lo = std::max(cdf_quantile(cdf, t * total), med - opt.iqr_span * iqr);
  double hi = std::min(cdf_quantile(cdf, (1 - t) * total), med + opt.iqr_span * iqr);
  GridDensity g;
  g.lo = lo + shift;
  g.hi = hi + shift;
  g.values.resize(opt.bins);
  const double h = (hi - lo) / static_cast<double>(opt.bins);
  double clipped = 0.0;
  double prev = cdf(lo);
  g.tail_lo = prev;
  for (std::size_t i = 0; i < opt.bins; ++i) {
    const double next = i + 1 == opt.bins ? cdf(hi) : cdf(lo + static_cast<double>(i + 1) * h);
    const double m = next - prev;
    if (m < 0) clipped -= m;
    g.values[i] = std::max(0.0, m) / h;
    prev = next;
  }
  g.tail_hi = std::max(0.0, total - prev);
  if (diag) {
    diag->clipped_mass = clipped;
    diag->tail_mass = g.tail_mass();
    diag->mass_error = std::abs(g.total_mass() - total);
  }
  return g;
}

bool same_grid(const GridDensity& a, const GridDensity& b) {
  return a.lo == b.lo && a.hi == b.hi && a.tail_lo == b.tail_lo && a.tail_hi == b.tail_hi && a.values == b.values;
}

}  // namespace

GridDensity flow_step_grid(const GridDensity& rho, const GridDensity& rho2, double p, const GridOptions& opt,
                           GridStepDiagnostics* diag) {
  rho.validate(1e-6);
  rho2.validate(1e-6);
  GridStepDiagnostics d;
  GridDensity out;
  if (same_grid(rho, rho2)) {
    const PushforwardCdf f(rho, rho, opt);
    out = grid_from_cdf(f, f.total(), p, opt, &d);
  } else {
    // Average both integration orders so the step is symmetric in its inputs.
    const PushforwardCdf f(rho, rho2, opt), g(rho2, rho, opt);
    auto avg = [&](double t) { return 0.5 * (f(t) + g(t)); };
    out = grid_from_cdf(avg, 0.5 * (f.total() + g.total()), p, opt, &d);
  }
  if (d.mass_error + d.clipped_mass > 1e-3) {
    throw SingularError(fmt::format("grid step lost mass: error {:.3e}, clipped {:.3e}", d.mass_error, d.clipped_mass));
  }
  if (diag) *diag = d;
  return out;
}

GridDensity histogram_density(std::vector<double> s, const GridOptions& opt) {
  if (s.size() < 2) throw StatisticsError("histogram needs at least two samples");
  std::sort(s.begin(), s.end());
  const double t = opt.tail_target / 2;
  const double med = quantile_sorted(s, 0.5);
  const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  double lo = std::max(quantile_sorted(s, t), med - opt.iqr_span * iqr);
  double hi = std::min(quantile_sorted(s, 1 - t), med + opt.iqr_span * iqr);
  if (!(hi > lo)) {
    lo = s.front();
    hi = s.back();
  }
  if (!(hi > lo)) throw StatisticsError("histogram of a constant sample");
  GridDensity g;
  g.lo = lo;
  g.hi = hi;
  g.values.assign(opt.bins, 0.0);
  const double n = static_cast<double>(s.size());
  const double h = g.width();
  std::size_t below = 0, above = 0;
  for (double x : s) {
    if (x < lo) {
      ++below;
    } else if (x >= hi) {
      ++above;
    } else {
      const auto i = std::min(opt.bins - 1, static_cast<std::size_t>((x - lo) / h));
      g.values[i] += 1.0;
    }
  }
  for (auto& v : g.values) v /= n * h;
  g.tail_lo = static_cast<double>(below) / n;
  g.tail_hi = static_cast<double>(above) / n;
  return g;
}

namespace {

FlowState run_grid_flow(const DensityModel& rho0, const HoppingSequence& h, double energy, int r_max,
                        const GridOptions& opt) {
  FlowState st;
  st.energy = energy;
  st.density = tabulate(rho0.translated(-energy), opt);
  st.supnorm_series.push_back(st.density.supnorm());
  st.mass_leak.push_back(st.density.tail_mass());
  st.bin_width.push_back(st.density.width());
  for (int r = 1; r <= r_max; ++r) {
    const double p = h(r);
    GridStepDiagnostics d;
    st.density = flow_step_grid(st.density, st.density, p, opt, &d);
    st.step = r;
    st.hopping_prefix.push_back(p);
    st.supnorm_series.push_back(st.density.supnorm());
    st.mass_leak.push_back(d.tail_mass + d.clipped_mass + d.mass_error);
    st.bin_width.push_back(st.density.width());
  }
  return st;
}

// Tree sampling: every final sample reduces 2^r_max independent base draws
// pairwise, so level r holds N 2^{r_max - r} independent samples of rho_r.
FlowState run_mc_flow(const DensityModel& rho0, const HoppingSequence& h, double energy, int r_max,
                      const McMethod& mc, const GridOptions& opt) {
  if (r_max > 30 || mc.samples == 0) throw InputError("mc flow: r_max <= 30 and samples >= 1 required");
  const DensityModel start = rho0.translated(-energy);
  constexpr std::size_t kLevelCap = std::size_t{1} << 21;
  const std::size_t per_chunk = std::max<std::size_t>(1, (std::size_t{1} << 20) >> r_max);
  std::vector<std::vector<double>> levels(static_cast<std::size_t>(r_max) + 1);
  std::vector<double> hop(static_cast<std::size_t>(r_max) + 1, 0.0);
  for (int r = 1; r <= r_max; ++r) hop[r] = h(r);
  Rng rng(mc.seed);
  std::vector<double> cur, next;
  std::size_t redraws = 0, pairs = 0;
  for (std::size_t done = 0; done < mc.samples; done += per_chunk) {
    const std::size_t finals = std::min(per_chunk, mc.samples - done);
    cur.resize(finals << r_max);
    for (auto& v : cur) v = sample_one(start, rng);
    for (int r = 0;; ++r) {
      auto& store = levels[r];
      const std::size_t room = kLevelCap - std::min(kLevelCap, store.size());
      store.insert(store.end(), cur.begin(), cur.begin() + static_cast<std::ptrdiff_t>(std::min(room, cur.size())));
      if (r == r_max) break;
      next.resize(cur.size() / 2);
      for (std::size_t i = 0; i < next.size(); ++i) {
        double v = cur[2 * i], w = cur[2 * i + 1];
        while (singular_pair(v, w)) {
          ++redraws;
          check_resample_budget(redraws, pairs + next.size());
          v = cur[rng.below(cur.size())];
          w = cur[rng.below(cur.size())];
        }
        next[i] = 2.0 * v * w / (v + w) + hop[r + 1];
      }
      pairs += next.size();
      std::swap(cur, next);
    }
  }
  FlowState st;
  st.energy = energy;
  for (int r = 0; r <= r_max; ++r) {
    GridDensity g = histogram_density(std::move(levels[r]), opt);
    st.supnorm_series.push_back(g.supnorm());
    st.mass_leak.push_back(g.tail_mass());
    st.bin_width.push_back(g.width());
    if (r > 0) st.hopping_prefix.push_back(hop[r]);
    if (r == r_max) st.density = std::move(g);
  }
  st.step = r_max;
  return st;
}

}  // namespace

FlowState run_flow(const DensityModel& rho0, const HoppingSequence& h, double energy, int r_max,
                   const FlowMethod& method, const GridOptions& opt) {
  if (r_max < 1) throw InputError("run_flow needs r_max >= 1");
  if (const auto* mc = std::get_if<McMethod>(&method)) return run_mc_flow(rho0, h, energy, r_max, *mc, opt);
  return run_grid_flow(rho0, h, energy, r_max, opt);
}

AssumptionVerdict assumption_verdict(const FlowState& st, double c) {
  const auto& s = st.supnorm_series;
  if (s.size() < 6) throw StatisticsError("assumption_verdict needs a series of length >= 6");
  for (double v : s) {
    if (!std::isfinite(v) || !(v > 0.0)) throw StatisticsError("non-finite or non-positive sup-norm in series");
  }
  const int r_max = static_cast<int>(s.size()) - 1;
  const int pts = (r_max + 1) / 2;
  std::vector<double> x, y;
  for (int r = r_max - pts + 1; r <= r_max; ++r) {
    x.push_back(r);
    y.push_back(std::log2(s[r]));
  }
  const LinearFit f = fit_ols(x, y);
  AssumptionVerdict v;
  v.rate_hat = f.slope;
  v.rate_se = f.slope_se;
  v.delta_hat = c - f.slope;
  v.holds = v.delta_hat - 2.0 * v.rate_se > 0.0;
  v.fit_points = pts;
  return v;
}

std::complex<double> cauchy_flow_exact(std::complex<double> z, const HoppingSequence& h, int r) {
  if (!(z.imag() > 0.0)) throw InputError("cauchy_flow_exact needs Im z > 0");
  return z + h.partial_sum(r);
}

double grid_ks_distance(const GridDensity& g, const DensityModel& exact) {
  double d = 0.0;
  double f = g.tail_lo;
  const double h = g.width();
  for (std::size_t i = 0; i <= g.bins(); ++i) {
    d = std::max(d, std::abs(f - exact.cdf(g.edge(i))));
    if (i < g.bins()) f += g.values[i] * h;
  }
  return d;
}

}  // namespace hrg
