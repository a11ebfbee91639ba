#include "hrg/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hrg/ensemble.hpp"
#include "hrg/errors.hpp"

namespace hrg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Eigen::Index> columns_in(const SpectralData& sd, const Interval& I) {
  std::vector<Eigen::Index> cols;
  if (I.empty()) return cols;
  for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) {
    if (I.contains(sd.eigenvalues(i))) cols.push_back(i);
  }
  return cols;
}

}  // namespace

double eigenfunction_correlator(const SpectralData& sd, SiteIndex j, SiteIndex k, const Interval& I) {
  double q = 0.0;
  const auto jj = static_cast<Eigen::Index>(j), kk = static_cast<Eigen::Index>(k);
  for (Eigen::Index c : columns_in(sd, I)) q += std::abs(sd.eigenvectors(jj, c)) * std::abs(sd.eigenvectors(kk, c));
  return q;
}

std::vector<double> ec_shell_means(const SpectralData& sd, SiteIndex j, const Interval& I) {
  const auto size = static_cast<std::size_t>(sd.eigenvectors.rows());
  const int n = scale_of(size);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size));
  const auto jj = static_cast<Eigen::Index>(j);
  for (Eigen::Index c : columns_in(sd, I)) {
    q += std::abs(sd.eigenvectors(jj, c)) * sd.eigenvectors.col(c).cwiseAbs();
  }
  std::vector<double> sum(static_cast<std::size_t>(n) + 1, 0.0), cnt(sum.size(), 0.0);
  for (std::size_t k = 0; k < size; ++k) {
    const int d = hier_distance(j, k);
    sum[d] += q(static_cast<Eigen::Index>(k));
    cnt[d] += 1.0;
  }
  for (std::size_t d = 0; d < sum.size(); ++d) sum[d] = cnt[d] > 0 ? sum[d] / cnt[d] : kNaN;
  return sum;
}

EcFit ec_decay_fit(const std::vector<std::vector<double>>& per_real) {
  if (per_real.size() < 100) throw StatisticsError("ec_decay_fit needs >= 100 realizations");
  std::size_t shells = 0;
  for (const auto& r : per_real) shells = std::max(shells, r.size());
  std::vector<RunningStats> acc(shells);
  for (const auto& r : per_real) {
    for (std::size_t d = 0; d < r.size(); ++d) {
      if (std::isfinite(r[d])) acc[d].add(r[d]);
    }
  }
  EcFit fit;
  std::vector<double> x, y, w;
  for (std::size_t d = 0; d < shells; ++d) {
    if (acc[d].count() == 0) continue;
    const ShellRow row{static_cast<int>(d), acc[d].mean(), acc[d].stderr_mean(), acc[d].count()};
    fit.table.push_back(row);
    if (!(row.mean > 0.0)) {
      fit.empty_shells.push_back(row.distance);
      continue;
    }
    if (d >= 1 && row.stderr_mean > 0.0) {
      const double sy = row.stderr_mean / (row.mean * std::numbers::ln2);
      x.push_back(static_cast<double>(d));
      y.push_back(std::log2(row.mean));
      w.push_back(1.0 / (sy * sy));
    }
  }
  if (x.size() < 2) throw StatisticsError("ec_decay_fit: fewer than two non-empty shells at d >= 1");
  const LinearFit f = fit_wls(x, y, w);
  fit.mu_hat = -f.slope - 1.0;
  fit.stderr_mu = f.slope_se;
  fit.ci_lo = fit.mu_hat - 1.959963984540054 * f.slope_se;
  fit.ci_hi = fit.mu_hat + 1.959963984540054 * f.slope_se;
  return fit;
}

double ec_weighted_constant(const std::vector<ShellRow>& table, double mu, double width) {
  if (!(width > 0.0)) throw InputError("interval width must be positive");
  double s = 0.0;
  for (const auto& r : table) {
    const double shell = r.distance == 0 ? 1.0 : std::exp2(r.distance - 1);
    s += std::exp2(mu * r.distance) * shell * r.mean;
  }
  return s / width;
}

double ipr(std::span<const double> psi, double q) {
  if (!(q >= 0.5)) throw InputError("ipr needs q >= 1/2");
  double n2 = 0.0, nq = 0.0;
  for (double v : psi) {
    n2 += v * v;
    nq += std::pow(std::abs(v), 2 * q);
  }
  if (!(n2 > 0.0)) throw InputError("ipr of the zero vector");
  return nq / std::pow(n2, q);
}

IprSample ipr_sample(const SpectralData& sd, const Interval& I) {
  IprSample s;
  for (Eigen::Index c : columns_in(sd, I)) {
    const auto col = sd.eigenvectors.col(c);
    s.sum_p2 += col.array().pow(4).sum();
    const double l1 = col.cwiseAbs().sum();
    s.sum_l1_bound += std::pow(l1, -4.0);
    s.count += 1.0;
  }
  return s;
}

AveragedIpr averaged_ipr(const std::vector<IprSample>& samples, const Interval& I, int n, double c_hat) {
  if (I.empty() || !(I.width() > 0.0)) throw StatisticsError("averaged IPR of an empty interval is undefined");
  RunningStats p, c, l1;
  for (const auto& s : samples) {
    p.add(s.sum_p2);
    c.add(s.count);
    l1.add(s.sum_l1_bound);
  }
  if (!(c.mean() > 0.0)) throw StatisticsError("no eigenvalues in the interval over the ensemble");
  AveragedIpr out;
  out.realizations = samples.size();
  out.pi_hat = p.mean() / c.mean();
  RunningStats lin;  // delta method for a ratio of means
  for (const auto& s : samples) lin.add(s.sum_p2 - out.pi_hat * s.count);
  out.stderr_pi = lin.stderr_mean() / c.mean();
  out.l1_bound = l1.mean() / c.mean();
  out.nu_hat = c.mean() / std::exp2(n);
  out.lower_bound = std::pow(c_hat, -4.0) * std::pow(out.nu_hat / I.width(), 4.0);
  out.bound_holds = out.pi_hat >= out.lower_bound && out.pi_hat >= out.l1_bound * (1 - 1e-12);
  return out;
}

bool ipr_event(const SpectralData& sd, int n, double energy, double w, double eps) {
  const double half = std::exp2(-n - 1) * w;
  const Interval I{energy - half, energy + half};
  const double thr = std::pow(eps, 4);
  for (Eigen::Index c : columns_in(sd, I)) {
    if (sd.eigenvectors.col(c).array().pow(4).sum() <= thr) return true;
  }
  return false;
}

EventProbability ipr_event_probability(const std::vector<bool>& events, double w, double eps, double c_hat) {
  const auto k = static_cast<std::uint64_t>(std::count(events.begin(), events.end(), true));
  EventProbability out;
  out.estimate = wilson_interval(k, events.size());
  out.bound = c_hat * w * eps;
  out.consistent = out.estimate.lo <= out.bound;
  return out;
}

DosSample dos_sample(const SpectralData& sd, const Interval& I) {
  DosSample s;
  const auto cols = columns_in(sd, I);
  for (Eigen::Index c : cols) s.site += sd.eigenvectors(0, c) * sd.eigenvectors(0, c);
  s.trace = static_cast<double>(cols.size()) / static_cast<double>(sd.eigenvalues.size());
  return s;
}

DosEstimate dos(const std::vector<DosSample>& samples, const Interval& I, double rho_sup) {
  RunningStats a, b;
  for (const auto& s : samples) {
    a.add(s.site);
    b.add(s.trace);
  }
  DosEstimate d;
  d.site = a.mean();
  d.site_se = a.stderr_mean();
  d.trace = b.mean();
  d.trace_se = b.stderr_mean();
  d.wegner_bound = rho_sup * I.width();
  d.wegner_ok = d.trace <= d.wegner_bound + 3.0 * d.trace_se;
  d.estimators_agree = std::abs(d.site - d.trace) <= 2.0 * std::hypot(d.site_se, d.trace_se) + 1e-12;
  return d;
}

// ---- point processes ------------------------------------------------------

PointProcessSample rescaled_process(const Eigen::VectorXd& ev, int n, double energy, const Interval& window) {
  PointProcessSample s;
  s.window = window;
  s.n = n;
  const double scale = std::exp2(n);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double x = scale * (ev(i) - energy);
    if (window.contains(x)) s.points.push_back(x);
  }
  std::sort(s.points.begin(), s.points.end());
  return s;
}

std::vector<PointProcessSample> block_process_sampler(const BlockSamplerSpec& spec) {
  if (spec.m < 0 || spec.m > spec.n) throw InputError("block sampler needs 0 <= m <= n");
  if ((std::size_t{1} << spec.m) > spec.dense_cap) throw ResourceError("block size exceeds the dense cap");
  const std::size_t blocks = std::size_t{1} << (spec.n - spec.m);
  const double scale = std::exp2(spec.n);
  const double lo = spec.energy + spec.window.lo / scale, hi = spec.energy + spec.window.hi / scale;
  auto run = run_ensemble(spec.seeds, spec.realizations, spec.threads, [&](std::uint64_t seed) {
    PointProcessSample s;
    s.window = spec.window;
    s.n = spec.n;
    s.block_counts.resize(blocks);
    const SeedSchedule block_seeds{seed, 1};
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::uint64_t bs = derive_seed(block_seeds, b);
      const auto sys = assemble(spec.hopping, Truncated{spec.m},
                                sample_potential(spec.density, std::size_t{1} << spec.m, bs), 0.0, bs);
      // dsyevr returns (lo, hi]; nudge lo so the closed window is covered.
      const Eigen::VectorXd ev = eigenvalues_window(sys, std::nextafter(lo, -INFINITY), hi, spec.dense_cap);
      std::uint32_t c = 0;
      for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const double x = scale * (ev(i) - spec.energy);
        if (spec.window.contains(x)) {
          s.points.push_back(x);
          ++c;
        }
      }
      s.block_counts[b] = c;
    }
    std::sort(s.points.begin(), s.points.end());
    return s;
  });
  std::vector<PointProcessSample> out;
  for (auto& r : run.results) {
    if (r) out.push_back(std::move(*r));
  }
  return out;
}

namespace {

std::vector<std::uint32_t> subwindow_counts(const std::vector<PointProcessSample>& samples, double width) {
  std::vector<std::uint32_t> counts;
  for (const auto& s : samples) {
    const auto k = static_cast<std::size_t>(std::floor(s.window.width() / width));
    std::vector<std::uint32_t> c(k, 0);
    for (double x : s.points) {
      const auto i = static_cast<std::size_t>(std::floor((x - s.window.lo) / width));
      if (i < k) ++c[i];
    }
    counts.insert(counts.end(), c.begin(), c.end());
  }
  return counts;
}

double poisson_pmf(std::uint32_t k, double lambda) {
  return std::exp(static_cast<double>(k) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0));
}

}  // namespace

std::vector<double> interior_gaps(const std::vector<PointProcessSample>& samples) {
  std::vector<double> gaps;
  for (const auto& s : samples) {
    if (s.points.size() < 4) continue;
    for (std::size_t i = 2; i + 1 < s.points.size(); ++i) gaps.push_back(s.points[i] - s.points[i - 1]);
  }
  return gaps;
}

PoissonReport poisson_tests(const std::vector<PointProcessSample>& samples, double intensity,
                            const PoissonThresholds& th) {
  PoissonReport rep;
  double length = 0.0;
  for (const auto& s : samples) {
    rep.points += s.points.size();
    length += s.window.width();
  }
  if (rep.points < th.min_points) {
    throw StatisticsError(fmt::format("poisson tests need >= {} points, got {}", th.min_points, rep.points));
  }
  rep.intensity = intensity > 0.0 ? intensity : static_cast<double>(rep.points) / length;

  // (a) counting statistics in sub-windows
  const auto counts = subwindow_counts(samples, th.subwindow);
  RunningStats cs;
  std::uint32_t kmax = 0;
  for (auto c : counts) {
    cs.add(c);
    kmax = std::max(kmax, c);
  }
  rep.count_mean = cs.mean();
  rep.count_var = cs.variance();
  rep.var_mean = rep.count_mean > 0 ? rep.count_var / rep.count_mean : kNaN;
  {
    const double lambda = rep.intensity * th.subwindow;
    const double total = static_cast<double>(counts.size());
    std::vector<double> obs(kmax + 2, 0.0);
    for (auto c : counts) obs[c] += 1.0;
    // Pool classes from the top until every expected count is >= 5.
    std::vector<double> o, e;
    double acc_o = 0.0, acc_p = 0.0;
    double cum_p = 0.0;
    for (std::uint32_t k = 0; k <= kmax; ++k) {
      acc_o += obs[k];
      const double pk = poisson_pmf(k, lambda);
      acc_p += pk;
      cum_p += pk;
      if (acc_p * total >= 5.0) {
        o.push_back(acc_o);
        e.push_back(acc_p * total);
        acc_o = acc_p = 0.0;
      }
    }
    acc_p += std::max(0.0, 1.0 - cum_p);
    if (!o.empty()) {
      o.back() += acc_o;
      e.back() += acc_p * total;
    }
    for (std::size_t i = 0; i < o.size(); ++i) rep.chi2 += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
    rep.chi2_dof = o.size() > 1 ? static_cast<double>(o.size() - 1) : 0.0;
    rep.chi2_p = rep.chi2_dof > 0 ? chi_square_sf(rep.chi2, rep.chi2_dof) : kNaN;
  }

  // (b) nearest-neighbour gaps
  std::vector<double> gaps = interior_gaps(samples);
  rep.gaps = gaps.size();
  if (!gaps.empty()) {
    std::sort(gaps.begin(), gaps.end());
    const double rate = 1.0 / mean_of(gaps);
    rep.gap_ks = ks_distance(gaps, [rate](double x) { return x <= 0 ? 0.0 : -std::expm1(-rate * x); });
  }

  // block homogeneity
  std::vector<double> per_block;
  for (const auto& s : samples) {
    if (per_block.size() < s.block_counts.size()) per_block.resize(s.block_counts.size(), 0.0);
    for (std::size_t b = 0; b < s.block_counts.size(); ++b) per_block[b] += s.block_counts[b];
  }
  if (per_block.size() > 1) {
    double tot = 0.0;
    for (double v : per_block) tot += v;
    const double e = tot / static_cast<double>(per_block.size());
    if (e > 0) {
      double chi = 0.0;
      for (double v : per_block) chi += (v - e) * (v - e) / e;
      rep.block_chi2_p = chi_square_sf(chi, static_cast<double>(per_block.size() - 1));
    }
  }

  // (c) two-point curve
  for (double w : {0.05, 0.1, 0.2, 0.5, 1.0, 2.0}) {
    const auto c = subwindow_counts(samples, w);
    if (c.empty()) continue;
    const double p2 = static_cast<double>(std::count_if(c.begin(), c.end(), [](auto v) { return v >= 2; })) /
                      static_cast<double>(c.size());
    const double ref = 0.5 * (rep.intensity * w) * (rep.intensity * w);
    rep.two_point.emplace_back(w, p2 / ref);
  }

  rep.var_mean_ok = rep.var_mean >= th.var_mean_lo && rep.var_mean <= th.var_mean_hi;
  rep.gap_ok = rep.gaps > 0 && rep.gap_ks <= th.gap_ks_max;
  return rep;
}

CountingReport counting_bounds_check(const std::vector<std::vector<std::uint32_t>>& counts,
                                     const std::vector<double>& widths, int m, double rho_sup,
                                     const CountingThresholds& th) {
  if (counts.empty()) throw StatisticsError("counting check needs realizations");
  CountingReport rep;
  const double n = static_cast<double>(counts.size());
  std::vector<double> lx1, ly1, lx2, ly2;
  rep.wegner_ok = true;
  for (std::size_t j = 0; j < widths.size(); ++j) {
    CountingRow row;
    row.width = widths[j];
    RunningStats nu;
    double k1 = 0, k2 = 0;
    for (const auto& c : counts) {
      if (c[j] >= 1) ++k1;
      if (c[j] >= 2) ++k2;
      nu.add(static_cast<double>(c[j]) / std::exp2(m));
    }
    row.p1 = k1 / n;
    row.p2 = k2 / n;
    row.nu_hat = nu.mean();
    row.nu_se = nu.stderr_mean();
    if (row.width > 0 && row.p1 > 0) {
      lx1.push_back(std::log(row.width));
      ly1.push_back(std::log(row.p1));
      rep.max_ratio = std::max(rep.max_ratio, row.p2 / (row.p1 * row.p1));
    }
    if (row.width > 0 && row.p2 > 0) {
      lx2.push_back(std::log(row.width));
      ly2.push_back(std::log(row.p2));
    }
    if (row.nu_hat > rho_sup * row.width + 3.0 * row.nu_se) rep.wegner_ok = false;
    rep.rows.push_back(row);
  }
  if (lx1.size() >= 2) {
    const auto f = fit_ols(lx1, ly1);
    rep.exponent1 = f.slope;
    rep.exponent1_se = f.slope_se;
  }
  if (lx2.size() >= 2) {
    const auto f = fit_ols(lx2, ly2);
    rep.exponent2 = f.slope;
    rep.exponent2_se = f.slope_se;
  }
  rep.exponent_ok = lx1.size() >= 2 && rep.exponent1 >= th.exponent_lo && rep.exponent1 <= th.exponent_hi;
  rep.ratio_ok = rep.max_ratio <= th.ratio_max;
  return rep;
}

std::vector<ResonanceRow> resonance_tail(const DensityModel& density, const HoppingSequence& h, int n,
                                         const Interval& I, const std::vector<double>& alphas,
                                         std::size_t realizations, const SeedSchedule& seeds, int threads) {
  if (n < 1) throw InputError("resonance diagnostic needs n >= 1");
  const std::size_t size = std::size_t{1} << n;
  const std::vector<double> phi(size, 1.0 / std::sqrt(static_cast<double>(size)));
  auto run = run_ensemble(seeds, realizations, threads, [&](std::uint64_t seed) {
    const auto sys = assemble(h, Truncated{n - 1}, sample_potential(density, size, seed), 0.0, seed);
    Rng rng(mix64(seed));
    const double t = I.lo + rng.uniform() * I.width();
    try {
      return std::abs(resolvent_form(sys, phi, phi, t));
    } catch (const SingularError&) {
      return std::numeric_limits<double>::infinity();
    }
  });
  std::vector<ResonanceRow> out;
  for (double a : alphas) {
    double hits = 0, total = 0;
    for (const auto& r : run.results) {
      if (!r) continue;
      total += 1;
      if (*r >= 1.0 / a) hits += 1;
    }
    out.push_back({a, total > 0 ? hits / total : kNaN});
  }
  return out;
}

}  // namespace hrg
