#include "hrg/renorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fmt/format.h>

#include "hrg/ensemble.hpp"
#include "hrg/errors.hpp"
#include "hrg/stats.hpp"

namespace hrg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

}  // namespace

RenormStep renormalize(const HamiltonianSystem& sys, double energy) {
  const int n = sys.scale();
  if (n < 1) throw LevelOutOfRange("cannot renormalize a system at scale 0");
  const double e = sys.energy_shift + energy;
  RenormStep st;
  st.parent = sys;
  st.parent.energy_shift = 0.0;
  for (auto& v : st.parent.potential) v -= e;

  LaplacianMode child_mode = TailCorrected{};
  if (const auto* t = std::get_if<Truncated>(&sys.mode)) {
    child_mode = Truncated{std::max(0, t->m - 1)};
    st.pair_shift = t->m >= 1 ? sys.hopping(1) : 0.0;
  } else {
    st.pair_shift = sys.hopping(1);
  }

  const std::size_t half = sys.size() / 2;
  std::vector<double> child_pot(half);
  st.v_ee.resize(half);
  st.v_ef.resize(half);
  st.ratio.resize(half);
  for (std::size_t k = 0; k < half; ++k) {
    const double a = st.parent.potential[2 * k], b = st.parent.potential[2 * k + 1];
    const double s = a + b;
    if (!(std::abs(s) > 1e-13 * std::max(std::abs(a), std::abs(b)))) {
      throw SingularError(fmt::format("singular pair at k = {}: V = ({}, {})", k, a, b), sys.seed);
    }
    st.v_ee[k] = 0.5 * s;
    st.v_ef[k] = 0.5 * (a - b);
    st.ratio[k] = (a - b) / s;
    child_pot[k] = 2.0 * a * b / s + st.pair_shift;
  }
  st.child = HamiltonianSystem{sys.hopping.shifted(1), child_mode, std::move(child_pot), 0.0, sys.seed};
  return st;
}

Eigen::MatrixXd ef_basis(int n) {
  if (n < 1) throw LevelOutOfRange("ef basis needs n >= 1");
  const Eigen::Index size = Eigen::Index{1} << n, half = size / 2;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(size, size);
  for (Eigen::Index k = 0; k < half; ++k) {
    u(2 * k, k) = u(2 * k + 1, k) = kInvSqrt2;
    u(2 * k, half + k) = kInvSqrt2;
    u(2 * k + 1, half + k) = -kInvSqrt2;
  }
  return u;
}

Eigen::MatrixXd block_form(const RenormStep& st, std::size_t cap) {
  const auto half = static_cast<Eigen::Index>(st.v_ee.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * half, 2 * half);
  Eigen::MatrixXd top = st.child.dense(cap);
  for (Eigen::Index k = 0; k < half; ++k) {
    top(k, k) += st.pair_shift + st.v_ee[k] - st.child.potential[k];
    m(k, half + k) = m(half + k, k) = st.v_ef[k];
    m(half + k, half + k) = st.v_ee[k];
  }
  m.topLeftCorner(half, half) = top;
  return m;
}

double schur_recover(const HamiltonianSystem& sys, std::span<const double> phi, std::span<const double> psi,
                     double energy, std::size_t cap) {
  if (phi.size() != sys.size() || psi.size() != sys.size()) throw InputError("vector length mismatch");
  const RenormStep st = renormalize(sys, energy);
  const std::size_t half = st.v_ee.size();
  std::vector<double> sphi(half), spsi(half);
  double second = 0.0;
  for (std::size_t k = 0; k < half; ++k) {
    const double fe = (phi[2 * k] + phi[2 * k + 1]) * kInvSqrt2, ff = (phi[2 * k] - phi[2 * k + 1]) * kInvSqrt2;
    const double ge = (psi[2 * k] + psi[2 * k + 1]) * kInvSqrt2, gf = (psi[2 * k] - psi[2 * k + 1]) * kInvSqrt2;
    sphi[k] = fe - st.ratio[k] * ff;
    spsi[k] = ge - st.ratio[k] * gf;
    second += ff * gf / st.v_ee[k];
  }
  return resolvent_form(st.child, sphi, spsi, 0.0, cap) + second;
}

GreenRecursion green_recursion(const HamiltonianSystem& sys, SiteIndex j, double energy, std::size_t cap) {
  if (j >= sys.size()) throw InputError(fmt::format("site {} outside B_n", j));
  HamiltonianSystem cur = sys;
  cur.energy_shift = 0.0;
  for (auto& v : cur.potential) v -= sys.energy_shift + energy;
  GreenRecursion out;
  if (cur.scale() == 0) {
    out.value = green_entry(cur, 0, 0, 0.0, cap);
    return out;
  }
  double factor = 1.0;
  SiteIndex idx = j;
  // Off-pair sites: G(0, 2k) and G(0, 2k+1) are multiples of RG(0, k).
  while (idx >= 2) {
    const SiteIndex k = idx >> 1;
    const auto& v = cur.potential;
    const double a = v[2 * k], b = v[2 * k + 1];
    factor *= 2.0 * v[1] / (v[0] + v[1]) * ((idx & 1) ? a : b) / (a + b);
    RenormStep st = renormalize(cur);
    cur = std::move(st.child);
    idx = k;
    ++out.depth;
  }
  // Same pair as the origin: one more step and a direct solve for RG(0, 0).
  const double v0 = cur.potential[0], v1 = cur.potential[1];
  const RenormStep st = renormalize(cur);
  if (idx == 1) ++out.depth;
  const double rg = green_entry(st.child, 0, 0, 0.0, cap);
  const double s = v0 + v1;
  const double g = idx == 0 ? 2.0 * (v1 / s) * (v1 / s) * rg + 1.0 / s : 2.0 * v0 * v1 / (s * s) * rg - 1.0 / s;
  out.value = factor * g;
  return out;
}

double phi_statistic(const HamiltonianSystem& sys, double energy, std::size_t cap) {
  const std::vector<double> phi(sys.size(), 1.0 / std::sqrt(static_cast<double>(sys.size())));
  const double g = resolvent_form(sys, phi, phi, energy, cap);
  if (g == 0.0 || !std::isfinite(g)) throw SingularError("<phi, G phi> vanished", sys.seed);
  return 1.0 / g;
}

double phi_by_renormalization(const HamiltonianSystem& sys, double energy) {
  HamiltonianSystem cur = sys;
  double e = energy;
  while (cur.scale() > 0) {
    cur = renormalize(cur, e).child;
    e = 0.0;
  }
  return cur.coefficients()[0] + cur.potential[0] - cur.energy_shift - e;
}

// ---- fractional moments ---------------------------------------------------

FmScan fractional_moment_scan(const FmScanSpec& spec) {
  if (!(spec.s > 0.0 && spec.s < 1.0)) throw InputError("fractional moment needs s in (0, 1)");
  if (spec.realizations < 100) throw InputError("fractional moment scan needs >= 100 realizations");
  const std::size_t size = std::size_t{1} << spec.n;
  std::vector<SiteIndex> ks = spec.k_list;
  if (ks.empty()) {
    for (SiteIndex k = 0; k < size; ++k) ks.push_back(k);
  }
  for (SiteIndex k : ks) {
    if (k >= size) throw InputError(fmt::format("k = {} outside B_n", k));
  }
  const int shells = spec.n + 1;
  auto run = run_ensemble(spec.seeds, spec.realizations, spec.threads, [&](std::uint64_t seed) {
    auto pot = sample_potential(spec.density, size, seed);
    const auto sys = assemble(spec.hopping, spec.mode, std::move(pot), 0.0, seed);
    const Eigen::VectorXd g = green_column(sys, 0, spec.energy, spec.dense_cap);
    std::vector<double> sum(shells, 0.0), cnt(shells, 0.0);
    for (SiteIndex k : ks) {
      const int d = hier_distance(0, k);
      sum[d] += std::pow(std::abs(g(static_cast<Eigen::Index>(k))), spec.s);
      cnt[d] += 1.0;
    }
    for (int d = 0; d < shells; ++d) sum[d] = cnt[d] > 0 ? sum[d] / cnt[d] : std::nan("");
    return sum;
  });
  std::vector<RunningStats> acc(shells);
  for (const auto& r : run.results) {
    if (!r) continue;
    for (int d = 0; d < shells; ++d) {
      if (std::isfinite((*r)[d])) acc[d].add((*r)[d]);
    }
  }
  FmScan out;
  out.failures = run.failures.size();
  std::vector<double> x, y, w;
  for (int d = 0; d < shells; ++d) {
    if (acc[d].count() == 0) continue;
    FmRow row{d, spec.s, acc[d].mean(), acc[d].stderr_mean(), acc[d].count()};
    out.rows.push_back(row);
    if (row.mean > 0 && row.stderr_mean / row.mean > 0.2) {
      out.warnings.push_back(fmt::format("heavy tail: shell {} relative stderr {:.2f}", d, row.stderr_mean / row.mean));
    }
    if (d >= 1 && row.mean > 0 && row.stderr_mean > 0) {
      const double sy = row.stderr_mean / (row.mean * std::numbers::ln2);
      x.push_back(d);
      y.push_back(std::log2(row.mean));
      w.push_back(1.0 / (sy * sy));
    }
  }
  if (x.size() >= 2) {
    const LinearFit f = fit_wls(x, y, w);
    out.one_plus_mu = -f.slope;
    out.one_plus_mu_se = f.slope_se;
    out.mu_hat = out.one_plus_mu - 1.0;
  } else {
    out.warnings.push_back("fewer than two shells with d >= 1: no decay fit");
  }
  return out;
}

// ---- decoupling -----------------------------------------------------------

std::vector<std::complex<double>> default_gamma_grid() {
  std::vector<std::complex<double>> g;
  for (int i = 0; i < 41; ++i) {
    for (int j = 0; j < 41; ++j) g.emplace_back(-20.0 + i, -20.0 + j);
  }
  for (int i = 0; i < 16; ++i) {
    const double e = std::log10(25.0) + (4.0 - std::log10(25.0)) * i / 15.0;
    g.emplace_back(std::pow(10.0, e), 0.0);
  }
  return g;
}

namespace {

// (1/pi) int over theta of f(x0 + y tan theta), split at the given v values.
double poisson_integral(const std::function<double(double)>& f, std::complex<double> z,
                        std::vector<double> breaks, bool* ok) {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  const double x0 = z.real(), y = z.imag();
  std::vector<double> th{-kPi / 2, kPi / 2};
  for (double v : breaks) th.push_back(std::atan((v - x0) / y));
  std::sort(th.begin(), th.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < th.size(); ++i) {
    if (!(th[i + 1] > th[i])) continue;
    double err = 0.0, l1 = 0.0;
    // Nodes that round onto an integrable singularity carry negligible weight.
    const auto g = [&](double t) {
      const double v = f(x0 + y * std::tan(t));
      return std::isfinite(v) ? v : 0.0;
    };
    const double part = integrator.integrate(g, th[i], th[i + 1], 1e-10, &err, &l1);
    if (!std::isfinite(part) || err > 1e-6 * std::max(1.0, l1)) *ok = false;
    total += part;
  }
  return total / kPi;
}

}  // namespace

double decoupling_ratio(double s, std::complex<double> z, std::complex<double> gamma) {
  if (!(s > 0.0 && s < 1.0)) throw InputError("decoupling needs s in (0, 1)");
  if (!(z.imag() > 0.0)) throw InputError("decoupling needs Im z > 0");
  bool ok = true;
  const std::vector<double> breaks{gamma.real(), 0.0};
  const double num = poisson_integral(
      [&](double v) { return std::pow(std::abs(v), s) * std::pow(std::abs(v - gamma), -s); }, z, breaks, &ok);
  const double den = poisson_integral([&](double v) { return std::pow(std::abs(v - gamma), -s); }, z, breaks, &ok);
  if (!ok || !(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return num / den;
}

DecouplingEstimate estimate_decoupling(double s, std::complex<double> z,
                                       const std::vector<std::complex<double>>& grid) {
  DecouplingEstimate est;
  est.s = s;
  est.z = z;
  est.gamma_grid = grid;
  est.ratio.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = decoupling_ratio(s, z, grid[i]);
    est.ratio[i] = r;
    if (!std::isfinite(r) || !(r > 0.0)) {
      ++est.flagged;
      continue;
    }
    const double d = std::max(r, 1.0 / r);
    if (d > est.d_hat) {
      est.d_hat = d;
      est.argmax = grid[i];
    }
  }
  return est;
}

FmInequality fm_inequality_check(const FmInequalitySpec& spec) {
  if (spec.n < 2) throw InputError("fm inequality needs n >= 2");
  const std::size_t size = std::size_t{1} << spec.n;
  if (spec.k < 1 || spec.k >= size / 2) throw InputError("k must lie in B_{n-1} without 0");
  const DensityModel pz = DensityModel::cauchy(spec.z.real(), spec.z.imag());
  std::vector<DensityModel> sites(size, spec.background.value_or(pz));
  for (SiteIndex j : {SiteIndex{0}, SiteIndex{1}, 2 * spec.k, 2 * spec.k + 1}) sites[j] = pz;

  auto run = run_ensemble(spec.seeds, spec.realizations, spec.threads, [&](std::uint64_t seed) {
    const auto sys = assemble(spec.hopping, TailCorrected{}, sample_potential(sites, seed), 0.0, seed);
    const double g = green_entry(sys, 0, 2 * spec.k, 0.0);
    const RenormStep st = renormalize(sys);
    const double rg = green_entry(st.child, 0, spec.k, 0.0);
    return std::pair{std::pow(std::abs(g), spec.s), std::pow(std::abs(rg), spec.s)};
  });
  FmInequality out;
  out.failures = run.failures.size();
  out.d_hat = estimate_decoupling(spec.s, spec.z).d_hat;
  const double d4 = std::pow(out.d_hat, 4), chain = std::pow(2.0, spec.s) * out.d_hat * out.d_hat;
  RunningStats lhs, base, diff, diff_chain;
  for (const auto& r : run.results) {
    if (!r) continue;
    lhs.add(r->first);
    base.add(r->second);
    diff.add(r->first - d4 * r->second);
    diff_chain.add(r->first - chain * r->second);
  }
  if (lhs.count() < 2) throw StatisticsError("fm inequality: fewer than two successful realizations");
  out.lhs = lhs.mean();
  out.lhs_se = lhs.stderr_mean();
  out.base = base.mean();
  out.base_se = base.stderr_mean();
  out.rhs = d4 * out.base;
  out.ratio = out.lhs / out.base;
  out.verdict = diff.mean() <= 2.0 * diff.stderr_mean();
  out.chain_ok = diff_chain.mean() <= 2.0 * diff_chain.stderr_mean();
  return out;
}

}  // namespace hrg
