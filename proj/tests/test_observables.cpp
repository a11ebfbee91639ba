#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hrg/errors.hpp"
#include "hrg/observables.hpp"

using namespace hrg;

namespace {

const auto kZero = HoppingSequence::explicit_list({0.0}, 1.0, 1.0);
constexpr Interval kReal{-1e300, 1e300};

SpectralData random_spectrum(int n, std::uint64_t seed, double sigma = 1.0) {
  const auto sys = assemble(HoppingSequence::geometric(1.0, 0.75), TailCorrected{},
                            sample_potential(DensityModel::gaussian(0, sigma), std::size_t{1} << n, seed));
  return diagonalize(sys);
}

PointProcessSample poisson_sample(double rate, double width, std::mt19937_64& g) {
  PointProcessSample s;
  s.window = {0, width};
  std::exponential_distribution<double> d(rate);
  for (double x = d(g); x <= width; x += d(g)) s.points.push_back(x);
  return s;
}

}  // namespace

TEST(Correlator, CompletenessAndSymmetry) {
  const auto sd = random_spectrum(5, 1);
  for (SiteIndex j : {0u, 9u, 31u}) EXPECT_NEAR(eigenfunction_correlator(sd, j, j, kReal), 1.0, 1e-10);
  EXPECT_NEAR(eigenfunction_correlator(sd, 2, 17, {-1, 1}), eigenfunction_correlator(sd, 17, 2, {-1, 1}), 1e-15);
  EXPECT_EQ(eigenfunction_correlator(sd, 2, 17, {1, 0}), 0.0);
  const double top = sd.eigenvalues.maxCoeff();
  for (double m : ec_shell_means(sd, 0, {top + 1, top + 2})) EXPECT_EQ(m, 0.0);
}

TEST(Correlator, ShellMeansMatchDirectSum) {
  const auto sd = random_spectrum(4, 2);
  const Interval I{-0.5, 1.5};
  const auto shells = ec_shell_means(sd, 3, I);
  ASSERT_EQ(shells.size(), 5u);
  for (int d = 0; d <= 4; ++d) {
    double s = 0;
    int c = 0;
    for (SiteIndex k = 0; k < 16; ++k) {
      if (hier_distance(3, k) == d) {
        s += eigenfunction_correlator(sd, 3, k, I);
        ++c;
      }
    }
    EXPECT_NEAR(shells[d], s / c, 1e-14);
  }
}

TEST(Correlator, StrongDisorderDecays) {
  std::vector<std::vector<double>> per;
  for (std::uint64_t s = 0; s < 150; ++s) per.push_back(ec_shell_means(random_spectrum(6, s, 6.0), 0, {-4, 4}));
  const auto fit = ec_decay_fit(per);
  EXPECT_GT(fit.mu_hat, 0);
  EXPECT_GT(fit.ci_lo, 0);
  const double c = ec_weighted_constant(fit.table, 0.5 * fit.mu_hat, 8.0);
  EXPECT_TRUE(std::isfinite(c));
  std::vector<std::vector<double>> few(per.begin(), per.begin() + 20);
  EXPECT_THROW(ec_decay_fit(few), StatisticsError);
}

TEST(Ipr, Examples) {
  const std::vector<double> flat(64, 0.125);
  EXPECT_NEAR(ipr(flat, 2), 1.0 / 64, 1e-15);
  std::vector<double> e(64, 0.0);
  e[5] = -3;
  for (double q : {0.5, 1.0, 2.0, 3.5}) EXPECT_NEAR(ipr(e, q), 1.0, 1e-15);
  EXPECT_THROW(ipr(std::vector<double>(4, 0.0), 2), InputError);
}

TEST(Ipr, DualityInequality) {
  std::mt19937_64 g(4);
  std::normal_distribution<double> d;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(32);
    for (auto& x : v) x = d(g);
    for (double q : {1.0, 1.5, 2.0, 3.0}) EXPECT_GE(ipr(v, q) * std::pow(ipr(v, q / (2 * q - 1)), 2 * q - 1), 1 - 1e-12);
  }
}

TEST(Ipr, AveragedLimits) {
  // Zero hopping: eigenvectors are basis vectors and Pi = 1.
  std::vector<IprSample> samples;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto sys = assemble(kZero, Truncated{4}, sample_potential(DensityModel::gaussian(0, 1), 16, s));
    samples.push_back(ipr_sample(diagonalize(sys), kReal));
  }
  EXPECT_NEAR(averaged_ipr(samples, {-50, 50}, 4, 1.0).pi_hat, 1.0, 1e-14);
  // Zero potential, top level of the Laplacian: the uniform vector only.
  const auto h = HoppingSequence::geometric(1.0, 1.0);
  const auto sd = diagonalize(assemble(h, TailCorrected{}, std::vector<double>(16, 0.0)));
  const double top = sd.eigenvalues.maxCoeff();
  const auto a = averaged_ipr({ipr_sample(sd, {top - 1e-9, top + 1e-9})}, {top - 1e-9, top + 1e-9}, 4, 1.0);
  EXPECT_NEAR(a.pi_hat, 1.0 / 16, 1e-12);
}

TEST(Ipr, PiAboveInverseVolume) {
  std::vector<IprSample> s;
  for (std::uint64_t k = 0; k < 20; ++k) s.push_back(ipr_sample(random_spectrum(6, k), {-1, 1}));
  const auto a = averaged_ipr(s, {-1, 1}, 6, 2.0);
  EXPECT_GE(a.pi_hat, 1.0 / 64);
  EXPECT_GE(a.pi_hat, a.l1_bound);
}

TEST(Ipr, EventLimits) {
  const auto sd = random_spectrum(6, 3);
  EXPECT_FALSE(ipr_event(sd, 6, 0.0, 1.0, 0.0));
  EXPECT_FALSE(ipr_event(sd, 6, 0.0, 0.0, 0.5));
  const auto p = ipr_event_probability({false, false, false, false}, 1.0, 0.1, 1.0);
  EXPECT_EQ(p.estimate.estimate, 0.0);
  EXPECT_TRUE(p.consistent);
}

TEST(Dos, FullLineAndAgreement) {
  std::vector<DosSample> s;
  for (std::uint64_t k = 0; k < 200; ++k) s.push_back(dos_sample(random_spectrum(5, k), kReal));
  const auto full = dos(s, {-1e300, 1e300}, 0.4);
  EXPECT_NEAR(full.site, 1.0, 1e-12);
  EXPECT_NEAR(full.trace, 1.0, 1e-15);
  std::vector<DosSample> w;
  for (std::uint64_t k = 0; k < 200; ++k) w.push_back(dos_sample(random_spectrum(5, k), {-0.5, 0.5}));
  const auto d = dos(w, {-0.5, 0.5}, DensityModel::gaussian(0, 1).supnorm());
  EXPECT_TRUE(d.estimators_agree);
}

TEST(Dos, ZeroHoppingIsSingleSiteLaw) {
  std::vector<DosSample> s;
  const Interval I{-0.3, 0.8};
  const auto m = DensityModel::gaussian(0, 1);
  for (std::uint64_t k = 0; k < 400; ++k) {
    s.push_back(dos_sample(diagonalize(assemble(kZero, Truncated{5}, sample_potential(m, 32, k))), I));
  }
  const auto d = dos(s, I, m.supnorm());
  EXPECT_NEAR(d.trace, m.cdf(0.8) - m.cdf(-0.3), 4 * d.trace_se);
  EXPECT_TRUE(d.wegner_ok);
}

TEST(PointProcess, RescalingAndCounts) {
  Eigen::VectorXd ev(5);
  ev << -1.0, 0.0, 0.01, 0.02, 3.0;
  const auto p = rescaled_process(ev, 6, 0.0, {-1, 2});
  EXPECT_EQ(p.points, (std::vector<double>{0.0, 0.64, 1.28}));
  const auto shifted = rescaled_process(ev, 6, 0.5 / 64, {-2, 2});
  EXPECT_NEAR(shifted.points[0], -0.5, 1e-12);
  EXPECT_TRUE(rescaled_process(ev, 6, 100.0, {-1, 1}).points.empty());
}

TEST(PointProcess, SingleBlockMatchesDirect) {
  BlockSamplerSpec spec;
  spec.m = 6;
  spec.n = 6;
  spec.window = {-20, 20};
  spec.realizations = 3;
  spec.seeds = {9, 0};
  const auto samples = block_process_sampler(spec);
  ASSERT_EQ(samples.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const std::uint64_t bs = derive_seed({derive_seed(spec.seeds, i), 1}, 0);
    const auto sys = assemble(spec.hopping, Truncated{6}, sample_potential(spec.density, 64, bs));
    const auto direct = rescaled_process(eigenvalues_only(sys), 6, 0.0, spec.window);
    ASSERT_EQ(samples[i].points.size(), direct.points.size());
    for (std::size_t k = 0; k < direct.points.size(); ++k) EXPECT_NEAR(samples[i].points[k], direct.points[k], 1e-9);
  }
}

TEST(Poisson, SyntheticCalibration) {
  std::mt19937_64 g(5);
  std::vector<PointProcessSample> s;
  for (int i = 0; i < 10; ++i) s.push_back(poisson_sample(1.0, 1000.0, g));
  const auto rep = poisson_tests(s, 0.0);
  EXPECT_GE(rep.var_mean, 0.9);
  EXPECT_LE(rep.var_mean, 1.1);
  EXPECT_LE(rep.gap_ks, 0.05);
  EXPECT_GT(rep.chi2_p, 1e-3);
}

TEST(Poisson, PicketFenceRejected) {
  PointProcessSample s;
  s.window = {0, 2000};
  for (int i = 0; i < 2000; ++i) s.points.push_back(i + 0.5);
  const auto rep = poisson_tests({s}, 0.0);
  EXPECT_GT(rep.gap_ks, 0.5);
  EXPECT_FALSE(rep.var_mean_ok);
}

TEST(Poisson, TooFewPoints) {
  PointProcessSample s;
  s.window = {0, 10};
  s.points = {1, 2, 3};
  EXPECT_THROW(poisson_tests({s}, 0.0), StatisticsError);
}

TEST(Counting, ZeroWidthAndPoissonScaling) {
  // Synthetic Poisson counts with mean 10 w: P(>=1) ~ 10 w for small w.
  std::mt19937_64 g(6);
  const std::vector<double> widths{0.0, 1e-3, 2e-3, 4e-3, 8e-3};
  std::vector<std::vector<std::uint32_t>> counts;
  for (int i = 0; i < 40000; ++i) {
    std::vector<std::uint32_t> c;
    for (double w : widths) c.push_back(std::poisson_distribution<std::uint32_t>(w > 0 ? 10 * w : 1e-300)(g));
    counts.push_back(c);
  }
  const auto rep = counting_bounds_check(counts, widths, 6, 1.0);
  EXPECT_EQ(rep.rows[0].p1, 0.0);
  EXPECT_EQ(rep.rows[0].p2, 0.0);
  EXPECT_TRUE(rep.exponent_ok) << rep.exponent1;
  EXPECT_TRUE(rep.ratio_ok);
  EXPECT_TRUE(rep.wegner_ok);
}

TEST(Resonance, TailIsMonotone) {
  const auto rows = resonance_tail(DensityModel::gaussian(0, 1), HoppingSequence::geometric(1, 0.75), 4, {-1, 1},
                                   {0.01, 0.1, 1.0}, 400, {2, 0});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_LE(rows[0].probability, rows[1].probability);
  EXPECT_LE(rows[1].probability, rows[2].probability);
}
