#pragma once

// Statistical observables on spectra and eigenvectors: correlators, IPRs,
// density of states, rescaled point processes and Poisson/counting tests.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hrg/disorder.hpp"
#include "hrg/hamiltonian.hpp"
#include "hrg/stats.hpp"

namespace hrg {

// ---- eigenfunction correlator --------------------------------------------

/// Q(j, k; I) = sum over eigenvalues in I of |psi(j)| |psi(k)|.
double eigenfunction_correlator(const SpectralData& sd, SiteIndex j, SiteIndex k, const Interval& I);

/// Per-shell averages of Q(j, k; I) over k at distance d from j, d = 0..n
/// (NaN for shells outside B_n).
std::vector<double> ec_shell_means(const SpectralData& sd, SiteIndex j, const Interval& I);

struct ShellRow {
  int distance = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::uint64_t count = 0;
};

struct EcFit {
  double mu_hat = 0.0;
  double stderr_mu = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;  // 95%
  std::vector<ShellRow> table;
  std::vector<int> empty_shells;    // shells whose mean vanished
};

/// WLS fit of log2(shell mean) vs d over d >= 1; mu_hat = -slope - 1.
EcFit ec_decay_fit(const std::vector<std::vector<double>>& shell_means_per_realization);

/// C_hat = sum_k 2^{mu d(0,k)} E Q(0,k;I) / |I| from shell means (shell d holds 2^{d-1} sites).
double ec_weighted_constant(const std::vector<ShellRow>& table, double mu, double interval_width);

// ---- IPR ------------------------------------------------------------------

/// P_q(psi) = ||psi||_{2q}^{2q} / ||psi||_2^{2q}.
double ipr(std::span<const double> psi, double q);

/// Sums over the eigenvectors of one realization with eigenvalue in I.
struct IprSample {
  double sum_p2 = 0.0;        // sum ||psi||_4^4
  double sum_l1_bound = 0.0;  // sum ||psi||_1^{-4} (lower bound on each term)
  double count = 0.0;
};

IprSample ipr_sample(const SpectralData& sd, const Interval& I);

struct AveragedIpr {
  double pi_hat = 0.0;
  double stderr_pi = 0.0;
  double l1_bound = 0.0;     // E sum ||psi||_1^{-4} / E sum 1
  double nu_hat = 0.0;       // 2^{-n} E Tr 1_I
  double lower_bound = 0.0;  // C^{-4} (nu_hat / |I|)^4
  bool bound_holds = false;
  std::uint64_t realizations = 0;
};

/// Ratio of ensemble means; lower bound uses the supplied constant C.
AveragedIpr averaged_ipr(const std::vector<IprSample>& samples, const Interval& I, int n, double c_hat);

/// Whether some eigenvalue with |lambda - E| <= 2^{-n-1} W has P_2 <= eps^4.
bool ipr_event(const SpectralData& sd, int n, double energy, double window_w, double eps);

struct EventProbability {
  ProportionCI estimate;
  double bound = 0.0;  // C W eps
  bool consistent = false;  // Wilson lower end <= bound
};

EventProbability ipr_event_probability(const std::vector<bool>& events, double window_w, double eps, double c_hat);

// ---- density of states ----------------------------------------------------

struct DosSample {
  double site = 0.0;   // <delta_0, 1_I delta_0>
  double trace = 0.0;  // 2^{-n} Tr 1_I
};

DosSample dos_sample(const SpectralData& sd, const Interval& I);

struct DosEstimate {
  double site = 0.0, site_se = 0.0;
  double trace = 0.0, trace_se = 0.0;
  double wegner_bound = 0.0;  // ||rho||_inf |I|
  bool wegner_ok = false;     // trace <= bound + 3 se
  bool estimators_agree = false;  // within 2 combined stderr
};

DosEstimate dos(const std::vector<DosSample>& samples, const Interval& I, double rho_sup);

// ---- point processes ------------------------------------------------------

struct PointProcessSample {
  std::vector<double> points;  // sorted, inside window
  Interval window;
  int n = 0;
  std::vector<std::uint32_t> block_counts;  // per block when block sampled
};

/// Points 2^n (lambda - E) inside `window`.
PointProcessSample rescaled_process(const Eigen::VectorXd& eigenvalues, int n, double energy, const Interval& window);

struct BlockSamplerSpec {
  DensityModel density = DensityModel::gaussian(0.0, 1.0);
  HoppingSequence hopping = HoppingSequence::geometric(1.0, 1.0);
  int m = 8;
  int n = 16;
  double energy = 0.0;
  Interval window{-500.0, 500.0};
  std::size_t realizations = 20;
  SeedSchedule seeds;
  int threads = 1;
  std::size_t dense_cap = kDefaultDenseCap;
};

/// Superposes the rescaled spectra of 2^{n-m} independent H_{m,m} blocks per
/// realization. Block b of realization i uses seed derive_seed({seed_i, 1}, b).
std::vector<PointProcessSample> block_process_sampler(const BlockSamplerSpec& spec);

struct PoissonThresholds {
  double subwindow = 1.0;
  double var_mean_lo = 0.85, var_mean_hi = 1.15;
  double gap_ks_max = 0.05;
  std::size_t min_points = 1000;
};

struct PoissonReport {
  std::size_t points = 0;
  std::size_t gaps = 0;
  double intensity = 0.0;
  double count_mean = 0.0, count_var = 0.0, var_mean = 0.0;
  double chi2 = 0.0, chi2_dof = 0.0, chi2_p = 0.0;
  double gap_ks = 0.0;
  double block_chi2_p = 1.0;  // homogeneity of per-block counts
  std::vector<std::pair<double, double>> two_point;  // (|B|, P(>=2) / ((c|B|)^2/2))
  bool var_mean_ok = false;
  bool gap_ok = false;
};

/// Nearest-neighbour gaps of every sample with the first and last gap dropped.
std::vector<double> interior_gaps(const std::vector<PointProcessSample>& samples);

/// intensity <= 0 means estimate from the samples.
PoissonReport poisson_tests(const std::vector<PointProcessSample>& samples, double intensity,
                            const PoissonThresholds& th = {});

struct CountingThresholds {
  double exponent_lo = 0.9, exponent_hi = 1.1;
  double ratio_max = 3.0;  // P(>=2) / P(>=1)^2
};

struct CountingRow {
  double width = 0.0;
  double p1 = 0.0, p2 = 0.0;
  double nu_hat = 0.0, nu_se = 0.0;  // 2^{-m} E Tr 1_I
};

struct CountingReport {
  std::vector<CountingRow> rows;
  double exponent1 = 0.0, exponent1_se = 0.0;
  double exponent2 = 0.0, exponent2_se = 0.0;
  double max_ratio = 0.0;
  bool exponent_ok = false;
  bool ratio_ok = false;
  bool wegner_ok = false;
};

/// Eigenvalue counts of each realization in the centred intervals
/// E + [-w/2, w/2]: counts[i][j] for realization i and width j.
CountingReport counting_bounds_check(const std::vector<std::vector<std::uint32_t>>& counts,
                                     const std::vector<double>& widths, int m, double rho_sup,
                                     const CountingThresholds& th = {});

/// Resonance diagnostic: estimate P(|F_n(t)| >= 1/alpha) for
/// F_n(t) = <phi_n, (H_{n,n-1} - t)^{-1} phi_n> at t uniform in I.
/// Solves with reciprocal condition below kMinRcond count as occurrences.
struct ResonanceRow {
  double alpha = 0.0;
  double probability = 0.0;
};
std::vector<ResonanceRow> resonance_tail(const DensityModel& density, const HoppingSequence& h, int n,
                                         const Interval& I, const std::vector<double>& alphas,
                                         std::size_t realizations, const SeedSchedule& seeds, int threads = 1);

}  // namespace hrg
