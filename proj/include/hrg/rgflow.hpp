#pragma once

// Renormalization map T_p on single-site densities: the law of
// 2VW/(V+W) + p for independent V ~ rho, W ~ rho~.

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hrg/disorder.hpp"
#include "hrg/hierarchy.hpp"

namespace hrg {

/// 2vw/(v+w) + p; throws SingularError when |v+w| <= 1e-13 max(|v|,|w|).
double harmonic_step(double v, double w, double p);

/// Elementwise harmonic_step. A singular pair is redrawn by pairing entries
/// at random indices; more than 0.1% redraws abort.
std::vector<double> flow_step_mc(std::span<const double> a, std::span<const double> b, double p, Rng& rng,
                                 std::size_t* resampled = nullptr);

struct GridStepDiagnostics {
  double clipped_mass = 0.0;  // negative bin masses set to zero
  double tail_mass = 0.0;     // output mass outside the new window
  double mass_error = 0.0;    // |output total - input total|
};

/// Deterministic pushforward of two grid densities through T_p.
///
/// Tail masses are atoms at -infinity / +infinity; V = +-inf gives U = 2W + p.
/// The CDF of U is computed exactly from the piecewise-constant inputs by
/// integrating the conditional CDF of 1/W against rho (monotone integrand,
/// adaptive Simpson). Output window follows GridOptions.
GridDensity flow_step_grid(const GridDensity& rho, const GridDensity& rho2, double p, const GridOptions& opt = {},
                           GridStepDiagnostics* diag = nullptr);

struct GridMethod {};
struct McMethod {
  std::size_t samples = 1 << 14;  // final-level samples
  std::uint64_t seed = 0;
};
using FlowMethod = std::variant<GridMethod, McMethod>;

struct FlowState {
  int step = 0;
  GridDensity density;
  std::vector<double> supnorm_series;  // index r = after r steps; r = 0 is rho_E
  std::vector<double> hopping_prefix;  // p_1..p_r
  std::vector<double> mass_leak;       // per step, index aligned with supnorm_series
  std::vector<double> bin_width;
  double energy = 0.0;
};

/// Identical-density flow rho_r = T_{p_r} rho_{r-1} from rho_0 = law of V - E.
FlowState run_flow(const DensityModel& rho0, const HoppingSequence& h, double energy, int r_max,
                   const FlowMethod& method = GridMethod{}, const GridOptions& opt = {});

/// Histogram of samples with the GridOptions window policy.
GridDensity histogram_density(std::vector<double> samples, const GridOptions& opt = {});

struct AssumptionVerdict {
  double rate_hat = 0.0;
  double rate_se = 0.0;
  double delta_hat = 0.0;
  bool holds = false;
  int fit_points = 0;
};

/// Slope of log2 supnorm vs r over the last ceil(r_max/2) points.
AssumptionVerdict assumption_verdict(const FlowState& state, double c);

/// z + p_1 + ... + p_r.
std::complex<double> cauchy_flow_exact(std::complex<double> z, const HoppingSequence& h, int r);

/// max over grid edges of |F_grid - F|.
double grid_ks_distance(const GridDensity& g, const DensityModel& exact);

}  // namespace hrg
