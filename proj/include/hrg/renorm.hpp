#pragma once

// Operator-level renormalization: the e/f basis change on level-1 pairs, the
// Schur-complement identities, the Green-function recursion and the
// fractional-moment and decoupling estimators built on them.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hrg/disorder.hpp"
#include "hrg/hamiltonian.hpp"

namespace hrg {

/// e_k = (d_{2k} + d_{2k+1})/sqrt2, f_k = (d_{2k} - d_{2k+1})/sqrt2.
struct RenormStep {
  HamiltonianSystem parent;  // with the energy folded into the potential
  HamiltonianSystem child;   // scale n-1, potential 2ab/(a+b) + shift
  std::vector<double> v_ee;  // (a+b)/2 per pair; V_ff is identical
  std::vector<double> v_ef;  // (a-b)/2 per pair
  std::vector<double> ratio; // (a-b)/(a+b) per pair, the S-operator weights
  /// p_1 when the parent mode carries level 1, else 0.
  double pair_shift = 0.0;
};

/// Renormalize H - E (E = sys.energy_shift + energy). The child lives at energy 0.
RenormStep renormalize(const HamiltonianSystem& sys, double energy = 0.0);

/// Orthogonal U with columns (e_0..e_{N/2-1}, f_0..f_{N/2-1}).
Eigen::MatrixXd ef_basis(int n);
/// Block matrix [[p_1 + R Delta + V_ee, V_ef], [V_fe, V_ff]] built from the step.
Eigen::MatrixXd block_form(const RenormStep& step, std::size_t dense_cap = kDefaultDenseCap);

/// <S phi, (RH)^{-1} S psi> + <U_f* phi, V_ff^{-1} U_f* psi>, which equals
/// <phi, (H - E)^{-1} psi>.
double schur_recover(const HamiltonianSystem& sys, std::span<const double> phi, std::span<const double> psi,
                     double energy, std::size_t dense_cap = kDefaultDenseCap);

struct GreenRecursion {
  double value = 0.0;
  int depth = 0;  // renormalization steps taken
};

/// G_n(0, j; E) by repeated renormalization; the final diagonal entry RG(0, 0)
/// of the last child is a direct solve.
GreenRecursion green_recursion(const HamiltonianSystem& sys, SiteIndex j, double energy,
                               std::size_t dense_cap = kDefaultDenseCap);

/// Phi_n(E) = 1 / <phi_n, (H - E)^{-1} phi_n> by a dense solve.
double phi_statistic(const HamiltonianSystem& sys, double energy, std::size_t dense_cap = kDefaultDenseCap);
/// Same quantity by n renormalization steps (O(2^n), truncated m = n only).
double phi_by_renormalization(const HamiltonianSystem& sys, double energy);

struct FmRow {
  int distance = 0;
  double s = 0.0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::uint64_t count = 0;
};

struct FmScan {
  std::vector<FmRow> rows;
  double one_plus_mu = 0.0;  // -slope of log2 mean vs distance
  double one_plus_mu_se = 0.0;
  double mu_hat = 0.0;
  std::size_t failures = 0;
  std::vector<std::string> warnings;
};

struct FmScanSpec {
  DensityModel density = DensityModel::gaussian(0.0, 1.0);
  HoppingSequence hopping = HoppingSequence::geometric(1.0, 1.0);
  LaplacianMode mode = TailCorrected{};
  double energy = 0.0;
  double s = 0.5;
  int n = 6;
  std::vector<SiteIndex> k_list;  // empty = all of B_n
  std::size_t realizations = 1000;
  SeedSchedule seeds;
  int threads = 1;
  std::size_t dense_cap = kDefaultDenseCap;
};

FmScan fractional_moment_scan(const FmScanSpec& spec);

struct DecouplingEstimate {
  double s = 0.5;
  std::complex<double> z{0.0, 1.0};
  std::vector<std::complex<double>> gamma_grid;
  std::vector<double> ratio;  // R(gamma), NaN where flagged
  double d_hat = 1.0;
  std::complex<double> argmax{0.0, 0.0};
  std::size_t flagged = 0;
};

/// 41 x 41 points on [-20, 20]^2 plus 16 log-spaced reals up to 1e4.
std::vector<std::complex<double>> default_gamma_grid();
/// R(gamma) = int |v|^s |v-gamma|^{-s} P_z / int |v-gamma|^{-s} P_z.
double decoupling_ratio(double s, std::complex<double> z, std::complex<double> gamma);
DecouplingEstimate estimate_decoupling(double s, std::complex<double> z,
                                       const std::vector<std::complex<double>>& gamma_grid = default_gamma_grid());

struct FmInequality {
  double lhs = 0.0, lhs_se = 0.0;       // E|G_n(0,2k;0)|^s
  double base = 0.0, base_se = 0.0;     // E|RG_{n-1}(0,k;0)|^s
  double d_hat = 0.0;
  double rhs = 0.0;                     // d_hat^4 * base
  double ratio = 0.0;                   // lhs / base
  bool verdict = false;                 // lhs <= rhs within 2 combined stderr
  bool chain_ok = false;                // ratio <= 2^s d_hat^2 within 2 stderr
  std::size_t failures = 0;
};

struct FmInequalitySpec {
  std::complex<double> z{0.0, 1.0};
  double s = 0.5;
  int n = 4;
  SiteIndex k = 2;
  std::size_t realizations = 10000;
  HoppingSequence hopping = HoppingSequence::geometric(1.0, 1.0);
  /// Density at the remaining sites; unset means P_z everywhere.
  std::optional<DensityModel> background;
  SeedSchedule seeds;
  int threads = 1;
};

FmInequality fm_inequality_check(const FmInequalitySpec& spec);

}  // namespace hrg
