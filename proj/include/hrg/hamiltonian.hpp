#pragma once

// Finite-volume Hamiltonians H_n (tail corrected) and H_{n,m} (truncated):
// dense assembly, symmetric eigensolves and Green-function entries.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hrg/hierarchy.hpp"

namespace hrg {

struct HamiltonianSystem {
  HoppingSequence hopping = HoppingSequence::geometric(1.0, 1.0);
  LaplacianMode mode = TailCorrected{};
  std::vector<double> potential;
  /// Spectral quantities refer to H - energy_shift.
  double energy_shift = 0.0;
  std::optional<std::uint64_t> seed;

  int scale() const { return scale_of(potential.size()); }
  std::size_t size() const { return potential.size(); }
  std::vector<double> coefficients() const { return level_coefficients(hopping, mode, scale()); }

  /// out = (H - energy_shift) psi, matrix free.
  void apply(std::span<const double> psi, std::span<double> out, std::vector<double>& workspace) const;
  std::vector<double> apply(std::span<const double> psi) const;
  /// Dense H - energy_shift.
  Eigen::MatrixXd dense(std::size_t dense_cap = kDefaultDenseCap) const;
};

HamiltonianSystem assemble(const HoppingSequence& h, const LaplacianMode& mode, std::vector<double> potential,
                           double energy_shift = 0.0, std::optional<std::uint64_t> seed = std::nullopt);

struct SpectralData {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, orthonormal
  /// Adjacent eigenvalue pairs closer than 1e-12 * ||H||.
  std::size_t degenerate_pairs = 0;
};

/// Full eigensystem (LAPACK dsyevd).
SpectralData diagonalize(const HamiltonianSystem& sys, std::size_t dense_cap = kDefaultDenseCap);
/// Eigenpairs with eigenvalue in (lo, hi] (LAPACK dsyevr).
SpectralData diagonalize_window(const HamiltonianSystem& sys, double lo, double hi,
                                std::size_t dense_cap = kDefaultDenseCap);
Eigen::VectorXd eigenvalues_only(const HamiltonianSystem& sys, std::size_t dense_cap = kDefaultDenseCap);
/// Eigenvalues in (lo, hi] only.
Eigen::VectorXd eigenvalues_window(const HamiltonianSystem& sys, double lo, double hi,
                                   std::size_t dense_cap = kDefaultDenseCap);

std::size_t count_degeneracies(const Eigen::VectorXd& sorted_eigenvalues, double scale);

/// Solves below this reciprocal condition estimate count as singular.
inline constexpr double kMinRcond = 1e-14;

/// G(j, k; z) = <delta_k, (H - energy_shift - z)^{-1} delta_j>.
std::complex<double> green_entry(const HamiltonianSystem& sys, SiteIndex j, SiteIndex k, std::complex<double> z,
                                 std::size_t dense_cap = kDefaultDenseCap);
double green_entry(const HamiltonianSystem& sys, SiteIndex j, SiteIndex k, double energy,
                   std::size_t dense_cap = kDefaultDenseCap);
Eigen::VectorXd green_column(const HamiltonianSystem& sys, SiteIndex j, double energy,
                             std::size_t dense_cap = kDefaultDenseCap);
Eigen::VectorXcd green_column(const HamiltonianSystem& sys, SiteIndex j, std::complex<double> z,
                              std::size_t dense_cap = kDefaultDenseCap);
/// <phi, (H - energy_shift - E)^{-1} psi>.
double resolvent_form(const HamiltonianSystem& sys, std::span<const double> phi, std::span<const double> psi,
                      double energy, std::size_t dense_cap = kDefaultDenseCap);

/// Spectral-sum form of G(j, k; z), kept as an oracle.
std::complex<double> green_from_spectrum(const SpectralData& sd, SiteIndex j, SiteIndex k, std::complex<double> z);

}  // namespace hrg
