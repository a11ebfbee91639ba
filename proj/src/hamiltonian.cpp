#include "hrg/hamiltonian.hpp"

#include <cmath>

#include <fmt/format.h>
#include <lapacke.h>

#include "hrg/errors.hpp"

namespace hrg {

void HamiltonianSystem::apply(std::span<const double> psi, std::span<double> out, std::vector<double>& ws) const {
  const auto a = coefficients();
  apply_laplacian(a, psi, out, ws);
  for (std::size_t i = 0; i < psi.size(); ++i) out[i] += (potential[i] - energy_shift) * psi[i];
}

std::vector<double> HamiltonianSystem::apply(std::span<const double> psi) const {
  if (psi.size() != potential.size()) throw InputError("vector length does not match the system size");
  for (double v : psi) {
    if (!std::isfinite(v)) throw InputError("non-finite vector entry");
  }
  std::vector<double> out(psi.size()), ws;
  apply(psi, out, ws);
  return out;
}

Eigen::MatrixXd HamiltonianSystem::dense(std::size_t cap) const {
  Eigen::MatrixXd m = assemble_dense_laplacian(hopping, mode, scale(), cap);
  for (std::size_t i = 0; i < potential.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    m(ii, ii) += potential[i] - energy_shift;
  }
  return m;
}

HamiltonianSystem assemble(const HoppingSequence& h, const LaplacianMode& mode, std::vector<double> potential,
                           double energy_shift, std::optional<std::uint64_t> seed) {
  const int n = scale_of(potential.size());
  for (std::size_t i = 0; i < potential.size(); ++i) {
    if (!std::isfinite(potential[i])) throw InputError(fmt::format("non-finite potential at site {}", i));
  }
  level_coefficients(h, mode, n);  // validates m <= n
  HamiltonianSystem sys{h, mode, std::move(potential), energy_shift, seed};
  return sys;
}

namespace {

void check_orthonormal(const Eigen::MatrixXd& z, const std::optional<std::uint64_t>& seed) {
  if (z.cols() == 0) return;
  // Probe Z^T Z = I along a fixed deterministic vector: O(N^2) rather than O(N^3).
  Eigen::VectorXd v(z.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::sin(1.0 + 0.7 * static_cast<double>(i));
  const double err = (z.transpose() * (z * v) - v).norm() / v.norm();
  if (!(err <= 1e-10)) {
    throw SingularError(fmt::format("eigenvectors not orthonormal (probe error {:.3e})", err), seed);
  }
}

std::size_t degeneracies_of(const Eigen::VectorXd& w) {
  double scale = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) scale = std::max(scale, std::abs(w(i)));
  return count_degeneracies(w, scale);
}

SpectralData syevd(const HamiltonianSystem& sys, std::size_t cap, bool vectors) {
  Eigen::MatrixXd a = sys.dense(cap);
  const auto n = static_cast<lapack_int>(a.rows());
  Eigen::VectorXd w(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'U', n, a.data(), n, w.data());
  if (info != 0) throw SingularError(fmt::format("dsyevd failed with info {}", info), sys.seed);
  SpectralData sd;
  sd.eigenvalues = std::move(w);
  if (vectors) {
    check_orthonormal(a, sys.seed);
    sd.eigenvectors = std::move(a);
  }
  sd.degenerate_pairs = degeneracies_of(sd.eigenvalues);
  return sd;
}

SpectralData syevr(const HamiltonianSystem& sys, double lo, double hi, std::size_t cap, bool vectors) {
  Eigen::MatrixXd a = sys.dense(cap);
  const auto n = static_cast<lapack_int>(a.rows());
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(vectors ? n : 1, vectors ? n : 1);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(std::max<lapack_int>(1, n)));
  lapack_int found = 0;
  SpectralData sd;
  if (!(lo < hi)) {
    sd.eigenvalues.resize(0);
    sd.eigenvectors.resize(n, 0);
    return sd;
  }
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'V', 'U', n, a.data(), n, lo, hi, 0, 0, 0.0, &found,
                     w.data(), z.data(), vectors ? n : 1, isuppz.data());
  if (info != 0) throw SingularError(fmt::format("dsyevr failed with info {}", info), sys.seed);
  sd.eigenvalues = w.head(found);
  if (vectors) {
    sd.eigenvectors = z.leftCols(found);
    check_orthonormal(sd.eigenvectors, sys.seed);
  }
  sd.degenerate_pairs = degeneracies_of(sd.eigenvalues);
  return sd;
}

}  // namespace

SpectralData diagonalize(const HamiltonianSystem& sys, std::size_t cap) { return syevd(sys, cap, true); }

SpectralData diagonalize_window(const HamiltonianSystem& sys, double lo, double hi, std::size_t cap) {
  return syevr(sys, lo, hi, cap, true);
}

Eigen::VectorXd eigenvalues_only(const HamiltonianSystem& sys, std::size_t cap) {
  return syevd(sys, cap, false).eigenvalues;
}

Eigen::VectorXd eigenvalues_window(const HamiltonianSystem& sys, double lo, double hi, std::size_t cap) {
  return syevr(sys, lo, hi, cap, false).eigenvalues;
}

std::size_t count_degeneracies(const Eigen::VectorXd& w, double scale) {
  std::size_t count = 0;
  const double tol = 1e-12 * std::max(scale, std::numeric_limits<double>::min());
  for (Eigen::Index i = 1; i < w.size(); ++i) {
    if (w(i) - w(i - 1) < tol) ++count;
  }
  return count;
}

namespace {

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_shifted(const HamiltonianSystem& sys, Scalar z,
                                                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& rhs,
                                                       std::size_t cap) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat a = sys.dense(cap).template cast<Scalar>();
  a.diagonal().array() -= z;
  Eigen::PartialPivLU<Mat> lu(a);
  const double rc = lu.rcond();
  if (!(rc >= kMinRcond)) {
    throw SingularError(fmt::format("resolvent solve ill-conditioned (rcond {:.3e})", rc), sys.seed);
  }
  return lu.solve(rhs);
}

void check_site(const HamiltonianSystem& sys, SiteIndex j) {
  if (j >= sys.size()) throw InputError(fmt::format("site {} outside B_n of size {}", j, sys.size()));
}

}  // namespace

Eigen::VectorXcd green_column(const HamiltonianSystem& sys, SiteIndex j, std::complex<double> z, std::size_t cap) {
  check_site(sys, j);
  if (z.imag() == 0.0) {
    return green_column(sys, j, z.real(), cap).cast<std::complex<double>>();
  }
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(sys.size()));
  e(static_cast<Eigen::Index>(j)) = 1.0;
  return solve_shifted<std::complex<double>>(sys, z, e, cap);
}

Eigen::VectorXd green_column(const HamiltonianSystem& sys, SiteIndex j, double energy, std::size_t cap) {
  check_site(sys, j);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.size()));
  e(static_cast<Eigen::Index>(j)) = 1.0;
  return solve_shifted<double>(sys, energy, e, cap);
}

std::complex<double> green_entry(const HamiltonianSystem& sys, SiteIndex j, SiteIndex k, std::complex<double> z,
                                 std::size_t cap) {
  check_site(sys, k);
  return green_column(sys, j, z, cap)(static_cast<Eigen::Index>(k));
}

double green_entry(const HamiltonianSystem& sys, SiteIndex j, SiteIndex k, double energy, std::size_t cap) {
  check_site(sys, k);
  return green_column(sys, j, energy, cap)(static_cast<Eigen::Index>(k));
}

double resolvent_form(const HamiltonianSystem& sys, std::span<const double> phi, std::span<const double> psi,
                      double energy, std::size_t cap) {
  if (phi.size() != sys.size() || psi.size() != sys.size()) throw InputError("vector length mismatch");
  const Eigen::Map<const Eigen::VectorXd> p(phi.data(), static_cast<Eigen::Index>(phi.size()));
  const Eigen::Map<const Eigen::VectorXd> q(psi.data(), static_cast<Eigen::Index>(psi.size()));
  const Eigen::VectorXd x = solve_shifted<double>(sys, energy, Eigen::VectorXd(q), cap);
  return p.dot(x);
}

std::complex<double> green_from_spectrum(const SpectralData& sd, SiteIndex j, SiteIndex k, std::complex<double> z) {
  std::complex<double> g = 0.0;
  const auto jj = static_cast<Eigen::Index>(j), kk = static_cast<Eigen::Index>(k);
  for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) {
    g += sd.eigenvectors(jj, i) * sd.eigenvectors(kk, i) / (sd.eigenvalues(i) - z);
  }
  return g;
}

}  // namespace hrg
