#pragma once

// Dyadic hierarchy on N_0: ultrametric distance, block averaging operators
// E_r and the hierarchical Laplacian sum_r p_r E_r restricted to the root
// ball B_n = {0, ..., 2^n - 1}.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace hrg {

using SiteIndex = std::uint64_t;

inline constexpr std::size_t kDefaultDenseCap = 4096;

/// Smallest r with floor(j / 2^r) == floor(k / 2^r).
int hier_distance(SiteIndex j, SiteIndex k);

/// Half-open index range [first, last) of the dyadic ball B_r(j).
std::pair<SiteIndex, SiteIndex> ball(SiteIndex j, int r);

/// log2 of a power-of-two vector length; throws InputError otherwise.
int scale_of(std::size_t size);

/// The hopping sequence p_1, p_2, ... of the hierarchical Laplacian.
///
/// Geometric sequences p_r = eps * 2^{-c r} are kept in closed form, so
/// shifting and tail sums are exact. Explicit sequences hold a finite list;
/// entries beyond the list are zero and tail sums report the remainder bound
/// implied by the declared envelope |p_r| <= eps * 2^{-c r}.
class HoppingSequence {
 public:
  static HoppingSequence geometric(double eps, double c);
  static HoppingSequence explicit_list(std::vector<double> values, double eps, double c);

  /// p_r for r >= 1.
  double operator()(int r) const;
  /// lambda_r = p_1 + ... + p_r.
  double partial_sum(int r) const;
  /// lambda_infinity.
  double total() const;
  /// alpha_n = sum_{r > n} 2^{n-r} p_r.
  double tail(int n) const;
  /// Upper bound on |alpha_n - tail(n)| from truncating an explicit list.
  double tail_remainder_bound(int n) const;
  /// The sequence (p_{r+k})_{r >= 1}.
  HoppingSequence shifted(int k = 1) const;

  bool is_geometric() const { return geometric_; }
  double eps() const { return eps_; }
  double c() const { return c_; }
  const std::vector<double>& values() const { return values_; }

 private:
  HoppingSequence() = default;

  bool geometric_ = true;
  double eps_ = 0.0;
  double c_ = 1.0;
  std::vector<double> values_;
};

struct TailCorrected {};
struct Truncated {
  int m = 0;
};

/// H_n uses TailCorrected (levels 1..n plus alpha_n on phi_n); H_{n,m} uses Truncated{m}.
using LaplacianMode = std::variant<TailCorrected, Truncated>;

/// Coefficients a_0..a_n with Laplacian = sum_r a_r E_r on B_n.
std::vector<double> level_coefficients(const HoppingSequence& h, const LaplacianMode& mode, int n);

std::vector<double> apply_averaging(int r, std::span<const double> psi);

std::vector<double> apply_laplacian(const HoppingSequence& h, const LaplacianMode& mode,
                                    std::span<const double> psi);

/// Allocation-free variant; `out` must have the length of `psi` and must not alias it.
void apply_laplacian(std::span<const double> coefficients, std::span<const double> psi,
                     std::span<double> out, std::vector<double>& workspace);

Eigen::MatrixXd assemble_dense_laplacian(const HoppingSequence& h, const LaplacianMode& mode, int n,
                                         std::size_t dense_cap = kDefaultDenseCap);

struct EigenLevel {
  double value = 0.0;
  std::uint64_t multiplicity = 0;
};

/// Closed-form spectrum, ordered by level (not by value). Adjacent levels with
/// identical values (vanishing coefficients) are merged.
std::vector<EigenLevel> laplacian_eigensystem(const HoppingSequence& h, const LaplacianMode& mode, int n);

}  // namespace hrg
