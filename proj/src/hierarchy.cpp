#include "hrg/hierarchy.hpp"

#include <bit>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "hrg/errors.hpp"

namespace hrg {

int hier_distance(SiteIndex j, SiteIndex k) { return std::bit_width(j ^ k); }

std::pair<SiteIndex, SiteIndex> ball(SiteIndex j, int r) {
  if (r < 0 || r >= 64) throw LevelOutOfRange(fmt::format("ball level {} outside [0, 63]", r));
  const SiteIndex first = (j >> r) << r;
  return {first, first + (SiteIndex{1} << r)};
}

int scale_of(std::size_t size) {
  if (size == 0 || !std::has_single_bit(size)) {
    throw InputError(fmt::format("vector length {} is not a power of two", size));
  }
  return std::countr_zero(size);
}

namespace {

void check_envelope(double eps, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw InputError(fmt::format(
        "hopping decay c = {} must be positive: the hopping sequence has to be summable", c));
  }
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw InputError(fmt::format("hopping amplitude eps = {} must be finite and non-negative", eps));
  }
}

void check_finite(std::span<const double> psi) {
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (!std::isfinite(psi[i])) throw InputError(fmt::format("non-finite vector entry at index {}", i));
  }
}

}  // namespace

HoppingSequence HoppingSequence::geometric(double eps, double c) {
  check_envelope(eps, c);
  HoppingSequence h;
  h.geometric_ = true;
  h.eps_ = eps;
  h.c_ = c;
  return h;
}

HoppingSequence HoppingSequence::explicit_list(std::vector<double> values, double eps, double c) {
  check_envelope(eps, c);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int r = static_cast<int>(i) + 1;
    const double bound = eps * std::exp2(-c * r);
    if (!std::isfinite(values[i]) || std::abs(values[i]) > bound * (1.0 + 1e-12)) {
      throw InputError(fmt::format("p_{} = {} violates |p_r| <= eps 2^(-c r) = {}", r, values[i], bound));
    }
  }
  HoppingSequence h;
  h.geometric_ = false;
  h.eps_ = eps;
  h.c_ = c;
  h.values_ = std::move(values);
  return h;
}

double HoppingSequence::operator()(int r) const {
  if (r < 1) throw LevelOutOfRange(fmt::format("hopping index {} must be >= 1", r));
  if (geometric_) return eps_ * std::exp2(-c_ * r);
  return static_cast<std::size_t>(r) <= values_.size() ? values_[r - 1] : 0.0;
}

double HoppingSequence::partial_sum(int r) const {
  if (r <= 0) return 0.0;
  if (geometric_) {
    const double q = std::exp2(-c_);
    return eps_ * q * (1.0 - std::pow(q, r)) / (1.0 - q);
  }
  double s = 0.0;
  for (int i = 1; i <= r && static_cast<std::size_t>(i) <= values_.size(); ++i) s += values_[i - 1];
  return s;
}

double HoppingSequence::total() const {
  if (geometric_) {
    const double q = std::exp2(-c_);
    return eps_ * q / (1.0 - q);
  }
  return partial_sum(static_cast<int>(values_.size()));
}

double HoppingSequence::tail(int n) const {
  if (n < 0) throw LevelOutOfRange(fmt::format("volume scale {} is negative", n));
  if (geometric_) {
    const double q = std::exp2(-(1.0 + c_));
    return eps_ * std::exp2(-c_ * n) * q / (1.0 - q);
  }
  double s = 0.0;
  for (std::size_t r = static_cast<std::size_t>(n) + 1; r <= values_.size(); ++r) {
    s += std::exp2(static_cast<double>(n) - static_cast<double>(r)) * values_[r - 1];
  }
  return s;
}

double HoppingSequence::tail_remainder_bound(int n) const {
  if (geometric_) return 0.0;
  // eps * sum_{r > R} 2^{n - r - c r} with R = max(n, list length)
  const double big_r = std::max<double>(n, static_cast<double>(values_.size()));
  const double q = std::exp2(-(1.0 + c_));
  return eps_ * std::exp2(static_cast<double>(n)) * std::pow(q, big_r + 1.0) / (1.0 - q);
}

HoppingSequence HoppingSequence::shifted(int k) const {
  if (k < 0) throw InputError("hopping shift must be non-negative");
  HoppingSequence h = *this;
  h.eps_ = eps_ * std::exp2(-c_ * k);
  if (!geometric_) {
    const auto drop = std::min<std::size_t>(static_cast<std::size_t>(k), values_.size());
    h.values_.assign(values_.begin() + static_cast<std::ptrdiff_t>(drop), values_.end());
  }
  return h;
}

std::vector<double> level_coefficients(const HoppingSequence& h, const LaplacianMode& mode, int n) {
  if (n < 0 || n > 62) throw LevelOutOfRange(fmt::format("volume scale {} outside [0, 62]", n));
  std::vector<double> a(static_cast<std::size_t>(n) + 1, 0.0);
  if (std::holds_alternative<TailCorrected>(mode)) {
    for (int r = 1; r <= n; ++r) a[r] = h(r);
    a[n] += h.tail(n);
  } else {
    const int m = std::get<Truncated>(mode).m;
    if (m < 0 || m > n) {
      throw LevelOutOfRange(fmt::format("truncation level m = {} outside [0, n = {}]", m, n));
    }
    for (int r = 1; r <= m; ++r) a[r] = h(r);
  }
  return a;
}

std::vector<double> apply_averaging(int r, std::span<const double> psi) {
  const int n = scale_of(psi.size());
  if (r < 0 || r > n) throw LevelOutOfRange(fmt::format("averaging level {} outside [0, {}]", r, n));
  check_finite(psi);
  std::vector<double> out(psi.size());
  const std::size_t block = std::size_t{1} << r;
  const double scale = std::exp2(-r);
  for (std::size_t start = 0; start < psi.size(); start += block) {
    double sum = 0.0;
    for (std::size_t i = start; i < start + block; ++i) sum += psi[i];
    for (std::size_t i = start; i < start + block; ++i) out[i] = scale * sum;
  }
  return out;
}

void apply_laplacian(std::span<const double> a, std::span<const double> psi, std::span<double> out,
                     std::vector<double>& ws) {
  const std::size_t size = psi.size();
  const int n = scale_of(size);
  if (a.size() != static_cast<std::size_t>(n) + 1 || out.size() != size) {
    throw InputError("laplacian coefficient / vector size mismatch");
  }
  // ws holds the block sums of every level back to back: level r at offset
  // 2 * size - 2 * (size >> r), with size >> r entries.
  ws.resize(2 * size);
  std::copy(psi.begin(), psi.end(), ws.begin());
  std::size_t off = 0;
  for (int r = 1; r <= n; ++r) {
    const std::size_t len = size >> (r - 1);
    const std::size_t next = off + len;
    for (std::size_t b = 0; b < len / 2; ++b) ws[next + b] = ws[off + 2 * b] + ws[off + 2 * b + 1];
    off = next;
  }
  // Top-down: replace each level's sums by the accumulated coefficient sum.
  ws[off] *= a[n] * std::exp2(-n);
  for (int r = n - 1; r >= 0; --r) {
    const std::size_t len = size >> r;
    const std::size_t here = off - len;
    const double coeff = a[r] * std::exp2(-r);
    for (std::size_t b = 0; b < len; ++b) ws[here + b] = ws[off + (b >> 1)] + coeff * ws[here + b];
    off = here;
  }
  std::copy(ws.begin(), ws.begin() + static_cast<std::ptrdiff_t>(size), out.begin());
}

std::vector<double> apply_laplacian(const HoppingSequence& h, const LaplacianMode& mode,
                                    std::span<const double> psi) {
  const int n = scale_of(psi.size());
  check_finite(psi);
  const auto a = level_coefficients(h, mode, n);
  std::vector<double> out(psi.size());
  std::vector<double> ws;
  apply_laplacian(a, psi, out, ws);
  return out;
}

Eigen::MatrixXd assemble_dense_laplacian(const HoppingSequence& h, const LaplacianMode& mode, int n,
                                         std::size_t dense_cap) {
  const auto a = level_coefficients(h, mode, n);
  const std::size_t size = std::size_t{1} << n;
  if (size > dense_cap) {
    throw ResourceError(fmt::format("dense matrix of size {} exceeds the dense cap {}", size, dense_cap));
  }
  // suffix[d] = sum_{r >= d} a_r 2^{-r}
  std::vector<double> suffix(static_cast<std::size_t>(n) + 2, 0.0);
  for (int r = n; r >= 0; --r) suffix[r] = suffix[r + 1] + a[r] * std::exp2(-r);
  const auto dim = static_cast<Eigen::Index>(size);
  Eigen::MatrixXd m(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      m(j, k) = suffix[hier_distance(static_cast<SiteIndex>(j), static_cast<SiteIndex>(k))];
    }
  }
  return m;
}

std::vector<EigenLevel> laplacian_eigensystem(const HoppingSequence& h, const LaplacianMode& mode, int n) {
  const auto a = level_coefficients(h, mode, n);
  std::vector<EigenLevel> levels;
  double value = 0.0;
  for (int r = 0; r <= n; ++r) {
    // Range of P_r = E_r - E_{r+1} (r < n) or of E_n itself (r = n).
    value += a[r];
    const std::uint64_t mult = r < n ? (std::uint64_t{1} << (n - r - 1)) : 1;
    if (!levels.empty() && levels.back().value == value) {
      levels.back().multiplicity += mult;
    } else {
      levels.push_back({value, mult});
    }
  }
  return levels;
}

}  // namespace hrg
