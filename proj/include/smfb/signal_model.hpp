#pragma once

// Filter-bank data model and the structural transforms between the
// multi-input synthesis bank and its single-input serialized form.
//
// Index conventions used throughout the library:
//   * Signals are 0-indexed and pre-windowed (zero before index 0).
//   * Block n of the channel inputs occupies z[Mn .. Mn+M-1]. Within a
//     block the channels appear in the order w_{M-1}, ..., w_1, w_0, so
//     that z(t - i) = w_i(n) with t = Mn + M - 1 the last index of block n.
//     "Band i" or "phase i" of a block always refers to index t - i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smfb/errors.hpp"

namespace smfb {

template <class Real = double>
using Signal = std::vector<Real>;

struct filter_bank_tag {};
struct serialized_filter_tag {};

/// M rows of N real coefficients, N a multiple of M.
template <class Real, class Tag>
class CoefficientBank {
 public:
  using value_type = Real;

  CoefficientBank() = default;

  explicit CoefficientBank(std::vector<std::vector<Real>> rows)
      : rows_(std::move(rows)) {
    if (rows_.empty()) throw DimensionError("coefficient bank needs at least one channel");
    const std::size_t n = rows_.front().size();
    if (n == 0) throw DimensionError("coefficient bank needs at least one tap");
    for (const auto& r : rows_) {
      if (r.size() != n) throw DimensionError("coefficient rows have unequal length");
      for (Real v : r)
        if (!std::isfinite(v)) throw DimensionError("coefficient is not finite");
    }
    if (n % rows_.size() != 0)
      throw DimensionError("filter length " + std::to_string(n) +
                           " is not a multiple of the channel count " +
                           std::to_string(rows_.size()));
  }

  std::size_t channels() const noexcept { return rows_.size(); }
  std::size_t length() const noexcept { return rows_.empty() ? 0 : rows_.front().size(); }

  std::span<const Real> operator[](std::size_t i) const { return rows_.at(i); }
  Real operator()(std::size_t i, std::size_t n) const { return rows_[i][n]; }
  const std::vector<std::vector<Real>>& rows() const noexcept { return rows_; }

  friend bool operator==(const CoefficientBank&, const CoefficientBank&) = default;

 private:
  std::vector<std::vector<Real>> rows_;
};

/// Synthesis filters f_i(n): channel i is upsampled by M and filtered by f_i.
template <class Real = double>
using FilterBank = CoefficientBank<Real, filter_bank_tag>;

/// Re-indexed filters g_i(n) acting on the interleaved stream.
template <class Real = double>
using SerializedFilterSet = CoefficientBank<Real, serialized_filter_tag>;

/// M equal-length channel sequences w_i(k), k = 0..K-1.
template <class Real = double>
class ChannelInputs {
 public:
  ChannelInputs() = default;

  explicit ChannelInputs(std::vector<std::vector<Real>> w) : w_(std::move(w)) {
    if (w_.empty()) throw DimensionError("channel inputs need at least one channel");
    for (const auto& c : w_)
      if (c.size() != w_.front().size())
        throw DimensionError("channel sequences have unequal length");
  }

  std::size_t channels() const noexcept { return w_.size(); }
  std::size_t blocks() const noexcept { return w_.empty() ? 0 : w_.front().size(); }

  std::span<const Real> operator[](std::size_t i) const { return w_.at(i); }
  Real operator()(std::size_t i, std::size_t k) const { return w_[i][k]; }
  const std::vector<std::vector<Real>>& sequences() const noexcept { return w_; }

  friend bool operator==(const ChannelInputs&, const ChannelInputs&) = default;

 private:
  std::vector<std::vector<Real>> w_;
};

/// Scalar stream z of length M*K built from ChannelInputs.
template <class Real = double>
class InterleavedSignal {
 public:
  InterleavedSignal() = default;

  InterleavedSignal(std::vector<Real> z, std::size_t phases)
      : z_(std::move(z)), phases_(phases) {
    if (phases_ == 0) throw DimensionError("phase count must be positive");
    if (z_.size() % phases_ != 0)
      throw DimensionError("interleaved length " + std::to_string(z_.size()) +
                           " is not divisible by " + std::to_string(phases_));
  }

  std::size_t phases() const noexcept { return phases_; }
  std::size_t blocks() const noexcept { return phases_ ? z_.size() / phases_ : 0; }
  std::size_t size() const noexcept { return z_.size(); }
  std::span<const Real> samples() const noexcept { return z_; }
  Real operator[](std::size_t n) const { return z_[n]; }

  friend bool operator==(const InterleavedSignal&, const InterleavedSignal&) = default;

 private:
  std::vector<Real> z_;
  std::size_t phases_ = 1;
};

template <class Real>
InterleavedSignal<Real> interleave(const ChannelInputs<Real>& w) {
  const std::size_t m = w.channels();
  const std::size_t k = w.blocks();
  std::vector<Real> z(m * k);
  for (std::size_t n = 0; n < k; ++n)
    for (std::size_t i = 0; i < m; ++i) z[m * n + m - 1 - i] = w(i, n);
  return InterleavedSignal<Real>(std::move(z), m);
}

template <class Real>
ChannelInputs<Real> deinterleave(std::span<const Real> z, std::size_t phases) {
  if (phases == 0 || z.size() % phases != 0)
    throw DimensionError("interleaved length is not divisible by the phase count");
  const std::size_t k = z.size() / phases;
  std::vector<std::vector<Real>> w(phases, std::vector<Real>(k));
  for (std::size_t n = 0; n < k; ++n)
    for (std::size_t i = 0; i < phases; ++i) w[i][n] = z[phases * n + phases - 1 - i];
  return ChannelInputs<Real>(std::move(w));
}

template <class Real>
ChannelInputs<Real> deinterleave(const InterleavedSignal<Real>& z) {
  return deinterleave(z.samples(), z.phases());
}

/// Type-II polyphase components of filter i: component k holds
/// f_i(pM + M-1-k) for p = 0..N/M-1.
template <class Real>
std::vector<std::vector<Real>> polyphase_components(const FilterBank<Real>& bank,
                                                    std::size_t i) {
  if (i >= bank.channels())
    throw DimensionError("channel index " + std::to_string(i) + " out of range");
  const std::size_t m = bank.channels();
  const std::size_t taps = bank.length() / m;
  std::vector<std::vector<Real>> comps(m, std::vector<Real>(taps));
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t p = 0; p < taps; ++p) comps[k][p] = bank(i, p * m + m - 1 - k);
  return comps;
}

/// Upsample each channel by M, filter with f_j and sum:
/// d(m) = sum_j sum_p w_j(p) f_j(m - Mp), for m = 0..MK-1.
template <class Real>
Signal<Real> synthesize(const FilterBank<Real>& bank, const ChannelInputs<Real>& w) {
  if (bank.channels() != w.channels())
    throw DimensionError("filter bank and inputs disagree on the channel count");
  const std::size_t m = bank.channels();
  const std::size_t len = m * w.blocks();
  const std::size_t taps = bank.length();
  Signal<Real> d(len, Real(0));
  for (std::size_t j = 0; j < m; ++j) {
    const auto f = bank[j];
    for (std::size_t p = 0; p < w.blocks(); ++p) {
      const Real x = w(j, p);
      if (x == Real(0)) continue;
      const std::size_t start = m * p;
      const std::size_t stop = std::min(len, start + taps);
      for (std::size_t n = start; n < stop; ++n) d[n] += x * f[n - start];
    }
  }
  return d;
}

/// g_i(Ms + u) = f_u(Ms + M-1-i): the re-indexing under which
/// synthesize_serialized(g, interleave(w)) == synthesize(f, w).
template <class Real>
SerializedFilterSet<Real> serialize_filters(const FilterBank<Real>& bank) {
  const std::size_t m = bank.channels();
  const std::size_t n = bank.length();
  std::vector<std::vector<Real>> g(m, std::vector<Real>(n));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t s = 0; s < n / m; ++s)
      for (std::size_t u = 0; u < m; ++u) g[i][m * s + u] = bank(u, m * s + m - 1 - i);
  return SerializedFilterSet<Real>(std::move(g));
}

/// Inverse of serialize_filters: f_u(Ms + r) = g_{M-1-r}(Ms + u).
template <class Real>
FilterBank<Real> deserialize_filters(const SerializedFilterSet<Real>& g) {
  const std::size_t m = g.channels();
  const std::size_t n = g.length();
  std::vector<std::vector<Real>> f(m, std::vector<Real>(n));
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t s = 0; s < n / m; ++s)
      for (std::size_t r = 0; r < m; ++r) f[u][m * s + r] = g(m - 1 - r, m * s + u);
  return FilterBank<Real>(std::move(f));
}

/// d(t - i) = sum_j g_i(j) z(t - j) for every block end t and band i.
template <class Real>
Signal<Real> synthesize_serialized(const SerializedFilterSet<Real>& g,
                                   const InterleavedSignal<Real>& z) {
  if (g.channels() != z.phases())
    throw DimensionError("filter set and interleaved signal disagree on M");
  const std::size_t m = g.channels();
  const auto zs = z.samples();
  Signal<Real> d(zs.size(), Real(0));
  for (std::size_t t = m - 1; t < zs.size(); t += m) {
    const std::size_t reach = std::min(g.length(), t + 1);
    for (std::size_t i = 0; i < m; ++i) {
      const auto gi = g[i];
      Real acc = 0;
      for (std::size_t j = 0; j < reach; ++j) acc += gi[j] * zs[t - j];
      d[t - i] = acc;
    }
  }
  return d;
}

/// e(t - i) = d(t - i) - sum_j g_i(j) z(t - j).
template <class Real>
Signal<Real> residual_direct(const SerializedFilterSet<Real>& g,
                             const InterleavedSignal<Real>& z,
                             std::span<const Real> d) {
  if (d.size() != z.size())
    throw DimensionError("desired signal and interleaved signal differ in length");
  Signal<Real> e = synthesize_serialized(g, z);
  for (std::size_t n = 0; n < e.size(); ++n) e[n] = d[n] - e[n];
  return e;
}

}  // namespace smfb
