#pragma once

// Pre-windowed a-posteriori least-squares lattice over an interleaved
// stream with period M. Each phase keeps its own correlation accumulators,
// so the order-p predictors at time t are fitted only on the earlier
// samples t - M, t - 2M, ... and the regressors z(t-1), ..., z(t-p).
//
// The last few time slots are kept in a ring. That history is what makes
// exact coefficient recovery possible: the forward/backward predictor
// vectors at time t are built from the lattice coefficients of the
// preceding slots (see predictor_triangle below).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "smfb/errors.hpp"

namespace smfb {

/// Arithmetic instrumentation. Guards and comparisons are not counted.
struct OpCount {
  std::uint64_t mul = 0;
  std::uint64_t add = 0;
  std::uint64_t div = 0;

  OpCount& operator+=(const OpCount& o) {
    mul += o.mul;
    add += o.add;
    div += o.div;
    return *this;
  }
};

template <class Real>
inline Real guarded(Real x, Real eps) {
  return x > eps ? x : eps;
}

/// Lattice variables at one time instant, for orders 0..Q.
/// delta/r_alpha/r_beta have Q entries (one per stage); alpha/beta/gamma
/// have Q+1 (order 0 included). gamma is the likelihood variable in (0,1].
template <class Real>
struct LatticeSlot {
  std::vector<Real> delta, r_alpha, r_beta;
  std::vector<Real> alpha, beta, gamma;

  explicit LatticeSlot(std::size_t q = 0)
      : delta(q), r_alpha(q), r_beta(q), alpha(q + 1), beta(q + 1), gamma(q + 1, Real(1)) {}

  friend bool operator==(const LatticeSlot&, const LatticeSlot&) = default;
};

/// The last `depth` slots; offset 0 is the newest. Slots before time 0
/// read as a blank slot (zero accumulators and errors, unit likelihood).
template <class Real>
class LatticeHistory {
 public:
  LatticeHistory() = default;
  LatticeHistory(std::size_t order, std::size_t depth)
      : ring_(depth, LatticeSlot<Real>(order)), blank_(order), order_(order) {
    if (depth == 0) throw ConfigError("history depth must be positive");
  }

  std::size_t order() const noexcept { return order_; }
  std::size_t depth() const noexcept { return ring_.size(); }
  std::uint64_t samples() const noexcept { return samples_; }

  const LatticeSlot<Real>& at(std::size_t offset) const {
    if (offset >= ring_.size())
      throw DimensionError("history offset " + std::to_string(offset) + " beyond depth " +
                           std::to_string(ring_.size()));
    if (offset >= samples_) return blank_;
    return ring_[(head_ + ring_.size() - offset) % ring_.size()];
  }

  /// Swaps `next` into the ring as the newest slot; `next` receives the
  /// slot that fell off the end so its storage can be reused.
  void push(LatticeSlot<Real>& next) {
    head_ = (head_ + 1) % ring_.size();
    std::swap(ring_[head_], next);
    ++samples_;
  }

  friend bool operator==(const LatticeHistory& a, const LatticeHistory& b) {
    if (a.samples_ != b.samples_ || a.order_ != b.order_ || a.depth() != b.depth()) return false;
    for (std::size_t j = 0; j < a.depth(); ++j)
      if (!(a.at(j) == b.at(j))) return false;
    return true;
  }

 private:
  std::vector<LatticeSlot<Real>> ring_;
  LatticeSlot<Real> blank_;
  std::size_t head_ = 0;
  std::size_t order_ = 0;
  std::uint64_t samples_ = 0;
};

template <class Real = double>
class CircularLattice {
 public:
  CircularLattice() = default;

  CircularLattice(std::size_t phases, std::size_t order, Real epsilon, Real lambda,
                  std::size_t depth)
      : history_(order, std::max(depth, phases + 1)),
        scratch_(order),
        phases_(phases),
        eps_(epsilon),
        lambda_(lambda) {
    if (phases == 0) throw ConfigError("phase count must be positive");
    if (order == 0) throw ConfigError("lattice order must be positive");
  }

  std::size_t phases() const noexcept { return phases_; }
  std::size_t order() const noexcept { return history_.order(); }
  const LatticeHistory<Real>& history() const noexcept { return history_; }
  const LatticeSlot<Real>& newest() const { return history_.at(0); }

  /// Advances one sample. The accumulators come from offset M (same
  /// phase, previous period); the delayed backward errors and likelihoods
  /// come from offset 1.
  void push(Real z, OpCount& ops) {
    const std::size_t q = order();
    // Offsets are taken before the push, hence one less than above.
    const LatticeSlot<Real>& prev = history_.at(0);
    const LatticeSlot<Real>& same = history_.at(phases_ - 1);
    LatticeSlot<Real>& s = scratch_;
    s.alpha[0] = z;
    s.beta[0] = z;
    s.gamma[0] = Real(1);
    for (std::size_t p = 0; p < q; ++p) {
      const Real a = s.alpha[p];
      const Real bp = prev.beta[p];
      const Real inv_gp = Real(1) / guarded(prev.gamma[p], eps_);
      s.delta[p] = lambda_ * same.delta[p] + a * bp * inv_gp;
      s.r_alpha[p] = lambda_ * same.r_alpha[p] + a * a * inv_gp;
      s.alpha[p + 1] = a - s.delta[p] / guarded(prev.r_beta[p], eps_) * bp;
      s.beta[p + 1] = bp - s.delta[p] / guarded(s.r_alpha[p], eps_) * a;
      const Real b = s.beta[p];
      s.r_beta[p] = lambda_ * same.r_beta[p] + b * b / guarded(s.gamma[p], eps_);
      s.gamma[p + 1] =
          std::clamp(s.gamma[p] - b * b / guarded(s.r_beta[p], eps_), eps_, Real(1));
    }
    ops.mul += 10 * q;
    ops.add += 6 * q;
    ops.div += 5 * q;
    history_.push(scratch_);
  }

 private:
  LatticeHistory<Real> history_;
  LatticeSlot<Real> scratch_;
  std::size_t phases_ = 1;
  Real eps_ = 0;
  Real lambda_ = 1;
};

enum class GuardPolicy {
  throw_on_small,  ///< a required R below epsilon is an IllConditionedError
  zero_gain,       ///< such a stage contributes nothing (reflection gain 0)
};

/// Forward predictors a (leading 1) and backward predictors b (trailing 1)
/// at the newest time, so that alpha^p(t) = sum_k a_k z(t-k) and
/// beta^p(t) = sum_k b_k z(t-k).
template <class Real>
struct PredictorTriangle {
  std::vector<std::vector<Real>> forward;   ///< forward[p], p = 0..Q, offset 0
  std::vector<std::vector<Real>> backward;  ///< backward[p], p = 0..Q, offset 0
  std::vector<std::vector<Real>> forward_by_offset;  ///< a^Q at offsets 0..F-1
};

namespace detail {

template <class Real>
Real stage_gain(Real num, Real den, Real eps, GuardPolicy policy, const char* what) {
  if (den < eps || !(den > Real(0))) {
    if (policy == GuardPolicy::throw_on_small)
      throw IllConditionedError(std::string("energy ") + what + " below the guard floor");
    return Real(0);
  }
  return num / den;
}

}  // namespace detail

/// Builds the predictor vectors at the newest slot from the ring.
///
/// At offset j the order reached is Q for j < F and Q-(j-F+1) beyond, which
/// is exactly what the order recursion
///   a^{p+1}(j) = [a^p(j) | 0] - k_b [0 | b^p(j+1)],   k_b = Delta/Rbeta(j+1)
///   b^{p+1}(j) = [0 | b^p(j+1)] - k_a [a^p(j) | 0],   k_a = Delta/Ralpha(j)
/// needs to deliver order Q at the first F offsets. The ring must hold
/// Q+F slots. Cost is about Q^3/3 multiply-adds beyond the first F rows.
template <class Real>
PredictorTriangle<Real> predictor_triangle(const LatticeHistory<Real>& h, std::size_t full_rows,
                                           std::size_t q, Real eps, GuardPolicy policy,
                                           OpCount& ops) {
  if (full_rows == 0) throw ConfigError("at least one full-order row is required");
  if (q > h.order()) throw DimensionError("requested order exceeds the lattice order");
  const std::size_t top = full_rows - 1 + q;  // deepest offset, order 0 there
  if (top >= h.depth()) throw DimensionError("lattice history too short for extraction");

  auto reach = [&](std::size_t j) { return j < full_rows ? q : q - (j - full_rows + 1); };

  PredictorTriangle<Real> out;
  out.forward_by_offset.resize(full_rows);
  // below[p] holds b^p at offset j+1 while offset j is processed.
  std::vector<std::vector<Real>> below, here;
  for (std::size_t j = top + 1; j-- > 0;) {
    const std::size_t ord = reach(j);
    const LatticeSlot<Real>& s = h.at(j);
    const LatticeSlot<Real>& older = h.at(std::min(j + 1, h.depth() - 1));
    here.assign(ord + 1, {});
    std::vector<Real> a{Real(1)};
    here[0] = {Real(1)};
    if (j == 0) {
      out.forward.assign(ord + 1, {});
      out.forward[0] = a;
    }
    for (std::size_t p = 0; p < ord; ++p) {
      const std::vector<Real>& bb = below[p];
      const Real kb = detail::stage_gain(s.delta[p], older.r_beta[p], eps, policy, "R_beta");
      const Real ka = detail::stage_gain(s.delta[p], s.r_alpha[p], eps, policy, "R_alpha");
      std::vector<Real> an(p + 2), bn(p + 2);
      for (std::size_t k = 0; k <= p + 1; ++k) {
        const Real av = k <= p ? a[k] : Real(0);
        const Real bv = k >= 1 ? bb[k - 1] : Real(0);
        an[k] = av - kb * bv;
        bn[k] = bv - ka * av;
      }
      ops.mul += 2 * (p + 1);
      ops.add += 2 * (p + 1);
      ops.div += 2;
      a = std::move(an);
      here[p + 1] = std::move(bn);
      if (j == 0) out.forward[p + 1] = a;
    }
    if (j < full_rows) out.forward_by_offset[j] = a;
    below.swap(here);
  }
  out.backward = std::move(below);
  return out;
}

}  // namespace smfb
