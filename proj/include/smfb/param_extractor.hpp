#pragma once

// Recovers the serialized filters g_i from a lattice snapshot.
//
// The backward predictors b^p(t) come from predictor_triangle; band i's
// ladder then accumulates
//   h^{p+1} = [h^p | 0] + (Delta_e[i][p] / Rbeta[p](t)) b^p(t)
// which is the transversal form of the ladder recursion, so h^N is the
// exact LS solution with d(t - i) ~ h . [z(t), ..., z(t - N + 1)].

#include <cstddef>
#include <string>
#include <vector>

#include "smfb/circular_lattice.hpp"
#include "smfb/errors.hpp"
#include "smfb/lattice_engine.hpp"
#include "smfb/signal_model.hpp"

namespace smfb {

template <class Real = double>
class Extraction {
 public:
  std::size_t bands() const noexcept { return h_.size(); }
  std::size_t order() const noexcept { return order_; }

  /// Filter coefficients of band i at order p (length p, p = 0..N).
  const std::vector<Real>& coefficients(std::size_t i, std::size_t p) const {
    return h_.at(i).at(p);
  }

  /// [1 | -h^p]: applied to [d(t-i), z(t), ..., z(t-p+1)] it gives e^p.
  std::vector<Real> error_filter(std::size_t i, std::size_t p) const {
    const auto& h = coefficients(i, p);
    std::vector<Real> out{Real(1)};
    for (Real v : h) out.push_back(-v);
    return out;
  }

  /// Forward predictor at the block end, leading 1, length p+1.
  const std::vector<Real>& forward(std::size_t p) const { return tri_.forward.at(p); }
  /// Backward predictor at the block end, trailing 1, length p+1.
  const std::vector<Real>& backward(std::size_t p) const { return tri_.backward.at(p); }
  std::size_t predictor_order() const noexcept { return tri_.backward.size() - 1; }

  SerializedFilterSet<Real> filters() const {
    std::vector<std::vector<Real>> rows;
    rows.reserve(h_.size());
    for (const auto& band : h_) rows.push_back(band.back());
    return SerializedFilterSet<Real>(std::move(rows));
  }

  const OpCount& ops() const noexcept { return ops_; }

 private:
  template <class R>
  friend Extraction<R> extract(const LatticeSnapshot<R>&);

  std::size_t order_ = 0;
  std::vector<std::vector<std::vector<Real>>> h_;  // [band][p] -> h^p
  PredictorTriangle<Real> tri_;
  OpCount ops_;
};

/// Throws InsufficientDataError before N blocks and IllConditionedError when
/// a backward-error energy the recursion divides by sits below epsilon.
template <class Real>
Extraction<Real> extract(const LatticeSnapshot<Real>& snap) {
  const std::size_t m = snap.config.channels, n = snap.config.order;
  if (snap.blocks < n)
    throw InsufficientDataError("extraction of order " + std::to_string(n) + " needs " +
                                std::to_string(n) + " blocks, have " +
                                std::to_string(snap.blocks));
  const Real eps = static_cast<Real>(snap.config.epsilon);

  Extraction<Real> ex;
  ex.order_ = n;
  ex.tri_ = predictor_triangle(snap.history, 1, n - 1, eps, GuardPolicy::throw_on_small, ex.ops_);

  const LatticeSlot<Real>& s = snap.history.at(0);
  std::vector<Real> inv_r(n);
  for (std::size_t p = 0; p < n; ++p) {
    if (s.r_beta[p] < eps || !(s.r_beta[p] > Real(0)))
      throw IllConditionedError("backward energy of order " + std::to_string(p) +
                                " below the guard floor");
    inv_r[p] = Real(1) / s.r_beta[p];
  }
  ex.ops_.div += n;

  ex.h_.assign(m, {});
  for (std::size_t i = 0; i < m; ++i) {
    auto& hs = ex.h_[i];
    hs.assign(n + 1, {});
    for (std::size_t p = 0; p < n; ++p) {
      const Real k = snap.delta_e(i, p) * inv_r[p];
      const std::vector<Real>& b = ex.tri_.backward[p];
      std::vector<Real> next(hs[p]);
      next.push_back(Real(0));
      for (std::size_t j = 0; j <= p; ++j) next[j] += k * b[j];
      hs[p + 1] = std::move(next);
      ex.ops_.mul += p + 2;
      ex.ops_.add += p + 1;
    }
  }
  return ex;
}

}  // namespace smfb
