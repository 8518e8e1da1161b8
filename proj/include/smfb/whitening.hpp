#pragma once

// Front end that turns a raw signal into M roughly white channels.
//
// A circular lattice of order P runs over x. At the end, the final
// per-phase forward predictors are read out and x is filtered once more
// with them, so w_i is the order-P prediction error of phase i under one
// fixed predictor per phase. That makes each w_i exactly orthogonal to
// its regressors over the whole record (the normal equations hold), and
// the map x -> w stays invertible.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "smfb/circular_lattice.hpp"
#include "smfb/errors.hpp"
#include "smfb/signal_model.hpp"

namespace smfb {

struct WhitenerConfig {
  std::size_t channels = 2;  // M
  std::size_t order = 4;     // P
  double epsilon = 1e-12;
  double lambda = 1.0;
  bool normalize = true;     // scale every channel to unit sample variance

  void validate() const {
    if (channels < 1) throw ConfigError("M must be at least 1");
    if (order < 1) throw ConfigError("P must be at least 1");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
      throw ConfigError("epsilon must be finite and non-negative");
  }
};

template <class Real = double>
struct Whitened {
  ChannelInputs<Real> channels;
  /// predictors[i] = [1, -a_1, ..., -a_P]: w_i(n) before scaling is
  /// sum_k predictors[i][k] x(Mn + M-1-i - k).
  std::vector<std::vector<Real>> predictors;
  std::vector<Real> scale;  // factor applied to each channel
  std::size_t used = 0;     // samples of x consumed (a multiple of M)
};

template <class Real>
Whitened<Real> whiten_detailed(std::span<const Real> x, const WhitenerConfig& cfg) {
  cfg.validate();
  const std::size_t m = cfg.channels, q = cfg.order;
  if (x.size() < m)
    throw DimensionError("signal of length " + std::to_string(x.size()) + " is shorter than M");
  for (Real v : x)
    if (!std::isfinite(v)) throw DimensionError("signal contains a non-finite sample");

  const std::size_t len = x.size() / m * m;
  const Real eps = static_cast<Real>(cfg.epsilon);
  CircularLattice<Real> lat(m, q, eps, static_cast<Real>(cfg.lambda), m + q);
  OpCount ops;
  for (std::size_t n = 0; n < len; ++n) lat.push(x[n], ops);
  const auto tri = predictor_triangle(lat.history(), m, q, eps, GuardPolicy::zero_gain, ops);

  Whitened<Real> out;
  out.used = len;
  out.predictors = tri.forward_by_offset;
  std::vector<Real> z(len, Real(0));
  for (std::size_t n = 0; n < len; ++n) {
    const std::size_t i = (len - 1 - n) % m;  // phase of sample n
    const auto& a = out.predictors[i];
    Real acc = 0;
    for (std::size_t k = 0; k < a.size() && k <= n; ++k) acc += a[k] * x[n - k];
    z[n] = acc;
  }

  auto w = deinterleave(std::span<const Real>(z), m).sequences();
  out.scale.assign(m, Real(1));
  if (cfg.normalize) {
    for (std::size_t i = 0; i < m; ++i) {
      auto& c = w[i];
      Real mean = 0;
      for (Real v : c) mean += v;
      mean /= static_cast<Real>(c.size());
      Real var = 0;
      for (Real v : c) var += (v - mean) * (v - mean);
      var /= static_cast<Real>(c.size());
      if (var > Real(0)) {
        out.scale[i] = Real(1) / std::sqrt(var);
        for (Real& v : c) v *= out.scale[i];
      }
    }
  }
  out.channels = ChannelInputs<Real>(std::move(w));
  return out;
}

template <class Real>
ChannelInputs<Real> whiten(std::span<const Real> x, const WhitenerConfig& cfg) {
  return whiten_detailed(x, cfg).channels;
}

}  // namespace smfb
