#pragma once

// Lattice-ladder estimator for the serialized synthesis model.
//
// Every block k supplies M new samples of z and M desired samples. With
// t = Mk + M - 1 the block end, band i predicts d(t - i) from
// z(t), ..., z(t - p + 1) and is fitted over the earlier block ends only,
// so each band is its own growing-memory LS problem with decimated columns.
// All bands share the regressor vector at t, hence they hang off the same
// backward errors beta^p(t) of the circular lattice.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "smfb/circular_lattice.hpp"
#include "smfb/errors.hpp"

namespace smfb {

struct EngineConfig {
  std::size_t channels = 1;  // M
  std::size_t order = 1;     // N, a multiple of M
  double epsilon = 1e-12;    // floor for every R and likelihood division
  double lambda = 1.0;       // forgetting factor

  void validate() const {
    if (channels < 1) throw ConfigError("M must be at least 1");
    if (order < 1) throw ConfigError("N must be at least 1");
    if (order % channels != 0)
      throw ConfigError("N = " + std::to_string(order) + " is not a multiple of M = " +
                        std::to_string(channels));
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
    // epsilon = 0 is accepted on purpose: it disables the guards so that
    // rank-deficient startups surface as IllConditionedError.
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
      throw ConfigError("epsilon must be finite and non-negative");
  }
};

/// Dense M x (N+1) table indexed (band, order).
template <class Real>
class BandTable {
 public:
  BandTable() = default;
  BandTable(std::size_t bands, std::size_t cols, Real fill = Real(0))
      : cols_(cols), v_(bands * cols, fill) {}

  std::size_t bands() const noexcept { return cols_ ? v_.size() / cols_ : 0; }
  std::size_t cols() const noexcept { return cols_; }
  Real& operator()(std::size_t i, std::size_t p) { return v_[i * cols_ + p]; }
  Real operator()(std::size_t i, std::size_t p) const { return v_[i * cols_ + p]; }
  std::span<const Real> band(std::size_t i) const {
    return std::span<const Real>(v_).subspan(i * cols_, cols_);
  }

  friend bool operator==(const BandTable&, const BandTable&) = default;

 private:
  std::size_t cols_ = 0;
  std::vector<Real> v_;
};

/// Frozen copy of everything extraction needs.
template <class Real>
struct LatticeSnapshot {
  EngineConfig config;
  std::uint64_t blocks = 0;
  LatticeHistory<Real> history;
  BandTable<Real> delta_e;  // M x N ladder correlations

  friend bool operator==(const LatticeSnapshot& a, const LatticeSnapshot& b) {
    return a.blocks == b.blocks && a.history == b.history && a.delta_e == b.delta_e;
  }
};

template <class Real = double>
class LatticeEngine {
 public:
  LatticeEngine() = default;

  explicit LatticeEngine(EngineConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t m = cfg_.channels, n = cfg_.order;
    eps_ = static_cast<Real>(cfg_.epsilon);
    lambda_ = static_cast<Real>(cfg_.lambda);
    lattice_ = CircularLattice<Real>(m, n, eps_, lambda_, m + n);
    delta_e_ = BandTable<Real>(m, n);
    e_ = BandTable<Real>(m, n + 1);
    energy_ = BandTable<Real>(m, n + 1);
    inv_gamma_.resize(n + 1);
    inv_rbeta_.resize(n);
    ready_ = true;
  }

  const EngineConfig& config() const noexcept { return cfg_; }
  std::uint64_t blocks() const noexcept { return blocks_; }
  const OpCount& ops() const noexcept { return ops_; }

  /// z_block and d_block are the M samples of block k in time order,
  /// i.e. z(Mk), ..., z(Mk+M-1). Returns e^p(t - i) as (i, p).
  const BandTable<Real>& step(std::span<const Real> z_block, std::span<const Real> d_block) {
    if (!ready_) throw Error("engine used before initialization");
    const std::size_t m = cfg_.channels, n = cfg_.order;
    if (z_block.size() != m || d_block.size() != m)
      throw DimensionError("block length must equal M = " + std::to_string(m));

    for (Real v : z_block) lattice_.push(v, ops_);

    const LatticeSlot<Real>& s = lattice_.newest();
    for (std::size_t p = 0; p < n; ++p) inv_rbeta_[p] = Real(1) / guarded(s.r_beta[p], eps_);
    for (std::size_t p = 0; p <= n; ++p) inv_gamma_[p] = Real(1) / guarded(s.gamma[p], eps_);
    ops_.div += 2 * n + 1;

    // Ladder: every band couples to the block-end backward errors.
    for (std::size_t i = 0; i < m; ++i) {
      Real e = d_block[m - 1 - i];
      e_(i, 0) = e;
      energy_(i, 0) = lambda_ * energy_(i, 0) + e * e;
      for (std::size_t p = 0; p < n; ++p) {
        const Real b = s.beta[p];
        Real& de = delta_e_(i, p);
        de = lambda_ * de + e * b * inv_gamma_[p];
        e -= de * inv_rbeta_[p] * b;
        e_(i, p + 1) = e;
        energy_(i, p + 1) = lambda_ * energy_(i, p + 1) + e * e * inv_gamma_[p + 1];
      }
    }
    ops_.mul += 8 * m * n;
    ops_.add += 3 * m * n;
    ++blocks_;
    check_finite();
    return e_;
  }

  /// Latest e^p(t - i) for all bands.
  std::vector<Real> residuals(std::size_t p) const {
    if (blocks_ == 0) throw Error("no block has been processed yet");
    if (p > cfg_.order) throw DimensionError("order " + std::to_string(p) + " out of range");
    std::vector<Real> r(cfg_.channels);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = e_(i, p);
    return r;
  }

  const BandTable<Real>& residual_table() const noexcept { return e_; }

  /// Exact growing-memory LS cost of band i at order p: the running sum of
  /// e^2 divided by the likelihood of the matching order.
  Real energy(std::size_t i, std::size_t p) const { return energy_(i, p); }

  /// Lattice variables of phase i, i.e. at time t - i of the last block.
  const LatticeSlot<Real>& phase(std::size_t i) const {
    if (i >= cfg_.channels) throw DimensionError("phase index out of range");
    return lattice_.history().at(i);
  }

  Real ladder_correlation(std::size_t i, std::size_t p) const { return delta_e_(i, p); }

  LatticeSnapshot<Real> snapshot() const {
    return LatticeSnapshot<Real>{cfg_, blocks_, lattice_.history(), delta_e_};
  }

  /// `name[i][p]=value` lines sorted by key, values printed round-trip exact.
  std::string dump() const {
    std::map<std::string, Real> kv;
    char key[64];
    auto put = [&](const char* name, std::size_t i, std::size_t p, Real v) {
      std::snprintf(key, sizeof key, "%s[%zu][%zu]", name, i, p);
      kv[key] = v;
    };
    for (std::size_t i = 0; i < cfg_.channels; ++i) {
      const LatticeSlot<Real>& s = lattice_.history().at(i);
      for (std::size_t p = 0; p <= cfg_.order; ++p) {
        put("alpha", i, p, s.alpha[p]);
        put("beta", i, p, s.beta[p]);
        put("likelihood", i, p, s.gamma[p]);
        put("e", i, p, e_(i, p));
        if (p == cfg_.order) continue;
        put("delta", i, p, s.delta[p]);
        put("r_alpha", i, p, s.r_alpha[p]);
        put("r_beta", i, p, s.r_beta[p]);
        put("delta_e", i, p, delta_e_(i, p));
      }
    }
    std::string out;
    char val[40];
    for (const auto& [k, v] : kv) {
      std::snprintf(val, sizeof val, "%.17g", static_cast<double>(v));
      out += k;
      out += '=';
      out += val;
      out += '\n';
    }
    return out;
  }

  friend bool operator==(const LatticeEngine& a, const LatticeEngine& b) {
    return a.blocks_ == b.blocks_ && a.lattice_.history() == b.lattice_.history() &&
           a.delta_e_ == b.delta_e_ && a.e_ == b.e_ && a.energy_ == b.energy_;
  }

 private:
  void check_finite() const {
    const LatticeSlot<Real>& s = lattice_.newest();
    auto bad = [](const std::vector<Real>& v) {
      return std::any_of(v.begin(), v.end(), [](Real x) { return !std::isfinite(x); });
    };
    bool fail = bad(s.alpha) || bad(s.beta) || bad(s.gamma) || bad(s.delta) || bad(s.r_alpha) ||
                bad(s.r_beta);
    for (std::size_t i = 0; i < cfg_.channels && !fail; ++i)
      for (std::size_t p = 0; p <= cfg_.order; ++p)
        if (!std::isfinite(e_(i, p))) fail = true;
    if (fail)
      throw IllConditionedError("non-finite lattice value at block " + std::to_string(blocks_) +
                                " (division by a vanishing energy)");
  }

  EngineConfig cfg_;
  Real eps_ = 0, lambda_ = 1;
  CircularLattice<Real> lattice_;
  BandTable<Real> delta_e_, e_, energy_;
  std::vector<Real> inv_gamma_, inv_rbeta_;
  OpCount ops_;
  std::uint64_t blocks_ = 0;
  bool ready_ = false;
};

}  // namespace smfb
