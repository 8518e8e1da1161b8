#pragma once

// The three test systems, written in powers of z^-1 and run as causal
// difference equations from rest:
//   H1 = 1 / (z^2 - 0.6z + 0.36)                       minimum phase
//   H2 = (z^2 - 2.95z + 1.90) / (z^3 - 1.30z^2 + 1.05z - 0.325)   mixed
//   H3 = (z - 1.4) / (z^2 - 0.6z + 0.36)                maximum phase

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smfb/errors.hpp"
#include "smfb/signal_model.hpp"

namespace smfb::harness {

struct Rational {
  std::vector<double> b;  // numerator, b[k] multiplies x(n-k)
  std::vector<double> a;  // denominator, a[0] = 1
};

inline Rational named_filter(std::string_view name) {
  if (name == "H1") return {{0.0, 0.0, 1.0}, {1.0, -0.6, 0.36}};
  if (name == "H2") return {{0.0, 1.0, -2.95, 1.90}, {1.0, -1.30, 1.05, -0.325}};
  if (name == "H3") return {{0.0, 1.0, -1.4}, {1.0, -0.6, 0.36}};
  throw ConfigError("unknown filter '" + std::string(name) + "' (expected H1, H2 or H3)");
}

inline Signal<double> apply_filter(const Rational& h, std::span<const double> x) {
  Signal<double> y(x.size(), 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    double acc = 0;
    for (std::size_t k = 0; k < h.b.size() && k <= n; ++k) acc += h.b[k] * x[n - k];
    for (std::size_t k = 1; k < h.a.size() && k <= n; ++k) acc -= h.a[k] * y[n - k];
    y[n] = acc / h.a[0];
  }
  return y;
}

inline Signal<double> apply_named_filter(std::string_view name, std::span<const double> x) {
  return apply_filter(named_filter(name), x);
}

}  // namespace smfb::harness
