#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "smfb/errors.hpp"
#include "smfb/signal_model.hpp"

namespace smfb::harness {

enum class Excitation { gaussian, exponential, uniform };

inline Excitation parse_excitation(std::string_view s) {
  if (s == "gaussian") return Excitation::gaussian;
  if (s == "exponential") return Excitation::exponential;
  if (s == "uniform") return Excitation::uniform;
  throw ConfigError("unknown excitation '" + std::string(s) + "'");
}

inline const char* to_string(Excitation e) {
  switch (e) {
    case Excitation::gaussian: return "gaussian";
    case Excitation::exponential: return "exponential";
    case Excitation::uniform: return "uniform";
  }
  return "?";
}

/// White noise: N(0, 1), exponential with mean 1.5, or uniform on [-1, 1].
/// Same kind, seed and length always give the same samples.
inline Signal<double> gen_excitation(Excitation kind, std::uint64_t seed, std::size_t length) {
  if (length == 0) throw ConfigError("excitation length must be positive");
  std::mt19937_64 rng(seed);
  Signal<double> x(length);
  switch (kind) {
    case Excitation::gaussian: {
      std::normal_distribution<double> d(0.0, 1.0);
      for (auto& v : x) v = d(rng);
      break;
    }
    case Excitation::exponential: {
      std::exponential_distribution<double> d(1.0 / 1.5);
      for (auto& v : x) v = d(rng);
      break;
    }
    case Excitation::uniform: {
      std::uniform_real_distribution<double> d(-1.0, 1.0);
      for (auto& v : x) v = d(rng);
      break;
    }
  }
  return x;
}

inline Signal<double> gen_excitation(std::string_view kind, std::uint64_t seed, std::size_t length) {
  return gen_excitation(parse_excitation(kind), seed, length);
}

/// Subtracts the sample mean; returns the amount removed.
inline double remove_mean(Signal<double>& x) {
  if (x.empty()) return 0.0;
  double m = 0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  for (double& v : x) v -= m;
  return m;
}

}  // namespace smfb::harness
