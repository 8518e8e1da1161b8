#pragma once

// Plain CSV readers and writers for the file formats the CLI exchanges.
// Numbers are written with 17 significant digits so they read back exactly.

#include <cstddef>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "smfb/errors.hpp"
#include "smfb/signal_model.hpp"

namespace smfb::csv {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  return f;
}

inline std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline double parse(const std::string& s, const std::string& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (s.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + s + "' in " + path);
  }
}

}  // namespace detail

/// Header `channel,c0,...,c{N-1}`, one row per channel.
template <class Bank>
void write_coefficients(const std::string& path, const Bank& bank) {
  auto f = detail::open_out(path);
  f << "channel";
  for (std::size_t n = 0; n < bank.length(); ++n) f << ",c" << n;
  f << '\n';
  for (std::size_t i = 0; i < bank.channels(); ++i) {
    f << i;
    for (double v : bank[i]) f << ',' << num(v);
    f << '\n';
  }
}

inline std::vector<std::vector<double>> read_coefficient_rows(const std::string& path) {
  const auto rows = detail::read_rows(path);
  if (rows.size() < 2 || rows[0].empty() || rows[0][0] != "channel")
    throw ConfigError(path + ": expected a 'channel,c0,...' header and at least one row");
  std::vector<std::vector<double>> out(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw ConfigError(path + ": ragged row");
    if (static_cast<std::size_t>(detail::parse(rows[r][0], path)) != r - 1)
      throw ConfigError(path + ": channels must be listed in order from 0");
    for (std::size_t c = 1; c < rows[r].size(); ++c)
      out[r - 1].push_back(detail::parse(rows[r][c], path));
  }
  return out;
}

inline FilterBank<double> read_filter_bank(const std::string& path) {
  try {
    return FilterBank<double>(read_coefficient_rows(path));
  } catch (const DimensionError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Header `n,value`.
inline void write_signal(const std::string& path, const std::vector<double>& x) {
  auto f = detail::open_out(path);
  f << "n,value\n";
  for (std::size_t n = 0; n < x.size(); ++n) f << n << ',' << num(x[n]) << '\n';
}

inline std::vector<double> read_signal(const std::string& path) {
  const auto rows = detail::read_rows(path);
  if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "n")
    throw ConfigError(path + ": expected an 'n,value' header");
  std::vector<double> x;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2) throw ConfigError(path + ": ragged row");
    x.push_back(detail::parse(rows[r][1], path));
  }
  return x;
}

/// Header `w0,...,w{M-1}`, one row per block.
inline void write_channels(const std::string& path, const ChannelInputs<double>& w) {
  auto f = detail::open_out(path);
  for (std::size_t i = 0; i < w.channels(); ++i) f << (i ? ",w" : "w") << i;
  f << '\n';
  for (std::size_t k = 0; k < w.blocks(); ++k) {
    for (std::size_t i = 0; i < w.channels(); ++i) f << (i ? "," : "") << num(w(i, k));
    f << '\n';
  }
}

inline ChannelInputs<double> read_channels(const std::string& path) {
  const auto rows = detail::read_rows(path);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "w0")
    throw ConfigError(path + ": expected a 'w0,...' header");
  std::vector<std::vector<double>> w(rows[0].size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != w.size()) throw ConfigError(path + ": ragged row");
    for (std::size_t i = 0; i < w.size(); ++i) w[i].push_back(detail::parse(rows[r][i], path));
  }
  return ChannelInputs<double>(std::move(w));
}

/// Header `block,residual_energy`.
inline void write_trace(const std::string& path, const std::vector<double>& energy) {
  auto f = detail::open_out(path);
  f << "block,residual_energy\n";
  for (std::size_t k = 0; k < energy.size(); ++k) f << k << ',' << num(energy[k]) << '\n';
}

/// Header `n,x,x_hat`.
inline void write_signals(const std::string& path, const std::vector<double>& x,
                          const std::vector<double>& xhat) {
  auto f = detail::open_out(path);
  f << "n,x,x_hat\n";
  for (std::size_t n = 0; n < x.size(); ++n)
    f << n << ',' << num(x[n]) << ',' << num(xhat[n]) << '\n';
}

struct SignalPair {
  std::vector<double> x, xhat;
};

inline SignalPair read_signals(const std::string& path) {
  const auto rows = detail::read_rows(path);
  if (rows.empty() || rows[0].size() != 3 || rows[0][0] != "n")
    throw ConfigError(path + ": expected an 'n,x,x_hat' header");
  SignalPair s;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 3) throw ConfigError(path + ": ragged row");
    s.x.push_back(detail::parse(rows[r][1], path));
    s.xhat.push_back(detail::parse(rows[r][2], path));
  }
  return s;
}

}  // namespace smfb::csv
