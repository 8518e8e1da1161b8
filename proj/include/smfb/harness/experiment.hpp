#pragma once

// Experiment runner behind the CLI: config loading, the four pipelines and
// their file outputs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "smfb/csv.hpp"
#include "smfb/errors.hpp"
#include "smfb/harness/excitation.hpp"
#include "smfb/harness/named_filters.hpp"
#include "smfb/lattice_engine.hpp"
#include "smfb/ls_oracle.hpp"
#include "smfb/param_extractor.hpp"
#include "smfb/signal_model.hpp"
#include "smfb/whitening.hpp"

namespace smfb::harness {

using json = nlohmann::ordered_json;

enum class Kind { generate, reconstruct, recover, verify };

inline Kind parse_kind(const std::string& s) {
  if (s == "generate") return Kind::generate;
  if (s == "reconstruct") return Kind::reconstruct;
  if (s == "recover") return Kind::recover;
  if (s == "verify") return Kind::verify;
  throw ConfigError("unknown experiment '" + s + "'");
}

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::generate: return "generate";
    case Kind::reconstruct: return "reconstruct";
    case Kind::recover: return "recover";
    case Kind::verify: return "verify";
  }
  return "?";
}

struct Thresholds {
  double nmse_db = -20.0;        // reconstruct
  double coefficient = 0.08;     // recover, absolute
  double residual_rel = 1e-8;    // verify
  double residual_abs = 1e-10;
  double coefficient_rel = 1e-6;
  double coefficient_abs = 1e-12;
};

struct ExperimentConfig {
  Kind experiment = Kind::reconstruct;
  std::size_t M = 2, N = 8, P = 8;
  double epsilon = 1e-12;
  double lambda = 1.0;
  std::string excitation = "gaussian";
  std::uint64_t seed = 1;
  std::string filter = "H1";
  std::size_t samples = 10000;
  std::size_t cadence = 50;
  std::string outdir = "out";
  double gain = 1.0;    // excitation scale; 0 gives the degenerate zero-input run
  bool center = true;   // remove the mean of exponential excitation

  // verify sweep
  std::vector<std::size_t> sweep_m{1, 2, 3};
  std::size_t seeds = 20;
  std::size_t blocks = 16;
  double oracle_ridge = 1e-18;

  Thresholds thresholds;
  std::filesystem::path base_dir;  // relative filter paths resolve against this

  bool has_named_filter() const { return filter == "H1" || filter == "H2" || filter == "H3"; }

  std::filesystem::path filter_path() const {
    std::filesystem::path p(filter);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }

  void validate() const {
    EngineConfig{M, N, epsilon, lambda}.validate();
    if (experiment == Kind::reconstruct) WhitenerConfig{M, P, epsilon, lambda}.validate();
    if (experiment != Kind::verify) {
      parse_excitation(excitation);
      if (samples < 4 * M * N)
        throw ConfigError("samples = " + std::to_string(samples) + " is below 4*M*N = " +
                          std::to_string(4 * M * N));
      if (!has_named_filter() && !std::filesystem::exists(filter_path()))
        throw ConfigError("filter '" + filter + "' is neither H1/H2/H3 nor an existing file");
      if (experiment == Kind::recover && has_named_filter())
        throw ConfigError("recover needs a coefficient file as filter");
    }
    if (cadence < 1) throw ConfigError("cadence must be at least 1");
    if (!std::isfinite(gain)) throw ConfigError("gain must be finite");
    if (experiment == Kind::verify) {
      if (sweep_m.empty() || seeds == 0 || blocks == 0)
        throw ConfigError("verify sweep is empty");
      for (std::size_t m : sweep_m)
        if (m == 0) throw ConfigError("sweep contains M = 0");
      if (!(oracle_ridge >= 0.0)) throw ConfigError("oracle_ridge must be non-negative");
    }
  }
};

namespace detail {

template <class T>
void take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// Reads the keys experiment, M, N, P, epsilon, lambda, excitation, seed,
/// filter, samples, cadence, outdir (plus gain, center, sweep and
/// thresholds). Unknown keys are rejected so that typos do not pass
/// silently.
inline ExperimentConfig config_from_json(const json& j, std::filesystem::path base_dir = {}) {
  static const char* known[] = {"experiment", "M",      "N",       "P",      "epsilon",
                                "lambda",     "excitation", "seed", "filter", "samples",
                                "cadence",    "outdir", "gain",    "center", "sweep",
                                "thresholds"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (std::find_if(std::begin(known), std::end(known), [&](const char* s) { return k == s; }) ==
        std::end(known))
      throw ConfigError("unknown config key '" + k + "'");

  ExperimentConfig c;
  c.base_dir = std::move(base_dir);
  std::string kind = to_string(c.experiment);
  detail::take(j, "experiment", kind);
  c.experiment = parse_kind(kind);
  detail::take(j, "M", c.M);
  detail::take(j, "N", c.N);
  detail::take(j, "P", c.P);
  detail::take(j, "epsilon", c.epsilon);
  detail::take(j, "lambda", c.lambda);
  detail::take(j, "excitation", c.excitation);
  detail::take(j, "seed", c.seed);
  detail::take(j, "filter", c.filter);
  detail::take(j, "samples", c.samples);
  detail::take(j, "cadence", c.cadence);
  detail::take(j, "outdir", c.outdir);
  detail::take(j, "gain", c.gain);
  detail::take(j, "center", c.center);
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    detail::take(s, "M", c.sweep_m);
    detail::take(s, "seeds", c.seeds);
    detail::take(s, "blocks", c.blocks);
    detail::take(s, "oracle_ridge", c.oracle_ridge);
  }
  if (j.contains("thresholds")) {
    const json& t = j.at("thresholds");
    detail::take(t, "nmse_db", c.thresholds.nmse_db);
    detail::take(t, "coefficient", c.thresholds.coefficient);
    detail::take(t, "residual_rel", c.thresholds.residual_rel);
    detail::take(t, "residual_abs", c.thresholds.residual_abs);
    detail::take(t, "coefficient_rel", c.thresholds.coefficient_rel);
    detail::take(t, "coefficient_abs", c.thresholds.coefficient_abs);
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

inline json config_to_json(const ExperimentConfig& c) {
  return json{{"experiment", to_string(c.experiment)},
              {"M", c.M},
              {"N", c.N},
              {"P", c.P},
              {"epsilon", c.epsilon},
              {"lambda", c.lambda},
              {"excitation", c.excitation},
              {"seed", c.seed},
              {"filter", c.filter},
              {"samples", c.samples},
              {"cadence", c.cadence},
              {"outdir", c.outdir},
              {"gain", c.gain},
              {"center", c.center},
              {"sweep",
               {{"M", c.sweep_m},
                {"seeds", c.seeds},
                {"blocks", c.blocks},
                {"oracle_ridge", c.oracle_ridge}}},
              {"thresholds",
               {{"nmse_db", c.thresholds.nmse_db},
                {"coefficient", c.thresholds.coefficient},
                {"residual_rel", c.thresholds.residual_rel},
                {"residual_abs", c.thresholds.residual_abs},
                {"coefficient_rel", c.thresholds.coefficient_rel},
                {"coefficient_abs", c.thresholds.coefficient_abs}}}};
}

struct VerifyStats {
  std::size_t instances = 0;
  std::size_t residual_checks = 0, residual_failures = 0;
  std::size_t coefficient_checks = 0, coefficient_failures = 0;
  double residual_max_rel = 0;     // deviation / max(|a|, |b|, abs/rel)
  double coefficient_max_rel = 0;  // deviation / max(max|g|, abs/rel)
  std::vector<std::string> ill_conditioned;
};

struct ExperimentReport {
  Kind experiment = Kind::reconstruct;
  bool passed = true;
  std::vector<std::string> notes;
  std::vector<double> trace;  // per-block sum over bands of e^N squared
  std::optional<double> nmse_db;
  double seconds = 0;
  double per_sample_seconds = 0;
  OpCount engine_ops, extraction_ops;

  std::vector<double> x, xhat;  // reconstruct: aligned pair the NMSE uses
  std::optional<SerializedFilterSet<double>> serialized;
  std::optional<FilterBank<double>> truth, recovered;
  double max_abs_error = 0;

  VerifyStats verify;
  json convergence = json::array();
  json extra = json::object();
};

/// NMSE in dB of xhat against x over samples [from, end). Empty when the
/// reference has no energy there.
inline std::optional<double> nmse_db(std::span<const double> x, std::span<const double> xhat,
                                     std::size_t from) {
  double num = 0, den = 0;
  for (std::size_t n = from; n < x.size(); ++n) {
    num += (x[n] - xhat[n]) * (x[n] - xhat[n]);
    den += x[n] * x[n];
  }
  if (!(den > 0)) return std::nullopt;
  return 10.0 * std::log10(num / den);
}

namespace detail {

struct Drive {
  std::optional<SerializedFilterSet<double>> filters;
  std::vector<double> trace;
  json convergence = json::array();
  OpCount engine_ops, extraction_ops;
  double engine_seconds = 0;
  std::string note;
};

/// Feeds z and d block by block and extracts every `cadence` blocks and at
/// the end.
inline Drive drive(const ExperimentConfig& cfg, std::span<const double> z,
                   std::span<const double> d) {
  using clock = std::chrono::steady_clock;
  const std::size_t m = cfg.M, n = cfg.N, blocks = z.size() / m;
  LatticeEngine<double> eng({m, n, cfg.epsilon, cfg.lambda});
  Drive out;
  out.trace.reserve(blocks);
  std::vector<std::vector<double>> previous;
  for (std::size_t k = 0; k < blocks; ++k) {
    const auto t0 = clock::now();
    const auto& e = eng.step(z.subspan(m * k, m), d.subspan(m * k, m));
    out.engine_seconds += std::chrono::duration<double>(clock::now() - t0).count();
    double energy = 0;
    for (std::size_t i = 0; i < m; ++i) energy += e(i, n) * e(i, n);
    out.trace.push_back(energy);

    const std::size_t done = k + 1;
    if (done < n || (done % cfg.cadence != 0 && done != blocks)) continue;
    try {
      const auto ex = extract(eng.snapshot());
      out.extraction_ops += ex.ops();
      out.filters = ex.filters();
      std::vector<std::vector<double>> now = out.filters->rows();
      for (std::size_t i = 0; i < m; ++i) {
        json rec{{"block", done}, {"band", i}, {"coefficients", now[i]}};
        if (previous.empty()) {
          rec["max_abs_delta_vs_previous"] = nullptr;
        } else {
          double dmax = 0;
          for (std::size_t j = 0; j < n; ++j)
            dmax = std::max(dmax, std::abs(now[i][j] - previous[i][j]));
          rec["max_abs_delta_vs_previous"] = dmax;
        }
        out.convergence.push_back(std::move(rec));
      }
      previous = std::move(now);
      out.note.clear();
    } catch (const IllConditionedError& err) {
      out.note = std::string("extraction at block ") + std::to_string(done) + ": " + err.what();
    }
  }
  out.engine_ops = eng.ops();
  return out;
}

inline void prepare_outdir(const ExperimentConfig& cfg) {
  if (!cfg.outdir.empty()) std::filesystem::create_directories(cfg.outdir);
}

inline std::string out_path(const ExperimentConfig& cfg, const char* name) {
  return (std::filesystem::path(cfg.outdir) / name).string();
}

inline Signal<double> excitation_for(const ExperimentConfig& cfg, std::size_t length,
                                     ExperimentReport& rep) {
  auto e = gen_excitation(cfg.excitation, cfg.seed, length);
  if (cfg.center && parse_excitation(cfg.excitation) == Excitation::exponential) {
    const double shift = remove_mean(e);
    rep.notes.push_back("exponential excitation mean-shifted by " + csv::num(-shift));
  }
  if (cfg.gain != 1.0)
    for (double& v : e) v *= cfg.gain;
  return e;
}

/// Named filter, or a one-row coefficient file used as an FIR filter.
inline Signal<double> shape(const ExperimentConfig& cfg, std::span<const double> e) {
  if (cfg.has_named_filter()) return apply_named_filter(cfg.filter, e);
  const auto rows = csv::read_coefficient_rows(cfg.filter_path().string());
  if (rows.size() != 1)
    throw ConfigError("a coefficient file used as a single filter must have one row");
  return apply_filter(Rational{rows[0], {1.0}}, e);
}

}  // namespace detail

inline json report_to_json(const ExperimentReport& r, const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = to_string(r.experiment);
  j["passed"] = r.passed;
  j["config"] = config_to_json(cfg);
  j["notes"] = r.notes;
  j["seconds"] = r.seconds;
  j["per_sample_seconds"] = r.per_sample_seconds;
  j["engine_ops"] = {{"mul", r.engine_ops.mul}, {"add", r.engine_ops.add}, {"div", r.engine_ops.div}};
  j["extraction_ops"] = {
      {"mul", r.extraction_ops.mul}, {"add", r.extraction_ops.add}, {"div", r.extraction_ops.div}};
  if (r.experiment == Kind::reconstruct) {
    if (r.nmse_db)
      j["nmse_db"] = *r.nmse_db;
    else
      j["nmse_db"] = nullptr;
    j["nmse_window"] = {{"from", r.x.size() / 2}, {"to", r.x.size()}};
  }
  if (!r.trace.empty()) {
    j["final_residual_energy"] = r.trace.back();
    j["residual_energy_trace"] = r.trace;
  }
  if (r.serialized) j["serialized_filters"] = r.serialized->rows();
  if (r.truth) j["true_coefficients"] = r.truth->rows();
  if (r.recovered) {
    j["recovered_coefficients"] = r.recovered->rows();
    if (r.truth) {
      std::vector<std::vector<double>> err = r.recovered->rows();
      for (std::size_t i = 0; i < err.size(); ++i)
        for (std::size_t n = 0; n < err[i].size(); ++n)
          err[i][n] = std::abs(err[i][n] - (*r.truth)(i, n));
      j["absolute_errors"] = err;
      j["max_abs_error"] = r.max_abs_error;
    }
  }
  if (r.experiment == Kind::verify) {
    const VerifyStats& v = r.verify;
    j["verify"] = {{"instances", v.instances},
                   {"residual_checks", v.residual_checks},
                   {"residual_failures", v.residual_failures},
                   {"residual_max_rel_deviation", v.residual_max_rel},
                   {"coefficient_checks", v.coefficient_checks},
                   {"coefficient_failures", v.coefficient_failures},
                   {"coefficient_max_rel_deviation", v.coefficient_max_rel},
                   {"ill_conditioned", v.ill_conditioned}};
  }
  for (const auto& [k, v] : r.extra.items()) j[k] = v;
  return j;
}

inline void write_report(const ExperimentReport& r, const ExperimentConfig& cfg) {
  if (cfg.outdir.empty()) return;
  std::ofstream f(detail::out_path(cfg, "report.json"), std::ios::binary);
  if (!f) throw Error("cannot write report.json in " + cfg.outdir);
  f << report_to_json(r, cfg).dump(2) << '\n';
}

/// Excitation through the selected filter (signal.csv, excitation.csv), or,
/// with an M-row coefficient file, M white channels and their synthesis
/// (channels.csv, signal.csv).
inline ExperimentReport run_generate(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = Kind::generate;
  const auto t0 = std::chrono::steady_clock::now();
  detail::prepare_outdir(cfg);
  const bool bank_file =
      !cfg.has_named_filter() && csv::read_coefficient_rows(cfg.filter_path().string()).size() > 1;
  if (bank_file) {
    const auto bank = csv::read_filter_bank(cfg.filter_path().string());
    if (bank.channels() != cfg.M) throw ConfigError("coefficient file has a different M");
    const std::size_t k = cfg.samples / cfg.M;
    const auto e = detail::excitation_for(cfg, cfg.M * k, rep);
    std::vector<std::vector<double>> w(cfg.M);
    for (std::size_t i = 0; i < cfg.M; ++i) w[i].assign(e.begin() + i * k, e.begin() + (i + 1) * k);
    const ChannelInputs<double> inputs(std::move(w));
    const auto d = synthesize(bank, inputs);
    if (!cfg.outdir.empty()) {
      csv::write_channels(detail::out_path(cfg, "channels.csv"), inputs);
      csv::write_signal(detail::out_path(cfg, "signal.csv"), d);
    }
    rep.x = d;
  } else {
    const auto e = detail::excitation_for(cfg, cfg.samples, rep);
    const auto x = detail::shape(cfg, e);
    if (!cfg.outdir.empty()) {
      csv::write_signal(detail::out_path(cfg, "excitation.csv"), e);
      csv::write_signal(detail::out_path(cfg, "signal.csv"), x);
    }
    double mean = 0, var = 0;
    for (double v : e) mean += v;
    mean /= static_cast<double>(e.size());
    for (double v : e) var += (v - mean) * (v - mean);
    var /= static_cast<double>(e.size());
    rep.extra["excitation_mean"] = mean;
    rep.extra["excitation_variance"] = var;
    rep.x = x;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_report(rep, cfg);
  return rep;
}

/// Filter -> whiten -> interleave -> engine against d(n) = x(n - (M-1)) ->
/// extract -> resynthesize. NMSE is taken over the second half.
inline ExperimentReport run_reconstruct(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = Kind::reconstruct;
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t m = cfg.M;

  const auto e = detail::excitation_for(cfg, cfg.samples, rep);
  const auto x = detail::shape(cfg, e);
  const auto wh = whiten_detailed<double>(x, {m, cfg.P, cfg.epsilon, cfg.lambda, true});
  rep.notes.push_back("whitened channels scaled to unit variance");
  const auto z = interleave(wh.channels);
  const std::size_t len = z.size();

  std::vector<double> d(len, 0.0);
  for (std::size_t n = m - 1; n < len; ++n) d[n] = x[n - (m - 1)];

  auto run = detail::drive(cfg, z.samples(), d);
  rep.trace = std::move(run.trace);
  rep.convergence = std::move(run.convergence);
  rep.engine_ops = run.engine_ops;
  rep.extraction_ops = run.extraction_ops;
  if (!run.note.empty()) rep.notes.push_back(run.note);

  std::vector<double> est(len, 0.0);
  if (run.filters) {
    est = synthesize_serialized(*run.filters, z);
    rep.serialized = run.filters;
  } else {
    rep.notes.push_back("no extraction succeeded; estimate is zero");
  }
  // Row n pairs x(n) with its estimate, which the bank produces M-1 later.
  const std::size_t rows = len - (m - 1);
  rep.x.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(rows));
  rep.xhat.assign(est.begin() + static_cast<std::ptrdiff_t>(m - 1), est.end());
  rep.nmse_db = nmse_db(rep.x, rep.xhat, rows / 2);
  if (!rep.nmse_db) rep.notes.push_back("NMSE undefined: reference window has zero energy");
  rep.passed = !rep.nmse_db || *rep.nmse_db <= cfg.thresholds.nmse_db;

  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.per_sample_seconds = run.engine_seconds / static_cast<double>(len);
  if (!cfg.outdir.empty()) {
    detail::prepare_outdir(cfg);
    csv::write_trace(detail::out_path(cfg, "trace.csv"), rep.trace);
    csv::write_signals(detail::out_path(cfg, "signals.csv"), rep.x, rep.xhat);
    if (rep.serialized) csv::write_coefficients(detail::out_path(cfg, "coefficients.csv"), *rep.serialized);
    std::ofstream f(detail::out_path(cfg, "convergence.jsonl"), std::ios::binary);
    for (const auto& rec : rep.convergence) f << rec.dump() << '\n';
    write_report(rep, cfg);
  }
  return rep;
}

/// White channels -> true bank -> engine on (interleaved w, d) -> extract ->
/// deserialize, compared coefficient by coefficient with the truth.
inline ExperimentReport run_recover(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = Kind::recover;
  const auto t0 = std::chrono::steady_clock::now();
  const auto bank = csv::read_filter_bank(cfg.filter_path().string());
  if (bank.channels() != cfg.M || bank.length() != cfg.N)
    throw ConfigError("coefficient file is " + std::to_string(bank.channels()) + " x " +
                      std::to_string(bank.length()) + ", config asks for M = " +
                      std::to_string(cfg.M) + ", N = " + std::to_string(cfg.N));
  rep.truth = bank;

  const std::size_t k = cfg.samples / cfg.M;
  const auto e = detail::excitation_for(cfg, cfg.M * k, rep);
  std::vector<std::vector<double>> w(cfg.M);
  for (std::size_t i = 0; i < cfg.M; ++i) w[i].assign(e.begin() + i * k, e.begin() + (i + 1) * k);
  const ChannelInputs<double> inputs(std::move(w));
  const auto d = synthesize(bank, inputs);
  const auto z = interleave(inputs);

  auto run = detail::drive(cfg, z.samples(), d);
  rep.trace = std::move(run.trace);
  rep.convergence = std::move(run.convergence);
  rep.engine_ops = run.engine_ops;
  rep.extraction_ops = run.extraction_ops;
  if (!run.note.empty()) rep.notes.push_back(run.note);
  if (!run.filters) {
    rep.passed = false;
    rep.notes.push_back("no extraction succeeded");
  } else {
    rep.serialized = run.filters;
    rep.recovered = deserialize_filters(*run.filters);
    for (std::size_t i = 0; i < cfg.M; ++i)
      for (std::size_t n = 0; n < cfg.N; ++n)
        rep.max_abs_error =
            std::max(rep.max_abs_error, std::abs((*rep.recovered)(i, n) - bank(i, n)));
    rep.passed = rep.max_abs_error <= cfg.thresholds.coefficient;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.per_sample_seconds = run.engine_seconds / static_cast<double>(z.size());
  if (!cfg.outdir.empty()) {
    detail::prepare_outdir(cfg);
    csv::write_trace(detail::out_path(cfg, "trace.csv"), rep.trace);
    if (rep.recovered) csv::write_coefficients(detail::out_path(cfg, "coefficients.csv"), *rep.recovered);
    std::ofstream f(detail::out_path(cfg, "convergence.jsonl"), std::ios::binary);
    for (const auto& rec : rep.convergence) f << rec.dump() << '\n';
    write_report(rep, cfg);
  }
  return rep;
}

/// Random instances over M in the sweep, N in {M, 2M}: every residual
/// e^p(t - i) against the brute-force projection, and, once N blocks are
/// in, every extracted coefficient against the normal-equation solution.
inline ExperimentReport run_verify(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = Kind::verify;
  const auto t0 = std::chrono::steady_clock::now();
  VerifyStats& v = rep.verify;
  const Thresholds& th = cfg.thresholds;
  const OracleOptions oracle{cfg.oracle_ridge};
  std::size_t samples = 0;

  for (std::size_t m : cfg.sweep_m) {
    for (std::size_t n : {m, 2 * m}) {
      for (std::size_t s = 0; s < cfg.seeds; ++s) {
        ++v.instances;
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(m),
                          static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(s)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> nd;
        const std::size_t len = m * cfg.blocks;
        std::vector<double> z(len), d(len);
        for (double& x : z) x = nd(rng);
        for (double& x : d) x = nd(rng);
        samples += len;
        try {
          LatticeEngine<double> eng({m, n, cfg.epsilon, cfg.lambda});
          for (std::size_t k = 0; k < cfg.blocks; ++k) {
            const auto& e = eng.step(std::span<const double>(z).subspan(m * k, m),
                                     std::span<const double>(d).subspan(m * k, m));
            const std::size_t t = m * k + m - 1;
            for (std::size_t p = 1; p <= n; ++p) {
              const auto zm = build_data_matrix<double>(z, p, t, m);
              for (std::size_t i = 0; i < m; ++i) {
                const double r = project_residual(desired_row<double>(d, zm, i), zm, oracle);
                const double dev = std::abs(r - e(i, p));
                const double scale =
                    std::max({std::abs(r), std::abs(e(i, p)), th.residual_abs / th.residual_rel});
                const double rel = dev / scale;
                ++v.residual_checks;
                if (!(rel <= th.residual_rel)) ++v.residual_failures;
                v.residual_max_rel = std::max(v.residual_max_rel, std::isfinite(rel) ? rel : 1e300);
              }
            }
            if (k + 1 < n) continue;
            const auto ex = extract(eng.snapshot());
            const auto zm = build_data_matrix<double>(z, n, t, m);
            for (std::size_t i = 0; i < m; ++i) {
              const auto g = solve_coefficients(desired_row<double>(d, zm, i), zm, oracle);
              const auto& h = ex.coefficients(i, n);
              const double scale =
                  std::max(g.cwiseAbs().maxCoeff(), th.coefficient_abs / th.coefficient_rel);
              for (std::size_t j = 0; j < n; ++j) {
                const double rel = std::abs(g(static_cast<Eigen::Index>(j)) - h[j]) / scale;
                ++v.coefficient_checks;
                if (!(rel <= th.coefficient_rel)) ++v.coefficient_failures;
                v.coefficient_max_rel =
                    std::max(v.coefficient_max_rel, std::isfinite(rel) ? rel : 1e300);
              }
            }
          }
        } catch (const IllConditionedError& err) {
          v.ill_conditioned.push_back("M=" + std::to_string(m) + " N=" + std::to_string(n) +
                                      " seed=" + std::to_string(s) + ": " + err.what());
        }
      }
    }
  }
  rep.passed = v.residual_failures == 0 && v.coefficient_failures == 0;
  if (!v.ill_conditioned.empty())
    rep.notes.push_back(std::to_string(v.ill_conditioned.size()) +
                        " instance(s) reported as ill-conditioned");
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.per_sample_seconds = rep.seconds / static_cast<double>(std::max<std::size_t>(samples, 1));
  if (!cfg.outdir.empty()) {
    detail::prepare_outdir(cfg);
    write_report(rep, cfg);
  }
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case Kind::generate: return run_generate(cfg);
    case Kind::reconstruct: return run_reconstruct(cfg);
    case Kind::recover: return run_recover(cfg);
    case Kind::verify: return run_verify(cfg);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace smfb::harness
