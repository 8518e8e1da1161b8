#include <gtest/gtest.h>

#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "smfb/harness/experiment.hpp"

using namespace smfb;
using namespace smfb::harness;
namespace fs = std::filesystem;

namespace {

double mean_of(const std::vector<double>& x) {
  double m = 0;
  for (double v : x) m += v;
  return m / static_cast<double>(x.size());
}

double var_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("smfb_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ExperimentConfig base(Kind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  c.base_dir = SMFB_CONFIG_DIR;
  c.outdir.clear();
  return c;
}

}  // namespace

TEST(Excitation, GaussianMoments) {
  const auto x = gen_excitation(Excitation::gaussian, 1, 100000);
  EXPECT_GE(mean_of(x), -0.02);
  EXPECT_LE(mean_of(x), 0.02);
  EXPECT_GE(var_of(x), 0.95);
  EXPECT_LE(var_of(x), 1.05);
}

TEST(Excitation, ExponentialMean) {
  const auto x = gen_excitation(Excitation::exponential, 2, 100000);
  EXPECT_GE(mean_of(x), 1.45);
  EXPECT_LE(mean_of(x), 1.55);
  EXPECT_NEAR(var_of(x), 2.25, 0.05 * 2.25);
  for (double v : x) EXPECT_GE(v, 0.0);
}

TEST(Excitation, UniformRange) {
  const auto x = gen_excitation(Excitation::uniform, 3, 100000);
  for (double v : x) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_NEAR(var_of(x), 1.0 / 3.0, 0.05 / 3.0);
}

TEST(Excitation, SeedDeterminesSamples) {
  EXPECT_EQ(gen_excitation("uniform", 9, 50), gen_excitation("uniform", 9, 50));
  EXPECT_NE(gen_excitation("uniform", 9, 50), gen_excitation("uniform", 10, 50));
  EXPECT_THROW(gen_excitation("laplace", 1, 10), ConfigError);
  EXPECT_THROW(gen_excitation("gaussian", 1, 0), ConfigError);
}

TEST(NamedFilters, FirstFilterImpulseResponse) {
  std::vector<double> impulse(6, 0.0);
  impulse[0] = 1.0;
  const auto h = apply_named_filter("H1", impulse);
  EXPECT_EQ(h[0], 0.0);
  EXPECT_EQ(h[1], 0.0);
  EXPECT_DOUBLE_EQ(h[2], 1.0);
  EXPECT_DOUBLE_EQ(h[3], 0.6);
  EXPECT_NEAR(h[4], 0.0, 1e-15);
}

TEST(NamedFilters, ZeroInZeroOut) {
  const std::vector<double> zero(20, 0.0);
  for (const char* name : {"H1", "H2", "H3"})
    for (double v : apply_named_filter(name, zero)) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(apply_named_filter("H4", zero), ConfigError);
}

TEST(NamedFilters, SecondFilterDifferenceEquation) {
  const auto x = gen_excitation("gaussian", 4, 50);
  const auto y = apply_named_filter("H2", x);
  auto at = [](const std::vector<double>& v, long n) { return n < 0 ? 0.0 : v[n]; };
  for (long n = 0; n < 50; ++n) {
    const double want = 1.30 * at(y, n - 1) - 1.05 * at(y, n - 2) + 0.325 * at(y, n - 3) +
                        at(x, n - 1) - 2.95 * at(x, n - 2) + 1.90 * at(x, n - 3);
    EXPECT_NEAR(y[n], want, 1e-12);
  }
}

// Averaged periodogram of H3 driven by unit white noise against |H3|^2.
TEST(NamedFilters, ThirdFilterSpectrum) {
  const std::size_t len = 100000, seg = 256;
  const auto y = apply_named_filter("H3", gen_excitation("gaussian", 5, len));
  const std::size_t segs = len / seg;
  for (std::size_t bin = 4; bin < seg / 2; bin += 12) {
    const double w = 2 * std::numbers::pi * static_cast<double>(bin) / seg;
    double power = 0;
    for (std::size_t s = 0; s < segs; ++s) {
      std::complex<double> acc = 0;
      for (std::size_t n = 0; n < seg; ++n)
        acc += y[s * seg + n] * std::polar(1.0, -w * static_cast<double>(n));
      power += std::norm(acc) / seg;
    }
    power /= static_cast<double>(segs);
    const std::complex<double> zi = std::polar(1.0, -w);  // z^-1
    const auto h = (zi - 1.4 * zi * zi) / (1.0 - 0.6 * zi + 0.36 * zi * zi);
    EXPECT_NEAR(power / std::norm(h), 1.0, 0.2) << "bin " << bin;
  }
}

TEST(Config, ParsesKnownKeysAndRejectsOthers) {
  const auto c = config_from_json(json::parse(R"({"experiment":"recover","M":2,"N":4,
      "excitation":"uniform","filter":"bank_uniform.csv","sweep":{"seeds":3}})"));
  EXPECT_EQ(c.experiment, Kind::recover);
  EXPECT_EQ(c.N, 4u);
  EXPECT_EQ(c.excitation, "uniform");
  EXPECT_EQ(c.seeds, 3u);
  EXPECT_THROW(config_from_json(json::parse(R"({"samplez":10})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"M":"two"})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"experiment":"train"})")), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, ValidationCatchesBadSettings) {
  auto c = base(Kind::reconstruct);
  c.samples = 4 * c.M * c.N - 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = base(Kind::reconstruct);
  c.N = 7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = base(Kind::reconstruct);
  c.filter = "missing.csv";
  EXPECT_THROW(c.validate(), ConfigError);
  c = base(Kind::recover);
  c.filter = "H1";
  EXPECT_THROW(c.validate(), ConfigError);
  c = base(Kind::recover);
  c.filter = "bank_gaussian.csv";
  c.N = 4;
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ShippedConfigsLoad) {
  for (const auto& entry : fs::directory_iterator(SMFB_CONFIG_DIR))
    if (entry.path().extension() == ".json") {
      const auto c = load_config(entry.path());
      EXPECT_NO_THROW(c.validate()) << entry.path();
    }
}

TEST(Reconstruct, ReportMatchesEmittedSignals) {
  auto c = base(Kind::reconstruct);
  c.samples = 3000;
  c.outdir = scratch("reconstruct").string();
  const auto rep = run_reconstruct(c);
  ASSERT_TRUE(rep.nmse_db.has_value());
  const auto pair = csv::read_signals((fs::path(c.outdir) / "signals.csv").string());
  const auto again = nmse_db(pair.x, pair.xhat, pair.x.size() / 2);
  ASSERT_TRUE(again.has_value());
  EXPECT_NEAR(*again, *rep.nmse_db, 1e-9);

  const auto j = json::parse(slurp(fs::path(c.outdir) / "report.json"));
  EXPECT_NEAR(j["nmse_db"].get<double>(), *rep.nmse_db, 1e-9);
  for (const char* f : {"trace.csv", "signals.csv", "coefficients.csv", "convergence.jsonl"})
    EXPECT_TRUE(fs::exists(fs::path(c.outdir) / f)) << f;
}

TEST(Reconstruct, OutputsAreByteIdenticalAcrossRuns) {
  auto c = base(Kind::reconstruct);
  c.samples = 2000;
  c.excitation = "exponential";
  c.filter = "H3";
  c.outdir = scratch("det_a").string();
  run_reconstruct(c);
  const std::string a = c.outdir;
  c.outdir = scratch("det_b").string();
  run_reconstruct(c);
  for (const char* f : {"trace.csv", "signals.csv", "coefficients.csv", "convergence.jsonl"})
    EXPECT_EQ(slurp(fs::path(a) / f), slurp(fs::path(c.outdir) / f)) << f;
}

TEST(Reconstruct, ZeroInputReportsUndefinedNmse) {
  auto c = base(Kind::reconstruct);
  c.samples = 1000;
  c.gain = 0.0;
  const auto rep = run_reconstruct(c);
  EXPECT_FALSE(rep.nmse_db.has_value());
  for (double e : rep.trace) EXPECT_EQ(e, 0.0);
  EXPECT_TRUE(rep.passed);
}

TEST(Reconstruct, ConvergenceLogHasOneRecordPerBandAndExtraction) {
  auto c = base(Kind::reconstruct);
  c.samples = 1000;
  c.cadence = 100;
  const auto rep = run_reconstruct(c);
  // 500 blocks: extractions at 100, 200, ..., 500.
  ASSERT_EQ(rep.convergence.size(), 5u * c.M);
  EXPECT_TRUE(rep.convergence[0]["max_abs_delta_vs_previous"].is_null());
  EXPECT_TRUE(rep.convergence[2]["max_abs_delta_vs_previous"].is_number());
  EXPECT_EQ(rep.convergence[2]["block"].get<int>(), 200);
  EXPECT_EQ(rep.convergence[2]["coefficients"].size(), c.N);
}

TEST(Recover, GaussianBankWithinTolerance) {
  auto c = base(Kind::recover);
  c.N = 4;
  c.filter = "bank_gaussian.csv";
  const auto rep = run_recover(c);
  EXPECT_TRUE(rep.passed);
  EXPECT_LE(rep.max_abs_error, 0.08);
  ASSERT_TRUE(rep.recovered.has_value());
  EXPECT_EQ(rep.recovered->channels(), 2u);
}

TEST(Recover, MismatchedBankShapeIsAConfigError) {
  auto c = base(Kind::recover);
  c.N = 8;
  c.filter = "bank_gaussian.csv";
  EXPECT_THROW(run_recover(c), ConfigError);
}

TEST(Verify, SingleScalarInstanceIsExact) {
  auto c = base(Kind::verify);
  c.sweep_m = {1};
  c.seeds = 1;
  const auto rep = run_verify(c);
  EXPECT_TRUE(rep.passed);
  EXPECT_LT(rep.verify.residual_max_rel, 1e-10);
  EXPECT_EQ(rep.verify.instances, 2u);  // N = 1 and N = 2
}

TEST(Verify, ZeroEpsilonIsReportedNotThrown) {
  auto c = base(Kind::verify);
  c.epsilon = 0.0;
  c.sweep_m = {2};
  c.seeds = 2;
  ExperimentReport rep;
  ASSERT_NO_THROW(rep = run_verify(c));
  EXPECT_EQ(rep.verify.ill_conditioned.size(), 4u);
}

TEST(Generate, WritesSignalAndExcitation) {
  auto c = base(Kind::generate);
  c.filter = "H2";
  c.samples = 500;
  c.outdir = scratch("generate").string();
  const auto rep = run_generate(c);
  const auto x = csv::read_signal((fs::path(c.outdir) / "signal.csv").string());
  EXPECT_EQ(x, rep.x);
  EXPECT_EQ(x.size(), 500u);
}

TEST(Generate, BankFileGivesChannelsAndSynthesis) {
  auto c = base(Kind::generate);
  c.N = 4;
  c.filter = "bank_uniform.csv";
  c.samples = 400;
  c.excitation = "uniform";
  c.outdir = scratch("generate_bank").string();
  run_generate(c);
  const auto w = csv::read_channels((fs::path(c.outdir) / "channels.csv").string());
  const auto d = csv::read_signal((fs::path(c.outdir) / "signal.csv").string());
  const auto bank = csv::read_filter_bank((fs::path(SMFB_CONFIG_DIR) / "bank_uniform.csv").string());
  EXPECT_EQ(synthesize(bank, w), d);
}

TEST(Csv, CoefficientRoundTrip) {
  const fs::path p = scratch("coef.csv");
  const FilterBank<double> bank({{0.1, -2.5e-17}, {1.0 / 3.0, 7.0}});
  csv::write_coefficients(p.string(), bank);
  EXPECT_EQ(csv::read_filter_bank(p.string()), bank);
  EXPECT_EQ(slurp(p).substr(0, 14), "channel,c0,c1\n");
}
