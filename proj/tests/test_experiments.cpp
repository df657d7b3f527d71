#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "fddcs/experiments.hpp"
#include "fddcs/metrics.hpp"

using namespace fddcs;
using nlohmann::json;

namespace {

ComplexVector random_vector(int n, Rng& rng) {
  ComplexVector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.complex_normal();
  return v;
}

// Rate by direct summation over subcarriers, written from the metric's definition.
double rate_oracle(const ComplexVector& truth, const ComplexVector& est, double snr, int n, int m) {
  const int taps = static_cast<int>(truth.size()) / m;
  double total = 0;
  for (int k = 0; k < n; ++k) {
    ComplexVector ht(m), he(m);
    for (int a = 0; a < m; ++a) {
      Complex st{0, 0}, se{0, 0};
      for (int l = 0; l < taps; ++l) {
        const Complex w = std::polar(1.0 / std::sqrt(double(n)), -2.0 * std::numbers::pi * k * l / n);
        st += truth(a * taps + l) * w;
        se += est(a * taps + l) * w;
      }
      ht(a) = st;
      he(a) = se;
    }
    if (he.norm() == 0) continue;
    total += std::log2(1.0 + snr * std::norm(ht.dot(he) / he.norm()));
  }
  return total / n;
}

ExperimentConfig tiny_config() {
  ExperimentConfig cfg = desk_profile();
  cfg.trials = 4;
  cfg.snr_db = {10.0, 20.0};
  cfg.diff_samples = 500;
  cfg.protocol.slots = 4;
  return cfg;
}

std::string csv_of(const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_csv(os, run_sweep(cfg), cfg, CsvOptions{false});
  return os.str();
}

}  // namespace

TEST(Nmse, Examples) {
  Rng rng(1);
  const ComplexVector h = random_vector(10, rng);
  EXPECT_EQ(nmse(h, h), 0.0);
  EXPECT_DOUBLE_EQ(nmse(ComplexVector::Zero(10), h), 1.0);
  EXPECT_NEAR(nmse(2.0 * h, h), 1.0, 1e-15);
  EXPECT_THROW(nmse(h, ComplexVector::Zero(10)), DegenerateInput);
  EXPECT_THROW(nmse(h, random_vector(9, rng)), InvalidInput);
  EXPECT_DOUBLE_EQ(nmse_db(0.1), -10.0);
  EXPECT_DOUBLE_EQ(nmse_db(0.0), -200.0);
  EXPECT_DOUBLE_EQ(nmse_db(1e-30), -200.0);
}

TEST(CirToFreq, ImpulseFlatZeroAndParseval) {
  ComplexVector delta = ComplexVector::Zero(8);
  delta(0) = 1.0;
  const ComplexVector flat = cir_to_freq(delta, 64);
  for (int k = 0; k < 64; ++k) EXPECT_NEAR(std::abs(flat(k) - 0.125), 0.0, 1e-15);
  EXPECT_EQ(cir_to_freq(ComplexVector::Zero(8), 64), ComplexVector::Zero(64));
  Rng rng(2);
  const ComplexVector h = random_vector(16, rng);
  EXPECT_NEAR(cir_to_freq(h, 128).squaredNorm(), h.squaredNorm(), 1e-12);
  EXPECT_THROW(cir_to_freq(h, 8), InvalidInput);
}

TEST(Rate, MatchesOracleAndBounds) {
  Rng rng(3);
  const int n = 64, m = 3, taps = 8;
  const ComplexVector h = random_vector(m * taps, rng);
  const ComplexVector e = h + 0.5 * random_vector(m * taps, rng);
  const double perfect = achievable_rate(h, h, 10.0, n, m);
  const double mismatch = achievable_rate(h, e, 10.0, n, m);
  EXPECT_NEAR(mismatch, rate_oracle(h, e, 10.0, n, m), 1e-12);
  EXPECT_NEAR(perfect, rate_oracle(h, h, 10.0, n, m), 1e-12);
  EXPECT_GT(mismatch, 0.0);
  EXPECT_LT(mismatch, perfect);
  EXPECT_EQ(achievable_rate(h, ComplexVector::Zero(m * taps), 10.0, n, m), 0.0);
  const RateMetric metric(n, taps);
  EXPECT_NEAR(metric(h, e, 10.0, m), mismatch, 1e-12);
}

TEST(Rate, OrthogonalEstimateGivesZero) {
  // Antenna 1 carries the truth, antenna 2 the estimate: responses are orthogonal everywhere.
  const int n = 32, taps = 4;
  ComplexVector h = ComplexVector::Zero(2 * taps), e = ComplexVector::Zero(2 * taps);
  h(0) = 1.0;
  h(2) = Complex(0, 1);
  e(taps + 1) = 2.0;
  EXPECT_NEAR(achievable_rate(h, e, 100.0, n, 2), 0.0, 1e-14);
}

TEST(Summary, CompensatedSumAndOrderInvariance) {
  CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  EXPECT_EQ(s.value(), 1.0);

  std::mt19937_64 gen(4);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> x(5000);
  for (auto& v : x) v = std::exp(5 * dist(gen));
  const SampleSummary a = summarize(x);
  std::shuffle(x.begin(), x.end(), gen);
  const SampleSummary b = summarize(x);
  EXPECT_NEAR(a.mean, b.mean, 1e-12 * std::abs(a.mean));
  EXPECT_NEAR(a.ci95, b.ci95, 1e-9 * a.ci95);
}

TEST(Summary, MeanAndCi) {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const SampleSummary s = summarize(x);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.ci95, 1.96 * std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(s.count, 4u);
  const std::vector<double> one{7.0};
  EXPECT_EQ(summarize(one).ci95, 0.0);
}

TEST(Config, ProfilesHaveExpectedShape) {
  const ExperimentConfig paper = paper_scale_profile();
  EXPECT_EQ(paper.n, 2048);
  EXPECT_EQ(paper.channel.antennas, 32);
  EXPECT_EQ(paper.channel.taps, 64);
  EXPECT_EQ(paper.protocol.reinit_period, 3);
  EXPECT_DOUBLE_EQ(paper.protocol.tolerance, 1e-3);
  EXPECT_NO_THROW(paper.validate());
  const ExperimentConfig desk = desk_profile();
  EXPECT_EQ(desk.n, 256);
  EXPECT_EQ(desk.channel.antennas, 8);
  EXPECT_EQ(desk.channel.taps, 32);
  EXPECT_NO_THROW(desk.validate());
}

TEST(Config, JsonRoundTripKeepsHash) {
  ExperimentConfig cfg = desk_profile();
  cfg.seed = 99;
  cfg.snr_db = {5, 10};
  const json doc = config_to_json(cfg);
  const ExperimentConfig back = config_from_json(doc, paper_scale_profile());
  EXPECT_EQ(config_hash(back), config_hash(cfg));
  ExperimentConfig other = cfg;
  other.seed = 100;
  EXPECT_NE(config_hash(other), config_hash(cfg));
  other = cfg;
  other.output_path = "somewhere.csv";
  EXPECT_EQ(config_hash(other), config_hash(cfg));
}

TEST(Config, ParsesOverridesAndAuto) {
  const json doc = json::parse(R"({
    "profile": "desk",
    "protocol": {"sparsity": "auto", "diff_sparsity": 2, "aggregation": "literal-sum"},
    "arms": [{"scheme": "nondifferential-joint", "solver": "omp", "eta": 0.5}],
    "snr_db": [0, 3], "trials": 7, "seed": 12
  })");
  const ExperimentConfig cfg = config_from_json(doc, paper_scale_profile());
  EXPECT_EQ(cfg.n, 256);
  EXPECT_EQ(cfg.sparsity, 0);
  EXPECT_EQ(cfg.diff_sparsity, 2);
  EXPECT_EQ(cfg.protocol.aggregation, Aggregation::LiteralSum);
  ASSERT_EQ(cfg.arms.size(), 1u);
  EXPECT_EQ(cfg.arms[0].solver, Solver::OMP);
  EXPECT_EQ(cfg.trials, 7);
  EXPECT_EQ(cfg.seed, 12u);
  EXPECT_EQ(cfg.snr_db, (std::vector<double>{0, 3}));
}

TEST(Config, RejectsBadDocuments) {
  const ExperimentConfig base = desk_profile();
  for (const char* text : {
           R"({"trails": 3})",
           R"({"channel": {"antenna": 3}})",
           R"({"trials": "many"})",
           R"({"trials": 0})",
           R"({"profile": "huge"})",
           R"({"arms": [{"scheme": "magic"}]})",
           R"({"arms": [{"solver": "lasso"}]})",
           R"({"arms": []})",
           R"({"channel": {"activity": 1.5}})",
           R"({"protocol": {"sparsity": 40}})",
           R"({"snr_db": []})",
       }) {
    EXPECT_THROW(config_from_json(json::parse(text), base).validate(), InvalidInput) << text;
  }
  EXPECT_THROW(load_config("/nonexistent/config.json", base), InvalidInput);
}

TEST(Arms, PilotCountsFollowOverhead) {
  ExperimentConfig cfg = desk_profile();
  const ResolvedArm diff = resolve_arm({Scheme::DifferentialJoint, Solver::SCoSaMP, 0.4, 0, 0}, cfg);
  // eta = (2P + 2P) / (3 * 256) = 0.4 -> P = 76.8 -> 77, P0 = 154.
  EXPECT_EQ(diff.pilots, 77);
  EXPECT_EQ(diff.initial_pilots, 154);
  EXPECT_NEAR(diff.eta, (154.0 + 2 * 77.0) / 768.0, 1e-15);
  const ResolvedArm conv = resolve_arm({Scheme::ConventionalSeparate, Solver::CoSaMP, 0.7, 0, 0}, cfg);
  EXPECT_EQ(conv.pilots, 179);
  EXPECT_EQ(conv.initial_pilots, 179);
  const ResolvedArm fixed = resolve_arm({Scheme::DifferentialJoint, Solver::SCoSaMP, 0.4, 120, 60}, cfg);
  EXPECT_EQ(fixed.pilots, 60);
  EXPECT_EQ(fixed.initial_pilots, 120);
  EXPECT_THROW(resolve_arm({Scheme::DifferentialJoint, Solver::SCoSaMP, 0.4, 50, 60}, cfg), InvalidInput);
  EXPECT_THROW(resolve_arm({Scheme::NondifferentialJoint, Solver::SCoSaMP, 1.5, 0, 0}, cfg), InvalidInput);
}

TEST(Sweep, RowsCoverEveryCell) {
  ExperimentConfig cfg = tiny_config();
  const SweepResult r = run_sweep(cfg);
  ASSERT_EQ(r.rows.size(), cfg.arms.size() * cfg.snr_db.size());
  for (const auto& row : r.rows) {
    EXPECT_GE(row.nmse, 0.0);
    EXPECT_GE(row.ci95, 0.0);
    EXPECT_EQ(row.trials, 4);
    EXPECT_EQ(row.trial_nmse.size(), 4u);
    EXPECT_EQ(row.config_hash, config_hash(cfg));
  }
  EXPECT_GE(r.diff_sparsity, 1);
  EXPECT_LE(r.diff_sparsity, r.sparsity);
}

TEST(Sweep, CsvIsDeterministicAcrossThreadCounts) {
  const ExperimentConfig cfg = tiny_config();
  setenv("FDDCS_THREADS", "1", 1);
  const std::string one = csv_of(cfg);
  setenv("FDDCS_THREADS", "4", 1);
  const std::string four = csv_of(cfg);
  unsetenv("FDDCS_THREADS");
  EXPECT_EQ(one, four);
  EXPECT_NE(one.find(kCsvHeader), std::string::npos);
  EXPECT_EQ(one.find("# generated"), std::string::npos);
}

TEST(Sweep, CsvHasOneRowPerCellAndTimestampOnRequest) {
  const ExperimentConfig cfg = tiny_config();
  const SweepResult r = run_sweep(cfg);
  std::ostringstream os;
  write_csv(os, r, cfg, CsvOptions{true});
  const std::string text = os.str();
  EXPECT_NE(text.find("# generated "), std::string::npos);
  std::istringstream in(text);
  std::string line;
  int data = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (line == kCsvHeader) {
      header = true;
      continue;
    }
    ++data;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9);
  }
  EXPECT_TRUE(header);
  EXPECT_EQ(data, static_cast<int>(r.rows.size()));
}

TEST(Sweep, PairedArmsShareChannelDraws) {
  // Two identical arms must give identical per-trial results.
  ExperimentConfig cfg = tiny_config();
  cfg.arms = {ArmConfig{Scheme::NondifferentialJoint, Solver::SCoSaMP, 0.4, 0, 0},
              ArmConfig{Scheme::NondifferentialJoint, Solver::SCoSaMP, 0.4, 0, 0}};
  const SweepResult r = run_sweep(cfg);
  EXPECT_EQ(r.rows[0].trial_nmse, r.rows[2].trial_nmse);
  EXPECT_EQ(r.rows[1].trial_rate, r.rows[3].trial_rate);
}
