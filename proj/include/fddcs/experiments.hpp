#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fddcs/channel.hpp"
#include "fddcs/protocol.hpp"

namespace fddcs {

/// One comparison arm of a sweep. Pilot counts left at 0 are derived from `eta`.
struct ArmConfig {
  Scheme scheme = Scheme::DifferentialJoint;
  Solver solver = Solver::SCoSaMP;
  double eta = 0.4;
  int initial_pilots = 0;
  int pilots = 0;
};

struct ExperimentConfig {
  ChannelParams channel;
  int n = 2048;
  double eta = 0.4;
  /// P^0 / P for differential arms sized from eta.
  double init_scale = 2.0;
  ProtocolConfig protocol;
  /// 0 selects K = round(activity * taps).
  int sparsity = 6;
  /// 0 estimates K' from the channel model (see estimate_diff_sparsity).
  int diff_sparsity = 0;
  double diff_quantile = 0.9;
  double diff_significance = 0.1;
  int diff_samples = 10000;
  std::vector<ArmConfig> arms;
  std::vector<double> snr_db{10, 15, 20, 25, 30};
  int trials = 100;
  int users = 1;
  std::uint64_t seed = 1;
  std::string output_path;
  bool exclude_init_slots = false;

  void validate() const;
};

/// Pilot counts and overhead resolved for one arm.
struct ResolvedArm {
  ArmConfig arm;
  int initial_pilots = 0;
  int pilots = 0;
  double eta = 0.0;  // achieved average overhead
};

struct ResultRow {
  std::string scheme;
  std::string solver;
  double snr_db = 0.0;
  double eta = 0.0;
  double nmse = 0.0;
  double nmse_db = 0.0;
  double rate = 0.0;
  int trials = 0;
  double ci95 = 0.0;       // NMSE confidence half-width, written to the CSV
  double rate_ci95 = 0.0;  // kept in memory for rate comparisons
  std::string config_hash;
  /// Per-trial means in trial order, for paired comparisons.
  std::vector<double> trial_nmse;
  std::vector<double> trial_rate;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<ResolvedArm> arms;
  int sparsity = 0;
  int diff_sparsity = 0;
  DiffSparsityEstimate diff_estimate;
  std::string config_hash;
};

/// Desk-scale profile: N=256, M=8, L=32, K=5, and a conventional CoSaMP arm at
/// eta=0.7 next to the differential one. Other values as in the full-scale setup.
ExperimentConfig desk_profile();
/// Full-scale profile: N=2048, M=32, L=64, mu=0.1, p01=0.16, f_d=10 Hz, tau=0.5 ms, R=3, xi=1e-3.
ExperimentConfig paper_scale_profile();

/// Reads a JSON config on top of `base`. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc, ExperimentConfig base);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path, ExperimentConfig base);

/// FNV-1a over the canonical JSON of the config (output path excluded).
std::string config_hash(const ExperimentConfig& cfg);

ResolvedArm resolve_arm(const ArmConfig& arm, const ExperimentConfig& cfg);

/// Runs every (arm, SNR) cell over `trials` paired channel realizations.
///
/// Trial j of every cell sees the same channel trajectory; noise streams are
/// keyed by (seed, SNR index, trial) and shared across arms. Work is spread
/// over FDDCS_THREADS threads (default: hardware concurrency); results do not
/// depend on the thread count.
SweepResult run_sweep(const ExperimentConfig& cfg);

struct CsvOptions {
  bool timestamp = true;
};

void write_csv(std::ostream& os, const SweepResult& result, const ExperimentConfig& cfg,
               const CsvOptions& opts);

inline constexpr const char* kCsvHeader =
    "scheme,solver,snr_db,eta,nmse,nmse_db,rate,trials,ci95,config_hash";

}  // namespace fddcs
