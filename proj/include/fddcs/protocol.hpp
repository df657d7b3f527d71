#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "fddcs/channel.hpp"
#include "fddcs/numerics.hpp"
#include "fddcs/pilots.hpp"
#include "fddcs/recovery.hpp"
#include "fddcs/rng.hpp"

namespace fddcs {

enum class Scheme {
  DifferentialJoint,     // users echo pilots; BS recovers differential CIRs between re-inits
  NondifferentialJoint,  // users echo pilots; BS recovers the full CIR every slot
  ConventionalSeparate,  // user estimates, projects and feeds back its estimate
};

struct ProtocolConfig {
  int reinit_period = 3;  // R
  int slots = 9;          // T
  int sparsity = 6;       // K, for full CIR recoveries
  int diff_sparsity = 2;  // K', for differential recoveries
  Scheme scheme = Scheme::DifferentialJoint;
  Solver solver = Solver::SCoSaMP;
  double tolerance = 1e-3;
  int max_iters = 50;
  Aggregation aggregation = Aggregation::Energy;
  /// Shares of the aggregate noise power given to the downlink and the
  /// feedback link of the separate baseline.
  double downlink_noise_share = 0.5;
  double uplink_noise_share = 0.5;

  void validate(int taps) const;
  SCoSaMPConfig solver_config(int sparsity_level) const;
};

struct SlotTrace {
  int slot = 0;
  bool is_init = false;
  ComplexVector estimate;
  /// NaN when the true channel is zero and NMSE is undefined.
  double nmse = 0.0;
  int pilots_used = 0;
  /// Recovery threw; the previous estimate was carried forward.
  bool failed = false;

  bool has_nmse() const { return nmse == nmse; }
};

/// Re-initializes on slots t = 0 mod R using Omega^0 and sparsity K; between
/// re-inits recovers Delta h from y(t) - y(t-1) over Omega with sparsity K'
/// and accumulates it onto the previous estimate. After an init slot, y(t-1)
/// is the Omega restriction of the init measurement.
///
/// Slot t draws its noise from `noise.split(t)`.
std::vector<SlotTrace> run_differential_joint(std::span<const ChannelState> trajectory,
                                              const PilotScheme& scheme,
                                              const ProtocolConfig& cfg, double snr_linear,
                                              const Rng& noise);

/// Recovers h(t) from y(t) over Omega with sparsity K on every slot.
std::vector<SlotTrace> run_nondifferential_joint(std::span<const ChannelState> trajectory,
                                                 const PilotScheme& scheme,
                                                 const ProtocolConfig& cfg, double snr_linear,
                                                 const Rng& noise);

/// Downlink estimation at the user over Omega, analog feedback of a Gaussian
/// projection (P rows, unit expected row norm) of that estimate, and CS
/// recovery of the fed-back estimate at the BS. Both stages use cfg.solver.
std::vector<SlotTrace> run_conventional_separate(std::span<const ChannelState> trajectory,
                                                 const PilotScheme& scheme,
                                                 const ProtocolConfig& cfg, double snr_linear,
                                                 const Rng& noise);

std::vector<SlotTrace> run_protocol(std::span<const ChannelState> trajectory,
                                    const PilotScheme& scheme, const ProtocolConfig& cfg,
                                    double snr_linear, const Rng& noise);

/// (P^0 + P (R - 1)) / (R N).
double average_overhead(int initial_pilots, int pilots, int reinit_period, int n);

/// Projection used by the separate baseline: rows x (L*M) entries CN(0, 1/(L*M)).
MeasurementMatrix feedback_projection(int rows, int taps, int antennas, Rng& rng);

struct DiffSparsityEstimate {
  int k_diff = 1;              // chosen K'
  double mean_significant = 0; // mean count of significant differential taps
  double mean_exact = 0;       // mean count of taps where Delta h is nonzero at all
};

/// Samples slot-to-slot differential CIRs from the channel model and returns
/// the `quantile` of the number of delay taps whose antenna-summed energy
/// exceeds `significance * M * sigma_w^2` (at least 1).
DiffSparsityEstimate estimate_diff_sparsity(const ChannelParams& params, double quantile,
                                            int samples, double significance, Rng& rng);

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view name);

}  // namespace fddcs
