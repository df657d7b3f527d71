#include "fddcs/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fddcs/metrics.hpp"

namespace fddcs {

namespace {

constexpr std::uint64_t kProjectionStream = 0xfeedbac4ULL;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_zero(const ComplexVector& h) { return h.isZero(0.0); }

double slot_noise(const MeasurementMatrix& theta, const ComplexVector& h, double snr_linear) {
  return is_zero(h) ? 0.0 : noise_variance_per_measurement(theta, h, snr_linear);
}

double slot_nmse(const ComplexVector& estimate, const ComplexVector& truth) {
  return is_zero(truth) ? kNaN : nmse(estimate, truth);
}

void check_inputs(std::span<const ChannelState> trajectory, const PilotScheme& scheme,
                  const ProtocolConfig& cfg, double snr_linear) {
  cfg.validate(scheme.taps);
  if (trajectory.size() < static_cast<std::size_t>(cfg.slots)) {
    throw InvalidInput("protocol: trajectory has " + std::to_string(trajectory.size()) +
                       " slots, config needs " + std::to_string(cfg.slots));
  }
  const auto& first = trajectory.front();
  if (first.antennas() != scheme.antennas || first.taps() != scheme.taps) {
    throw InvalidInput("protocol: channel and pilot scheme disagree on M or L");
  }
  if (!(snr_linear > 0.0)) throw InvalidInput("protocol: SNR must be > 0");
}

ComplexVector restrict_rows(const ComplexVector& y, const std::vector<int>& rows) {
  ComplexVector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(rows[i]);
  return out;
}

}  // namespace

void ProtocolConfig::validate(int taps) const {
  if (reinit_period < 1) throw InvalidInput("protocol: reinit_period R must be >= 1");
  if (slots < 1) throw InvalidInput("protocol: slots T must be >= 1");
  if (!(diff_sparsity > 0 && diff_sparsity <= sparsity && sparsity <= taps)) {
    throw InvalidInput("protocol: need 0 < K' <= K <= L, got K'=" + std::to_string(diff_sparsity) +
                       ", K=" + std::to_string(sparsity) + ", L=" + std::to_string(taps));
  }
  if (!(downlink_noise_share >= 0.0 && uplink_noise_share >= 0.0)) {
    throw InvalidInput("protocol: noise shares must be >= 0");
  }
}

SCoSaMPConfig ProtocolConfig::solver_config(int sparsity_level) const {
  SCoSaMPConfig c;
  c.sparsity = sparsity_level;
  c.tolerance = tolerance;
  c.max_iters = max_iters;
  c.aggregation = aggregation;
  return c;
}

std::vector<SlotTrace> run_differential_joint(std::span<const ChannelState> trajectory,
                                              const PilotScheme& scheme,
                                              const ProtocolConfig& cfg, double snr_linear,
                                              const Rng& noise) {
  check_inputs(trajectory, scheme, cfg, snr_linear);
  const MeasurementMatrix theta0 = build_measurement(scheme, true);
  const MeasurementMatrix theta = build_measurement(scheme, false);
  const auto full_cfg = cfg.solver_config(cfg.sparsity);
  const auto diff_cfg = cfg.solver_config(cfg.diff_sparsity);

  std::vector<SlotTrace> out;
  out.reserve(static_cast<std::size_t>(cfg.slots));
  ComplexVector estimate = ComplexVector::Zero(theta.cols());
  ComplexVector previous_y;  // last observation over Omega

  for (int t = 0; t < cfg.slots; ++t) {
    const ComplexVector& h = trajectory[static_cast<std::size_t>(t)].cir;
    Rng slot_rng = noise.split(static_cast<std::uint64_t>(t));
    SlotTrace trace;
    trace.slot = t;
    trace.is_init = t % cfg.reinit_period == 0;

    if (trace.is_init) {
      const ComplexVector y0 = transmit(theta0, h, slot_noise(theta0, h, snr_linear), slot_rng);
      trace.pilots_used = static_cast<int>(theta0.rows());
      try {
        estimate = recover(cfg.solver, y0, theta0, full_cfg).estimate;
      } catch (const std::exception&) {
        trace.failed = true;
      }
      previous_y = restrict_rows(y0, scheme.subset_rows);
    } else {
      const ComplexVector y = transmit(theta, h, slot_noise(theta, h, snr_linear), slot_rng);
      trace.pilots_used = static_cast<int>(theta.rows());
      try {
        const ComplexVector delta_y = y - previous_y;
        estimate += recover(cfg.solver, delta_y, theta, diff_cfg).estimate;
      } catch (const std::exception&) {
        trace.failed = true;
      }
      previous_y = y;
    }
    trace.estimate = estimate;
    trace.nmse = slot_nmse(estimate, h);
    out.push_back(std::move(trace));
  }
  return out;
}

std::vector<SlotTrace> run_nondifferential_joint(std::span<const ChannelState> trajectory,
                                                 const PilotScheme& scheme,
                                                 const ProtocolConfig& cfg, double snr_linear,
                                                 const Rng& noise) {
  check_inputs(trajectory, scheme, cfg, snr_linear);
  const MeasurementMatrix theta = build_measurement(scheme, false);
  const auto full_cfg = cfg.solver_config(cfg.sparsity);

  std::vector<SlotTrace> out;
  out.reserve(static_cast<std::size_t>(cfg.slots));
  ComplexVector estimate = ComplexVector::Zero(theta.cols());
  for (int t = 0; t < cfg.slots; ++t) {
    const ComplexVector& h = trajectory[static_cast<std::size_t>(t)].cir;
    Rng slot_rng = noise.split(static_cast<std::uint64_t>(t));
    SlotTrace trace;
    trace.slot = t;
    trace.is_init = true;
    trace.pilots_used = static_cast<int>(theta.rows());
    const ComplexVector y = transmit(theta, h, slot_noise(theta, h, snr_linear), slot_rng);
    try {
      estimate = recover(cfg.solver, y, theta, full_cfg).estimate;
    } catch (const std::exception&) {
      trace.failed = true;
    }
    trace.estimate = estimate;
    trace.nmse = slot_nmse(estimate, h);
    out.push_back(std::move(trace));
  }
  return out;
}

MeasurementMatrix feedback_projection(int rows, int taps, int antennas, Rng& rng) {
  if (rows < 1 || taps < 1 || antennas < 1) throw InvalidInput("feedback_projection: bad dims");
  MeasurementMatrix phi;
  phi.taps = taps;
  phi.antennas = antennas;
  const Eigen::Index cols = static_cast<Eigen::Index>(taps) * antennas;
  const double var = 1.0 / static_cast<double>(cols);
  phi.theta.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) phi.theta(i, j) = rng.complex_normal(var);
  }
  if (cols <= kGramCacheMaxCols) attach_gram(phi);
  return phi;
}

std::vector<SlotTrace> run_conventional_separate(std::span<const ChannelState> trajectory,
                                                 const PilotScheme& scheme,
                                                 const ProtocolConfig& cfg, double snr_linear,
                                                 const Rng& noise) {
  check_inputs(trajectory, scheme, cfg, snr_linear);
  const MeasurementMatrix theta = build_measurement(scheme, false);
  Rng projection_rng = noise.split(kProjectionStream);
  const MeasurementMatrix phi =
      feedback_projection(static_cast<int>(theta.rows()), scheme.taps, scheme.antennas,
                          projection_rng);
  const auto full_cfg = cfg.solver_config(cfg.sparsity);

  std::vector<SlotTrace> out;
  out.reserve(static_cast<std::size_t>(cfg.slots));
  ComplexVector estimate = ComplexVector::Zero(theta.cols());
  for (int t = 0; t < cfg.slots; ++t) {
    const ComplexVector& h = trajectory[static_cast<std::size_t>(t)].cir;
    const Rng slot_rng = noise.split(static_cast<std::uint64_t>(t));
    Rng downlink_rng = slot_rng.split(0);
    Rng uplink_rng = slot_rng.split(1);
    SlotTrace trace;
    trace.slot = t;
    trace.is_init = true;
    trace.pilots_used = static_cast<int>(theta.rows());

    const double total = slot_noise(theta, h, snr_linear);
    const ComplexVector y = transmit(theta, h, cfg.downlink_noise_share * total, downlink_rng);
    try {
      const ComplexVector user_estimate = recover(cfg.solver, y, theta, full_cfg).estimate;
      const ComplexVector fed_back =
          transmit(phi, user_estimate, cfg.uplink_noise_share * total, uplink_rng);
      estimate = recover(cfg.solver, fed_back, phi, full_cfg).estimate;
    } catch (const std::exception&) {
      trace.failed = true;
    }
    trace.estimate = estimate;
    trace.nmse = slot_nmse(estimate, h);
    out.push_back(std::move(trace));
  }
  return out;
}

std::vector<SlotTrace> run_protocol(std::span<const ChannelState> trajectory,
                                    const PilotScheme& scheme, const ProtocolConfig& cfg,
                                    double snr_linear, const Rng& noise) {
  switch (cfg.scheme) {
    case Scheme::DifferentialJoint:
      return run_differential_joint(trajectory, scheme, cfg, snr_linear, noise);
    case Scheme::NondifferentialJoint:
      return run_nondifferential_joint(trajectory, scheme, cfg, snr_linear, noise);
    case Scheme::ConventionalSeparate:
      return run_conventional_separate(trajectory, scheme, cfg, snr_linear, noise);
  }
  throw InvalidInput("run_protocol: unknown scheme");
}

double average_overhead(int initial_pilots, int pilots, int reinit_period, int n) {
  if (initial_pilots < 1 || pilots < 1 || reinit_period < 1 || n < 1) {
    throw InvalidInput("average_overhead: all arguments must be positive");
  }
  if (pilots > initial_pilots || initial_pilots > n) {
    throw InvalidInput("average_overhead: need P <= P0 <= N");
  }
  return (static_cast<double>(initial_pilots) +
          static_cast<double>(pilots) * (reinit_period - 1)) /
         (static_cast<double>(reinit_period) * n);
}

DiffSparsityEstimate estimate_diff_sparsity(const ChannelParams& params, double quantile,
                                            int samples, double significance, Rng& rng) {
  params.validate();
  if (!(quantile > 0.0 && quantile <= 1.0)) {
    throw InvalidInput("estimate_diff_sparsity: quantile must lie in (0, 1]");
  }
  if (samples < 1) throw InvalidInput("estimate_diff_sparsity: samples must be >= 1");
  const auto corr = rho_from_doppler(params.doppler_hz, params.slot_s);
  const double threshold = significance * params.antennas * params.innovation_var;

  std::vector<int> counts;
  counts.reserve(static_cast<std::size_t>(samples));
  CompensatedSum exact_total;
  ChannelState state = init_state(params, rng);
  for (int s = 0; s < samples; ++s) {
    ChannelState next = evolve_state(state, params, corr, rng);
    const ComplexVector delta = next.cir - state.cir;
    int significant = 0;
    int exact = 0;
    for (int l = 0; l < params.taps; ++l) {
      double energy = 0.0;
      for (int m = 0; m < params.antennas; ++m) {
        energy += std::norm(delta(static_cast<Eigen::Index>(m) * params.taps + l));
      }
      significant += energy > threshold ? 1 : 0;
      exact += energy > 0.0 ? 1 : 0;
    }
    counts.push_back(significant);
    exact_total.add(exact);
    state = std::move(next);
  }

  DiffSparsityEstimate est;
  CompensatedSum sig_total;
  for (int c : counts) sig_total.add(c);
  est.mean_significant = sig_total.value() / samples;
  est.mean_exact = exact_total.value() / samples;
  std::sort(counts.begin(), counts.end());
  // Nearest-rank quantile.
  const auto rank = static_cast<std::size_t>(std::ceil(quantile * samples));
  est.k_diff = std::max(1, counts[std::max<std::size_t>(rank, 1) - 1]);
  return est;
}

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::DifferentialJoint: return "differential-joint";
    case Scheme::NondifferentialJoint: return "nondifferential-joint";
    case Scheme::ConventionalSeparate: return "conventional-separate";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "differential-joint") return Scheme::DifferentialJoint;
  if (name == "nondifferential-joint") return Scheme::NondifferentialJoint;
  if (name == "conventional-separate") return Scheme::ConventionalSeparate;
  throw InvalidInput("unknown scheme '" + std::string(name) +
                     "' (expected differential-joint, nondifferential-joint or conventional-separate)");
}

}  // namespace fddcs
