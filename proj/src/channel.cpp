#include "fddcs/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace fddcs {

double ChannelParams::p10() const { return activity * p01 / (1.0 - activity); }

void ChannelParams::validate() const {
  if (antennas < 1) throw InvalidInput("channel: antennas must be >= 1");
  if (taps < 1) throw InvalidInput("channel: taps must be >= 1");
  if (!(activity > 0.0 && activity < 1.0)) {
    throw InvalidInput("channel: activity must lie in (0, 1), got " + std::to_string(activity));
  }
  if (!(p01 >= 0.0 && p01 <= 1.0)) {
    throw InvalidInput("channel: p01 must lie in [0, 1], got " + std::to_string(p01));
  }
  const double up = p10();
  if (!(up >= 0.0 && up <= 1.0)) {
    throw InvalidInput("channel: derived p10 = " + std::to_string(up) +
                       " leaves [0, 1]; lower p01 or activity");
  }
  if (!(doppler_hz >= 0.0) || !std::isfinite(doppler_hz)) {
    throw InvalidInput("channel: doppler_hz must be finite and >= 0");
  }
  if (!(slot_s > 0.0) || !std::isfinite(slot_s)) throw InvalidInput("channel: slot_s must be > 0");
  if (!(innovation_var > 0.0) || !std::isfinite(innovation_var)) {
    throw InvalidInput("channel: innovation_var must be > 0");
  }
}

int ChannelState::active_taps() const {
  int n = 0;
  for (auto s : support) n += s;
  return n;
}

DopplerCorrelation rho_from_doppler(double doppler_hz, double slot_s) {
  if (!(doppler_hz >= 0.0) || !std::isfinite(doppler_hz)) {
    throw InvalidInput("rho_from_doppler: doppler must be finite and >= 0");
  }
  if (!(slot_s > 0.0) || !std::isfinite(slot_s)) {
    throw InvalidInput("rho_from_doppler: slot duration must be > 0");
  }
  return {bessel_j0(2.0 * std::numbers::pi * doppler_hz * slot_s)};
}

ComplexVector stacked_cir(const ChannelState& state) {
  const int m_count = state.antennas();
  const int l_count = state.taps();
  ComplexVector h = ComplexVector::Zero(static_cast<Eigen::Index>(m_count) * l_count);
  for (int m = 0; m < m_count; ++m) {
    for (int l = 0; l < l_count; ++l) {
      if (state.support[static_cast<std::size_t>(l)]) {
        h(static_cast<Eigen::Index>(m) * l_count + l) = state.amplitudes(m, l);
      }
    }
  }
  return h;
}

ChannelState init_state(const ChannelParams& params, Rng& rng) {
  if (params.antennas < 1 || params.taps < 1) {
    throw InvalidInput("init_state: antennas and taps must be >= 1");
  }
  if (!(params.activity >= 0.0 && params.activity <= 1.0)) {
    throw InvalidInput("init_state: activity must lie in [0, 1]");
  }
  if (!(params.innovation_var > 0.0)) throw InvalidInput("init_state: innovation_var must be > 0");

  ChannelState state;
  state.slot = 0;
  state.support.resize(static_cast<std::size_t>(params.taps));
  for (auto& s : state.support) s = rng.bernoulli(params.activity) ? 1 : 0;
  state.amplitudes.resize(params.antennas, params.taps);
  for (int m = 0; m < params.antennas; ++m) {
    for (int l = 0; l < params.taps; ++l) {
      state.amplitudes(m, l) = rng.complex_normal(params.innovation_var);
    }
  }
  state.cir = stacked_cir(state);
  return state;
}

ChannelState evolve_state(const ChannelState& state, const ChannelParams& params,
                          DopplerCorrelation corr, Rng& rng) {
  params.validate();
  if (state.antennas() != params.antennas || state.taps() != params.taps) {
    throw InvalidInput("evolve_state: state dimensions do not match params");
  }
  if (!(std::abs(corr.rho) <= 1.0)) throw InvalidInput("evolve_state: |rho| must be <= 1");

  ChannelState next;
  next.slot = state.slot + 1;
  next.support = state.support;
  const double up = params.p10();
  for (auto& s : next.support) {
    const double u = rng.uniform();
    if (s) {
      s = u < params.p01 ? 0 : 1;
    } else {
      s = u < up ? 1 : 0;
    }
  }

  const double gain = std::sqrt(std::max(0.0, 1.0 - corr.rho * corr.rho));
  next.amplitudes.resize(params.antennas, params.taps);
  for (int m = 0; m < params.antennas; ++m) {
    for (int l = 0; l < params.taps; ++l) {
      const Complex w = rng.complex_normal(params.innovation_var);
      next.amplitudes(m, l) = corr.rho * state.amplitudes(m, l) + gain * w;
    }
  }
  next.cir = stacked_cir(next);
  return next;
}

std::vector<ChannelState> simulate_trajectory(const ChannelParams& params, int slots, Rng& rng) {
  if (slots < 1) throw InvalidInput("simulate_trajectory: slots must be >= 1");
  params.validate();
  const auto corr = rho_from_doppler(params.doppler_hz, params.slot_s);
  std::vector<ChannelState> out;
  out.reserve(static_cast<std::size_t>(slots));
  out.push_back(init_state(params, rng));
  for (int t = 1; t < slots; ++t) out.push_back(evolve_state(out.back(), params, corr, rng));
  return out;
}

}  // namespace fddcs
