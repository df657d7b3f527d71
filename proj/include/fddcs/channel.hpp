#pragma once

#include <cstdint>
#include <vector>

#include "fddcs/numerics.hpp"
#include "fddcs/rng.hpp"

namespace fddcs {

/// Statistics of the time-varying, structured-sparse MIMO channel.
struct ChannelParams {
  int antennas = 32;            // M
  int taps = 64;                // L, maximal channel length
  double activity = 0.1;        // mu, steady-state Pr{tap active}
  double p01 = 0.16;            // Pr{active -> inactive}
  double doppler_hz = 10.0;     // f_d
  double slot_s = 0.5e-3;       // tau
  double innovation_var = 1.0;  // sigma_w^2

  /// Pr{inactive -> active} keeping the support chain stationary at `activity`.
  double p10() const;

  /// Throws InvalidInput unless every field satisfies its invariant.
  void validate() const;
};

/// AR(1) amplitude correlation between consecutive slots.
struct DopplerCorrelation {
  double rho = 1.0;
};

/// One slot of the channel: shared delay support plus per-antenna amplitudes.
struct ChannelState {
  int slot = 0;
  std::vector<std::uint8_t> support;  // length L, common to every antenna
  ComplexMatrix amplitudes;           // M x L
  ComplexVector cir;                  // length L*M, entry m*L + l = support[l] * amplitudes(m, l)

  int antennas() const { return static_cast<int>(amplitudes.rows()); }
  int taps() const { return static_cast<int>(amplitudes.cols()); }
  int active_taps() const;
};

DopplerCorrelation rho_from_doppler(double doppler_hz, double slot_s);

/// Draws slot 0. RNG order: L support Bernoullis, then amplitudes antenna-major.
///
/// Only the fields init needs are checked here, so `activity` may sit at 0 or 1.
ChannelState init_state(const ChannelParams& params, Rng& rng);

/// Advances one slot. RNG order: L uniforms for the support chain, then the
/// amplitude innovations antenna-major. Amplitudes evolve on every tap, active
/// or not.
ChannelState evolve_state(const ChannelState& state, const ChannelParams& params,
                          DopplerCorrelation corr, Rng& rng);

/// Stacked CIR [h_1; ...; h_M] rebuilt from support and amplitudes.
ComplexVector stacked_cir(const ChannelState& state);

/// Slots 0..slots-1 drawn from one stream.
std::vector<ChannelState> simulate_trajectory(const ChannelParams& params, int slots, Rng& rng);

}  // namespace fddcs
