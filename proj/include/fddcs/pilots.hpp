#pragma once

#include <memory>
#include <vector>

#include "fddcs/numerics.hpp"
#include "fddcs/rng.hpp"

namespace fddcs {

/// Pilot placement and symbols for the initial slot and the slots that follow.
///
/// Subcarrier indices are 1-based and ascending. The subsequent-slot set is a
/// subset of the initial set and reuses its pilot symbols, so rows of the
/// subsequent measurement matrix are rows of the initial one.
struct PilotScheme {
  int n = 0;         // OFDM symbol length
  int antennas = 0;  // M
  int taps = 0;      // L
  std::vector<int> initial_subcarriers;  // Omega^0, size P^0
  std::vector<int> subcarriers;          // Omega, size P
  std::vector<int> subset_rows;          // position of each Omega entry within Omega^0
  ComplexMatrix initial_symbols;         // P^0 x M, unit modulus
  ComplexMatrix symbols;                 // P x M, rows of initial_symbols at subset_rows

  int initial_pilots() const { return static_cast<int>(initial_subcarriers.size()); }
  int pilots() const { return static_cast<int>(subcarriers.size()); }
};

/// Sensing matrix for the stacked CIR: column block i is diag(c_i) (F_L)_Omega.
struct MeasurementMatrix {
  ComplexMatrix theta;  // P x (L*M)
  int taps = 0;
  int antennas = 0;
  /// Theta^H Theta, cached for small problems (see attach_gram).
  std::shared_ptr<const ComplexMatrix> gram;

  Eigen::Index rows() const { return theta.rows(); }
  Eigen::Index cols() const { return theta.cols(); }
};

/// Largest column count for which build_measurement caches the Gram matrix.
inline constexpr Eigen::Index kGramCacheMaxCols = 1024;

/// Computes and stores Theta^H Theta. Must be called again if theta changes.
void attach_gram(MeasurementMatrix& m);

/// ceil(beta * K * M * ln(L / K)).
int pilot_count(double beta, int sparsity, int antennas, int taps);

/// Random nested pilot scheme with QPSK symbols exp(j(pi/4 + k pi/2)).
///
/// RNG order: Omega^0 (partial Fisher-Yates over N), Omega within Omega^0,
/// then P^0 x M symbols antenna-major.
PilotScheme build_scheme(int n, int antennas, int taps, int initial_pilots, int pilots, Rng& rng);

MeasurementMatrix build_measurement(const PilotScheme& scheme, bool initial);

/// y = Theta h + n, n ~ CN(0, noise_var) per entry.
ComplexVector transmit(const MeasurementMatrix& theta, const ComplexVector& h, double noise_var,
                       Rng& rng);

/// Aggregate noise energy ||Theta h||^2 / snr for a linear SNR.
double sigma_from_snr(const MeasurementMatrix& theta, const ComplexVector& h, double snr_linear);

/// Per-measurement noise variance: sigma_from_snr / P, keeping the per-sample
/// SNR independent of the pilot count.
double noise_variance_per_measurement(const MeasurementMatrix& theta, const ComplexVector& h,
                                      double snr_linear);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace fddcs
