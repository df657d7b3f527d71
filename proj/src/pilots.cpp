#include "fddcs/pilots.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace fddcs {

int pilot_count(double beta, int sparsity, int antennas, int taps) {
  if (!(beta > 0.0)) throw InvalidInput("pilot_count: beta must be > 0");
  if (sparsity <= 0 || sparsity >= taps) {
    throw InvalidInput("pilot_count: need 0 < K < L, got K=" + std::to_string(sparsity) +
                       ", L=" + std::to_string(taps));
  }
  if (antennas < 1) throw InvalidInput("pilot_count: antennas must be >= 1");
  const double raw = beta * sparsity * antennas *
                     std::log(static_cast<double>(taps) / static_cast<double>(sparsity));
  return static_cast<int>(std::ceil(raw));
}

PilotScheme build_scheme(int n, int antennas, int taps, int initial_pilots, int pilots, Rng& rng) {
  if (n < 1 || antennas < 1 || taps < 1 || taps > n) {
    throw InvalidInput("build_scheme: need n >= 1, antennas >= 1 and 1 <= taps <= n");
  }
  if (initial_pilots > n) {
    throw InvalidInput("build_scheme: initial pilot count " + std::to_string(initial_pilots) +
                       " exceeds symbol length " + std::to_string(n));
  }
  if (pilots < 1 || pilots > initial_pilots) {
    throw InvalidInput("build_scheme: need 1 <= P <= P0, got P=" + std::to_string(pilots) +
                       ", P0=" + std::to_string(initial_pilots));
  }

  PilotScheme s;
  s.n = n;
  s.antennas = antennas;
  s.taps = taps;

  const auto initial = sample_without_replacement(n, initial_pilots, rng);
  s.initial_subcarriers.reserve(initial.size());
  for (int k : initial) s.initial_subcarriers.push_back(k + 1);

  s.subset_rows = sample_without_replacement(initial_pilots, pilots, rng);
  s.subcarriers.reserve(s.subset_rows.size());
  for (int r : s.subset_rows) {
    s.subcarriers.push_back(s.initial_subcarriers[static_cast<std::size_t>(r)]);
  }

  s.initial_symbols.resize(initial_pilots, antennas);
  for (int m = 0; m < antennas; ++m) {
    for (int p = 0; p < initial_pilots; ++p) {
      const auto k = static_cast<double>(rng.index(4));
      s.initial_symbols(p, m) = std::polar(1.0, std::numbers::pi * (0.25 + 0.5 * k));
    }
  }
  s.symbols.resize(pilots, antennas);
  for (int i = 0; i < pilots; ++i) {
    s.symbols.row(i) = s.initial_symbols.row(s.subset_rows[static_cast<std::size_t>(i)]);
  }
  return s;
}

MeasurementMatrix build_measurement(const PilotScheme& scheme, bool initial) {
  const auto& carriers = initial ? scheme.initial_subcarriers : scheme.subcarriers;
  const auto& symbols = initial ? scheme.initial_symbols : scheme.symbols;
  const ComplexMatrix f = dft_submatrix(scheme.n, scheme.taps, carriers);

  MeasurementMatrix out;
  out.taps = scheme.taps;
  out.antennas = scheme.antennas;
  out.theta.resize(f.rows(), static_cast<Eigen::Index>(scheme.taps) * scheme.antennas);
  for (int m = 0; m < scheme.antennas; ++m) {
    out.theta.middleCols(static_cast<Eigen::Index>(m) * scheme.taps, scheme.taps) =
        symbols.col(m).asDiagonal() * f;
  }
  if (out.cols() <= kGramCacheMaxCols) attach_gram(out);
  return out;
}

void attach_gram(MeasurementMatrix& m) {
  m.gram = std::make_shared<const ComplexMatrix>(m.theta.adjoint() * m.theta);
}

ComplexVector transmit(const MeasurementMatrix& theta, const ComplexVector& h, double noise_var,
                       Rng& rng) {
  if (theta.cols() != h.size()) {
    throw InvalidInput("transmit: Theta has " + std::to_string(theta.cols()) +
                       " columns but h has " + std::to_string(h.size()) + " entries");
  }
  if (!(noise_var >= 0.0)) throw InvalidInput("transmit: noise variance must be >= 0");
  ComplexVector y = theta.theta * h;
  if (noise_var > 0.0) {
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += rng.complex_normal(noise_var);
  }
  return y;
}

double sigma_from_snr(const MeasurementMatrix& theta, const ComplexVector& h, double snr_linear) {
  if (!(snr_linear > 0.0)) throw InvalidInput("sigma_from_snr: SNR must be > 0");
  if (h.size() == 0 || h.isZero(0.0)) {
    throw DegenerateInput("sigma_from_snr: zero channel has no defined SNR");
  }
  if (std::isinf(snr_linear)) return 0.0;
  return (theta.theta * h).squaredNorm() / snr_linear;
}

double noise_variance_per_measurement(const MeasurementMatrix& theta, const ComplexVector& h,
                                      double snr_linear) {
  return sigma_from_snr(theta, h, snr_linear) / static_cast<double>(theta.rows());
}

}  // namespace fddcs
