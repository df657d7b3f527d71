#pragma once

#include <span>
#include <vector>

#include "fddcs/numerics.hpp"

namespace fddcs {

/// ||est - truth||^2 / ||truth||^2. Throws DegenerateInput for a zero truth.
double nmse(const ComplexVector& estimate, const ComplexVector& truth);

/// 10 log10(nmse), floored at -200 dB so exact recovery stays finite.
double nmse_db(double nmse_linear);

/// Frequency response of one antenna's CIR on all N subcarriers,
/// H(k) = sum_l h(l) exp(-j 2 pi (k-1)(l-1) / N) / sqrt(N).
ComplexVector cir_to_freq(const ComplexVector& cir, int n);

/// Mean spectral efficiency (bits/s/Hz) of matched-filter beamforming built
/// from `estimate` and applied to `truth`, over all N subcarriers.
///
/// Both vectors are stacked CIRs of length L*M. Subcarriers where the
/// estimated response is zero contribute nothing.
double achievable_rate(const ComplexVector& truth, const ComplexVector& estimate,
                       double snr_linear, int n, int antennas);

/// achievable_rate with the N x L DFT precomputed, for repeated evaluation.
class RateMetric {
 public:
  RateMetric(int n, int taps);
  double operator()(const ComplexVector& truth, const ComplexVector& estimate, double snr_linear,
                    int antennas) const;

 private:
  int n_;
  ComplexMatrix dft_;
};

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct SampleSummary {
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96 * sample std / sqrt(n); 0 for n < 2
  std::size_t count = 0;
};

SampleSummary summarize(std::span<const double> samples);

}  // namespace fddcs
