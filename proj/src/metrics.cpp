#include "fddcs/metrics.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace fddcs {

double nmse(const ComplexVector& estimate, const ComplexVector& truth) {
  if (estimate.size() != truth.size()) {
    throw InvalidInput("nmse: length mismatch (" + std::to_string(estimate.size()) + " vs " +
                       std::to_string(truth.size()) + ")");
  }
  const double denom = truth.squaredNorm();
  if (!(denom > 0.0)) throw DegenerateInput("nmse: reference channel is zero");
  return (estimate - truth).squaredNorm() / denom;
}

double nmse_db(double nmse_linear) {
  if (!(nmse_linear > 1e-20)) return -200.0;
  return 10.0 * std::log10(nmse_linear);
}

namespace {

ComplexMatrix full_dft_columns(int n, int taps) {
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 1);
  return dft_submatrix(n, taps, all);
}

}  // namespace

ComplexVector cir_to_freq(const ComplexVector& cir, int n) {
  if (cir.size() < 1 || cir.size() > n) throw InvalidInput("cir_to_freq: need 1 <= L <= N");
  return full_dft_columns(n, static_cast<int>(cir.size())) * cir;
}

RateMetric::RateMetric(int n, int taps) : n_(n), dft_(full_dft_columns(n, taps)) {}

double RateMetric::operator()(const ComplexVector& truth, const ComplexVector& estimate,
                              double snr_linear, int antennas) const {
  if (truth.size() != estimate.size()) throw InvalidInput("achievable_rate: length mismatch");
  if (antennas < 1 || truth.size() != dft_.cols() * antennas) {
    throw InvalidInput("achievable_rate: length must equal L * antennas");
  }
  if (!(snr_linear >= 0.0)) throw InvalidInput("achievable_rate: SNR must be >= 0");

  // Column m holds antenna m's response over all subcarriers.
  const Eigen::Map<const ComplexMatrix> h_true(truth.data(), dft_.cols(), antennas);
  const Eigen::Map<const ComplexMatrix> h_est(estimate.data(), dft_.cols(), antennas);
  const ComplexMatrix resp_true = dft_ * h_true;
  const ComplexMatrix resp_est = dft_ * h_est;

  CompensatedSum acc;
  for (int k = 0; k < n_; ++k) {
    const double est_norm = resp_est.row(k).norm();
    if (est_norm == 0.0) continue;
    // |H^H w|^2 with w = Hhat / ||Hhat||.
    const Complex proj = resp_true.row(k).dot(resp_est.row(k)) / est_norm;
    acc.add(std::log2(1.0 + snr_linear * std::norm(proj)));
  }
  return acc.value() / static_cast<double>(n_);
}

double achievable_rate(const ComplexVector& truth, const ComplexVector& estimate,
                       double snr_linear, int n, int antennas) {
  if (antennas < 1 || truth.size() % antennas != 0 || truth.size() == 0) {
    throw InvalidInput("achievable_rate: length is not a positive multiple of the antenna count");
  }
  const auto taps = static_cast<int>(truth.size() / antennas);
  if (taps > n) throw InvalidInput("achievable_rate: need L <= N");
  return RateMetric(n, taps)(truth, estimate, snr_linear, antennas);
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

SampleSummary summarize(std::span<const double> samples) {
  SampleSummary s;
  s.count = samples.size();
  if (samples.empty()) return s;
  CompensatedSum total;
  for (double x : samples) total.add(x);
  s.mean = total.value() / static_cast<double>(s.count);
  if (s.count < 2) return s;
  CompensatedSum sq;
  for (double x : samples) sq.add((x - s.mean) * (x - s.mean));
  const double var = sq.value() / static_cast<double>(s.count - 1);
  s.ci95 = 1.96 * std::sqrt(var / static_cast<double>(s.count));
  return s;
}

}  // namespace fddcs
