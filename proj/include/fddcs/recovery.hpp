#pragma once

#include <string_view>
#include <vector>

#include "fddcs/numerics.hpp"
#include "fddcs/pilots.hpp"

namespace fddcs {

/// How per-antenna correlations are folded into one statistic per delay tap.
enum class Aggregation {
  Energy,      // sum_m |x(mL+l)|^2
  LiteralSum,  // |sum_m x(mL+l)|, complex sum before the magnitude
};

enum class Solver { SCoSaMP, CoSaMP, OMP, LS };

struct SCoSaMPConfig {
  int sparsity = 6;           // K, per-antenna (delay) sparsity
  double tolerance = 1e-3;    // xi: stop once ||r|| < xi ||y||
  int max_iters = 50;         // clamps the 2KL guard
  Aggregation aggregation = Aggregation::Energy;

  void validate(int taps) const;
};

struct RecoveryResult {
  ComplexVector estimate;
  int iterations = 0;
  double residual_norm = 0.0;
  /// Delay taps for S-CoSaMP; stacked indices for the unstructured solvers.
  std::vector<int> support;
  /// Some least-squares step fell back to the Tikhonov-regularized solve.
  bool regularized = false;
  /// The last iterate fit worse than the zero vector and was discarded.
  bool reset_to_zero = false;
};

/// Keeps the k largest-magnitude entries (lowest index wins ties), zeroes the rest.
ComplexVector prune(const ComplexVector& x, int k);

/// Structured CoSaMP over the stacked CIR: delay taps are selected jointly
/// for all antenna blocks.
RecoveryResult scosamp(const ComplexVector& y, const MeasurementMatrix& theta,
                       const SCoSaMPConfig& cfg);

/// Classical CoSaMP on the full stacked vector with sparsity K*M.
RecoveryResult cosamp(const ComplexVector& y, const MeasurementMatrix& theta,
                      const SCoSaMPConfig& cfg);

/// Orthogonal matching pursuit, at most `sparsity` atoms.
RecoveryResult omp(const ComplexVector& y, const MeasurementMatrix& theta, int sparsity,
                   double tolerance = 1e-3);

/// Theta^dagger y; rejects P < L*M.
ComplexVector ls_recover(const ComplexVector& y, const MeasurementMatrix& theta);

/// Dispatches on `solver`. `cfg.sparsity` is the per-antenna K; OMP receives K*M atoms.
RecoveryResult recover(Solver solver, const ComplexVector& y, const MeasurementMatrix& theta,
                       const SCoSaMPConfig& cfg);

std::string_view to_string(Solver s);
std::string_view to_string(Aggregation a);
Solver parse_solver(std::string_view name);
Aggregation parse_aggregation(std::string_view name);

}  // namespace fddcs
