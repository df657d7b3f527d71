#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fddcs {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Raised when an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a least-squares system is rank deficient or too ill conditioned.
class SingularSystem : public std::runtime_error {
 public:
  SingularSystem(const std::string& what, double rcond)
      : std::runtime_error(what), rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

/// Raised for inputs that make a quantity undefined (e.g. normalizing by a zero channel).
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Reciprocal condition estimate below which ls_solve refuses to answer.
inline constexpr double kMinRcond = 1e-12;

/// Rows of the unitary N-point DFT restricted to the first `taps` columns.
///
/// `subcarriers` holds 1-based indices in {1..n}; entry (r, l) is
/// exp(-j 2 pi (k_r - 1) l / n) / sqrt(n). Rows follow ascending subcarrier
/// order regardless of the order given.
ComplexMatrix dft_submatrix(int n, int taps, std::span<const int> subcarriers);

/// argmin ||A x - y||_2 for a full-column-rank A (m >= n).
///
/// Solved through a column-pivoted Householder QR. The reciprocal condition
/// is estimated from the diagonal of R; below kMinRcond a SingularSystem
/// carrying the estimate is thrown.
ComplexVector ls_solve(const ComplexMatrix& a, const ComplexVector& y);

/// Reciprocal condition estimate used by ls_solve, exposed for callers that
/// want to branch before solving.
double rcond_estimate(const ComplexMatrix& a);

/// Zero-order Bessel function of the first kind.
double bessel_j0(double x);

}  // namespace fddcs
