#include "fddcs/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace fddcs {

ComplexMatrix dft_submatrix(int n, int taps, std::span<const int> subcarriers) {
  if (taps < 1 || taps > n) {
    throw InvalidInput("dft_submatrix: need 1 <= taps <= n, got taps=" + std::to_string(taps) +
                       ", n=" + std::to_string(n));
  }
  std::vector<int> rows(subcarriers.begin(), subcarriers.end());
  std::sort(rows.begin(), rows.end());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 1 || rows[i] > n) {
      throw InvalidInput("dft_submatrix: subcarrier " + std::to_string(rows[i]) +
                         " outside 1.." + std::to_string(n));
    }
    if (i > 0 && rows[i] == rows[i - 1]) {
      throw InvalidInput("dft_submatrix: duplicate subcarrier " + std::to_string(rows[i]));
    }
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  ComplexMatrix f(static_cast<Eigen::Index>(rows.size()), taps);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const long k = rows[r] - 1;
    for (int l = 0; l < taps; ++l) {
      // Reduce the phase index modulo n so large k*l stays exact.
      const long idx = (k * l) % n;
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(idx) / n;
      f(static_cast<Eigen::Index>(r), l) = std::polar(scale, phase);
    }
  }
  return f;
}

namespace {

double rcond_from_qr(const Eigen::ColPivHouseholderQR<ComplexMatrix>& qr) {
  const auto& r = qr.matrixR();
  const Eigen::Index k = std::min(r.rows(), r.cols());
  if (k == 0) return 0.0;
  const double largest = std::abs(r(0, 0));
  if (largest == 0.0) return 0.0;
  return std::abs(r(k - 1, k - 1)) / largest;
}

}  // namespace

double rcond_estimate(const ComplexMatrix& a) {
  if (a.rows() < a.cols()) return 0.0;
  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(a);
  return rcond_from_qr(qr);
}

ComplexVector ls_solve(const ComplexMatrix& a, const ComplexVector& y) {
  if (a.rows() != y.size()) {
    std::ostringstream msg;
    msg << "ls_solve: A has " << a.rows() << " rows but y has " << y.size() << " entries";
    throw InvalidInput(msg.str());
  }
  if (a.cols() == 0) return ComplexVector(0);
  if (a.rows() < a.cols()) {
    throw SingularSystem("ls_solve: underdetermined system (" + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + "), rcond estimate 0",
                         0.0);
  }
  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(a);
  const double rc = rcond_from_qr(qr);
  if (!(rc >= kMinRcond)) {
    std::ostringstream msg;
    msg << "ls_solve: ill-conditioned system, rcond estimate " << rc << " < " << kMinRcond;
    throw SingularSystem(msg.str(), rc);
  }
  return qr.solve(y);
}

namespace {

double j0_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= -q / (static_cast<double>(k) * k);
    sum += term;
    if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(sum))) break;
  }
  return sum;
}

// Hankel asymptotic expansion, truncated at the smallest term.
double j0_asymptotic(double x) {
  double p = 0.0;
  double q = 0.0;
  double a = 1.0;  // a_k = prod (2j-1)^2 / (k! 8^k)
  double xpow = 1.0;
  double last = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 60; ++k) {
    if (k > 0) {
      a *= (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k);
      xpow *= x;
    }
    const double term = a / xpow;
    if (term > last) break;
    last = term;
    const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 0) {
      p += sign * term;
    } else {
      q += sign * term;
    }
    if (term < 1e-17) break;
  }
  q = -q;  // the odd coefficients of J0 carry an extra sign
  const double chi = x - 0.25 * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

double bessel_j0(double x) {
  if (!std::isfinite(x)) throw InvalidInput("bessel_j0: non-finite argument");
  x = std::abs(x);  // J0 is even
  return x < 12.0 ? j0_series(x) : j0_asymptotic(x);
}

}  // namespace fddcs
