#include "fddcs/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace fddcs {

void SCoSaMPConfig::validate(int taps) const {
  if (sparsity < 1 || sparsity > taps) {
    throw InvalidInput("recovery: sparsity must lie in 1.." + std::to_string(taps) + ", got " +
                       std::to_string(sparsity));
  }
  if (!(tolerance > 0.0)) throw InvalidInput("recovery: tolerance xi must be > 0");
  if (max_iters < 1) throw InvalidInput("recovery: max_iters must be >= 1");
}

namespace {

// Indices of the k largest scores in descending score order, ties to the lowest
// index. Zero scores are never selected, matching the support of a pruned vector.
std::vector<int> ranked_top_k(const std::vector<double>& score, int k) {
  std::vector<int> idx(score.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                    [&](int a, int b) {
                      const double sa = score[static_cast<std::size_t>(a)];
                      const double sb = score[static_cast<std::size_t>(b)];
                      return sa > sb || (sa == sb && a < b);
                    });
  idx.resize(keep);
  std::erase_if(idx, [&](int i) { return !(score[static_cast<std::size_t>(i)] > 0.0); });
  return idx;
}

// As ranked_top_k, ascending by index.
std::vector<int> top_k(const std::vector<double>& score, int k) {
  std::vector<int> idx = ranked_top_k(score, k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Groups of stacked indices selected together: group g owns g + m*stride for m < size.
struct Grouping {
  int groups;
  int size;
  int stride;

  template <typename F>
  void for_each_member(int g, F&& f) const {
    for (int m = 0; m < size; ++m) f(g + m * stride);
  }
};

std::vector<double> aggregate(const ComplexVector& x, const Grouping& grouping, Aggregation mode) {
  std::vector<double> stat(static_cast<std::size_t>(grouping.groups), 0.0);
  for (int g = 0; g < grouping.groups; ++g) {
    if (mode == Aggregation::Energy) {
      double acc = 0.0;
      grouping.for_each_member(g, [&](int i) { acc += std::norm(x(i)); });
      stat[static_cast<std::size_t>(g)] = acc;
    } else {
      Complex acc{0.0, 0.0};
      grouping.for_each_member(g, [&](int i) { acc += x(i); });
      stat[static_cast<std::size_t>(g)] = std::abs(acc);
    }
  }
  return stat;
}

std::vector<int> expand(const std::vector<int>& groups, const Grouping& grouping) {
  std::vector<int> cols;
  cols.reserve(groups.size() * static_cast<std::size_t>(grouping.size));
  for (int g : groups) grouping.for_each_member(g, [&](int i) { cols.push_back(i); });
  std::sort(cols.begin(), cols.end());
  return cols;
}

// Tikhonov solve of (A^H A + lambda I) x = A^H y with lambda = 1e-10 tr(A^H A) / cols.
// Wide matrices use the equivalent A^H (A A^H + lambda I)^-1 y, which is smaller.
ComplexVector regularized_solve(const ComplexMatrix& a, const ComplexVector& y) {
  const double trace = a.squaredNorm();
  if (!(trace > 0.0)) return ComplexVector::Zero(a.cols());
  const double lambda = 1e-10 * trace / static_cast<double>(a.cols());
  if (a.rows() < a.cols()) {
    ComplexMatrix lhs = a * a.adjoint();
    lhs.diagonal().array() += lambda;
    return a.adjoint() * lhs.ldlt().solve(y);
  }
  ComplexMatrix lhs = a.adjoint() * a;
  lhs.diagonal().array() += lambda;
  return lhs.ldlt().solve(a.adjoint() * y);
}

// Cached A^H A and A^H y for the normal-equation path, when available.
struct NormalTerms {
  const ComplexMatrix* gram = nullptr;
  ComplexVector thy;
};

// b restricted to `cols`, least squares against y, zero elsewhere.
ComplexVector fit_on_columns(const ComplexMatrix& theta, const std::vector<int>& cols,
                             const ComplexVector& y, const NormalTerms& normal, bool& regularized) {
  ComplexVector b = ComplexVector::Zero(theta.cols());
  if (cols.empty()) return b;
  const auto scatter = [&](const ComplexVector& coef) {
    for (std::size_t j = 0; j < cols.size(); ++j) b(cols[j]) = coef(static_cast<Eigen::Index>(j));
  };
  if (static_cast<Eigen::Index>(cols.size()) <= theta.rows()) {
    // Normal equations are accurate enough for the intermediate fit and far
    // cheaper than a pivoted QR; badly conditioned blocks fall back to QR.
    ComplexMatrix gram;
    ComplexVector rhs;
    if (normal.gram != nullptr) {
      gram = (*normal.gram)(cols, cols);
      rhs = normal.thy(cols);
    } else {
      const ComplexMatrix sub = theta(Eigen::all, cols);
      gram = sub.adjoint() * sub;
      rhs = sub.adjoint() * y;
    }
    const Eigen::LLT<ComplexMatrix> llt(gram);
    if (llt.info() == Eigen::Success) {
      const auto diag = llt.matrixLLT().diagonal().real().array();
      const double ratio = diag.minCoeff() / diag.maxCoeff();
      if (ratio * ratio >= 1e-12) {
        scatter(llt.solve(rhs));
        return b;
      }
    }
  }
  const ComplexMatrix sub = theta(Eigen::all, cols);
  if (sub.rows() >= sub.cols()) {
    try {
      scatter(ls_solve(sub, y));
      return b;
    } catch (const SingularSystem&) {
    }
  }
  if (normal.gram != nullptr) {
    ComplexMatrix lhs = (*normal.gram)(cols, cols);
    const double trace = lhs.diagonal().real().sum();
    if (!(trace > 0.0)) return b;
    lhs.diagonal().array() += 1e-10 * trace / static_cast<double>(cols.size());
    scatter(lhs.ldlt().solve(ComplexVector(normal.thy(cols))));
    regularized = true;
    return b;
  }
  scatter(regularized_solve(sub, y));
  regularized = true;
  return b;
}

RecoveryResult zero_result(Eigen::Index n) {
  RecoveryResult out;
  out.estimate = ComplexVector::Zero(n);
  return out;
}

void check_dims(const ComplexVector& y, const MeasurementMatrix& theta, const char* who) {
  if (theta.cols() != static_cast<Eigen::Index>(theta.taps) * theta.antennas) {
    throw InvalidInput(std::string(who) + ": Theta must have L*M columns");
  }
  if (theta.rows() != y.size()) {
    throw InvalidInput(std::string(who) + ": y length " + std::to_string(y.size()) +
                       " does not match Theta rows " + std::to_string(theta.rows()));
  }
  if (!y.allFinite()) throw InvalidInput(std::string(who) + ": y has non-finite entries");
}

// CoSaMP over groups of columns. With singleton groups this is classical CoSaMP.
RecoveryResult group_cosamp(const ComplexVector& y, const MeasurementMatrix& theta,
                            const Grouping& grouping, int sparsity, const SCoSaMPConfig& cfg) {
  const double y_norm = y.norm();
  RecoveryResult out = zero_result(theta.cols());
  out.residual_norm = y_norm;
  if (y_norm == 0.0) return out;

  const long guard = 2L * cfg.sparsity * theta.taps + 1;  // i <= 2KL, checked before increment
  const long limit = std::min<long>(guard, cfg.max_iters);

  NormalTerms normal;
  if (theta.gram) {
    normal.gram = theta.gram.get();
    normal.thy = theta.theta.adjoint() * y;
  }

  ComplexVector r = y;
  double r_norm = y_norm;
  std::vector<int> support;
  ComplexVector h = ComplexVector::Zero(theta.cols());

  // Every iterate is a function of the previous (support, estimate) pair, so a
  // repeated pair means the remaining iterations cycle through known states.
  struct State {
    std::vector<int> support;
    ComplexVector estimate;
  };
  std::vector<State> history;

  while (out.iterations < limit && r_norm >= cfg.tolerance * y_norm) {
    ++out.iterations;
    ComplexVector e;
    if (normal.gram != nullptr) {
      const std::vector<int> active = expand(support, grouping);
      e = normal.thy - (*normal.gram)(Eigen::all, active) * h(active);
    } else {
      e = theta.theta.adjoint() * r;
    }
    const auto z = aggregate(e, grouping, cfg.aggregation);

    std::vector<int> merged = top_k(z, 2 * sparsity);
    merged.insert(merged.end(), support.begin(), support.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    const ComplexVector b =
        fit_on_columns(theta.theta, expand(merged, grouping), y, normal, out.regularized);
    const auto g = aggregate(b, grouping, cfg.aggregation);
    std::vector<int> next_support = top_k(g, sparsity);

    ComplexVector next = ComplexVector::Zero(theta.cols());
    for (int i : expand(next_support, grouping)) next(i) = b(i);

    r = y - theta.theta * next;
    r_norm = r.norm();
    support = std::move(next_support);
    h = std::move(next);

    const auto seen = std::find_if(history.begin(), history.end(), [&](const State& s) {
      return s.support == support && s.estimate == h;
    });
    if (seen != history.end()) {
      // history[j] is the iterate of iteration j + 1; the current iteration repeats it.
      const long first = std::distance(history.begin(), seen) + 1;
      const long period = out.iterations - first;
      if (period == 0 || r_norm < cfg.tolerance * y_norm) break;
      const long last = first + (limit - first) % period;
      const State& final_state = history[static_cast<std::size_t>(last - 1)];
      support = final_state.support;
      h = final_state.estimate;
      r = y - theta.theta * h;
      r_norm = r.norm();
      out.iterations = static_cast<int>(limit);
      break;
    }
    history.push_back({support, h});
  }

  // Debias: least squares on the final support. Its residual can only be
  // smaller than that of the pruned iterate, which lives on the same columns.
  if (!support.empty()) {
    const std::vector<int> cols = expand(support, grouping);
    if (static_cast<Eigen::Index>(cols.size()) <= theta.rows()) {
      try {
        const ComplexVector coef = ls_solve(theta.theta(Eigen::all, cols), y);
        ComplexVector refit = ComplexVector::Zero(theta.cols());
        for (std::size_t j = 0; j < cols.size(); ++j) {
          refit(cols[j]) = coef(static_cast<Eigen::Index>(j));
        }
        const ComplexVector refit_r = y - theta.theta * refit;
        if (refit_r.norm() <= r_norm) {
          h = std::move(refit);
          r_norm = refit_r.norm();
        }
      } catch (const SingularSystem&) {
      }
    }
  }

  if (r_norm > y_norm) {
    out.reset_to_zero = true;
    return out;
  }
  out.estimate = std::move(h);
  out.residual_norm = r_norm;
  out.support = std::move(support);
  return out;
}

}  // namespace

ComplexVector prune(const ComplexVector& x, int k) {
  if (k < 0) throw InvalidInput("prune: k must be >= 0");
  std::vector<double> mag(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) mag[static_cast<std::size_t>(i)] = std::abs(x(i));
  ComplexVector out = ComplexVector::Zero(x.size());
  for (int i : top_k(mag, k)) out(i) = x(i);
  return out;
}

RecoveryResult scosamp(const ComplexVector& y, const MeasurementMatrix& theta,
                       const SCoSaMPConfig& cfg) {
  check_dims(y, theta, "scosamp");
  cfg.validate(theta.taps);
  const Grouping delays{theta.taps, theta.antennas, theta.taps};
  return group_cosamp(y, theta, delays, cfg.sparsity, cfg);
}

RecoveryResult cosamp(const ComplexVector& y, const MeasurementMatrix& theta,
                      const SCoSaMPConfig& cfg) {
  check_dims(y, theta, "cosamp");
  cfg.validate(theta.taps);
  const Grouping singles{static_cast<int>(theta.cols()), 1, 0};
  return group_cosamp(y, theta, singles, cfg.sparsity * theta.antennas, cfg);
}

RecoveryResult omp(const ComplexVector& y, const MeasurementMatrix& theta, int sparsity,
                   double tolerance) {
  check_dims(y, theta, "omp");
  if (sparsity < 1) throw InvalidInput("omp: sparsity must be >= 1");
  const double y_norm = y.norm();
  RecoveryResult out = zero_result(theta.cols());
  out.residual_norm = y_norm;
  if (y_norm == 0.0) return out;

  const Eigen::VectorXd col_norm = theta.theta.colwise().norm().transpose();
  std::vector<char> chosen(static_cast<std::size_t>(theta.cols()), 0);
  std::vector<int> support;
  ComplexVector r = y;
  ComplexVector h = ComplexVector::Zero(theta.cols());
  const int atoms = std::min<int>(sparsity, static_cast<int>(theta.cols()));

  while (out.iterations < atoms && r.norm() >= tolerance * y_norm) {
    const ComplexVector e = theta.theta.adjoint() * r;
    int best = -1;
    double best_score = 0.0;
    for (Eigen::Index j = 0; j < e.size(); ++j) {
      if (chosen[static_cast<std::size_t>(j)] || col_norm(j) == 0.0) continue;
      const double score = std::abs(e(j)) / col_norm(j);
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(j);
      }
    }
    if (best < 0) break;
    ++out.iterations;
    chosen[static_cast<std::size_t>(best)] = 1;
    support.insert(std::upper_bound(support.begin(), support.end(), best), best);
    h = fit_on_columns(theta.theta, support, y, NormalTerms{}, out.regularized);
    r = y - theta.theta * h;
  }
  out.estimate = std::move(h);
  out.residual_norm = r.norm();
  out.support = std::move(support);
  return out;
}

ComplexVector ls_recover(const ComplexVector& y, const MeasurementMatrix& theta) {
  check_dims(y, theta, "ls_recover");
  if (theta.rows() < theta.cols()) {
    throw InvalidInput("ls_recover: underdetermined, P=" + std::to_string(theta.rows()) +
                       " < L*M=" + std::to_string(theta.cols()));
  }
  return ls_solve(theta.theta, y);
}

RecoveryResult recover(Solver solver, const ComplexVector& y, const MeasurementMatrix& theta,
                       const SCoSaMPConfig& cfg) {
  switch (solver) {
    case Solver::SCoSaMP:
      return scosamp(y, theta, cfg);
    case Solver::CoSaMP:
      return cosamp(y, theta, cfg);
    case Solver::OMP:
      cfg.validate(theta.taps);
      return omp(y, theta, cfg.sparsity * theta.antennas, cfg.tolerance);
    case Solver::LS: {
      RecoveryResult out;
      out.estimate = ls_recover(y, theta);
      out.iterations = 1;
      out.residual_norm = (y - theta.theta * out.estimate).norm();
      for (Eigen::Index i = 0; i < out.estimate.size(); ++i) {
        if (out.estimate(i) != Complex{0.0, 0.0}) out.support.push_back(static_cast<int>(i));
      }
      return out;
    }
  }
  throw InvalidInput("recover: unknown solver");
}

std::string_view to_string(Solver s) {
  switch (s) {
    case Solver::SCoSaMP: return "scosamp";
    case Solver::CoSaMP: return "cosamp";
    case Solver::OMP: return "omp";
    case Solver::LS: return "ls";
  }
  return "?";
}

std::string_view to_string(Aggregation a) {
  return a == Aggregation::Energy ? "energy" : "literal-sum";
}

Solver parse_solver(std::string_view name) {
  if (name == "scosamp") return Solver::SCoSaMP;
  if (name == "cosamp") return Solver::CoSaMP;
  if (name == "omp") return Solver::OMP;
  if (name == "ls") return Solver::LS;
  throw InvalidInput("unknown solver '" + std::string(name) + "' (expected scosamp, cosamp, omp or ls)");
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "energy") return Aggregation::Energy;
  if (name == "literal-sum") return Aggregation::LiteralSum;
  throw InvalidInput("unknown aggregation '" + std::string(name) + "' (expected energy or literal-sum)");
}

}  // namespace fddcs
