#pragma once

// Dense tableau simplex for  max c'x  s.t.  Ax <= b, x >= 0  with b >= 0, so
// the slack basis is feasible and no phase one is needed. Dantzig pricing,
// switching to Bland's rule during runs of degenerate pivots.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "rkhs_logit/errors.hpp"

namespace rkhs_logit {

enum class LpStatus { Optimal, Unbounded, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::IterationLimit;
  double objective = 0.0;
  Eigen::VectorXd x;
  std::size_t pivots = 0;
  std::vector<Eigen::Index> basis;   // basic column per row (slacks are n..n+m-1)
  Eigen::MatrixXd basis_inverse;     // B^-1, read off the slack columns
};

/// Re-prices the final basis of `r` at another right-hand side. Reduced costs
/// do not depend on b, so a basis that stays primal feasible is optimal there.
/// Returns the objective, or nothing when the basis turns infeasible.
inline std::optional<double> reoptimize_rhs(const LpResult& r, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                                            double tol = 1e-12) {
  if (r.status != LpStatus::Optimal || b.size() != r.basis_inverse.rows()) return std::nullopt;
  const Eigen::VectorXd xb = r.basis_inverse * b;
  if ((xb.array() < -tol).any()) return std::nullopt;
  const Eigen::Index n = c.size();
  double obj = 0.0;
  for (std::size_t i = 0; i < r.basis.size(); ++i) {
    if (r.basis[i] < n) obj += c[r.basis[i]] * std::max(0.0, xb[static_cast<Eigen::Index>(i)]);
  }
  return obj;
}

inline LpResult maximize_slack_feasible(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                        const Eigen::VectorXd& c) {
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (b.size() != m || c.size() != n) throw ValidationError("simplex: dimension mismatch");
  if ((b.array() < 0.0).any()) throw ValidationError("simplex: right-hand side must be nonnegative");

  constexpr double kPivotTol = 1e-11;
  constexpr double kCostTol = 1e-12;
  const Eigen::Index cols = n + m + 1;
  const Eigen::Index rhs = n + m;

  RowMat t = RowMat::Zero(m + 1, cols);
  t.topLeftCorner(m, n) = a;
  t.block(0, n, m, m).setIdentity();
  t.col(rhs).head(m) = b;
  t.row(m).head(n) = -c.transpose();

  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  LpResult result;
  const std::size_t max_pivots = 50 * static_cast<std::size_t>(m + n) + 1000;
  std::size_t degenerate_run = 0;
  constexpr std::size_t kBlandAfter = 20;

  while (true) {
    const bool bland = degenerate_run >= kBlandAfter;
    Eigen::Index enter = -1;
    double best = -kCostTol;
    for (Eigen::Index j = 0; j < n + m; ++j) {
      const double rc = t(m, j);
      if (bland) {
        if (rc < -kCostTol) {
          enter = j;
          break;
        }
      } else if (rc < best) {
        best = rc;
        enter = j;
      }
    }
    if (enter < 0) {
      result.status = LpStatus::Optimal;
      break;
    }
    if (result.pivots >= max_pivots) {
      result.status = LpStatus::IterationLimit;
      break;
    }

    Eigen::Index leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double piv = t(i, enter);
      if (piv <= kPivotTol) continue;
      const double r = t(i, rhs) / piv;
      if (leave < 0 || r < ratio - 1e-14) {
        ratio = r;
        leave = i;
      } else if (r <= ratio + 1e-14) {
        // Tie: Bland takes the smallest basic index, otherwise the larger pivot.
        const bool take = bland ? basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]
                                : piv > t(leave, enter);
        if (take) {
          ratio = std::min(ratio, r);
          leave = i;
        }
      }
    }
    if (leave < 0) {
      result.status = LpStatus::Unbounded;
      break;
    }

    degenerate_run = ratio <= 1e-13 ? degenerate_run + 1 : 0;

    t.row(leave) /= t(leave, enter);
    t(leave, enter) = 1.0;
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = t(i, enter);
      if (f == 0.0) continue;
      t.row(i) -= f * t.row(leave);
      t(i, enter) = 0.0;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      if (t(i, rhs) < 0.0 && t(i, rhs) > -1e-12) t(i, rhs) = 0.0;
    }
    basis[static_cast<std::size_t>(leave)] = enter;
    ++result.pivots;
  }

  result.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = basis[static_cast<std::size_t>(i)];
    if (j < n) result.x[j] = t(i, rhs);
  }
  result.objective = c.dot(result.x);
  result.basis = std::move(basis);
  result.basis_inverse = t.block(0, n, m, m);
  return result;
}

}  // namespace rkhs_logit
