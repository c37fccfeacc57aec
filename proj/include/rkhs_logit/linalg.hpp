#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "rkhs_logit/errors.hpp"

namespace rkhs_logit {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Cholesky factor of a symmetric PSD matrix with the jitter policy used
/// throughout the library: on failure add 1e-10 * trace / p to the diagonal,
/// escalating x10 at most three times.
struct JitteredCholesky {
  Eigen::LLT<MatrixXd> llt;
  double jitter = 0.0;

  VectorXd solve(const VectorXd& b) const { return llt.solve(b); }
  MatrixXd solve(const MatrixXd& b) const { return llt.solve(b); }

  double log_det() const {
    const auto& l = llt.matrixLLT();
    double acc = 0.0;
    for (Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
    return 2.0 * acc;
  }
};

namespace detail {

inline bool factor_ok(const Eigen::LLT<MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto& l = llt.matrixLLT();
  for (Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) return false;
  }
  return true;
}

}  // namespace detail

inline JitteredCholesky robust_cholesky(const MatrixXd& a, const char* what = "matrix") {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw ValidationError(std::string(what) + ": expected a non-empty square matrix");
  }
  if (!a.allFinite()) throw NumericError(std::string(what) + ": non-finite entries");

  JitteredCholesky out;
  out.llt.compute(a);
  if (detail::factor_ok(out.llt)) return out;

  const double base = 1e-10 * a.trace() / static_cast<double>(a.rows());
  if (base > 0.0) {
    double jitter = base;
    for (int attempt = 0; attempt <= 3; ++attempt, jitter *= 10.0) {
      MatrixXd shifted = a;
      shifted.diagonal().array() += jitter;
      out.llt.compute(shifted);
      if (detail::factor_ok(out.llt)) {
        out.jitter = jitter;
        return out;
      }
    }
  }
  throw NumericError(std::string(what) + ": Cholesky failed after jitter escalation");
}

/// Lower-triangular L with L L' ~= a, tolerating the all-zero matrix (L = 0).
inline MatrixXd psd_sqrt_factor(const MatrixXd& a) {
  if (a.rows() > 0 && a.trace() == 0.0 && a.isZero(0.0)) return MatrixXd::Zero(a.rows(), a.cols());
  return robust_cholesky(a, "covariance").llt.matrixL();
}

}  // namespace rkhs_logit
