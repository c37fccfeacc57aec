#pragma once

// Independent reference computations used by the unit and acceptance suites.
// They share no code paths with the library beyond Eigen.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double naive_loglik(const MatrixXd& x, const VectorXd& y, const VectorXd& beta) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-x.row(i).dot(beta)));
    ll += y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
  }
  return ll;
}

inline MatrixXd information(const MatrixXd& x, const VectorXd& beta) {
  MatrixXd info = MatrixXd::Zero(x.cols(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-x.row(i).dot(beta)));
    info += p * (1.0 - p) * x.row(i).transpose() * x.row(i);
  }
  return info;
}

// loglik + 0.5 log det(X'WX) via a plain determinant.
inline double naive_penalized(const MatrixXd& x, const VectorXd& y, const VectorXd& beta) {
  return naive_loglik(x, y, beta) + 0.5 * std::log(information(x, beta).determinant());
}

// Diagonal of the full hat matrix W^{1/2} X (X'WX)^{-1} X' W^{1/2}.
inline VectorXd naive_hat(const MatrixXd& x, const VectorXd& beta) {
  VectorXd w(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-x.row(i).dot(beta)));
    w[i] = p * (1.0 - p);
  }
  const MatrixXd xw = w.cwiseSqrt().asDiagonal() * x;
  const MatrixXd h = xw * (xw.transpose() * xw).inverse() * xw.transpose();
  return h.diagonal();
}

inline VectorXd modified_score(const MatrixXd& x, const VectorXd& y, const VectorXd& beta) {
  const VectorXd h = naive_hat(x, beta);
  VectorXd r(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-x.row(i).dot(beta)));
    r[i] = y[i] - p + h[i] * (0.5 - p);
  }
  return x.transpose() * r;
}

// Firth estimate through the data-splitting formulation: with the hat values
// frozen, observation i becomes y_i + h_i/2 successes out of 1 + h_i trials;
// a binomial Newton fit is run to convergence, h is refreshed, and the outer
// loop repeats until the coefficients stop moving.
inline VectorXd firth_by_splitting(const MatrixXd& x, const VectorXd& y, int outer = 500) {
  VectorXd beta = VectorXd::Zero(x.cols());
  for (int o = 0; o < outer; ++o) {
    const VectorXd h = naive_hat(x, beta);
    const VectorXd succ = y + 0.5 * h;
    const VectorXd trials = VectorXd::Ones(x.rows()) + h;
    VectorXd b = beta;
    for (int it = 0; it < 100; ++it) {
      VectorXd score = VectorXd::Zero(x.cols());
      MatrixXd info = MatrixXd::Zero(x.cols(), x.cols());
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double p = 1.0 / (1.0 + std::exp(-x.row(i).dot(b)));
        score += (succ[i] - trials[i] * p) * x.row(i).transpose();
        info += trials[i] * p * (1.0 - p) * x.row(i).transpose() * x.row(i);
      }
      const VectorXd step = info.ldlt().solve(score);
      b += step;
      if (step.lpNorm<Eigen::Infinity>() < 1e-14) break;
    }
    const double move = (b - beta).lpNorm<Eigen::Infinity>();
    beta = b;
    if (move < 1e-12) break;
  }
  return beta;
}

enum class Sep { None, Quasi, Complete };

inline std::vector<std::vector<int>> subsets_up_to(int n, int k) {
  std::vector<std::vector<int>> out = {{}};
  std::function<void(int, std::vector<int>&)> rec = [&](int start, std::vector<int>& cur) {
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      out.push_back(cur);
      if (static_cast<int>(cur.size()) < k) rec(i + 1, cur);
      cur.pop_back();
    }
  };
  std::vector<int> cur;
  if (k > 0) rec(0, cur);
  return out;
}

// Separation class by enumerating the candidate extreme rays of the cone
// {alpha : a_i'alpha >= 0}, a_i = (2y_i - 1) x_i: every ray is (up to the
// lineality space) a null vector of at most d-1 rows of A. The sum of all
// feasible rays is strict on exactly the rows some cone member is strict on.
inline Sep brute_force_separation(const MatrixXd& x, const VectorXd& y) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  MatrixXd a = x;
  for (int i = 0; i < n; ++i) a.row(i) *= 2.0 * y[i] - 1.0;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double tol = 1e-9 * scale;
  VectorXd sum = VectorXd::Zero(d);
  for (const auto& rows : subsets_up_to(n, d - 1)) {
    MatrixXd sub(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = a.row(rows[r]);
    MatrixXd null;
    if (rows.empty()) {
      null = MatrixXd::Identity(d, d);
    } else {
      Eigen::FullPivLU<MatrixXd> lu(sub);
      lu.setThreshold(1e-10);
      null = lu.kernel();
      if (lu.rank() == d) continue;
    }
    for (Eigen::Index c = 0; c < null.cols(); ++c) {
      const VectorXd v = null.col(c).normalized();
      for (double sgn : {1.0, -1.0}) {
        const VectorXd r = sgn * v;
        const VectorXd m = a * r;
        if (m.minCoeff() >= -tol) sum += r;
      }
    }
  }
  const VectorXd margins = a * sum;
  int strict = 0;
  for (int i = 0; i < n; ++i) strict += margins[i] > tol;
  if (strict == n) return Sep::Complete;
  if (strict > 0) return Sep::Quasi;
  return Sep::None;
}

}  // namespace oracle
