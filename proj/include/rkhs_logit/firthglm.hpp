#pragma once

// Finite-dimensional logistic regression: plain maximum likelihood, Firth's
// bias-reduced estimator and detection of (quasi-)complete separation.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rkhs_logit/errors.hpp"
#include "rkhs_logit/linalg.hpp"
#include "rkhs_logit/simplex.hpp"

namespace rkhs_logit {

/// Rows (1, x_i(t_1), ..., x_i(t_p)) and binary labels.
struct DesignMatrix {
  MatrixXd x;
  VectorXd y;

  DesignMatrix() = default;
  DesignMatrix(MatrixXd rows, VectorXd labels) : x(std::move(rows)), y(std::move(labels)) { validate(); }

  /// Prepends the intercept column to an n x p covariate block.
  static DesignMatrix from_covariates(const MatrixXd& covariates, const VectorXd& labels) {
    MatrixXd rows(covariates.rows(), covariates.cols() + 1);
    rows.col(0).setOnes();
    rows.rightCols(covariates.cols()) = covariates;
    return DesignMatrix(std::move(rows), labels);
  }

  Index n() const { return x.rows(); }
  Index dim() const { return x.cols(); }

  void validate() const {
    if (x.rows() < 1 || x.cols() < 1) throw ValidationError("design: empty matrix");
    if (y.size() != x.rows()) throw ValidationError("design: label count does not match rows");
    if (!x.allFinite()) throw ValidationError("design: non-finite entries");
    if ((x.col(0).array() != 1.0).any()) throw ValidationError("design: first column must be all ones");
    for (Index i = 0; i < y.size(); ++i) {
      if (y[i] != 0.0 && y[i] != 1.0) throw ValidationError("design: labels must be 0 or 1");
    }
  }
};

enum class Separation { None, Quasi, Complete };

inline const char* separation_name(Separation s) {
  switch (s) {
    case Separation::None: return "none";
    case Separation::Quasi: return "quasi";
    case Separation::Complete: return "complete";
  }
  return "?";
}

enum class LikelihoodWeighting {
  Unweighted,     // sum_i [y log p + (1-y) log(1-p)]
  ClassAveraged,  // (1/n0) sum over class 0 + (1/n1) sum over class 1
};

struct GlmOptions {
  int max_iter = 100;
  double tol = 1e-8;  // sup-norm of the (modified) score
  int max_halvings = 10;
  double max_step = 5.0;
  double divergence_threshold = 1e3;  // fit_mle only
  std::optional<VectorXd> start;
};

struct GlmFit {
  VectorXd coefficients;  // intercept first
  double loglik = 0.0;
  double penalized_loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  Separation separation = Separation::None;
  double score_norm = 0.0;
};

namespace detail {

inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

inline double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// Quantities of a logistic fit at one coefficient vector.
struct GlmState {
  VectorXd beta;
  VectorXd prob;
  VectorXd weight;  // p(1-p), computed without cancellation
  MatrixXd fisher;  // X'WX
  JitteredCholesky info;
  double loglik = 0.0;
  double log_det = 0.0;

  double penalized() const { return loglik + 0.5 * log_det; }
};

inline GlmState evaluate(const DesignMatrix& d, const VectorXd& beta) {
  GlmState s;
  s.beta = beta;
  const VectorXd eta = d.x * beta;
  const Index n = d.n();
  s.prob.resize(n);
  s.weight.resize(n);
  MatrixXd xw(n, d.dim());
  double ll = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double p = sigmoid(eta[i]);
    const double q = sigmoid(-eta[i]);
    s.prob[i] = p;
    s.weight[i] = p * q;
    ll -= d.y[i] == 1.0 ? softplus(-eta[i]) : softplus(eta[i]);
    xw.row(i) = d.x.row(i) * std::sqrt(s.weight[i]);
  }
  s.loglik = ll;
  MatrixXd info = MatrixXd::Zero(d.dim(), d.dim());
  info.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
  info = info.selfadjointView<Eigen::Lower>();
  s.info = robust_cholesky(info, "information matrix");
  s.fisher = std::move(info);
  s.log_det = s.info.log_det();
  return s;
}

inline VectorXd hat_from_state(const DesignMatrix& d, const GlmState& s) {
  MatrixXd xw_t = d.x.transpose();
  for (Index i = 0; i < d.n(); ++i) xw_t.col(i) *= std::sqrt(s.weight[i]);
  s.info.llt.matrixL().solveInPlace(xw_t);
  return xw_t.colwise().squaredNorm().transpose();
}

// Exact Hessian of loglik + 0.5 log det I. With w = p(1-p), w1 = w(1-2p),
// w2 = w(1-6w), q_i = x_i'I^{-1}x_i and M_k = dI/dbeta_k = X'diag(w1 x_k)X:
//   H = -I + 0.5 X'diag(w2 q)X - 0.5 [tr(I^{-1} M_k I^{-1} M_l)]_kl.
inline MatrixXd penalized_hessian(const DesignMatrix& d, const GlmState& s) {
  const Index n = d.n();
  const Index q = d.dim();
  const MatrixXd inv = s.info.llt.solve(MatrixXd::Identity(q, q));
  VectorXd w1(n), w2q(n);
  for (Index i = 0; i < n; ++i) {
    const double w = s.weight[i];
    w1[i] = w * (1.0 - 2.0 * s.prob[i]);
    w2q[i] = w * (1.0 - 6.0 * w) * d.x.row(i).dot(inv * d.x.row(i).transpose());
  }
  MatrixXd h = -s.fisher + 0.5 * d.x.transpose() * w2q.asDiagonal() * d.x;
  std::vector<MatrixXd> b(static_cast<std::size_t>(q));
  for (Index k = 0; k < q; ++k) {
    const VectorXd wk = w1.cwiseProduct(d.x.col(k));
    b[static_cast<std::size_t>(k)] = inv * (d.x.transpose() * wk.asDiagonal() * d.x);
  }
  for (Index k = 0; k < q; ++k) {
    for (Index l = 0; l <= k; ++l) {
      const double t = b[static_cast<std::size_t>(k)].cwiseProduct(b[static_cast<std::size_t>(l)].transpose()).sum();
      h(k, l) -= 0.5 * t;
      if (l != k) h(l, k) -= 0.5 * t;
    }
  }
  return h;
}

// Newton direction on the penalized objective when its Hessian is negative
// definite, Fisher scoring otherwise.
inline VectorXd firth_direction(const DesignMatrix& d, const GlmState& s, const VectorXd& score) {
  const MatrixXd neg_h = -penalized_hessian(d, s);
  const Eigen::LLT<MatrixXd> llt(neg_h);
  if (llt.info() == Eigen::Success && factor_ok(llt)) {
    VectorXd step = llt.solve(score);
    if (step.allFinite()) return step;
  }
  return s.info.solve(score);
}

}  // namespace detail

/// Clamped log-likelihood, probabilities kept inside [1e-12, 1 - 1e-12].
inline double log_likelihood(const DesignMatrix& d, const VectorXd& beta,
                             LikelihoodWeighting weighting = LikelihoodWeighting::Unweighted) {
  if (beta.size() != d.dim()) throw ValidationError("log_likelihood: coefficient dimension mismatch");
  static const double kLo = std::log(1e-12);
  static const double kHi = std::log1p(-1e-12);
  const VectorXd eta = d.x * beta;
  double sum0 = 0.0, sum1 = 0.0;
  Index n0 = 0, n1 = 0;
  for (Index i = 0; i < d.n(); ++i) {
    if (d.y[i] == 1.0) {
      sum1 += std::clamp(-detail::softplus(-eta[i]), kLo, kHi);
      ++n1;
    } else {
      sum0 += std::clamp(-detail::softplus(eta[i]), kLo, kHi);
      ++n0;
    }
  }
  if (weighting == LikelihoodWeighting::Unweighted) return sum0 + sum1;
  return (n0 ? sum0 / static_cast<double>(n0) : 0.0) + (n1 ? sum1 / static_cast<double>(n1) : 0.0);
}

/// Diagonal of W^{1/2} X (X'WX)^{-1} X' W^{1/2}.
inline VectorXd hat_diagonals(const DesignMatrix& d, const VectorXd& beta) {
  if (beta.size() != d.dim()) throw ValidationError("hat_diagonals: coefficient dimension mismatch");
  return detail::hat_from_state(d, detail::evaluate(d, beta));
}

inline VectorXd predict_probabilities(const MatrixXd& design_rows, const VectorXd& beta) {
  VectorXd eta = design_rows * beta;
  for (Index i = 0; i < eta.size(); ++i) eta[i] = detail::sigmoid(eta[i]);
  return eta;
}

/// Firth's penalized maximum likelihood: Fisher scoring on the modified score
/// sum_i (y_i - p_i + h_i (1/2 - p_i)) x_i with step halving on
/// loglik + 0.5 log det I.
inline GlmFit fit_firth(const DesignMatrix& d, const GlmOptions& opt = {}) {
  VectorXd beta = opt.start ? *opt.start : VectorXd::Zero(d.dim());
  if (beta.size() != d.dim()) throw ValidationError("fit_firth: start vector has wrong dimension");

  detail::GlmState state = detail::evaluate(d, beta);
  GlmFit fit;
  bool stalled = false;
  VectorXd score;
  for (int iter = 0;; ++iter) {
    const VectorXd h = detail::hat_from_state(d, state);
    const VectorXd resid =
        (d.y - state.prob).array() + h.array() * (0.5 - state.prob.array());
    score = d.x.transpose() * resid;
    fit.iterations = iter;
    if (score.lpNorm<Eigen::Infinity>() <= opt.tol || iter >= opt.max_iter || stalled) break;

    VectorXd step = detail::firth_direction(d, state, score);
    const double big = step.lpNorm<Eigen::Infinity>();
    if (big > opt.max_step) step *= opt.max_step / big;

    bool accepted = false;
    for (int k = 0; k <= opt.max_halvings; ++k) {
      detail::GlmState next;
      try {
        next = detail::evaluate(d, state.beta + step);
      } catch (const NumericError&) {
        step *= 0.5;
        continue;
      }
      const double slack = 1e-12 * (1.0 + std::abs(state.penalized()));
      if (next.penalized() >= state.penalized() - slack) {
        state = std::move(next);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    stalled = !accepted;
  }
  fit.coefficients = state.beta;
  fit.score_norm = score.lpNorm<Eigen::Infinity>();
  fit.converged = fit.score_norm <= opt.tol && fit.coefficients.allFinite();
  fit.loglik = log_likelihood(d, state.beta);
  fit.penalized_loglik = state.penalized();
  return fit;
}

namespace detail {

// Decides  max c'x > eps  s.t.  lp x <= (0, ..., 0, 1)  via the perturbed
// problem with data-row right-hand sides `shift`. The unperturbed optimum lies
// in [obj - hi, obj - lo]; `hi` may be infinite.
inline bool separation_lp_exceeds(const MatrixXd& lp, const VectorXd& shift, const VectorXd& c, double eps,
                                  double lo, double hi, const char* what) {
  const Index n = shift.size();
  VectorXd b(n + 1);
  b << shift, 1.0;
  VectorXd b0 = VectorXd::Zero(n + 1);
  b0[n] = 1.0;
  const LpResult r = maximize_slack_feasible(lp, b, c);
  if (r.status == LpStatus::Optimal) {
    if (const auto obj = reoptimize_rhs(r, b0, c)) return *obj > eps;
    if (r.objective - hi > eps) return true;
    if (r.objective - lo <= eps) return false;
  }
  const LpResult exact = maximize_slack_feasible(lp, b0, c);
  if (exact.status != LpStatus::Optimal) {
    throw NumericError(std::string("detect_separation: ") + what + " LP did not reach optimality");
  }
  return exact.objective > eps;
}

}  // namespace detail

/// Albert-Anderson classification of the design through two linear programs
/// on the column-scaled rows a_i = (2y_i - 1) x_i, with ||alpha||_1 <= 1:
///  (1) max delta s.t. a_i'alpha >= delta; delta > eps means complete;
///  (2) max sum s_i s.t. 0 <= s_i <= a_i'alpha; a positive optimum means some
///      nonzero alpha separates weakly with at least one strict side (quasi).
inline Separation detect_separation(const DesignMatrix& d, double eps = 1e-9) {
  const Index n = d.n();
  const Index p = d.dim();
  MatrixXd a(n, p);
  for (Index j = 0; j < p; ++j) {
    const double scale = d.x.col(j).lpNorm<Eigen::Infinity>();
    a.col(j) = scale > 0.0 ? VectorXd(d.x.col(j) / scale) : VectorXd(d.x.col(j));
  }
  for (Index i = 0; i < n; ++i) a.row(i) *= (2.0 * d.y[i] - 1.0);

  // Both LPs start at a fully degenerate vertex (b = 0 on the data rows) and
  // stall. They are solved with distinct right-hand sides in (0, delta], then
  // the final basis is re-priced at the true b; if it is infeasible there the
  // unperturbed LP is solved directly.
  constexpr double delta = 1e-8;
  VectorXd shift(n);
  for (Index i = 0; i < n; ++i) {
    const double frac = std::fmod(0.6180339887498949 * static_cast<double>(i + 1), 1.0);
    shift[i] = delta * (0.5 + 0.5 * frac);
  }

  {
    MatrixXd lp = MatrixXd::Zero(n + 1, 2 * p + 1);
    lp.block(0, 0, n, p) = -a;
    lp.block(0, p, n, p) = a;
    lp.block(0, 2 * p, n, 1).setOnes();
    lp.block(n, 0, 1, 2 * p).setOnes();
    VectorXd c = VectorXd::Zero(2 * p + 1);
    c[2 * p] = 1.0;
    // t* + min(shift) <= t(shift) <= t* + max(shift)
    if (detail::separation_lp_exceeds(lp, shift, c, eps, shift.minCoeff(), shift.maxCoeff(), "margin")) {
      return Separation::Complete;
    }
  }
  {
    MatrixXd lp = MatrixXd::Zero(n + 1, 2 * p + n);
    lp.block(0, 0, n, p) = -a;
    lp.block(0, p, n, p) = a;
    lp.block(0, 2 * p, n, n).setIdentity();
    lp.block(n, 0, 1, 2 * p).setOnes();
    VectorXd c = VectorXd::Zero(2 * p + n);
    c.tail(n).setOnes();
    // s* + sum(shift) <= s(shift); no useful upper bound
    if (detail::separation_lp_exceeds(lp, shift, c, eps, shift.sum(), std::numeric_limits<double>::infinity(),
                                      "overlap")) {
      return Separation::Quasi;
    }
  }
  return Separation::None;
}

/// Plain maximum likelihood by Newton-Raphson with step halving. Under
/// separation the MLE does not exist: the fit is flagged converged = false and
/// carries the separation type; iteration stops once ||beta|| exceeds the
/// divergence threshold.
inline GlmFit fit_mle(const DesignMatrix& d, const GlmOptions& opt = {}) {
  VectorXd beta = opt.start ? *opt.start : VectorXd::Zero(d.dim());
  if (beta.size() != d.dim()) throw ValidationError("fit_mle: start vector has wrong dimension");

  detail::GlmState state = detail::evaluate(d, beta);
  GlmFit fit;
  bool diverged = false;
  bool stalled = false;
  VectorXd score;
  for (int iter = 0;; ++iter) {
    score = d.x.transpose() * (d.y - state.prob);
    fit.iterations = iter;
    diverged = state.beta.norm() > opt.divergence_threshold;
    if (score.lpNorm<Eigen::Infinity>() <= opt.tol || iter >= opt.max_iter || stalled || diverged) break;

    VectorXd step = state.info.solve(score);
    bool accepted = false;
    for (int k = 0; k <= opt.max_halvings; ++k) {
      detail::GlmState next;
      try {
        next = detail::evaluate(d, state.beta + step);
      } catch (const NumericError&) {
        step *= 0.5;
        continue;
      }
      if (next.loglik >= state.loglik - 1e-12 * (1.0 + std::abs(state.loglik))) {
        state = std::move(next);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    stalled = !accepted;
  }
  fit.coefficients = state.beta;
  fit.score_norm = score.lpNorm<Eigen::Infinity>();
  fit.separation = detect_separation(d);
  fit.converged = !diverged && fit.score_norm <= opt.tol && fit.separation == Separation::None;
  fit.loglik = log_likelihood(d, state.beta);
  fit.penalized_loglik = state.penalized();
  return fit;
}

}  // namespace rkhs_logit
