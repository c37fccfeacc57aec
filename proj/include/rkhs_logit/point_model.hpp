#pragma once

// RKHS functional logistic regression through impact points: the sequential
// and greedy max-max searches, cross-validated choice of p, slope
// reconstruction in H(K), RKHS norm estimates and the Bayes-error readout.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rkhs_logit/dataset.hpp"
#include "rkhs_logit/errors.hpp"
#include "rkhs_logit/firthglm.hpp"
#include "rkhs_logit/kernels.hpp"
#include "rkhs_logit/linalg.hpp"
#include "rkhs_logit/procsim.hpp"
#include "rkhs_logit/random.hpp"

namespace rkhs_logit {

enum class PointMethod { Sequential, MaxMax };

inline const char* point_method_name(PointMethod m) { return m == PointMethod::Sequential ? "sequential" : "maxmax"; }

inline PointMethod point_method_from_name(const std::string& s) {
  if (s == "sequential" || s == "rkhs-sq") return PointMethod::Sequential;
  if (s == "maxmax" || s == "rkhs-mm") return PointMethod::MaxMax;
  throw ValidationError("unknown point-selection method '" + s + "'");
}

/// One stage of a greedy search: the node added at this stage and the
/// objective it reached. `candidate_scores` holds l_k(t) (penalized) for every
/// grid node, NaN where the node was not a candidate.
struct StageRecord {
  std::size_t node = 0;
  double point = 0.0;
  double loglik = 0.0;
  double penalized_loglik = 0.0;
  std::vector<double> candidate_scores;
};

/// Finite-dimensional model P(Y=1|X) = logistic(b0 + sum_j b_j X(t_j)).
/// Points are stored sorted, with their coefficients permuted alongside.
struct PointModel {
  double intercept = 0.0;
  std::vector<double> coefficients;
  std::vector<double> points;
  std::vector<std::size_t> nodes;  // grid indices of `points` in the fitting grid
  double loglik = 0.0;
  double penalized_loglik = 0.0;
  std::vector<StageRecord> trace;
  PointMethod method = PointMethod::Sequential;
  bool converged = true;

  std::size_t size() const { return points.size(); }

  VectorXd coefficient_vector() const {
    VectorXd b(static_cast<Index>(coefficients.size() + 1));
    b[0] = intercept;
    for (std::size_t j = 0; j < coefficients.size(); ++j) b[static_cast<Index>(j + 1)] = coefficients[j];
    return b;
  }

  /// Columns of `data` at this model's points (nearest grid node).
  std::vector<std::size_t> columns_in(const FunctionalDataset& data) const {
    std::vector<std::size_t> cols;
    cols.reserve(points.size());
    for (double t : points) cols.push_back(nearest_node(data.grid, t));
    return cols;
  }

  MatrixXd design_rows(const FunctionalDataset& data) const {
    const auto cols = columns_in(data);
    MatrixXd x(data.curves.rows(), static_cast<Index>(cols.size() + 1));
    x.col(0).setOnes();
    for (std::size_t j = 0; j < cols.size(); ++j) x.col(static_cast<Index>(j + 1)) = data.curves.col(static_cast<Index>(cols[j]));
    return x;
  }

  VectorXd predict_proba(const FunctionalDataset& data) const {
    return predict_probabilities(design_rows(data), coefficient_vector());
  }

  std::vector<int> predict(const FunctionalDataset& data) const {
    const VectorXd p = predict_proba(data);
    std::vector<int> out(static_cast<std::size_t>(p.size()));
    for (Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p[i] > 0.5 ? 1 : 0;
    return out;
  }
};

namespace detail {

inline DesignMatrix design_at(const FunctionalDataset& data, const VectorXd& y, std::span<const std::size_t> nodes) {
  MatrixXd x(data.curves.rows(), static_cast<Index>(nodes.size() + 1));
  x.col(0).setOnes();
  for (std::size_t j = 0; j < nodes.size(); ++j) x.col(static_cast<Index>(j + 1)) = data.curves.col(static_cast<Index>(nodes[j]));
  DesignMatrix d;
  d.x = std::move(x);
  d.y = y;
  return d;
}

inline PointModel make_model(const FunctionalDataset& data, std::vector<std::size_t> nodes, const GlmFit& fit,
                             PointMethod method) {
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return nodes[a] < nodes[b]; });
  PointModel m;
  m.method = method;
  m.intercept = fit.coefficients[0];
  for (std::size_t k : order) {
    m.nodes.push_back(nodes[k]);
    m.points.push_back(data.grid[nodes[k]]);
    m.coefficients.push_back(fit.coefficients[static_cast<Index>(k + 1)]);
  }
  m.loglik = fit.loglik;
  m.penalized_loglik = fit.penalized_loglik;
  m.converged = fit.converged;
  return m;
}

inline std::vector<std::size_t> resolve_search_nodes(const FunctionalDataset& data,
                                                     const std::vector<std::size_t>& requested) {
  std::vector<std::size_t> nodes;
  if (requested.empty()) {
    for (std::size_t j = 0; j < data.grid.size(); ++j) {
      if (data.grid[j] > 0.0) nodes.push_back(j);
    }
  } else {
    nodes = requested;
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    for (std::size_t j : nodes) {
      if (j >= data.grid.size()) throw ValidationError("search grid index out of range");
    }
  }
  if (nodes.empty()) throw ValidationError("empty candidate set");
  return nodes;
}

// loglik + 0.5 log det(X'WX) at a fixed linear predictor.
inline double penalized_at(const VectorXd& eta, const VectorXd& y, const MatrixXd& x) {
  const Index n = x.rows();
  MatrixXd xw(n, x.cols());
  double ll = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double w = sigmoid(eta[i]) * sigmoid(-eta[i]);
    ll -= y[i] == 1.0 ? softplus(-eta[i]) : softplus(eta[i]);
    xw.row(i) = x.row(i) * std::sqrt(w);
  }
  MatrixXd info = MatrixXd::Zero(x.cols(), x.cols());
  info.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
  info = info.selfadjointView<Eigen::Lower>();
  return ll + 0.5 * robust_cholesky(info, "information matrix").log_det();
}

}  // namespace detail

/// Firth fit at fixed grid nodes (no search), returned as a point model.
inline PointModel fit_at_nodes(const FunctionalDataset& data, const std::vector<std::size_t>& nodes,
                               const GlmOptions& glm = {}) {
  data.validate();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] >= data.grid_size()) throw ValidationError("fit_at_nodes: node index out of range");
    if (std::find(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(k), nodes[k]) !=
        nodes.begin() + static_cast<std::ptrdiff_t>(k)) {
      throw ValidationError("fit_at_nodes: duplicate node");
    }
  }
  const GlmFit fit = fit_firth(detail::design_at(data, data.label_vector(), nodes), glm);
  return detail::make_model(data, nodes, fit, PointMethod::Sequential);
}

struct SequentialOptions {
  GlmOptions glm;
  std::vector<std::size_t> search_nodes;  // empty: every grid node in (0,1]
  // Stop growing once a stage improves the penalized loglik by less than
  // epsilon; a non-positive value means 1e-3 * n. Off by default.
  bool epsilon_stop = false;
  double epsilon = 0.0;
};

/// Models after each stage of the sequential search; element k-1 has k points.
inline std::vector<PointModel> sequential_path(const FunctionalDataset& data, std::size_t p_max,
                                               const SequentialOptions& opt = {}) {
  data.validate();
  if (p_max < 1) throw ValidationError("fit_sequential: p_max must be at least 1");
  const auto candidates = detail::resolve_search_nodes(data, opt.search_nodes);
  const VectorXd y = data.label_vector();

  std::vector<std::size_t> chosen;
  std::vector<StageRecord> trace;
  std::vector<PointModel> path;
  VectorXd warm = VectorXd::Zero(1);
  for (std::size_t stage = 0; stage < p_max; ++stage) {
    StageRecord rec;
    rec.candidate_scores.assign(data.grid.size(), std::numeric_limits<double>::quiet_NaN());
    std::optional<GlmFit> best;
    std::size_t best_node = 0;
    std::vector<std::size_t> nodes = chosen;
    nodes.push_back(0);
    GlmOptions glm = opt.glm;
    VectorXd start(static_cast<Index>(chosen.size() + 2));
    start.head(warm.size()) = warm;
    start[start.size() - 1] = 0.0;
    glm.start = start;
    for (std::size_t c : candidates) {
      if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) continue;
      nodes.back() = c;
      GlmFit fit;
      try {
        fit = fit_firth(detail::design_at(data, y, nodes), glm);
      } catch (const NumericError&) {
        continue;
      }
      if (!std::isfinite(fit.penalized_loglik)) continue;
      rec.candidate_scores[c] = fit.penalized_loglik;
      if (!best || fit.penalized_loglik > best->penalized_loglik) {
        best = std::move(fit);
        best_node = c;
      }
    }
    if (!best) throw ValidationError("fit_sequential: empty candidate set at stage " + std::to_string(stage + 1));
    chosen.push_back(best_node);
    warm = best->coefficients;
    rec.node = best_node;
    rec.point = data.grid[best_node];
    rec.loglik = best->loglik;
    rec.penalized_loglik = best->penalized_loglik;
    const double gain = trace.empty() ? std::numeric_limits<double>::infinity()
                                      : rec.penalized_loglik - trace.back().penalized_loglik;
    trace.push_back(std::move(rec));
    PointModel model = detail::make_model(data, chosen, *best, PointMethod::Sequential);
    model.trace = trace;
    if (opt.epsilon_stop) {
      const double eps = opt.epsilon > 0.0 ? opt.epsilon : 1e-3 * static_cast<double>(data.size());
      if (gain < eps) break;
    }
    path.push_back(std::move(model));
  }
  return path;
}

inline PointModel fit_sequential(const FunctionalDataset& data, std::size_t p_max, const SequentialOptions& opt = {}) {
  return sequential_path(data, p_max, opt).back();
}

struct MaxMaxOptions {
  std::size_t restarts = 3;
  std::size_t max_rounds = 20;
  std::uint64_t seed = 0;
  GlmOptions glm;
  std::vector<std::size_t> search_nodes;
};

namespace detail {

struct MaxMaxState {
  std::vector<std::size_t> nodes;  // selection order; coefficient k+1 belongs to nodes[k]
  GlmFit fit;
  std::size_t rounds = 0;
};

// Alternates (M2) the Firth fit at the current nodes with (M1) cyclic
// coordinate-wise grid maximization of the penalized likelihood at fixed
// coefficients, until no node moves.
inline MaxMaxState alternate(const FunctionalDataset& data, const VectorXd& y, std::vector<std::size_t> nodes,
                             const std::vector<std::size_t>& candidates, const MaxMaxOptions& opt,
                             const VectorXd& warm) {
  GlmOptions glm = opt.glm;
  glm.start = warm;
  MaxMaxState st;
  st.fit = fit_firth(design_at(data, y, nodes), glm);
  for (std::size_t round = 0; round < opt.max_rounds; ++round) {
    st.rounds = round + 1;
    const VectorXd& beta = st.fit.coefficients;
    DesignMatrix d = design_at(data, y, nodes);
    VectorXd eta = d.x * beta;
    bool changed = false;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const Index col = static_cast<Index>(j + 1);
      const double bj = beta[col];
      const VectorXd base = eta - bj * d.x.col(col);
      double best_val = penalized_at(eta, y, d.x);
      std::size_t best_node = nodes[j];
      MatrixXd trial = d.x;
      for (std::size_t c : candidates) {
        if (std::find(nodes.begin(), nodes.end(), c) != nodes.end()) continue;
        trial.col(col) = data.curves.col(static_cast<Index>(c));
        const VectorXd eta_c = base + bj * trial.col(col);
        double val;
        try {
          val = penalized_at(eta_c, y, trial);
        } catch (const NumericError&) {
          continue;
        }
        if (val > best_val + 1e-10 * (1.0 + std::abs(best_val))) {
          best_val = val;
          best_node = c;
        }
      }
      if (best_node != nodes[j]) {
        nodes[j] = best_node;
        d.x.col(col) = data.curves.col(static_cast<Index>(best_node));
        eta = base + bj * d.x.col(col);
        changed = true;
      }
    }
    if (!changed) break;
    glm.start = st.fit.coefficients;
    st.fit = fit_firth(design_at(data, y, nodes), glm);
  }
  st.nodes = std::move(nodes);
  return st;
}

}  // namespace detail

/// Greedy max-max: grow the model one random point at a time, re-running the
/// M1/M2 alternation at each dimension; the best of `restarts` random new
/// points is kept at every dimension. Element k-1 of the path has k points.
inline std::vector<PointModel> maxmax_path(const FunctionalDataset& data, std::size_t p, const MaxMaxOptions& opt = {}) {
  data.validate();
  if (p < 1) throw ValidationError("fit_maxmax: p must be at least 1");
  if (opt.restarts < 1) throw ValidationError("fit_maxmax: restarts must be at least 1");
  const auto candidates = detail::resolve_search_nodes(data, opt.search_nodes);
  const VectorXd y = data.label_vector();
  Rng rng = make_rng(derive_seed(opt.seed, 0x6d6d));

  std::vector<PointModel> path;
  std::vector<std::size_t> current;
  VectorXd warm = VectorXd::Zero(1);
  for (std::size_t dim = 1; dim <= p; ++dim) {
    std::vector<std::size_t> pool;
    for (std::size_t c : candidates) {
      if (std::find(current.begin(), current.end(), c) == current.end()) pool.push_back(c);
    }
    if (pool.empty()) throw ValidationError("fit_maxmax: empty candidate set at dimension " + std::to_string(dim));
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t tries = std::min(opt.restarts, pool.size());

    std::optional<detail::MaxMaxState> best;
    VectorXd start(static_cast<Index>(dim + 1));
    start.head(warm.size()) = warm;
    start[start.size() - 1] = 0.0;
    for (std::size_t r = 0; r < tries; ++r) {
      std::vector<std::size_t> init = current;
      init.push_back(pool[r]);
      detail::MaxMaxState st;
      try {
        st = detail::alternate(data, y, init, candidates, opt, start);
      } catch (const NumericError&) {
        continue;
      }
      if (!best || st.fit.penalized_loglik > best->fit.penalized_loglik) best = std::move(st);
    }
    if (!best) throw NumericError("fit_maxmax: every restart failed at dimension " + std::to_string(dim));
    current = best->nodes;
    warm = best->fit.coefficients;

    StageRecord rec;
    rec.node = current.back();
    rec.point = data.grid[rec.node];
    rec.loglik = best->fit.loglik;
    rec.penalized_loglik = best->fit.penalized_loglik;
    PointModel model = detail::make_model(data, current, best->fit, PointMethod::MaxMax);
    model.trace = path.empty() ? std::vector<StageRecord>{} : path.back().trace;
    model.trace.push_back(std::move(rec));
    path.push_back(std::move(model));
  }
  return path;
}

inline PointModel fit_maxmax(const FunctionalDataset& data, std::size_t p, const MaxMaxOptions& opt = {}) {
  return maxmax_path(data, p, opt).back();
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin.
inline std::vector<std::size_t> stratified_folds(const std::vector<int>& labels, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  Rng rng = make_rng(seed);
  std::vector<std::size_t> assignment(labels.size());
  std::size_t offset = 0;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) assignment[idx[k]] = (offset + k) % folds;
    offset += idx.size();
  }
  return assignment;
}

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified K-fold splits whose training parts contain both classes;
/// reshuffles with a fresh seed up to 5 times before giving up.
inline std::vector<FoldSplit> make_cv_splits(const std::vector<int>& labels, std::size_t folds, std::uint64_t seed) {
  for (std::uint64_t attempt = 0; attempt < 5; ++attempt) {
    const auto assign = stratified_folds(labels, folds, derive_seed(seed, attempt));
    std::vector<FoldSplit> splits(folds);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t f = 0; f < folds; ++f) (f == assign[i] ? splits[f].test : splits[f].train).push_back(i);
    }
    bool ok = true;
    for (const auto& s : splits) {
      bool has0 = false, has1 = false;
      for (std::size_t i : s.train) (labels[i] ? has1 : has0) = true;
      ok = ok && has0 && has1 && !s.test.empty();
    }
    if (ok) return splits;
  }
  throw ValidationError("cross-validation: could not build folds with both classes in every training part");
}

/// Index of the smallest value; ties go to the earliest index.
inline std::size_t argmin_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[best] - 1e-12) best = i;
  }
  return best;
}

inline double error_rate(const std::vector<int>& predicted, const std::vector<int>& actual) {
  if (predicted.size() != actual.size()) throw ValidationError("misclassification_rate: length mismatch");
  if (actual.empty()) throw ValidationError("misclassification_rate: empty input");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) wrong += predicted[i] != actual[i];
  return static_cast<double>(wrong) / static_cast<double>(actual.size());
}

struct PointSearchOptions {
  PointMethod method = PointMethod::Sequential;
  std::size_t p_max = 10;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  GlmOptions glm;
  std::size_t restarts = 3;
  std::size_t max_rounds = 20;
  std::vector<std::size_t> search_nodes;
};

inline std::vector<PointModel> point_path(const FunctionalDataset& data, std::size_t p_max,
                                          const PointSearchOptions& opt, std::uint64_t seed) {
  if (opt.method == PointMethod::Sequential) {
    return sequential_path(data, p_max, SequentialOptions{opt.glm, opt.search_nodes});
  }
  return maxmax_path(data, p_max, MaxMaxOptions{opt.restarts, opt.max_rounds, seed, opt.glm, opt.search_nodes});
}

struct CvSelection {
  std::size_t p_hat = 1;
  std::vector<double> errors;  // pooled held-out misclassification for p = 1..p_max
};

/// p in 1..p_max minimizing the pooled held-out misclassification of
/// stratified K-fold cross-validation; ties toward smaller p.
inline CvSelection select_p_cv(const FunctionalDataset& data, const PointSearchOptions& opt) {
  data.validate();
  if (opt.p_max < 1) throw ValidationError("select_p_cv: p_max must be at least 1");
  const auto splits = make_cv_splits(data.labels, opt.folds, derive_seed(opt.seed, 0xcf));
  std::vector<double> wrong(opt.p_max, 0.0);
  for (std::size_t f = 0; f < splits.size(); ++f) {
    const FunctionalDataset train = data.subset(splits[f].train);
    const FunctionalDataset test = data.subset(splits[f].test);
    const auto path = point_path(train, opt.p_max, opt, derive_seed(opt.seed, 0x100 + f));
    for (std::size_t k = 0; k < opt.p_max; ++k) {
      const auto pred = path[std::min(k, path.size() - 1)].predict(test);
      for (std::size_t i = 0; i < pred.size(); ++i) wrong[k] += pred[i] != test.labels[i];
    }
  }
  CvSelection out;
  out.errors.resize(opt.p_max);
  for (std::size_t k = 0; k < opt.p_max; ++k) out.errors[k] = wrong[k] / static_cast<double>(data.size());
  out.p_hat = argmin_first(out.errors) + 1;
  return out;
}

/// Cross-validated p followed by a fit on all of `data`.
inline PointModel fit_point_classifier(const FunctionalDataset& data, const PointSearchOptions& opt,
                                       CvSelection* selection = nullptr) {
  const CvSelection cv = select_p_cv(data, opt);
  if (selection) *selection = cv;
  return point_path(data, cv.p_hat, opt, derive_seed(opt.seed, 0xf17)).back();
}

/// beta_hat(s) = sum_j b_j K(t_j, s).
class SlopeFunction {
 public:
  SlopeFunction(KernelSpec kernel, std::vector<double> coefficients, std::vector<double> points)
      : kernel_(std::move(kernel)), coefficients_(std::move(coefficients)), points_(std::move(points)) {
    if (coefficients_.size() != points_.size()) throw ValidationError("slope: coefficient/point count mismatch");
  }

  double operator()(double s) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < points_.size(); ++j) acc += coefficients_[j] * kernel_(points_[j], s);
    return acc;
  }

  VectorXd on_grid(std::span<const double> grid) const {
    VectorXd v(static_cast<Index>(grid.size()));
    for (Index i = 0; i < v.size(); ++i) v[i] = (*this)(grid[static_cast<std::size_t>(i)]);
    return v;
  }

  const KernelSpec& kernel() const { return kernel_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  const std::vector<double>& points() const { return points_; }

 private:
  KernelSpec kernel_;
  std::vector<double> coefficients_;
  std::vector<double> points_;
};

inline SlopeFunction reconstruct_slope(const PointModel& model, const KernelSpec& kernel) {
  return SlopeFunction(kernel, model.coefficients, model.points);
}

/// ||f||_K^2 estimated by the grid quadratic form f(S)' Sigma_S^{-1} f(S).
inline double rkhs_norm_sq(const VectorXd& f_on_grid, const KernelSpec& kernel, std::span<const double> grid) {
  if (f_on_grid.size() != static_cast<Index>(grid.size())) throw ValidationError("rkhs_norm_sq: size mismatch");
  const JitteredCholesky chol = robust_cholesky(kernel_values(kernel, grid), "Sigma_S");
  VectorXd z = f_on_grid;
  chol.llt.matrixL().solveInPlace(z);
  return z.squaredNorm();
}

/// Exact ||sum_j a_j K(t_j,.)||_K^2 = a' Sigma_T a.
inline double span_norm_sq(const KernelSpec& kernel, std::span<const double> coefficients,
                           std::span<const double> points) {
  if (coefficients.size() != points.size()) throw ValidationError("span_norm_sq: size mismatch");
  if (points.empty()) return 0.0;
  const VectorXd a = Eigen::Map<const VectorXd>(coefficients.data(), static_cast<Index>(coefficients.size()));
  return std::max(0.0, a.dot(kernel_values(kernel, points) * a));
}

/// Norm of a kernel expansion. When every point is a node of S the value is
/// the exact a' Sigma_T a (the quadratic form is exact on that span);
/// otherwise the grid quadratic form of the evaluated function.
inline double rkhs_norm_sq(const SlopeFunction& f, std::span<const double> grid) {
  bool on_grid = true;
  for (double t : f.points()) {
    on_grid = on_grid && std::any_of(grid.begin(), grid.end(), [t](double g) { return std::abs(g - t) <= 1e-12; });
  }
  if (on_grid) return span_norm_sq(f.kernel(), f.coefficients(), f.points());
  return rkhs_norm_sq(f.on_grid(grid), f.kernel(), grid);
}

/// ||beta_hat - beta||_K^2. A finite truth is snapped to the grid (as the
/// simulated responses were) and the difference is evaluated exactly on the
/// joint span; an analytic truth goes through the grid quadratic form.
inline double slope_error_norm(const PointModel& model, const SlopeSpec& truth, const KernelSpec& kernel,
                               const std::vector<double>& grid) {
  if (truth.is_finite()) {
    const auto& f = truth.finite();
    const auto idx = snap_to_grid(f.points, grid);
    std::vector<double> pts = model.points;
    std::vector<double> coef = model.coefficients;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double t = grid[idx[j]];
      auto it = std::find_if(pts.begin(), pts.end(), [t](double u) { return std::abs(u - t) <= 1e-12; });
      if (it != pts.end()) {
        coef[static_cast<std::size_t>(it - pts.begin())] -= f.coefficients[j];
      } else {
        pts.push_back(t);
        coef.push_back(-f.coefficients[j]);
      }
    }
    return span_norm_sq(kernel, coef, pts);
  }
  const SlopeFunction fitted = reconstruct_slope(model, kernel);
  VectorXd diff(static_cast<Index>(grid.size()));
  for (Index i = 0; i < diff.size(); ++i) {
    const double s = grid[static_cast<std::size_t>(i)];
    diff[i] = fitted(s) - truth.analytic().beta(s);
  }
  return rkhs_norm_sq(diff, kernel, grid);
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct BayesErrorEstimate {
  double value = 0.5;
  bool clamped = false;  // intercept > 0: outside the equal-prior Gaussian setting
};

/// Phi(-sqrt(-b0/2)), the Bayes error of the equal-prior homoscedastic
/// Gaussian problem whose logistic intercept is b0.
inline BayesErrorEstimate bayes_error_estimate(double intercept) {
  if (!std::isfinite(intercept)) throw ValidationError("bayes_error_estimate: non-finite intercept");
  if (intercept > 0.0) return {0.5, true};
  return {standard_normal_cdf(-std::sqrt(-intercept / 2.0)), false};
}

}  // namespace rkhs_logit
