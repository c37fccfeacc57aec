#pragma once

// Comparison classifiers: functional PCA + logistic regression, PCA-knn,
// k-nearest neighbours on curves, and RK-VS point selection with LDA or knn
// back-ends.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "rkhs_logit/dataset.hpp"
#include "rkhs_logit/errors.hpp"
#include "rkhs_logit/firthglm.hpp"
#include "rkhs_logit/kernels.hpp"
#include "rkhs_logit/linalg.hpp"
#include "rkhs_logit/point_model.hpp"

namespace rkhs_logit {

/// Quadrature step of a grid: (last - first) / (m - 1), or 1 for one node.
inline double quadrature_step(const std::vector<double>& grid) {
  if (grid.size() < 2) return 1.0;
  return (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
}

/// Functional principal components; `vectors` are orthonormal under the
/// Delta-weighted inner product <u, v> = Delta * u'v.
struct PcaBasis {
  VectorXd mean;
  MatrixXd vectors;  // m x d
  VectorXd values;   // descending, >= 0
  double spacing = 1.0;

  Index dim() const { return vectors.cols(); }
};

inline PcaBasis fit_pca(const FunctionalDataset& data, std::size_t d) {
  data.validate();
  const std::size_t limit = std::min(data.size(), data.grid_size());
  if (d < 1 || d > limit) throw ValidationError("fit_pca: d must lie in 1..min(n, m)");
  if (data.size() < 2) throw ValidationError("fit_pca: need at least 2 samples");
  PcaBasis b;
  b.spacing = quadrature_step(data.grid);
  b.mean = data.curves.colwise().mean().transpose();
  const Spectrum spec = spectrum_of(sample_covariance(data.curves), b.spacing);
  const Index k = static_cast<Index>(d);
  b.values = spec.values.head(k).cwiseMax(0.0);
  b.vectors = spec.vectors.leftCols(k) / std::sqrt(b.spacing);
  return b;
}

/// n x d scores: Delta-weighted inner products of centered curves with the basis.
inline MatrixXd project(const MatrixXd& curves, const PcaBasis& basis) {
  if (curves.cols() != basis.mean.size()) throw ValidationError("project: grid size mismatch");
  return basis.spacing * ((curves.rowwise() - basis.mean.transpose()) * basis.vectors);
}

inline MatrixXd project(const FunctionalDataset& data, const PcaBasis& basis) { return project(data.curves, basis); }

inline MatrixXd reconstruct(const MatrixXd& scores, const PcaBasis& basis) {
  if (scores.cols() != basis.dim()) throw ValidationError("reconstruct: score dimension mismatch");
  return (scores * basis.vectors.transpose()).rowwise() + basis.mean.transpose();
}

/// k-nearest-neighbour vote in a (scaled) Euclidean feature space.
class KnnClassifier {
 public:
  KnnClassifier() = default;
  KnnClassifier(MatrixXd features, std::vector<int> labels, std::size_t k)
      : x_(std::move(features)), y_(std::move(labels)), k_(k) {
    if (y_.size() != static_cast<std::size_t>(x_.rows())) throw ValidationError("knn: label count mismatch");
    if (k_ < 1 || k_ > y_.size()) throw ValidationError("knn: k must lie in 1..n_train");
  }

  /// Majority vote; a tie goes to the class whose voting neighbours are
  /// nearer on average, then to label 0.
  int classify(const Eigen::RowVectorXd& q) const {
    const Index n = x_.rows();
    std::vector<std::pair<double, std::size_t>> dist(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = {(x_.row(i) - q).squaredNorm(), static_cast<std::size_t>(i)};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
    std::size_t votes[2] = {0, 0};
    double sum[2] = {0.0, 0.0};
    for (std::size_t j = 0; j < k_; ++j) {
      const int lab = y_[dist[j].second];
      ++votes[lab];
      sum[lab] += std::sqrt(dist[j].first);
    }
    if (votes[0] != votes[1]) return votes[1] > votes[0] ? 1 : 0;
    return sum[1] / static_cast<double>(votes[1]) < sum[0] / static_cast<double>(votes[0]) ? 1 : 0;
  }

  std::vector<int> predict(const MatrixXd& queries) const {
    if (queries.cols() != x_.cols()) throw ValidationError("knn: feature dimension mismatch");
    std::vector<int> out(static_cast<std::size_t>(queries.rows()));
    for (Index i = 0; i < queries.rows(); ++i) out[static_cast<std::size_t>(i)] = classify(queries.row(i));
    return out;
  }

 private:
  MatrixXd x_;
  std::vector<int> y_;
  std::size_t k_ = 5;
};

/// knn on curves with the Delta-weighted L2 distance.
inline std::vector<int> classify_knn(const FunctionalDataset& train, const FunctionalDataset& test, std::size_t k) {
  train.validate();
  test.validate();
  if (train.grid_size() != test.grid_size()) throw ValidationError("knn: train and test grids differ");
  const double w = std::sqrt(quadrature_step(train.grid));
  return KnnClassifier(train.curves * w, train.labels, k).predict(test.curves * w);
}

struct PcaCvOptions {
  std::size_t d_max = 30;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::size_t k = 5;  // PCA-knn only
  GlmOptions glm;
};

namespace detail {

inline std::size_t pca_dim_cap(std::size_t n_train, std::size_t m, std::size_t d_max) {
  return std::max<std::size_t>(1, std::min({d_max, m, n_train > 2 ? n_train - 2 : std::size_t{1}}));
}

// CV choice of d for a classifier built on the first d PCA scores. `fit` gets
// (train scores, train labels) and returns a predictor on score matrices.
template <class Fit>
std::vector<double> pca_cv_errors(const FunctionalDataset& data, const PcaCvOptions& opt, std::size_t d_cap,
                                  Fit&& fit) {
  const auto splits = make_cv_splits(data.labels, opt.folds, opt.seed);
  std::vector<double> wrong(d_cap, 0.0);
  for (const auto& split : splits) {
    const FunctionalDataset tr = data.subset(split.train);
    const FunctionalDataset te = data.subset(split.test);
    const std::size_t cap = std::min(d_cap, pca_dim_cap(tr.size(), tr.grid_size(), opt.d_max));
    const PcaBasis basis = fit_pca(tr, cap);
    const MatrixXd s_tr = project(tr, basis);
    const MatrixXd s_te = project(te, basis);
    for (std::size_t d = 1; d <= d_cap; ++d) {
      const Index use = static_cast<Index>(std::min(d, cap));
      std::vector<int> pred;
      try {
        pred = fit(MatrixXd(s_tr.leftCols(use)), tr.labels)(MatrixXd(s_te.leftCols(use)));
      } catch (const NumericError&) {
        pred.assign(te.size(), -1);
      }
      for (std::size_t i = 0; i < pred.size(); ++i) wrong[d - 1] += pred[i] != te.labels[i];
    }
  }
  for (double& w : wrong) w /= static_cast<double>(data.size());
  return wrong;
}

}  // namespace detail

/// Logistic (Firth) fit on the first d functional principal component scores.
struct PcaLogisticModel {
  PcaBasis basis;
  VectorXd coefficients;
  std::vector<double> cv_errors;

  std::vector<int> predict(const FunctionalDataset& data) const {
    const VectorXd p = predict_probabilities(
        DesignMatrix::from_covariates(project(data, basis), VectorXd::Zero(static_cast<Index>(data.size()))).x,
        coefficients);
    std::vector<int> out(data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = p[static_cast<Index>(i)] > 0.5 ? 1 : 0;
    return out;
  }
};

inline auto firth_score_classifier(const GlmOptions& glm) {
  return [glm](const MatrixXd& scores, const std::vector<int>& labels) {
    VectorXd y(static_cast<Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) y[static_cast<Index>(i)] = labels[i];
    const VectorXd beta = fit_firth(DesignMatrix::from_covariates(scores, y), glm).coefficients;
    return [beta](const MatrixXd& q) {
      const VectorXd p = predict_probabilities(DesignMatrix::from_covariates(q, VectorXd::Zero(q.rows())).x, beta);
      std::vector<int> out(static_cast<std::size_t>(q.rows()));
      for (Index i = 0; i < q.rows(); ++i) out[static_cast<std::size_t>(i)] = p[i] > 0.5 ? 1 : 0;
      return out;
    };
  };
}

inline PcaLogisticModel fit_pca_logistic(const FunctionalDataset& train, const PcaCvOptions& opt = {}) {
  train.validate();
  const std::size_t cap = detail::pca_dim_cap(train.size(), train.grid_size(), opt.d_max);
  PcaLogisticModel m;
  m.cv_errors = detail::pca_cv_errors(train, opt, cap, firth_score_classifier(opt.glm));
  const std::size_t d = argmin_first(m.cv_errors) + 1;
  m.basis = fit_pca(train, d);
  m.coefficients =
      fit_firth(DesignMatrix::from_covariates(project(train, m.basis), train.label_vector()), opt.glm).coefficients;
  return m;
}

inline std::vector<int> classify_pca_logistic(const FunctionalDataset& train, const FunctionalDataset& test,
                                              const PcaCvOptions& opt = {}) {
  return fit_pca_logistic(train, opt).predict(test);
}

/// knn on the first d principal component scores, d chosen by CV.
struct PcaKnnModel {
  PcaBasis basis;
  KnnClassifier knn;
  std::vector<double> cv_errors;

  std::vector<int> predict(const FunctionalDataset& data) const { return knn.predict(project(data, basis)); }
};

inline PcaKnnModel fit_pca_knn(const FunctionalDataset& train, const PcaCvOptions& opt = {}) {
  train.validate();
  const std::size_t cap = detail::pca_dim_cap(train.size(), train.grid_size(), opt.d_max);
  const std::size_t k = opt.k;
  auto fit = [k](const MatrixXd& scores, const std::vector<int>& labels) {
    KnnClassifier c(scores, labels, std::min(k, labels.size()));
    return [c](const MatrixXd& q) { return c.predict(q); };
  };
  PcaKnnModel m;
  m.cv_errors = detail::pca_cv_errors(train, opt, cap, fit);
  const std::size_t d = argmin_first(m.cv_errors) + 1;
  m.basis = fit_pca(train, d);
  m.knn = KnnClassifier(project(train, m.basis), train.labels, std::min(k, train.size()));
  return m;
}

/// Greedy forward selection of grid nodes maximizing the sample Mahalanobis
/// distance between class means, (m1 - m0)' S_T^{-1} (m1 - m0).
struct RkvsSelection {
  std::vector<std::size_t> nodes;  // selection order
  std::vector<double> points;
  double score = 0.0;
  std::vector<double> path_scores;  // score after each greedy step
};

struct RkvsModelStats {
  VectorXd mean0, mean1;
  MatrixXd pooled;  // within-class covariance, divisor n - 2
};

inline RkvsModelStats class_statistics(const FunctionalDataset& data) {
  data.validate();
  const std::size_t n0 = data.count(0), n1 = data.count(1);
  if (n0 < 1 || n1 < 1) throw ValidationError("rk-vs: both classes must be present");
  if (data.size() < 3) throw ValidationError("rk-vs: need at least 3 samples");
  const Index m = data.curves.cols();
  RkvsModelStats s{VectorXd::Zero(m), VectorXd::Zero(m), MatrixXd::Zero(m, m)};
  for (std::size_t i = 0; i < data.size(); ++i) {
    (data.labels[i] ? s.mean1 : s.mean0) += data.curves.row(static_cast<Index>(i)).transpose();
  }
  s.mean0 /= static_cast<double>(n0);
  s.mean1 /= static_cast<double>(n1);
  MatrixXd centered = data.curves;
  for (std::size_t i = 0; i < data.size(); ++i) {
    centered.row(static_cast<Index>(i)) -= (data.labels[i] ? s.mean1 : s.mean0).transpose();
  }
  s.pooled = centered.transpose() * centered / static_cast<double>(data.size() - 2);
  return s;
}

namespace detail {

inline MatrixXd submatrix(const MatrixXd& a, const std::vector<std::size_t>& idx) {
  const Index k = static_cast<Index>(idx.size());
  MatrixXd out(k, k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) out(i, j) = a(static_cast<Index>(idx[i]), static_cast<Index>(idx[j]));
  }
  return out;
}

inline VectorXd subvector(const VectorXd& v, const std::vector<std::size_t>& idx) {
  VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = v[static_cast<Index>(idx[i])];
  return out;
}

// Mahalanobis statistic on a node subset, or nullopt if S_T is numerically singular.
inline std::optional<double> mahalanobis_at(const RkvsModelStats& s, const std::vector<std::size_t>& idx) {
  const MatrixXd cov = submatrix(s.pooled, idx);
  const Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
  if (diag.minCoeff() <= 1e-7 * std::sqrt(cov.diagonal().maxCoeff())) return std::nullopt;
  const VectorXd delta = subvector(s.mean1 - s.mean0, idx);
  return delta.dot(llt.solve(delta));
}

}  // namespace detail

inline RkvsSelection rkvs_select(const FunctionalDataset& data, std::size_t p) {
  if (p < 1) throw ValidationError("rkvs_select: p must be at least 1");
  const RkvsModelStats stats = class_statistics(data);
  RkvsSelection sel;
  for (std::size_t step = 0; step < p; ++step) {
    std::optional<double> best;
    std::size_t best_node = 0;
    std::vector<std::size_t> trial = sel.nodes;
    trial.push_back(0);
    for (std::size_t c = 0; c < data.grid_size(); ++c) {
      if (std::find(sel.nodes.begin(), sel.nodes.end(), c) != sel.nodes.end()) continue;
      trial.back() = c;
      const auto val = detail::mahalanobis_at(stats, trial);
      if (val && (!best || *val > *best)) {
        best = val;
        best_node = c;
      }
    }
    if (!best) break;  // every remaining candidate is singular
    sel.nodes.push_back(best_node);
    sel.points.push_back(data.grid[best_node]);
    sel.score = std::max(sel.score, *best);
    sel.path_scores.push_back(sel.score);
  }
  if (sel.nodes.empty()) throw NumericError("rkvs_select: no candidate with invertible covariance");
  return sel;
}

enum class RkvsBackend { Lda, Knn5 };

/// Classifier on the curve values at RK-VS nodes.
struct RkvsModel {
  std::vector<std::size_t> nodes;
  RkvsBackend backend = RkvsBackend::Lda;
  VectorXd lda_weights;  // x -> w'x + c
  double lda_offset = 0.0;
  KnnClassifier knn;
  std::vector<double> cv_errors;

  MatrixXd features(const FunctionalDataset& data) const {
    MatrixXd f(data.curves.rows(), static_cast<Index>(nodes.size()));
    for (std::size_t j = 0; j < nodes.size(); ++j) f.col(static_cast<Index>(j)) = data.curves.col(static_cast<Index>(nodes[j]));
    return f;
  }

  std::vector<int> predict(const FunctionalDataset& data) const {
    const MatrixXd f = features(data);
    if (backend == RkvsBackend::Knn5) return knn.predict(f);
    std::vector<int> out(data.size());
    const VectorXd score = f * lda_weights;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = score[static_cast<Index>(i)] + lda_offset > 0.0 ? 1 : 0;
    return out;
  }
};

/// Fits the back-end on the first p selected nodes of `sel`.
inline RkvsModel fit_rkvs_backend(const FunctionalDataset& train, const RkvsSelection& sel, std::size_t p,
                                  RkvsBackend backend) {
  RkvsModel m;
  m.backend = backend;
  m.nodes.assign(sel.nodes.begin(), sel.nodes.begin() + static_cast<std::ptrdiff_t>(std::min(p, sel.nodes.size())));
  if (backend == RkvsBackend::Knn5) {
    m.knn = KnnClassifier(m.features(train), train.labels, std::min<std::size_t>(5, train.size()));
    return m;
  }
  const RkvsModelStats s = class_statistics(train);
  const JitteredCholesky chol = robust_cholesky(detail::submatrix(s.pooled, m.nodes), "pooled covariance");
  const VectorXd mu0 = detail::subvector(s.mean0, m.nodes);
  const VectorXd mu1 = detail::subvector(s.mean1, m.nodes);
  m.lda_weights = chol.solve(VectorXd(mu1 - mu0));
  const double pi1 = static_cast<double>(train.count(1)) / static_cast<double>(train.size());
  m.lda_offset = -0.5 * (mu0 + mu1).dot(m.lda_weights) + std::log(pi1 / (1.0 - pi1));
  return m;
}

struct RkvsOptions {
  RkvsBackend backend = RkvsBackend::Lda;
  std::size_t p_max = 10;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
};

/// RK-VS classifier with p chosen by stratified K-fold CV.
inline RkvsModel fit_rkvs(const FunctionalDataset& train, const RkvsOptions& opt = {}) {
  const auto splits = make_cv_splits(train.labels, opt.folds, opt.seed);
  std::vector<double> wrong(opt.p_max, 0.0);
  for (const auto& split : splits) {
    const FunctionalDataset tr = train.subset(split.train);
    const FunctionalDataset te = train.subset(split.test);
    const RkvsSelection sel = rkvs_select(tr, opt.p_max);
    for (std::size_t p = 1; p <= opt.p_max; ++p) {
      std::vector<int> pred;
      try {
        pred = fit_rkvs_backend(tr, sel, p, opt.backend).predict(te);
      } catch (const NumericError&) {
        pred.assign(te.size(), -1);
      }
      for (std::size_t i = 0; i < pred.size(); ++i) wrong[p - 1] += pred[i] != te.labels[i];
    }
  }
  for (double& w : wrong) w /= static_cast<double>(train.size());
  const std::size_t p = argmin_first(wrong) + 1;
  RkvsModel m = fit_rkvs_backend(train, rkvs_select(train, p), p, opt.backend);
  m.cv_errors = std::move(wrong);
  return m;
}

inline std::vector<int> classify_rkvs(const FunctionalDataset& train, const FunctionalDataset& test,
                                      const RkvsOptions& opt = {}) {
  return fit_rkvs(train, opt).predict(test);
}

}  // namespace rkhs_logit
