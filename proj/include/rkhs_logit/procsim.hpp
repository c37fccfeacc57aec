#pragma once

// Simulation of the benchmark processes on a grid, response generation from
// the RKHS logistic model, and the generator catalogue.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rkhs_logit/dataset.hpp"
#include "rkhs_logit/errors.hpp"
#include "rkhs_logit/kernels.hpp"
#include "rkhs_logit/linalg.hpp"
#include "rkhs_logit/random.hpp"

namespace rkhs_logit {

enum class GeneratorId { BmFin, BmLogs, IBm, FBm, MixtSd, MixtM, BmSin, OU };

inline const std::vector<GeneratorId>& all_generators() {
  static const std::vector<GeneratorId> ids = {GeneratorId::BmFin, GeneratorId::BmLogs, GeneratorId::IBm,
                                               GeneratorId::FBm,   GeneratorId::MixtSd, GeneratorId::MixtM,
                                               GeneratorId::BmSin, GeneratorId::OU};
  return ids;
}

inline const char* generator_name(GeneratorId id) {
  switch (id) {
    case GeneratorId::BmFin: return "bm_fin";
    case GeneratorId::BmLogs: return "bm_logs";
    case GeneratorId::IBm: return "ibm";
    case GeneratorId::FBm: return "fbm";
    case GeneratorId::MixtSd: return "mixt_sd";
    case GeneratorId::MixtM: return "mixt_m";
    case GeneratorId::BmSin: return "bm_sin";
    case GeneratorId::OU: return "ou";
  }
  return "?";
}

inline GeneratorId generator_from_name(const std::string& name) {
  for (GeneratorId id : all_generators()) {
    if (name == generator_name(id)) return id;
  }
  throw ValidationError("unknown generator '" + name + "'");
}

/// Mean-shift generators draw labels first; the rest draw curves first and
/// labels from the logistic response model.
inline bool is_mean_shift(GeneratorId id) { return id == GeneratorId::BmFin || id == GeneratorId::BmLogs; }

struct DatasetGeneratorSpec {
  GeneratorId id = GeneratorId::BmFin;
  std::size_t n = 200;
  std::size_t grid_size = 101;
  std::uint64_t seed = 0;
  double class_balance = 0.5;

  void validate() const {
    if (n < 2) throw ValidationError("generator: n must be at least 2");
    if (grid_size < 2) throw ValidationError("generator: grid_size must be at least 2");
    if (!(class_balance > 0.0 && class_balance < 1.0)) {
      throw ValidationError("generator: class_balance must lie in (0,1)");
    }
    if (!is_mean_shift(id) && class_balance != 0.5) {
      throw ValidationError("generator: class_balance is only configurable for bm_fin and bm_logs");
    }
  }
};

/// beta = sum_j c_j K(t_j, .) plus an intercept.
struct FiniteSlope {
  std::vector<double> coefficients;
  std::vector<double> points;
  double intercept = 0.0;
};

/// A slope given pointwise, beta(s).
struct AnalyticSlope {
  std::function<double(double)> beta;
  double intercept = 0.0;
};

class SlopeSpec {
 public:
  SlopeSpec(FiniteSlope f) : repr_(std::move(f)) {  // NOLINT(google-explicit-constructor)
    const auto& fs = std::get<FiniteSlope>(repr_);
    if (fs.coefficients.size() != fs.points.size()) {
      throw ValidationError("finite slope: coefficient/point count mismatch");
    }
    for (std::size_t i = 0; i < fs.points.size(); ++i) {
      if (!(fs.points[i] > 0.0 && fs.points[i] < 1.0)) throw ValidationError("finite slope: points must lie in (0,1)");
      for (std::size_t j = 0; j < i; ++j) {
        if (fs.points[i] == fs.points[j]) throw ValidationError("finite slope: points must be distinct");
      }
    }
  }
  SlopeSpec(AnalyticSlope a) : repr_(std::move(a)) {  // NOLINT(google-explicit-constructor)
    if (!std::get<AnalyticSlope>(repr_).beta) throw ValidationError("analytic slope: empty function");
  }

  bool is_finite() const { return std::holds_alternative<FiniteSlope>(repr_); }
  const FiniteSlope& finite() const { return std::get<FiniteSlope>(repr_); }
  const AnalyticSlope& analytic() const { return std::get<AnalyticSlope>(repr_); }

  double intercept() const {
    return is_finite() ? finite().intercept : analytic().intercept;
  }

  /// beta(s); a finite slope needs the kernel it is expanded in.
  double operator()(double s, const KernelSpec& kernel) const {
    if (!is_finite()) return analytic().beta(s);
    double acc = 0.0;
    const auto& f = finite();
    for (std::size_t j = 0; j < f.points.size(); ++j) acc += f.coefficients[j] * kernel(f.points[j], s);
    return acc;
  }

 private:
  std::variant<FiniteSlope, AnalyticSlope> repr_;
};

/// Snap each point to its nearest grid node; warn when a point moves by more
/// than half a grid step.
inline std::vector<std::size_t> snap_to_grid(std::span<const double> points, const std::vector<double>& grid) {
  std::vector<std::size_t> idx;
  idx.reserve(points.size());
  const double half_step =
      grid.size() > 1 ? 0.5 * (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1) : 0.0;
  for (double t : points) {
    const std::size_t j = nearest_node(grid, t);
    if (grid.size() > 1 && std::abs(grid[j] - t) > half_step * (1.0 + 1e-9)) {
      std::cerr << "warning: point " << t << " snapped to grid node " << grid[j] << "\n";
    }
    idx.push_back(j);
  }
  return idx;
}

/// n rows drawn from N(mean(grid), K(grid)); deterministic in `seed`.
inline MatrixXd sample_gp(const KernelSpec& kernel, const std::function<double(double)>& mean,
                          const std::vector<double>& grid, std::size_t n, std::uint64_t seed) {
  const MatrixXd factor = psd_sqrt_factor(kernel_values(kernel, grid));
  const Index m = static_cast<Index>(grid.size());
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  MatrixXd z(static_cast<Index>(n), m);
  for (Index i = 0; i < z.rows(); ++i) {
    for (Index j = 0; j < m; ++j) z(i, j) = normal(rng);
  }
  MatrixXd x = z * factor.transpose();
  if (mean) {
    Eigen::RowVectorXd mu(m);
    for (Index j = 0; j < m; ++j) mu[j] = mean(grid[j]);
    x.rowwise() += mu;
  }
  return x;
}

/// Grid approximation of the inverse Loeve isometry <beta, x>_K as a fixed
/// linear functional w'x(S). Finite slopes put their coefficients on the
/// snapped nodes; analytic slopes use w = Sigma_S^{-1} beta(S).
class LoevePredictor {
 public:
  LoevePredictor(const SlopeSpec& beta, const KernelSpec& kernel, const std::vector<double>& grid)
      : weights_(VectorXd::Zero(static_cast<Index>(grid.size()))), intercept_(beta.intercept()) {
    if (grid.empty()) throw ValidationError("loeve predictor: empty grid");
    if (beta.is_finite()) {
      const auto& f = beta.finite();
      const auto idx = snap_to_grid(f.points, grid);
      for (std::size_t j = 0; j < idx.size(); ++j) weights_[static_cast<Index>(idx[j])] += f.coefficients[j];
    } else {
      VectorXd b(static_cast<Index>(grid.size()));
      for (Index j = 0; j < b.size(); ++j) b[j] = beta.analytic().beta(grid[j]);
      weights_ = robust_cholesky(kernel_values(kernel, grid), "Sigma_S").solve(b);
    }
  }

  double operator()(std::span<const double> curve) const {
    if (curve.size() != static_cast<std::size_t>(weights_.size())) {
      throw ValidationError("loeve predictor: curve length does not match grid");
    }
    return Eigen::Map<const VectorXd>(curve.data(), weights_.size()).dot(weights_);
  }

  VectorXd apply(const MatrixXd& curves) const { return curves * weights_; }

  const VectorXd& weights() const { return weights_; }
  double intercept() const { return intercept_; }

 private:
  VectorXd weights_;
  double intercept_;
};

inline double loeve_predictor(const SlopeSpec& beta, std::span<const double> curve, const KernelSpec& kernel,
                              const std::vector<double>& grid) {
  return LoevePredictor(beta, kernel, grid)(curve);
}

inline double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

/// Bernoulli(1/(1+exp(-intercept-predictor_i))) labels.
inline std::vector<int> gen_labels(std::span<const double> predictors, double intercept, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> y;
  y.reserve(predictors.size());
  for (double eta : predictors) {
    if (!std::isfinite(eta)) throw ValidationError("gen_labels: non-finite predictor");
    y.push_back(unif(rng) < logistic(intercept + eta) ? 1 : 0);
  }
  return y;
}

/// Generative truth of a catalogue entry: the covariance of X and the slope of
/// the logistic model it induces.
struct GeneratorTruth {
  KernelSpec kernel;
  SlopeSpec slope;
};

inline double bm_fin_mean(double s) { return 2.0 * std::min(0.2, s) - 3.0 * std::min(0.5, s) + std::min(0.7, s); }

inline GeneratorTruth generator_truth(GeneratorId id) {
  const std::vector<double> points = {0.2, 0.5, 0.7};
  auto sin_slope = [](double s) { return std::sin(std::numbers::pi * s); };
  switch (id) {
    case GeneratorId::BmFin:
      // beta = m1 - m0, beta0 = -||m1||_K^2 / 2 with ||m1||^2 = 1.4.
      return {KernelSpec::brownian(), FiniteSlope{{2.0, -3.0, 1.0}, points, -0.7}};
    case GeneratorId::BmLogs:
      // ||log(1+s)||^2 = int_0^1 (1+s)^{-2} ds = 1/2.
      return {KernelSpec::brownian(), AnalyticSlope{[](double s) { return std::log1p(s); }, -0.25}};
    case GeneratorId::IBm:
      return {KernelSpec::ibm(), FiniteSlope{{2.0, -4.0, -1.0}, points, 0.0}};
    case GeneratorId::FBm:
      return {KernelSpec::fbm(0.9), FiniteSlope{{2.0, -4.0, -1.0}, points, 0.0}};
    case GeneratorId::MixtSd:
      return {KernelSpec::scaled_brownian(1.5), FiniteSlope{{2.0, -3.0, 1.0}, points, 0.0}};
    case GeneratorId::MixtM:
      return {KernelSpec::brownian_plus_linear(), FiniteSlope{{2.0, -3.0, 1.0}, points, 0.0}};
    case GeneratorId::BmSin:
      return {KernelSpec::brownian(), AnalyticSlope{sin_slope, 0.0}};
    case GeneratorId::OU:
      return {KernelSpec::ou(), AnalyticSlope{sin_slope, 0.0}};
  }
  throw ValidationError("unknown generator");
}

/// Curves of the catalogue process (labels not attached). Mixtures pick their
/// component per curve with probability 1/2.
inline MatrixXd simulate_process(GeneratorId id, const std::vector<double>& grid, std::size_t n,
                                 std::uint64_t seed) {
  const std::uint64_t curve_seed = derive_seed(seed, 2);
  switch (id) {
    case GeneratorId::BmFin:
    case GeneratorId::BmLogs:
    case GeneratorId::BmSin:
      return sample_gp(KernelSpec::brownian(), {}, grid, n, curve_seed);
    case GeneratorId::IBm:
      return sample_gp(KernelSpec::ibm(), {}, grid, n, curve_seed);
    case GeneratorId::FBm:
      return sample_gp(KernelSpec::fbm(0.9), {}, grid, n, curve_seed);
    case GeneratorId::OU:
      return sample_gp(KernelSpec::ou(), {}, grid, n, curve_seed);
    case GeneratorId::MixtSd:
    case GeneratorId::MixtM: {
      MatrixXd x = sample_gp(KernelSpec::brownian(), {}, grid, n, curve_seed);
      Rng rng = make_rng(derive_seed(seed, 4));
      std::bernoulli_distribution coin(0.5);
      for (Index i = 0; i < x.rows(); ++i) {
        const bool second = coin(rng);
        if (id == GeneratorId::MixtSd) {
          if (second) x.row(i) *= std::numbers::sqrt2;
        } else {
          const double sign = second ? -1.0 : 1.0;
          for (Index j = 0; j < x.cols(); ++j) x(i, j) += sign * grid[static_cast<std::size_t>(j)];
        }
      }
      return x;
    }
  }
  throw ValidationError("unknown generator");
}

/// Curves drawn first, labels from the logistic model with the given slope.
inline FunctionalDataset attach_response(MatrixXd curves, const std::vector<double>& grid, const SlopeSpec& slope,
                                         const KernelSpec& kernel, std::uint64_t label_seed) {
  const LoevePredictor predictor(slope, kernel, grid);
  const VectorXd eta = predictor.apply(curves);
  FunctionalDataset d;
  d.grid = grid;
  d.labels = gen_labels(std::span<const double>(eta.data(), static_cast<std::size_t>(eta.size())),
                        predictor.intercept(), label_seed);
  d.curves = std::move(curves);
  return d;
}

inline FunctionalDataset make_dataset(const DatasetGeneratorSpec& spec, const std::vector<double>& grid) {
  spec.validate();
  if (grid.size() < 2) throw ValidationError("generator: grid must have at least 2 nodes");
  if (is_mean_shift(spec.id)) {
    Rng rng = make_rng(derive_seed(spec.seed, 1));
    std::bernoulli_distribution prior(spec.class_balance);
    FunctionalDataset d;
    d.grid = grid;
    d.labels.resize(spec.n);
    for (auto& y : d.labels) y = prior(rng) ? 1 : 0;
    d.curves = simulate_process(spec.id, grid, spec.n, spec.seed);
    for (Index i = 0; i < d.curves.rows(); ++i) {
      if (d.labels[static_cast<std::size_t>(i)] != 1) continue;
      for (Index j = 0; j < d.curves.cols(); ++j) {
        const double s = grid[static_cast<std::size_t>(j)];
        d.curves(i, j) += spec.id == GeneratorId::BmFin ? bm_fin_mean(s) : std::log1p(s);
      }
    }
    return d;
  }
  const GeneratorTruth truth = generator_truth(spec.id);
  return attach_response(simulate_process(spec.id, grid, spec.n, spec.seed), grid, truth.slope, truth.kernel,
                         derive_seed(spec.seed, 3));
}

inline FunctionalDataset make_dataset(const DatasetGeneratorSpec& spec) {
  return make_dataset(spec, default_grid(spec.grid_size));
}

}  // namespace rkhs_logit
