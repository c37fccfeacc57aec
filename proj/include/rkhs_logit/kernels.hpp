#pragma once

// Covariance kernels on [0,1], kernel matrices, empirical covariance and the
// spectrum of the discretized covariance operator.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rkhs_logit/dataset.hpp"
#include "rkhs_logit/errors.hpp"
#include "rkhs_logit/linalg.hpp"

namespace rkhs_logit {

enum class KernelFamily {
  BrownianMotion,
  FractionalBrownianMotion,
  IntegratedBrownianMotion,
  OrnsteinUhlenbeck,
  ScaledBrownian,
  BrownianPlusLinear,
  Empirical,
};

inline const char* family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::BrownianMotion: return "bm";
    case KernelFamily::FractionalBrownianMotion: return "fbm";
    case KernelFamily::IntegratedBrownianMotion: return "ibm";
    case KernelFamily::OrnsteinUhlenbeck: return "ou";
    case KernelFamily::ScaledBrownian: return "bm_scaled";
    case KernelFamily::BrownianPlusLinear: return "bm_linear";
    case KernelFamily::Empirical: return "empirical";
  }
  return "?";
}

inline KernelFamily family_from_name(const std::string& name) {
  static const std::map<std::string, KernelFamily> table = {
      {"bm", KernelFamily::BrownianMotion},
      {"fbm", KernelFamily::FractionalBrownianMotion},
      {"ibm", KernelFamily::IntegratedBrownianMotion},
      {"ou", KernelFamily::OrnsteinUhlenbeck},
      {"bm_scaled", KernelFamily::ScaledBrownian},
      {"bm_linear", KernelFamily::BrownianPlusLinear},
      {"empirical", KernelFamily::Empirical},
  };
  auto it = table.find(name);
  if (it == table.end()) throw ValidationError("unknown kernel family '" + name + "'");
  return it->second;
}

/// Grid-indexed covariance estimate backing an Empirical kernel.
struct EmpiricalCovariance {
  std::vector<double> grid;
  MatrixXd values;
};

/// A named covariance function K(s,t). Immutable once built; copies share the
/// empirical table.
class KernelSpec {
 public:
  KernelSpec() : KernelSpec(KernelFamily::BrownianMotion, {}) {}

  KernelSpec(KernelFamily family, std::map<std::string, double> params)
      : family_(family), params_(std::move(params)) {
    if (family_ == KernelFamily::FractionalBrownianMotion && !params_.count("hurst")) {
      params_["hurst"] = 0.9;
    }
    if (family_ == KernelFamily::ScaledBrownian && !params_.count("scale")) {
      params_["scale"] = 1.5;
    }
    validate();
  }

  static KernelSpec brownian() { return {KernelFamily::BrownianMotion, {}}; }
  static KernelSpec fbm(double hurst) { return {KernelFamily::FractionalBrownianMotion, {{"hurst", hurst}}}; }
  static KernelSpec ibm() { return {KernelFamily::IntegratedBrownianMotion, {}}; }
  static KernelSpec ou() { return {KernelFamily::OrnsteinUhlenbeck, {}}; }
  static KernelSpec scaled_brownian(double scale) { return {KernelFamily::ScaledBrownian, {{"scale", scale}}}; }
  static KernelSpec brownian_plus_linear() { return {KernelFamily::BrownianPlusLinear, {}}; }

  static KernelSpec empirical(std::vector<double> grid, MatrixXd values) {
    KernelSpec k;
    k.family_ = KernelFamily::Empirical;
    k.params_.clear();
    if (grid.empty()) throw ValidationError("empirical kernel: empty grid");
    if (values.rows() != static_cast<Index>(grid.size()) || values.cols() != values.rows()) {
      throw ValidationError("empirical kernel: matrix does not match grid");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!(grid[i] > grid[i - 1])) throw ValidationError("empirical kernel: grid not strictly increasing");
    }
    if (!values.allFinite()) throw NumericError("empirical kernel: non-finite covariance");
    k.table_ = std::make_shared<const EmpiricalCovariance>(EmpiricalCovariance{std::move(grid), std::move(values)});
    return k;
  }

  KernelFamily family() const { return family_; }
  const std::map<std::string, double>& params() const { return params_; }
  double param(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ValidationError("kernel has no parameter '" + name + "'");
    return it->second;
  }
  const EmpiricalCovariance* table() const { return table_.get(); }

  /// K(s,t). Both arguments must lie in [0,1].
  double operator()(double s, double t) const {
    if (!(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0)) {
      throw ValidationError("kernel arguments must lie in [0,1]");
    }
    return eval_unchecked(s, t);
  }

  double eval_unchecked(double s, double t) const {
    const double lo = std::min(s, t);
    const double hi = std::max(s, t);
    switch (family_) {
      case KernelFamily::BrownianMotion:
        return lo;
      case KernelFamily::FractionalBrownianMotion: {
        const double h2 = 2.0 * params_.at("hurst");
        return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(hi - lo, h2));
      }
      case KernelFamily::IntegratedBrownianMotion:
        return (3.0 * hi * lo * lo - lo * lo * lo) / 6.0;
      case KernelFamily::OrnsteinUhlenbeck:
        return std::exp(-(hi - lo));
      case KernelFamily::ScaledBrownian:
        return params_.at("scale") * lo;
      case KernelFamily::BrownianPlusLinear:
        return lo + s * t;
      case KernelFamily::Empirical:
        return interpolate(s, t);
    }
    return 0.0;
  }

 private:
  void validate() const {
    if (family_ == KernelFamily::Empirical) {
      if (!table_) throw ValidationError("empirical kernel requires a covariance table");
      return;
    }
    if (family_ == KernelFamily::FractionalBrownianMotion) {
      const double h = params_.at("hurst");
      if (!(h > 0.0 && h < 1.0)) throw ValidationError("fbm: hurst must lie in (0,1)");
    }
    if (family_ == KernelFamily::ScaledBrownian) {
      if (!(params_.at("scale") > 0.0)) throw ValidationError("bm_scaled: scale must be positive");
    }
  }

  // Bilinear interpolation on the stored grid; constant extension outside it.
  double interpolate(double s, double t) const {
    const auto& g = table_->grid;
    const auto& v = table_->values;
    auto bracket = [&g](double x, Index& i0, double& w) {
      if (g.size() == 1 || x <= g.front()) {
        i0 = 0;
        w = 0.0;
        return;
      }
      if (x >= g.back()) {
        i0 = static_cast<Index>(g.size()) - 2;
        w = 1.0;
        return;
      }
      auto it = std::upper_bound(g.begin(), g.end(), x);
      i0 = static_cast<Index>(it - g.begin()) - 1;
      w = (x - g[i0]) / (g[i0 + 1] - g[i0]);
    };
    Index i, j;
    double ws, wt;
    bracket(s, i, ws);
    bracket(t, j, wt);
    if (g.size() == 1) return v(0, 0);
    return (1 - ws) * (1 - wt) * v(i, j) + ws * (1 - wt) * v(i + 1, j) +
           (1 - ws) * wt * v(i, j + 1) + ws * wt * v(i + 1, j + 1);
  }

  KernelFamily family_;
  std::map<std::string, double> params_;
  std::shared_ptr<const EmpiricalCovariance> table_;
};

inline double eval_kernel(const KernelSpec& spec, double s, double t) { return spec(s, t); }

/// Sigma_T for a point set T: entry (i,j) = K(t_i, t_j).
struct KernelMatrix {
  std::vector<double> points;
  MatrixXd values;

  Index size() const { return values.rows(); }
};

inline MatrixXd kernel_values(const KernelSpec& spec, std::span<const double> points) {
  if (points.empty()) throw ValidationError("kernel_matrix: empty point list");
  for (double t : points) {
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("kernel_matrix: points must lie in [0,1]");
  }
  const Index p = static_cast<Index>(points.size());
  MatrixXd m(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j <= i; ++j) {
      m(i, j) = m(j, i) = spec.eval_unchecked(points[i], points[j]);
    }
  }
  return m;
}

inline KernelMatrix kernel_matrix(const KernelSpec& spec, std::span<const double> points) {
  return KernelMatrix{std::vector<double>(points.begin(), points.end()), kernel_values(spec, points)};
}

/// Cross-kernel block K(a_i, b_j).
inline MatrixXd kernel_cross(const KernelSpec& spec, std::span<const double> a, std::span<const double> b) {
  MatrixXd m(static_cast<Index>(a.size()), static_cast<Index>(b.size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = spec(a[i], b[j]);
  }
  return m;
}

/// Divisor-n covariance of the rows of `curves` (n x m).
inline MatrixXd sample_covariance(const MatrixXd& curves) {
  if (curves.rows() < 2) throw ValidationError("empirical covariance needs at least 2 samples");
  const VectorXd mean = curves.colwise().mean();
  MatrixXd centered = curves.rowwise() - mean.transpose();
  MatrixXd cov = MatrixXd::Zero(curves.cols(), curves.cols());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / static_cast<double>(curves.rows()));
  return cov.selfadjointView<Eigen::Lower>();
}

/// Empirical kernel estimated from the curves of a dataset (labels ignored).
inline KernelSpec empirical_covariance(const FunctionalDataset& data) {
  return KernelSpec::empirical(data.grid, sample_covariance(data.curves));
}

/// Eigenpairs of the discretized covariance operator, eigenvalues descending.
struct Spectrum {
  VectorXd values;
  MatrixXd vectors;  // columns, Euclidean-orthonormal
  double spacing = 1.0;
};

inline double grid_spacing(std::span<const double> grid) {
  if (grid.empty()) throw ValidationError("grid must be non-empty");
  if (grid.size() == 1) return 1.0;
  const double step = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (std::abs((grid[i] - grid[i - 1]) - step) > 1e-6 * std::max(1.0, std::abs(step)) + 1e-9) {
      throw ValidationError("grid must be equispaced");
    }
  }
  return step;
}

/// Spectrum of Delta * K(grid) for a symmetric matrix already evaluated on an
/// equispaced grid with spacing `spacing`.
inline Spectrum spectrum_of(const MatrixXd& k, double spacing) {
  if (!k.allFinite()) throw NumericError("eigendecompose: non-finite matrix entries");
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(spacing * k);
  if (solver.info() != Eigen::Success) throw NumericError("eigendecompose: solver failed");
  Spectrum out;
  out.spacing = spacing;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

inline Spectrum eigendecompose(const KernelSpec& spec, std::span<const double> grid) {
  const double spacing = grid_spacing(grid);
  return spectrum_of(kernel_values(spec, grid), spacing);
}

}  // namespace rkhs_logit
