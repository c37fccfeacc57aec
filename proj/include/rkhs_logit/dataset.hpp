#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rkhs_logit/errors.hpp"

namespace rkhs_logit {

/// Labeled curves sampled on a common grid. Row i of `curves` is x_i on `grid`.
struct FunctionalDataset {
  std::vector<double> grid;
  Eigen::MatrixXd curves;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t grid_size() const { return grid.size(); }

  std::size_t count(int label) const {
    std::size_t c = 0;
    for (int y : labels) c += (y == label);
    return c;
  }

  void validate() const {
    if (labels.empty()) throw ValidationError("dataset: no samples");
    if (grid.empty()) throw ValidationError("dataset: empty grid");
    if (curves.rows() != static_cast<Eigen::Index>(labels.size()) ||
        curves.cols() != static_cast<Eigen::Index>(grid.size())) {
      throw ValidationError("dataset: curve matrix does not match labels/grid");
    }
    for (std::size_t j = 1; j < grid.size(); ++j) {
      if (!(grid[j] > grid[j - 1])) throw ValidationError("dataset: grid not strictly increasing");
    }
    for (double g : grid) {
      if (!std::isfinite(g)) throw ValidationError("dataset: non-finite grid value");
    }
    if (!curves.allFinite()) throw ValidationError("dataset: non-finite curve value");
    for (int y : labels) {
      if (y != 0 && y != 1) throw ValidationError("dataset: labels must be 0 or 1");
    }
  }

  /// Rows selected by index, same grid.
  FunctionalDataset subset(const std::vector<std::size_t>& rows) const {
    FunctionalDataset out;
    out.grid = grid;
    out.curves.resize(static_cast<Eigen::Index>(rows.size()), curves.cols());
    out.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.curves.row(static_cast<Eigen::Index>(r)) = curves.row(static_cast<Eigen::Index>(rows[r]));
      out.labels.push_back(labels[rows[r]]);
    }
    return out;
  }

  Eigen::VectorXd label_vector() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) y[static_cast<Eigen::Index>(i)] = labels[i];
    return y;
  }
};

/// m equispaced nodes k/m, k = 1..m (the Brownian-family singularity at 0 is
/// left out).
inline std::vector<double> default_grid(std::size_t m) {
  if (m < 1) throw ValidationError("grid size must be positive");
  std::vector<double> g(m);
  for (std::size_t k = 0; k < m; ++k) g[k] = static_cast<double>(k + 1) / static_cast<double>(m);
  return g;
}

/// Index of the grid node nearest to t (ties go to the lower node).
inline std::size_t nearest_node(const std::vector<double>& grid, double t) {
  std::size_t best = 0;
  double dist = std::abs(grid[0] - t);
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const double d = std::abs(grid[j] - t);
    if (d < dist) {
      dist = d;
      best = j;
    }
  }
  return best;
}

}  // namespace rkhs_logit
