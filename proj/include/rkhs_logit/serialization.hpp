#pragma once

// JSON forms of kernel specs and fitted point models.

#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "rkhs_logit/errors.hpp"
#include "rkhs_logit/kernels.hpp"
#include "rkhs_logit/point_model.hpp"

namespace rkhs_logit {

using Json = nlohmann::json;

/// {"family": "fbm", "hurst": 0.9}; empirical kernels also carry grid and values.
inline Json kernel_to_json(const KernelSpec& k) {
  Json j;
  j["family"] = family_name(k.family());
  for (const auto& [name, value] : k.params()) j[name] = value;
  if (const EmpiricalCovariance* e = k.table()) {
    j["grid"] = e->grid;
    Json rows = Json::array();
    for (Index i = 0; i < e->values.rows(); ++i) {
      std::vector<double> r(static_cast<std::size_t>(e->values.cols()));
      for (Index c = 0; c < e->values.cols(); ++c) r[static_cast<std::size_t>(c)] = e->values(i, c);
      rows.push_back(r);
    }
    j["values"] = rows;
  }
  return j;
}

inline KernelSpec kernel_from_json(const Json& j) {
  try {
    const KernelFamily f = family_from_name(j.at("family").get<std::string>());
    if (f == KernelFamily::Empirical) {
      const auto grid = j.at("grid").get<std::vector<double>>();
      const auto rows = j.at("values").get<std::vector<std::vector<double>>>();
      MatrixXd v(static_cast<Index>(rows.size()), static_cast<Index>(grid.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != grid.size()) throw ValidationError("kernel json: jagged empirical matrix");
        for (std::size_t c = 0; c < grid.size(); ++c) v(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
      }
      return KernelSpec::empirical(grid, v);
    }
    std::map<std::string, double> params;
    for (const char* name : {"hurst", "scale"}) {
      if (j.contains(name)) params[name] = j.at(name).get<double>();
    }
    return KernelSpec(f, params);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("kernel json: ") + e.what());
  }
}

/// {intercept, coefficients[], points[], method, loglik, trace[]}.
inline Json model_to_json(const PointModel& m) {
  Json trace = Json::array();
  for (const auto& s : m.trace) {
    trace.push_back({{"point", s.point}, {"loglik", s.loglik}, {"penalized_loglik", s.penalized_loglik}});
  }
  return Json{{"intercept", m.intercept},
              {"coefficients", m.coefficients},
              {"points", m.points},
              {"method", point_method_name(m.method)},
              {"loglik", m.loglik},
              {"penalized_loglik", m.penalized_loglik},
              {"converged", m.converged},
              {"trace", trace}};
}

inline PointModel model_from_json(const Json& j) {
  try {
    PointModel m;
    m.intercept = j.at("intercept").get<double>();
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.points = j.at("points").get<std::vector<double>>();
    m.method = point_method_from_name(j.value("method", std::string("sequential")));
    m.loglik = j.value("loglik", 0.0);
    m.penalized_loglik = j.value("penalized_loglik", 0.0);
    m.converged = j.value("converged", true);
    if (m.coefficients.size() != m.points.size()) throw ValidationError("model json: coefficient/point count mismatch");
    for (std::size_t i = 0; i < m.points.size(); ++i) {
      if (!(m.points[i] >= 0.0 && m.points[i] <= 1.0)) throw ValidationError("model json: point outside [0,1]");
      if (i > 0 && !(m.points[i] > m.points[i - 1])) throw ValidationError("model json: points must be sorted and distinct");
    }
    if (j.contains("trace")) {
      for (const auto& s : j.at("trace")) {
        StageRecord r;
        r.point = s.at("point").get<double>();
        r.loglik = s.value("loglik", 0.0);
        r.penalized_loglik = s.value("penalized_loglik", 0.0);
        m.trace.push_back(std::move(r));
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model json: ") + e.what());
  }
}

}  // namespace rkhs_logit
