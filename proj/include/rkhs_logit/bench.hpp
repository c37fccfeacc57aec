#pragma once

// Experiment harness: misclassification benchmarks, slope-norm convergence,
// covariance spectra, sign-choice and MLE-existence experiments, plus CSV/JSON
// persistence of replication records.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <iostream>
#include <functional>
#include <json.hpp>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rkhs_logit/baselines.hpp"
#include "rkhs_logit/csv.hpp"
#include "rkhs_logit/dataset.hpp"
#include "rkhs_logit/errors.hpp"
#include "rkhs_logit/firthglm.hpp"
#include "rkhs_logit/kernels.hpp"
#include "rkhs_logit/point_model.hpp"
#include "rkhs_logit/procsim.hpp"
#include "rkhs_logit/random.hpp"
#include "rkhs_logit/serialization.hpp"

namespace rkhs_logit {

enum class ExperimentKind { Benchmark, NormConvergence, Eigenvalues, ScSeparation, AsymptoticExistence };

inline const char* experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Benchmark: return "benchmark";
    case ExperimentKind::NormConvergence: return "norm_convergence";
    case ExperimentKind::Eigenvalues: return "eigenvalues";
    case ExperimentKind::ScSeparation: return "sc_separation";
    case ExperimentKind::AsymptoticExistence: return "asymptotic_existence";
  }
  return "?";
}

inline ExperimentKind experiment_from_name(const std::string& s) {
  for (auto k : {ExperimentKind::Benchmark, ExperimentKind::NormConvergence, ExperimentKind::Eigenvalues,
                 ExperimentKind::ScSeparation, ExperimentKind::AsymptoticExistence}) {
    if (s == experiment_name(k)) return k;
  }
  throw ValidationError("unknown experiment '" + s + "'");
}

inline const std::vector<std::string>& benchmark_methods() {
  static const std::vector<std::string> m = {"rkhs-sq", "rkhs-mm", "pca", "pca-knn", "rk", "rk-knn", "knn5"};
  return m;
}

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Benchmark;
  std::vector<GeneratorId> generators = {GeneratorId::BmFin};
  std::vector<std::string> methods = {"rkhs-sq", "pca", "knn5", "rk"};
  std::size_t n_train = 200;
  std::size_t n_test = 50;
  std::size_t replications = 100;
  std::uint64_t seed = 0;
  std::size_t grid_size = 101;
  std::size_t p_max = 10;
  std::size_t folds = 5;
  std::size_t restarts = 3;
  std::size_t max_rounds = 20;
  std::size_t pca_d_max = 30;
  bool shuffle_labels = false;
  // Norm convergence and eigenvalue experiments.
  std::size_t n = 1000;
  std::vector<std::size_t> p_list = {1, 5, 10, 15, 20};
  bool use_true_points = false;
  std::size_t eigen_count = 20;
  // Sign-choice experiment.
  double geometric_floor = 1e-6;
  // MLE existence experiment.
  double kappa = 0.6;
  std::vector<std::size_t> n_schedule = {50, 100, 200, 400};
  std::optional<std::size_t> fixed_p;
  // Execution.
  std::size_t jobs = 1;
  bool record_timing = true;

  void validate() const {
    if (replications < 1) throw ValidationError("config: replications must be at least 1");
    if (generators.empty()) throw ValidationError("config: no generators");
    if (grid_size < 2) throw ValidationError("config: grid_size must be at least 2");
    if (jobs < 1) throw ValidationError("config: jobs must be at least 1");
    if (experiment == ExperimentKind::Benchmark) {
      if (methods.empty()) throw ValidationError("config: no methods");
      for (const auto& m : methods) {
        if (std::find(benchmark_methods().begin(), benchmark_methods().end(), m) == benchmark_methods().end()) {
          throw ValidationError("config: unknown method '" + m + "'");
        }
      }
      if (n_train < 2 * folds) throw ValidationError("config: n_train too small for the fold count");
      if (n_test < 1) throw ValidationError("config: n_test must be positive");
      if (p_max < 1) throw ValidationError("config: p_max must be at least 1");
      if (folds < 2) throw ValidationError("config: folds must be at least 2");
    }
    if (experiment == ExperimentKind::NormConvergence) {
      for (auto g : generators) {
        if (is_mean_shift(g)) {
          throw ValidationError(std::string("config: norm convergence needs a response-model generator, got ") +
                                generator_name(g));
        }
      }
      if (p_list.empty() && !use_true_points) throw ValidationError("config: empty p_list");
      for (auto p : p_list) {
        if (p < 1 || p >= grid_size) throw ValidationError("config: p values must lie in 1..grid_size-1");
      }
    }
    if (experiment == ExperimentKind::AsymptoticExistence) {
      if (n_schedule.empty()) throw ValidationError("config: empty n_schedule");
      if (!fixed_p && !(kappa > 0.0)) throw ValidationError("config: kappa must be positive");
    }
    if (experiment == ExperimentKind::ScSeparation) {
      if (!(geometric_floor > 0.0 && geometric_floor < 1.0)) throw ValidationError("config: geometric_floor in (0,1)");
    }
  }
};

inline Json config_to_json(const ExperimentConfig& c) {
  Json gens = Json::array();
  for (auto g : c.generators) gens.push_back(generator_name(g));
  Json j{{"experiment", experiment_name(c.experiment)},
         {"generators", gens},
         {"methods", c.methods},
         {"n_train", c.n_train},
         {"n_test", c.n_test},
         {"replications", c.replications},
         {"seed", c.seed},
         {"grid_size", c.grid_size},
         {"p_max", c.p_max},
         {"folds", c.folds},
         {"restarts", c.restarts},
         {"max_rounds", c.max_rounds},
         {"pca_d_max", c.pca_d_max},
         {"shuffle_labels", c.shuffle_labels},
         {"n", c.n},
         {"p_list", c.p_list},
         {"use_true_points", c.use_true_points},
         {"eigen_count", c.eigen_count},
         {"geometric_floor", c.geometric_floor},
         {"kappa", c.kappa},
         {"n_schedule", c.n_schedule},
         {"record_timing", c.record_timing}};
  j["fixed_p"] = c.fixed_p ? Json(*c.fixed_p) : Json(nullptr);
  return j;
}

/// Overlays the keys present in `j` onto `base`; unknown keys are rejected.
inline ExperimentConfig config_from_json(const Json& j, ExperimentConfig c = {}) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "experiment") c.experiment = experiment_from_name(v.get<std::string>());
      else if (key == "generators") {
        c.generators.clear();
        for (const auto& g : v) c.generators.push_back(generator_from_name(g.get<std::string>()));
      } else if (key == "methods") c.methods = v.get<std::vector<std::string>>();
      else if (key == "n_train") c.n_train = v.get<std::size_t>();
      else if (key == "n_test") c.n_test = v.get<std::size_t>();
      else if (key == "replications") c.replications = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "grid_size") c.grid_size = v.get<std::size_t>();
      else if (key == "p_max") c.p_max = v.get<std::size_t>();
      else if (key == "folds") c.folds = v.get<std::size_t>();
      else if (key == "restarts") c.restarts = v.get<std::size_t>();
      else if (key == "max_rounds") c.max_rounds = v.get<std::size_t>();
      else if (key == "pca_d_max") c.pca_d_max = v.get<std::size_t>();
      else if (key == "shuffle_labels") c.shuffle_labels = v.get<bool>();
      else if (key == "n") c.n = v.get<std::size_t>();
      else if (key == "p_list") c.p_list = v.get<std::vector<std::size_t>>();
      else if (key == "use_true_points") c.use_true_points = v.get<bool>();
      else if (key == "eigen_count") c.eigen_count = v.get<std::size_t>();
      else if (key == "geometric_floor") c.geometric_floor = v.get<double>();
      else if (key == "kappa") c.kappa = v.get<double>();
      else if (key == "n_schedule") c.n_schedule = v.get<std::vector<std::size_t>>();
      else if (key == "fixed_p") c.fixed_p = v.is_null() ? std::nullopt : std::optional<std::size_t>(v.get<std::size_t>());
      else if (key == "jobs") c.jobs = v.get<std::size_t>();
      else if (key == "record_timing") c.record_timing = v.get<bool>();
      else throw ValidationError("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

/// One replication-level measurement. `value` is the misclassification rate,
/// the squared slope error, an indicator, or an eigenvalue, by experiment.
struct ReplicationRecord {
  std::string experiment;
  std::string dataset;
  std::string method;
  std::size_t rep = 0;
  double value = 0.0;
  double train_s = 0.0;
  double test_s = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
};

struct CellSummary {
  std::string dataset;
  std::string method;
  std::size_t count = 0;  // successful replications
  std::size_t failures = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (divisor count - 1)
  double mean_train_s = 0.0;
  double mean_test_s = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ReplicationRecord> records;
  std::vector<CellSummary> cells;

  const CellSummary& cell(const std::string& dataset, const std::string& method) const {
    for (const auto& c : cells) {
      if (c.dataset == dataset && c.method == method) return c;
    }
    throw ValidationError("no result cell " + dataset + "/" + method);
  }
};

inline double misclassification_rate(const std::vector<int>& predicted, const std::vector<int>& actual) {
  return error_rate(predicted, actual);
}

/// Cells in order of first appearance; failed records are excluded from the moments.
inline std::vector<CellSummary> summarize(const std::vector<ReplicationRecord>& records) {
  std::vector<CellSummary> cells;
  std::vector<std::vector<const ReplicationRecord*>> members;
  for (const auto& r : records) {
    auto it = std::find_if(cells.begin(), cells.end(),
                           [&](const CellSummary& c) { return c.dataset == r.dataset && c.method == r.method; });
    std::size_t k = static_cast<std::size_t>(it - cells.begin());
    if (it == cells.end()) {
      cells.push_back({r.dataset, r.method});
      members.emplace_back();
    }
    members[k].push_back(&r);
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    auto& c = cells[k];
    double sum = 0.0, tr = 0.0, te = 0.0;
    for (const auto* r : members[k]) {
      if (r->failed) {
        ++c.failures;
        continue;
      }
      ++c.count;
      sum += r->value;
      tr += r->train_s;
      te += r->test_s;
    }
    if (c.count == 0) {
      c.mean = c.sd = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double cnt = static_cast<double>(c.count);
    c.mean = sum / cnt;
    c.mean_train_s = tr / cnt;
    c.mean_test_s = te / cnt;
    double ss = 0.0;
    for (const auto* r : members[k]) {
      if (!r->failed) ss += (r->value - c.mean) * (r->value - c.mean);
    }
    c.sd = c.count > 1 ? std::sqrt(ss / (cnt - 1.0)) : 0.0;
  }
  return cells;
}

namespace detail {

// Runs body(i) for i in [0, count) on `jobs` threads; the first exception is rethrown.
template <class Body>
void parallel_for(std::size_t count, std::size_t jobs, Body&& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline std::uint64_t generator_stream(GeneratorId g) { return 0x100 + static_cast<std::uint64_t>(g); }

inline std::uint64_t method_stream(const std::string& method) {
  const auto& all = benchmark_methods();
  return 0x200 + static_cast<std::uint64_t>(std::find(all.begin(), all.end(), method) - all.begin());
}

// > 10% failed replications in any cell aborts the experiment.
inline void enforce_failure_policy(const ExperimentResult& res) {
  for (const auto& c : res.cells) {
    if (c.failures == 0) continue;
    std::cerr << "warning: " << c.failures << " failed replication(s) in " << c.dataset << "/" << c.method << "\n";
    for (const auto& r : res.records) {
      if (r.failed && r.dataset == c.dataset && r.method == c.method) {
        std::cerr << "  rep " << r.rep << " seed " << r.seed << "\n";
      }
    }
    if (static_cast<double>(c.failures) > 0.1 * static_cast<double>(c.failures + c.count)) {
      throw NumericError("experiment aborted: more than 10% failed replications in " + c.dataset + "/" + c.method);
    }
  }
}

inline ExperimentResult finish(const ExperimentConfig& cfg, std::vector<ReplicationRecord> records) {
  ExperimentResult res;
  res.config = cfg;
  res.records = std::move(records);
  if (!cfg.record_timing) {
    for (auto& r : res.records) r.train_s = r.test_s = 0.0;
  }
  res.cells = summarize(res.records);
  enforce_failure_policy(res);
  return res;
}

}  // namespace detail

/// Trained classifier of one benchmark method.
struct MethodRun {
  std::vector<int> predicted;
  double train_s = 0.0;
  double test_s = 0.0;
};

inline MethodRun run_method(const std::string& method, const FunctionalDataset& train, const FunctionalDataset& test,
                            const ExperimentConfig& cfg, std::uint64_t seed) {
  MethodRun out;
  detail::Stopwatch fit_clock;
  std::function<std::vector<int>(const FunctionalDataset&)> predict;
  if (method == "rkhs-sq" || method == "rkhs-mm") {
    PointSearchOptions opt;
    opt.method = method == "rkhs-sq" ? PointMethod::Sequential : PointMethod::MaxMax;
    opt.p_max = cfg.p_max;
    opt.folds = cfg.folds;
    opt.seed = seed;
    opt.restarts = cfg.restarts;
    opt.max_rounds = cfg.max_rounds;
    auto model = std::make_shared<PointModel>(fit_point_classifier(train, opt));
    predict = [model](const FunctionalDataset& d) { return model->predict(d); };
  } else if (method == "pca" || method == "pca-knn") {
    PcaCvOptions opt;
    opt.d_max = cfg.pca_d_max;
    opt.folds = cfg.folds;
    opt.seed = seed;
    if (method == "pca") {
      auto model = std::make_shared<PcaLogisticModel>(fit_pca_logistic(train, opt));
      predict = [model](const FunctionalDataset& d) { return model->predict(d); };
    } else {
      auto model = std::make_shared<PcaKnnModel>(fit_pca_knn(train, opt));
      predict = [model](const FunctionalDataset& d) { return model->predict(d); };
    }
  } else if (method == "rk" || method == "rk-knn") {
    RkvsOptions opt;
    opt.backend = method == "rk" ? RkvsBackend::Lda : RkvsBackend::Knn5;
    opt.p_max = cfg.p_max;
    opt.folds = cfg.folds;
    opt.seed = seed;
    auto model = std::make_shared<RkvsModel>(fit_rkvs(train, opt));
    predict = [model](const FunctionalDataset& d) { return model->predict(d); };
  } else if (method == "knn5") {
    predict = [&train](const FunctionalDataset& d) { return classify_knn(train, d, 5); };
  } else {
    throw ValidationError("unknown method '" + method + "'");
  }
  out.train_s = fit_clock.seconds();
  detail::Stopwatch test_clock;
  out.predicted = predict(test);
  out.test_s = test_clock.seconds();
  return out;
}

/// Misclassification benchmark: each replication draws n_train + n_test
/// curves, splits them, and scores every method on the same split.
inline ExperimentResult run_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t n_gen = cfg.generators.size();
  const std::size_t items = n_gen * cfg.replications;
  std::vector<std::vector<ReplicationRecord>> slots(items);
  detail::parallel_for(items, cfg.jobs, [&](std::size_t item) {
    const GeneratorId gen = cfg.generators[item / cfg.replications];
    const std::size_t rep = item % cfg.replications;
    const std::uint64_t data_seed = derive_seed(replication_seed(cfg.seed, rep), detail::generator_stream(gen));
    DatasetGeneratorSpec spec{gen, cfg.n_train + cfg.n_test, cfg.grid_size, data_seed};
    FunctionalDataset all = make_dataset(spec);
    if (cfg.shuffle_labels) {
      Rng rng = make_rng(derive_seed(data_seed, 0x55));
      std::shuffle(all.labels.begin(), all.labels.end(), rng);
    }
    std::vector<std::size_t> tr(cfg.n_train), te(cfg.n_test);
    std::iota(tr.begin(), tr.end(), 0);
    std::iota(te.begin(), te.end(), cfg.n_train);
    const FunctionalDataset train = all.subset(tr);
    const FunctionalDataset test = all.subset(te);
    for (const auto& method : cfg.methods) {
      ReplicationRecord r{experiment_name(cfg.experiment), generator_name(gen), method, rep};
      r.seed = data_seed;
      try {
        const MethodRun run = run_method(method, train, test, cfg, derive_seed(data_seed, detail::method_stream(method)));
        r.value = misclassification_rate(run.predicted, test.labels);
        r.train_s = run.train_s;
        r.test_s = run.test_s;
      } catch (const NumericError&) {
        r.failed = true;
        r.value = std::numeric_limits<double>::quiet_NaN();
      }
      slots[item].push_back(std::move(r));
    }
  });
  // Records grouped by (generator, method), ordered by replication.
  std::vector<ReplicationRecord> records;
  for (std::size_t g = 0; g < n_gen; ++g) {
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      for (std::size_t rep = 0; rep < cfg.replications; ++rep) records.push_back(slots[g * cfg.replications + rep][m]);
    }
  }
  return detail::finish(cfg, std::move(records));
}

/// Distinct grid nodes drawn uniformly from the nodes in (0,1].
inline std::vector<std::size_t> random_nodes(const std::vector<double>& grid, std::size_t p, std::uint64_t seed) {
  std::vector<std::size_t> pool;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (grid[j] > 0.0) pool.push_back(j);
  }
  if (p > pool.size()) throw ValidationError("random_nodes: more points requested than grid nodes");
  Rng rng = make_rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(p);
  return pool;
}

/// ||beta_hat - beta||_K^2 for Firth fits at p random grid nodes (or at the
/// true points) on samples of size cfg.n.
inline ExperimentResult run_norm_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t n_gen = cfg.generators.size();
  const std::size_t items = n_gen * cfg.replications;
  const std::vector<double> grid = default_grid(cfg.grid_size);
  std::vector<std::size_t> ps = cfg.p_list;
  if (cfg.use_true_points) ps = {0};
  for (auto g : cfg.generators) {
    if (cfg.use_true_points && !generator_truth(g).slope.is_finite()) {
      throw ValidationError(std::string("config: use_true_points needs a finite-slope generator, got ") +
                            generator_name(g));
    }
  }
  std::vector<std::vector<ReplicationRecord>> slots(items);
  detail::parallel_for(items, cfg.jobs, [&](std::size_t item) {
    const GeneratorId gen = cfg.generators[item / cfg.replications];
    const std::size_t rep = item % cfg.replications;
    const std::uint64_t data_seed = derive_seed(replication_seed(cfg.seed, rep), detail::generator_stream(gen));
    const FunctionalDataset data = make_dataset(DatasetGeneratorSpec{gen, cfg.n, cfg.grid_size, data_seed}, grid);
    const GeneratorTruth truth = generator_truth(gen);
    for (std::size_t p : ps) {
      ReplicationRecord r{experiment_name(cfg.experiment), generator_name(gen),
                          p == 0 ? std::string("p=true") : "p=" + std::to_string(p), rep};
      r.seed = data_seed;
      detail::Stopwatch clock;
      try {
        const auto nodes = p == 0 ? snap_to_grid(truth.slope.finite().points, grid)
                                  : random_nodes(grid, p, derive_seed(data_seed, 0x300 + p));
        const PointModel model = fit_at_nodes(data, nodes);
        r.train_s = clock.seconds();
        detail::Stopwatch norm_clock;
        r.value = slope_error_norm(model, truth.slope, truth.kernel, grid);
        r.test_s = norm_clock.seconds();
      } catch (const NumericError&) {
        r.failed = true;
        r.value = std::numeric_limits<double>::quiet_NaN();
      }
      slots[item].push_back(std::move(r));
    }
  });
  std::vector<ReplicationRecord> records;
  for (std::size_t g = 0; g < n_gen; ++g) {
    for (std::size_t k = 0; k < ps.size(); ++k) {
      for (std::size_t rep = 0; rep < cfg.replications; ++rep) records.push_back(slots[g * cfg.replications + rep][k]);
    }
  }
  return detail::finish(cfg, std::move(records));
}

/// Leading eigenvalues of the empirical covariance operator, one sample of
/// size cfg.n per generator. Record `rep` is the eigenvalue index (1-based).
inline ExperimentResult run_eigenvalues(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<ReplicationRecord>> slots(cfg.generators.size());
  const std::vector<double> grid = default_grid(cfg.grid_size);
  detail::parallel_for(cfg.generators.size(), cfg.jobs, [&](std::size_t g) {
    const GeneratorId gen = cfg.generators[g];
    const std::uint64_t data_seed = derive_seed(cfg.seed, detail::generator_stream(gen));
    const FunctionalDataset data = make_dataset(DatasetGeneratorSpec{gen, cfg.n, cfg.grid_size, data_seed}, grid);
    detail::Stopwatch clock;
    const Spectrum spec = eigendecompose(empirical_covariance(data), grid);
    const double secs = clock.seconds();
    const std::size_t count = std::min<std::size_t>(cfg.eigen_count, static_cast<std::size_t>(spec.values.size()));
    for (std::size_t k = 0; k < count; ++k) {
      ReplicationRecord r{experiment_name(cfg.experiment), generator_name(gen), "eigenvalue", k + 1};
      r.value = spec.values[static_cast<Index>(k)];
      r.train_s = k == 0 ? secs : 0.0;
      r.seed = data_seed;
      slots[g].push_back(std::move(r));
    }
  });
  std::vector<ReplicationRecord> records;
  for (auto& s : slots) records.insert(records.end(), s.begin(), s.end());
  ExperimentResult res;
  res.config = cfg;
  res.records = std::move(records);
  if (!cfg.record_timing) {
    for (auto& r : res.records) r.train_s = r.test_s = 0.0;
  }
  res.cells = summarize(res.records);
  return res;
}

/// Uniform grid k/m together with the dyadic nodes 2^-k down to `floor`.
inline std::vector<double> geometric_union_grid(std::size_t m, double floor) {
  std::vector<double> g = default_grid(m);
  for (double t = 0.5; t >= floor; t *= 0.5) g.push_back(t);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end(), [](double a, double b) { return std::abs(a - b) <= 1e-15; }), g.end());
  return g;
}

/// First grid node t0 with sign(x_i(t0)) = 2 y_i - 1 strictly for every i.
inline std::optional<std::size_t> sign_separating_node(const MatrixXd& curves, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(curves.rows()) != labels.size()) throw ValidationError("sign check: size mismatch");
  for (Index j = 0; j < curves.cols(); ++j) {
    bool ok = true;
    for (Index i = 0; i < curves.rows() && ok; ++i) {
      const double v = curves(i, j);
      ok = labels[static_cast<std::size_t>(i)] == 1 ? v > 0.0 : v < 0.0;
    }
    if (ok) return static_cast<std::size_t>(j);
  }
  return std::nullopt;
}

/// Frequency with which n curves with fair-coin labels admit a grid node
/// whose signs reproduce the labels. Record value is the 0/1 indicator.
inline ExperimentResult run_sc_separation(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> grid = geometric_union_grid(cfg.grid_size, cfg.geometric_floor);
  const std::size_t n_gen = cfg.generators.size();
  const std::size_t items = n_gen * cfg.replications;
  std::vector<ReplicationRecord> records(items);
  detail::parallel_for(items, cfg.jobs, [&](std::size_t item) {
    const GeneratorId gen = cfg.generators[item / cfg.replications];
    const std::size_t rep = item % cfg.replications;
    const std::uint64_t seed = derive_seed(replication_seed(cfg.seed, rep), detail::generator_stream(gen));
    detail::Stopwatch clock;
    const MatrixXd curves = simulate_process(gen, grid, cfg.n, seed);
    Rng rng = make_rng(derive_seed(seed, 5));
    std::bernoulli_distribution coin(0.5);
    std::vector<int> labels(cfg.n);
    for (auto& y : labels) y = coin(rng) ? 1 : 0;
    ReplicationRecord r{experiment_name(cfg.experiment), generator_name(gen), "n=" + std::to_string(cfg.n), rep};
    r.seed = seed;
    r.value = sign_separating_node(curves, labels) ? 1.0 : 0.0;
    r.train_s = clock.seconds();
    records[item] = std::move(r);
  });
  return detail::finish(cfg, std::move(records));
}

/// Dimension p_n used at sample size n.
inline std::size_t existence_dimension(const ExperimentConfig& cfg, std::size_t n) {
  if (cfg.fixed_p) return *cfg.fixed_p;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.kappa * static_cast<double>(n))));
}

/// Separation (MLE non-existence) frequency of the finite-dimensional model
/// induced at T_n = {j/(p_n+1)}: X(T_n) ~ N(0, Sigma_T), alpha = Sigma_T^{-1} beta(T_n).
inline ExperimentResult run_asymptotic_existence(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Item {
    GeneratorId gen;
    std::size_t n;
    std::size_t rep;
  };
  std::vector<Item> work;
  for (auto g : cfg.generators) {
    for (auto n : cfg.n_schedule) {
      if (n < 2) throw ValidationError("config: n_schedule values must be at least 2");
      for (std::size_t rep = 0; rep < cfg.replications; ++rep) work.push_back({g, n, rep});
    }
  }
  std::vector<ReplicationRecord> records(work.size());
  detail::parallel_for(work.size(), cfg.jobs, [&](std::size_t k) {
    const Item it = work[k];
    const std::size_t p = existence_dimension(cfg, it.n);
    const std::uint64_t seed =
        derive_seed(derive_seed(replication_seed(cfg.seed, it.rep), detail::generator_stream(it.gen)), it.n);
    ReplicationRecord r{experiment_name(cfg.experiment), generator_name(it.gen),
                        "n=" + std::to_string(it.n) + " p=" + std::to_string(p), it.rep};
    r.seed = seed;
    detail::Stopwatch clock;
    try {
      std::vector<double> pts(p);
      for (std::size_t j = 0; j < p; ++j) pts[j] = static_cast<double>(j + 1) / static_cast<double>(p + 1);
      const GeneratorTruth truth = generator_truth(it.gen);
      VectorXd beta_t(static_cast<Index>(p));
      for (std::size_t j = 0; j < p; ++j) beta_t[static_cast<Index>(j)] = truth.slope(pts[j], truth.kernel);
      const VectorXd alpha = robust_cholesky(kernel_values(truth.kernel, pts), "Sigma_T").solve(beta_t);
      const MatrixXd x = sample_gp(truth.kernel, {}, pts, it.n, derive_seed(seed, 2));
      const VectorXd eta = x * alpha;
      const auto labels = gen_labels(std::span<const double>(eta.data(), static_cast<std::size_t>(eta.size())),
                                     truth.slope.intercept(), derive_seed(seed, 3));
      VectorXd y(static_cast<Index>(labels.size()));
      for (std::size_t i = 0; i < labels.size(); ++i) y[static_cast<Index>(i)] = labels[i];
      r.value = detect_separation(DesignMatrix::from_covariates(x, y)) != Separation::None ? 1.0 : 0.0;
    } catch (const NumericError&) {
      r.failed = true;
      r.value = std::numeric_limits<double>::quiet_NaN();
    }
    r.train_s = clock.seconds();
    records[k] = std::move(r);
  });
  return detail::finish(cfg, std::move(records));
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::Benchmark: return run_benchmark(cfg);
    case ExperimentKind::NormConvergence: return run_norm_convergence(cfg);
    case ExperimentKind::Eigenvalues: return run_eigenvalues(cfg);
    case ExperimentKind::ScSeparation: return run_sc_separation(cfg);
    case ExperimentKind::AsymptoticExistence: return run_asymptotic_existence(cfg);
  }
  throw ValidationError("unknown experiment");
}

/// experiment,dataset,method,rep,error,train_s,test_s,seed
inline std::string records_to_csv(const std::vector<ReplicationRecord>& records) {
  std::ostringstream out;
  out << "experiment,dataset,method,rep,error,train_s,test_s,seed\n";
  for (const auto& r : records) {
    out << r.experiment << ',' << r.dataset << ',' << r.method << ',' << r.rep << ','
        << detail::format_number(r.value, 17) << ',' << detail::format_number(r.train_s, 17) << ','
        << detail::format_number(r.test_s, 17) << ',' << r.seed << '\n';
  }
  return out.str();
}

inline Json summary_to_json(const ExperimentResult& res) {
  Json cells = Json::array();
  for (const auto& c : res.cells) {
    cells.push_back({{"dataset", c.dataset},
                     {"method", c.method},
                     {"count", c.count},
                     {"failures", c.failures},
                     {"mean", c.mean},
                     {"sd", c.sd},
                     {"mean_train_s", c.mean_train_s},
                     {"mean_test_s", c.mean_test_s}});
  }
  return Json{{"config", config_to_json(res.config)}, {"cells", cells}};
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

struct PersistedPaths {
  std::filesystem::path csv;
  std::filesystem::path json;
};

/// Writes <experiment>_<stamp>.csv and .json into `dir` (created if needed).
inline PersistedPaths write_results(const ExperimentResult& res, const std::filesystem::path& dir,
                                    const std::string& stamp = utc_timestamp()) {
  std::filesystem::create_directories(dir);
  const std::string base = std::string(experiment_name(res.config.experiment)) + "_" + stamp;
  PersistedPaths p{dir / (base + ".csv"), dir / (base + ".json")};
  write_file_atomic(p.csv, records_to_csv(res.records));
  write_file_atomic(p.json, summary_to_json(res).dump(2) + "\n");
  return p;
}

}  // namespace rkhs_logit
