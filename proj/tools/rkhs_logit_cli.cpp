// rkhs-logit command line: simulation, fitting, prediction and the experiment drivers.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rkhs_logit.hpp"

namespace rl = rkhs_logit;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> split_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw rl::ValidationError("expected a comma-separated list of integers, got '" + s + "'");
    }
  }
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rl::ValidationError("cannot open '" + path + "'");
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

rl::Json read_json(const std::string& path) {
  try {
    return rl::Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw rl::ValidationError("'" + path + "': " + e.what());
  }
}

std::size_t jobs_from_env() {
  const char* v = std::getenv("RKHS_LOGIT_JOBS");
  if (!v || !*v) return 1;
  const auto parsed = split_sizes(v);
  if (parsed.size() != 1 || parsed[0] < 1) throw rl::ValidationError("RKHS_LOGIT_JOBS must be a positive integer");
  return parsed[0];
}

struct SimulateArgs {
  std::string generator;
  std::size_t n = 0;
  std::size_t grid = 101;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct FitArgs {
  std::string method = "rkhs-sq";
  std::size_t pmax = 10;
  std::optional<std::size_t> p;
  std::size_t folds = 5;
  std::size_t restarts = 3;
  std::optional<std::uint64_t> seed;
  std::string data;
  std::string out;
};

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out;
};

// Flags shared by the experiment subcommands; unset optionals keep the config value.
struct ExperimentArgs {
  std::string config;
  std::string out;
  std::string stamp;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs, replications, n_train, n_test, grid, pmax, folds, restarts, n, eigen_count, fixed_p;
  std::optional<double> kappa;
  std::string generators, methods, p_list, n_schedule;
  bool no_timing = false;
  bool true_points = false;
  bool shuffle = false;
};

void add_experiment_flags(CLI::App* sub, ExperimentArgs& a) {
  sub->add_option("--config", a.config, "JSON config; inline flags override it")->check(CLI::ExistingFile);
  sub->add_option("--out", a.out, "Output directory for <experiment>_<stamp>.csv/.json");
  sub->add_option("--stamp", a.stamp, "File name stamp (default: current UTC time)");
  sub->add_option("--seed", a.seed, "Base seed (required here or in the config)");
  sub->add_option("--jobs", a.jobs, "Worker threads (fallback: RKHS_LOGIT_JOBS)");
  sub->add_option("--replications", a.replications);
  sub->add_option("--generators", a.generators, "Comma-separated generator names");
  sub->add_option("--grid", a.grid, "Grid size");
  sub->add_flag("--no-timing", a.no_timing, "Write zero timings (byte-stable output)");
}

rl::ExperimentConfig build_config(const ExperimentArgs& a, rl::ExperimentKind kind) {
  rl::ExperimentConfig c;
  bool seeded = false;
  if (!a.config.empty()) {
    const rl::Json j = read_json(a.config);
    c = rl::config_from_json(j);
    seeded = j.contains("seed");
    if (j.contains("experiment") && c.experiment != kind) {
      throw rl::ValidationError(std::string("config experiment '") + rl::experiment_name(c.experiment) +
                                "' does not match subcommand");
    }
  }
  c.experiment = kind;
  if (a.seed) {
    c.seed = *a.seed;
    seeded = true;
  }
  if (!seeded) throw rl::ValidationError("a seed is required (--seed or \"seed\" in the config)");
  c.jobs = a.jobs ? *a.jobs : jobs_from_env();
  if (a.replications) c.replications = *a.replications;
  if (!a.generators.empty()) {
    c.generators.clear();
    for (const auto& g : split_list(a.generators)) c.generators.push_back(rl::generator_from_name(g));
  }
  if (!a.methods.empty()) c.methods = split_list(a.methods);
  if (a.n_train) c.n_train = *a.n_train;
  if (a.n_test) c.n_test = *a.n_test;
  if (a.grid) c.grid_size = *a.grid;
  if (a.pmax) c.p_max = *a.pmax;
  if (a.folds) c.folds = *a.folds;
  if (a.restarts) c.restarts = *a.restarts;
  if (a.n) c.n = *a.n;
  if (a.eigen_count) c.eigen_count = *a.eigen_count;
  if (!a.p_list.empty()) c.p_list = split_sizes(a.p_list);
  if (a.true_points) c.use_true_points = true;
  if (a.shuffle) c.shuffle_labels = true;
  if (a.kappa) c.kappa = *a.kappa;
  if (!a.n_schedule.empty()) c.n_schedule = split_sizes(a.n_schedule);
  if (a.fixed_p) c.fixed_p = *a.fixed_p;
  if (a.no_timing) c.record_timing = false;
  c.validate();
  return c;
}

void print_cells(const rl::ExperimentResult& res) {
  std::cout << "dataset,method,count,failures,mean,sd\n";
  for (const auto& c : res.cells) {
    std::cout << c.dataset << ',' << c.method << ',' << c.count << ',' << c.failures << ','
              << rl::detail::format_number(c.mean, 6) << ',' << rl::detail::format_number(c.sd, 6) << '\n';
  }
}

int run_experiment_cmd(const ExperimentArgs& a, rl::ExperimentKind kind) {
  const rl::ExperimentConfig cfg = build_config(a, kind);
  const rl::ExperimentResult res = rl::run_experiment(cfg);
  print_cells(res);
  if (!a.out.empty()) {
    const auto paths = rl::write_results(res, a.out, a.stamp.empty() ? rl::utc_timestamp() : a.stamp);
    std::cerr << "wrote " << paths.csv.string() << " and " << paths.json.string() << "\n";
  }
  return 0;
}

int run_simulate(const SimulateArgs& a) {
  if (!a.seed) throw rl::ValidationError("simulate: --seed is required");
  const rl::FunctionalDataset d =
      rl::make_dataset(rl::DatasetGeneratorSpec{rl::generator_from_name(a.generator), a.n, a.grid, *a.seed});
  if (a.out.empty()) {
    std::cout << rl::dataset_to_csv(d);
  } else {
    rl::save_csv(d, a.out);
  }
  return 0;
}

int run_fit(const FitArgs& a) {
  if (!a.seed) throw rl::ValidationError("fit: --seed is required");
  const rl::FunctionalDataset d = rl::load_csv(a.data);
  rl::PointSearchOptions opt;
  opt.method = rl::point_method_from_name(a.method);
  opt.p_max = a.pmax;
  opt.folds = a.folds;
  opt.restarts = a.restarts;
  opt.seed = *a.seed;
  rl::PointModel m;
  if (a.p) {
    // Fixed dimension: no cross-validation.
    if (*a.p < 1) throw rl::ValidationError("fit: --p must be at least 1");
    opt.p_max = *a.p;
    m = rl::point_path(d, *a.p, opt, opt.seed).back();
    if (m.size() != *a.p) throw rl::NumericError("fit: search stopped before reaching p points");
  } else {
    m = rl::fit_point_classifier(d, opt);
  }
  const std::string text = rl::model_to_json(m).dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    rl::write_file_atomic(a.out, text);
  }
  return 0;
}

int run_predict(const PredictArgs& a) {
  const rl::PointModel m = rl::model_from_json(read_json(a.model));
  const rl::FunctionalDataset d = rl::load_csv(a.data);
  const Eigen::VectorXd p = m.predict_proba(d);
  std::ostringstream out;
  out << "probability,label\n";
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    out << rl::detail::format_number(p[i], 17) << ',' << (p[i] > 0.5 ? 1 : 0) << '\n';
  }
  if (a.out.empty()) {
    std::cout << out.str();
  } else {
    rl::write_file_atomic(a.out, out.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RKHS functional logistic regression"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a labelled functional dataset as CSV");
  simulate->add_option("--generator", sim.generator, "bm_fin, bm_logs, ibm, fbm, mixt_sd, mixt_m, bm_sin, ou")->required();
  simulate->add_option("--n", sim.n, "Number of curves")->required();
  simulate->add_option("--grid", sim.grid, "Grid size m (nodes k/m)");
  simulate->add_option("--seed", sim.seed, "Seed (required)");
  simulate->add_option("--out", sim.out, "Output CSV (default: stdout)");

  FitArgs fit;
  auto* fitc = app.add_subcommand("fit", "Fit a point-impact logistic model");
  fitc->add_option("--method", fit.method, "rkhs-sq (sequential) or rkhs-mm (maxmax)");
  fitc->add_option("--pmax", fit.pmax, "Largest dimension tried by cross-validation");
  fitc->add_option("--p", fit.p, "Fixed dimension (skips cross-validation)");
  fitc->add_option("--folds", fit.folds, "Cross-validation folds");
  fitc->add_option("--restarts", fit.restarts, "Random restarts per stage (maxmax)");
  fitc->add_option("--seed", fit.seed, "Seed (required)");
  fitc->add_option("--data", fit.data, "Training CSV")->required()->check(CLI::ExistingFile);
  fitc->add_option("--out", fit.out, "Model JSON (default: stdout)");

  PredictArgs pred;
  auto* predict = app.add_subcommand("predict", "Class probabilities for the curves of a CSV");
  predict->add_option("--model", pred.model, "Model JSON")->required()->check(CLI::ExistingFile);
  predict->add_option("--data", pred.data, "Curves CSV")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", pred.out, "Output CSV (default: stdout)");

  ExperimentArgs bench, norms, eigen, sep, exist;
  auto* benchc = app.add_subcommand("benchmark", "Misclassification benchmark");
  add_experiment_flags(benchc, bench);
  benchc->add_option("--methods", bench.methods, "rkhs-sq, rkhs-mm, pca, pca-knn, rk, rk-knn, knn5");
  benchc->add_option("--n-train", bench.n_train);
  benchc->add_option("--n-test", bench.n_test);
  benchc->add_option("--pmax", bench.pmax);
  benchc->add_option("--folds", bench.folds);
  benchc->add_option("--restarts", bench.restarts);
  benchc->add_flag("--shuffle-labels", bench.shuffle, "Permute training labels (null calibration)");

  auto* normc = app.add_subcommand("norms", "Squared RKHS slope error at random or true points");
  add_experiment_flags(normc, norms);
  normc->add_option("--n", norms.n, "Sample size");
  normc->add_option("--p-list", norms.p_list, "Comma-separated point counts");
  normc->add_flag("--true-points", norms.true_points, "Fit at the true impact points");

  auto* eigc = app.add_subcommand("eigen", "Leading empirical covariance eigenvalues");
  add_experiment_flags(eigc, eigen);
  eigc->add_option("--n", eigen.n, "Sample size");
  eigc->add_option("--count", eigen.eigen_count, "Number of eigenvalues");

  auto* sepc = app.add_subcommand("separation", "Sign-separating node frequency");
  add_experiment_flags(sepc, sep);
  sepc->add_option("--n", sep.n, "Curves per replication");

  auto* exc = app.add_subcommand("existence", "MLE non-existence frequency along a sample-size schedule");
  add_experiment_flags(exc, exist);
  exc->add_option("--kappa", exist.kappa, "p_n = round(kappa n)");
  exc->add_option("--n-schedule", exist.n_schedule, "Comma-separated sample sizes");
  exc->add_option("--fixed-p", exist.fixed_p, "Constant dimension instead of kappa n");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*fitc) return run_fit(fit);
    if (*predict) return run_predict(pred);
    if (*benchc) return run_experiment_cmd(bench, rl::ExperimentKind::Benchmark);
    if (*normc) return run_experiment_cmd(norms, rl::ExperimentKind::NormConvergence);
    if (*eigc) return run_experiment_cmd(eigen, rl::ExperimentKind::Eigenvalues);
    if (*sepc) return run_experiment_cmd(sep, rl::ExperimentKind::ScSeparation);
    if (*exc) return run_experiment_cmd(exist, rl::ExperimentKind::AsymptoticExistence);
  } catch (const rl::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const rl::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
