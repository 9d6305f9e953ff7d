#include "splinemetric/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "splinemetric/error.hpp"
#include "splinemetric/io.hpp"

namespace splinemetric {

namespace {

using json = nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "dataset",       "target_column", "rescale",        "grid_file",
    "task",          "class_threshold", "noise_sd",     "noise_seed",
    "variants",      "learner",       "kernel",         "tuning",
    "delta_grid",    "gamma_grid",    "bandwidth_grid", "k_grid",
    "center_targets", "lambda_grid",  "n_splits",       "train_size",
    "test_size",     "stratified",    "seed",           "jobs",
    "report",        "summary"};

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void fail(const std::string& message) { problems_.push_back(message); }

  bool has(const char* key) const { return root_.contains(key); }

  template <typename T>
  std::optional<T> get(const char* key, const char* kind) {
    if (!root_.contains(key)) return std::nullopt;
    try {
      return root_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(std::string(key) + ": expected " + kind);
      return std::nullopt;
    }
  }

  void finish() const {
    if (problems_.empty()) return;
    std::string message = "invalid run configuration:";
    for (const auto& p : problems_) message += "\n  - " + p;
    throw ConfigError(message);
  }

 private:
  const json& root_;
  std::vector<std::string> problems_;
};

}  // namespace

RunConfig load_run_config(const std::string& path) {
  json root;
  try {
    root = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  if (!root.is_object()) {
    throw ConfigError(path + ": top level must be a JSON object");
  }

  Validator v(root);
  for (const auto& item : root.items()) {
    if (!kKnownKeys.contains(item.key())) {
      v.fail("unknown key '" + item.key() + "'");
    }
  }

  RunConfig config;
  if (auto value = v.get<std::string>("dataset", "a file path")) {
    config.dataset = *value;
  } else if (!v.has("dataset")) {
    v.fail("dataset: required");
  }
  if (auto value = v.get<std::string>("target_column", "a string")) {
    config.target_column = *value;
  }
  if (auto value = v.get<bool>("rescale", "a boolean")) {
    config.rescale = *value;
  }
  if (auto value = v.get<std::string>("grid_file", "a file path")) {
    config.grid_file = *value;
  }
  if (auto value = v.get<std::string>("task", "a string")) {
    if (*value == "regression") {
      config.task = Task::kRegression;
    } else if (*value == "classification") {
      config.task = Task::kClassification;
    } else {
      v.fail("task: must be 'regression' or 'classification'");
    }
  }
  if (auto value = v.get<double>("class_threshold", "a number")) {
    config.class_threshold = *value;
    config.task = Task::kClassification;
  }
  if (auto value = v.get<double>("noise_sd", "a number")) {
    if (*value < 0.0 || !std::isfinite(*value)) {
      v.fail("noise_sd: must be finite and >= 0");
    } else {
      config.noise_sd = *value;
    }
  }
  if (auto value = v.get<std::uint64_t>("noise_seed", "an integer")) {
    config.noise_seed = *value;
  }

  if (auto names = v.get<std::vector<std::string>>("variants",
                                                   "a list of strings")) {
    if (names->empty()) v.fail("variants: must not be empty");
    for (const auto& name : *names) {
      try {
        config.variants.push_back(parse_variant(name));
      } catch (const ArgumentError& e) {
        v.fail(std::string("variants: ") + e.what());
      }
    }
  } else if (!v.has("variants")) {
    v.fail("variants: required");
  }

  if (auto value = v.get<std::string>("learner", "a string")) {
    if (*value == "krr") {
      config.learner.kind = LearnerKind::kKrr;
    } else if (*value == "nke") {
      config.learner.kind = LearnerKind::kNke;
    } else if (*value == "knn") {
      config.learner.kind = LearnerKind::kKnn;
    } else {
      v.fail("learner: must be 'krr', 'nke' or 'knn'");
    }
  }
  if (auto value = v.get<std::string>("kernel", "a string")) {
    if (*value == "gaussian") {
      config.learner.kernel = KernelKind::kGaussian;
    } else if (*value == "linear") {
      config.learner.kernel = KernelKind::kLinear;
    } else {
      v.fail("kernel: must be 'gaussian' or 'linear'");
    }
  }
  if (auto value = v.get<std::string>("tuning", "a string")) {
    if (*value == "loo") {
      config.learner.scheme = Validation::kLoo;
    } else if (*value == "kfold4") {
      config.learner.scheme = Validation::kKfold4;
    } else {
      v.fail("tuning: must be 'loo' or 'kfold4'");
    }
  }
  const auto positive_list = [&](const char* key, std::vector<double>& out) {
    if (auto value = v.get<std::vector<double>>(key, "a list of numbers")) {
      for (double x : *value) {
        if (!(x > 0.0) || !std::isfinite(x)) {
          v.fail(std::string(key) + ": entries must be positive and finite");
          return;
        }
      }
      out = *value;
    }
  };
  positive_list("delta_grid", config.learner.grid.deltas);
  positive_list("gamma_grid", config.learner.grid.gammas);
  positive_list("bandwidth_grid", config.learner.grid.bandwidths);
  if (auto value = v.get<std::vector<int>>("k_grid", "a list of integers")) {
    for (int k : *value) {
      if (k < 1) {
        v.fail("k_grid: entries must be >= 1");
        break;
      }
    }
    config.learner.grid.ks = *value;
  }
  if (auto value = v.get<bool>("center_targets", "a boolean")) {
    config.learner.center_targets = *value;
  }
  positive_list("lambda_grid", config.lambda_grid);

  if (auto value = v.get<int>("n_splits", "an integer")) {
    if (*value < 1) v.fail("n_splits: must be >= 1");
    config.plan.n_splits = *value;
  } else if (!v.has("n_splits")) {
    v.fail("n_splits: required");
  }
  if (auto value = v.get<int>("train_size", "an integer")) {
    if (*value < 2) v.fail("train_size: must be >= 2");
    config.plan.train_size = *value;
  } else if (!v.has("train_size")) {
    v.fail("train_size: required");
  }
  if (auto value = v.get<int>("test_size", "an integer")) {
    if (*value < 1) v.fail("test_size: must be >= 1");
    config.plan.test_size = *value;
  } else if (!v.has("test_size")) {
    v.fail("test_size: required");
  }
  if (auto value = v.get<bool>("stratified", "a boolean")) {
    config.plan.stratified = *value;
  } else {
    config.plan.stratified = config.task == Task::kClassification;
  }
  if (auto value = v.get<std::uint64_t>("seed", "an integer")) {
    config.plan.seed = *value;
  } else {
    config.plan.seed = 42;
  }
  if (auto value = v.get<int>("jobs", "an integer")) {
    if (*value < 1) v.fail("jobs: must be >= 1");
    config.jobs = *value;
  }
  if (auto value = v.get<std::string>("report", "a file path")) {
    config.report_path = *value;
  }
  if (auto value = v.get<std::string>("summary", "a file path")) {
    config.summary_path = *value;
  }

  v.finish();
  return config;
}

RunReport execute(const RunConfig& config) {
  LoadOptions options;
  options.target_column = config.target_column;
  options.rescale = config.rescale;
  options.grid_file = config.grid_file;
  options.task =
      config.class_threshold ? Task::kRegression : config.task;
  FunctionalDataset ds = load_dataset(config.dataset, options);
  if (config.class_threshold) {
    ds = derive_classification(ds, *config.class_threshold);
  }
  if (config.noise_sd > 0.0) {
    ds = add_noise(ds, config.noise_sd, config.noise_seed);
  }

  BenchmarkOptions bench;
  bench.lambda_candidates = config.lambda_grid;
  bench.jobs = config.jobs;
  return run_benchmark(ds, config.variants, config.learner, config.plan,
                       bench);
}

}  // namespace splinemetric
