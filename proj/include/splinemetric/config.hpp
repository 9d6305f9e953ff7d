#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splinemetric/harness.hpp"

namespace splinemetric {

/// Declarative benchmark manifest: one flat JSON object of scalars and
/// lists. Unknown keys are rejected and every validation problem is
/// reported in one pass.
struct RunConfig {
  std::string dataset;
  std::string target_column = "last";
  bool rescale = true;
  std::optional<std::string> grid_file;
  Task task = Task::kRegression;
  std::optional<double> class_threshold;  // derive labels from a numeric target
  double noise_sd = 0.0;
  std::uint64_t noise_seed = 0;
  std::vector<VariantTag> variants;
  LearnerConfig learner;
  std::vector<double> lambda_grid;  // empty: default
  SplitPlan plan;
  int jobs = 1;
  std::string report_path = "report.json";
  std::optional<std::string> summary_path;
};

RunConfig load_run_config(const std::string& path);

/// Loads the dataset, applies the optional classification derivation and
/// noise, and runs the benchmark.
RunReport execute(const RunConfig& config);

}  // namespace splinemetric
