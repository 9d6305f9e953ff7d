#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "splinemetric/dataset.hpp"
#include "splinemetric/learners.hpp"
#include "splinemetric/stats.hpp"

namespace splinemetric {

/// Preprocessing variants of the benchmark: original data (O), smoothing- or
/// interpolating-spline transforms of derivative order 1 or 2 (S*, IS*), and
/// finite differences (FD*).
enum class VariantTag { kO, kS1, kS2, kIs1, kIs2, kFd1, kFd2 };

std::string to_string(VariantTag tag);
VariantTag parse_variant(const std::string& name);

/// Random-split schedule. Stratified splits keep class proportions in both
/// halves (largest-remainder apportionment).
struct SplitPlan {
  int n_splits = 50;
  int train_size = 0;
  int test_size = 0;
  bool stratified = false;
  std::uint64_t seed = 0;
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kKrr;
  KernelKind kernel = KernelKind::kGaussian;
  /// Empty grids fall back to documented defaults (median-distance gamma and
  /// bandwidth grids, log-spaced deltas, odd k up to 15).
  ParamsGrid grid;
  /// Default: leave-one-out for KRR, 4-fold for NKE and KNN.
  std::optional<Validation> scheme;
  bool center_targets = false;
};

struct BenchmarkOptions {
  std::vector<double> lambda_candidates;  // empty: default_lambda_grid()
  int jobs = 1;
};

struct SplitVariantResult {
  double metric = 0.0;  // test MSE (regression) or MCR (classification)
  double r2 = 0.0;      // NaN for classification
  double lambda = 0.0;  // NaN for variants without a smoothing parameter
  TunedParams params;
};

struct SplitRecord {
  int index = 0;
  std::vector<int> train_indices;
  std::vector<int> test_indices;
  std::uint64_t train_hash = 0;
  std::uint64_t test_hash = 0;
  int regenerated = 0;  // extra draws forced by a class-free training split
  std::vector<SplitVariantResult> variants;  // aligned with RunReport order
};

struct VariantSummary {
  double metric_mean = 0.0;
  double metric_sd = 0.0;
  double r2_mean = 0.0;  // NaN for classification
};

struct PairwiseTest {
  std::size_t first = 0;  // indices into the variant list
  std::size_t second = 0;
  double statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

inline constexpr double kSignificanceLevel = 0.01;

struct RunReport {
  Task task = Task::kRegression;
  std::string metric_name;  // "mse" or "mcr"
  SplitPlan plan;
  std::vector<VariantTag> variants;
  LearnerConfig learner;
  std::vector<double> lambda_candidates;
  std::vector<SplitRecord> splits;
  std::vector<VariantSummary> summaries;
  std::vector<PairwiseTest> pairwise;
  std::string ranking;

  /// Per-split metric series of one variant, ordered by split index.
  std::vector<double> metrics_of(std::size_t variant_index) const;
};

/// Runs the paired benchmark: identical random splits for every variant,
/// smoothing parameters and model parameters selected on the training half
/// only, metrics on the test half. Deterministic for a fixed plan seed
/// regardless of the number of jobs.
RunReport run_benchmark(const FunctionalDataset& ds,
                        const std::vector<VariantTag>& variants,
                        const LearnerConfig& learner, const SplitPlan& plan,
                        const BenchmarkOptions& options = {});

/// Recomputes summaries, pairwise tests and the ranking from the per-split
/// records (the last step of run_benchmark).
void finalize_report(RunReport& report);

/// Variants in increasing mean metric order, adjacent pairs joined by "<"
/// when the paired test at level 1% is significant and "<=" otherwise.
std::string rank_methods(const RunReport& report);

nlohmann::ordered_json report_to_json(const RunReport& report);

/// Summary table: method, data (variant), metric, mean, sd, mean R^2.
std::string report_summary_csv(const RunReport& report);

}  // namespace splinemetric
