#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace splinemetric {

/// Gap statistics of a sampling grid. max_gap includes the boundary gaps
/// (the distance from 0 to the first point and from the last point to 1);
/// min_gap is the smallest interior gap.
struct MeshStats {
  double max_gap = 0.0;
  double min_gap = 0.0;
  double ratio = 0.0;
};

/// Ordered, distinct sampling abscissae in [0, 1], shared by every function
/// of a dataset. Immutable after construction.
class SamplingGrid {
 public:
  explicit SamplingGrid(std::vector<double> points);

  const std::vector<double>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }

  bool operator==(const SamplingGrid& other) const = default;

  /// p points spanning [0, 1]; include_zero selects {l/(p-1)} (endpoints
  /// included) versus {l/p, l = 1..p} (zero excluded).
  static SamplingGrid uniform(std::size_t count, bool include_zero = true);

  /// Reads one abscissa per line.
  static SamplingGrid from_file(const std::string& path);

  /// Affine map of the points onto [0, 1].
  SamplingGrid rescaled() const;

 private:
  std::vector<double> points_;
};

/// Gap statistics; requires at least two points.
MeshStats mesh_stats(const SamplingGrid& grid);

/// One function observed through the grid.
struct SampledFunction {
  SamplingGrid grid;
  Eigen::VectorXd values;

  SampledFunction(SamplingGrid g, Eigen::VectorXd v);
};

enum class Task { kRegression, kClassification };

/// n sampled functions on a shared grid plus targets. Classification targets
/// are restricted to {-1, +1}. Immutable by convention after creation.
struct FunctionalDataset {
  SamplingGrid grid;
  Eigen::MatrixXd rows;     // n x |grid|
  Eigen::VectorXd targets;  // length n (zeros when has_target is false)
  Task task = Task::kRegression;
  bool has_target = true;

  static FunctionalDataset create(SamplingGrid grid, Eigen::MatrixXd rows,
                                  Eigen::VectorXd targets, Task task,
                                  bool has_target = true);

  std::size_t size() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t channels() const { return grid.size(); }
  SampledFunction function(std::size_t i) const;
};

struct LoadOptions {
  /// "last" (default), "none", a 0-based "#index", or a header column name.
  std::string target_column = "last";
  /// Rescale abscissae affinely onto [0, 1].
  bool rescale = true;
  /// Overrides the grid from a one-abscissa-per-line file.
  std::optional<std::string> grid_file;
  Task task = Task::kRegression;
};

/// Loads a CSV with one row per function: channel columns then one target
/// column. An optional first header row carries wavelengths (numeric channel
/// names become the grid) and the target column name.
FunctionalDataset load_dataset(const std::string& path,
                               const LoadOptions& options = {});

/// Mirrors the load format: header row with abscissae (shortest round-trip
/// formatting, so reloading is bit-exact), then data rows.
std::string dataset_to_csv(const FunctionalDataset& ds);
void save_dataset(const FunctionalDataset& ds, const std::string& path);

/// Perturbs every entry by independent Gaussian(0, sd^2) noise drawn with
/// the generator identified by kGaussianGeneratorId, row-major order.
/// Targets are unchanged. sd = 0 returns a bit-identical copy.
FunctionalDataset add_noise(const FunctionalDataset& ds, double sd,
                            std::uint64_t seed);

/// Random trigonometric polynomial sum a_j sin(2 pi j t) + b_j cos(2 pi j t).
struct TrigPoly {
  std::vector<double> sin_coeffs;  // a_j
  std::vector<double> cos_coeffs;  // b_j

  double value(double t) const;
  double derivative(double t) const;
  /// Closed form of the first-derivative energy over [0, 1]:
  /// 2 pi^2 sum_j j^2 (a_j^2 + b_j^2).
  double derivative_energy() const;
};

/// Draws n random trig polynomials with a_j, b_j ~ N(0, j^-2). pure_sine
/// forces b_j = 0.
std::vector<TrigPoly> synth_functions(std::size_t n, int harmonics,
                                      std::uint64_t seed,
                                      bool pure_sine = false);

enum class TargetRule { kMean, kDerivEnergy, kSignDerivEnergy };

struct SynthSpec {
  std::size_t n = 0;
  SamplingGrid grid;
  int harmonics = 1;
  TargetRule rule = TargetRule::kDerivEnergy;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  bool pure_sine = false;
};

/// Synthetic dataset generator. Rows are sampled values plus observation
/// noise; derivative-energy targets come from the clean analytic functions.
/// kSignDerivEnergy splits at the batch median (>= median maps to +1).
FunctionalDataset synthesize(const SynthSpec& spec);

/// Regression-to-classification derivation: target < threshold maps to -1,
/// otherwise +1.
FunctionalDataset derive_classification(const FunctionalDataset& ds,
                                        double threshold);

}  // namespace splinemetric
