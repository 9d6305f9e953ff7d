#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "splinemetric/dataset.hpp"

namespace splinemetric {

enum class KernelKind { kLinear, kGaussian };

struct KernelSpec {
  KernelKind kind = KernelKind::kGaussian;
  double gamma = 1.0;  // Gaussian width, exp(-gamma ||a - b||^2)
};

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b,
                              const KernelSpec& kernel);

/// Kernel ridge regression with coefficients c = (K + delta I)^-1 y and the
/// leave-one-out residuals read off the hat diagonal,
/// e_i = (y_i - f(x_i)) / (1 - H_ii) with H = K (K + delta I)^-1.
class KrrModel {
 public:
  static KrrModel fit(const Eigen::MatrixXd& inputs,
                      const Eigen::VectorXd& targets,
                      const KernelSpec& kernel, double delta);

  double predict(const Eigen::VectorXd& query) const;
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& queries) const;

  double loo_mse() const { return loo_mse_; }
  /// y_i - e_i, the exact prediction of the model refit without row i.
  const Eigen::VectorXd& loo_predictions() const { return loo_predictions_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  const Eigen::VectorXd& fitted() const { return fitted_; }
  const KernelSpec& kernel() const { return kernel_; }
  double delta() const { return delta_; }

 private:
  KrrModel() = default;

  KernelSpec kernel_;
  double delta_ = 0.0;
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd coefficients_;
  Eigen::VectorXd fitted_;
  Eigen::VectorXd loo_predictions_;
  double loo_mse_ = 0.0;
};

/// Nadaraya-Watson estimate with Gaussian window G(z) = exp(-z^2 / 2);
/// returns the global target mean when every weight underflows to zero.
double nke_predict(const Eigen::MatrixXd& inputs,
                   const Eigen::VectorXd& targets, double bandwidth,
                   const Eigen::VectorXd& query);

/// k-nearest-neighbor prediction: mean of the k nearest targets for
/// regression, its sign for classification (0 maps to +1). Distance ties
/// break toward the lower row index.
double knn_predict(const Eigen::MatrixXd& inputs,
                   const Eigen::VectorXd& targets, int k,
                   const Eigen::VectorXd& query, Task task);

/// Divided-difference derivative estimates on the sampling grid: first order
/// uses the three-point interior stencil with one-sided ends; second order
/// uses twice the second divided difference (one-sided copies at the ends).
Eigen::VectorXd fd_derivative(const SampledFunction& x, int order);
Eigen::MatrixXd fd_derivative_rows(const SamplingGrid& grid,
                                   const Eigen::MatrixXd& rows, int order);

enum class LearnerKind { kKrr, kNke, kKnn };

/// Candidate grids for tune(); only the grids of the learner being tuned
/// need to be non-empty. Empty gammas for a Gaussian KRR means the
/// median-distance default grid.
struct ParamsGrid {
  std::vector<double> deltas;
  std::vector<double> gammas;
  std::vector<double> bandwidths;
  std::vector<int> ks;
};

enum class Validation { kLoo, kKfold4 };

struct TunedParams {
  double delta = 0.0;
  double gamma = 0.0;
  double bandwidth = 0.0;
  int k = 0;
  double score = 0.0;  // validation MSE or misclassification rate
};

/// 15 log-spaced gamma candidates scaled by 1 / median squared pairwise
/// distance of the rows.
std::vector<double> default_gamma_grid(const Eigen::MatrixXd& rows);
std::vector<double> default_delta_grid();

/// Grid search minimizing a validation estimate: exact leave-one-out or
/// stratified 4-fold cross-validation (folds drawn deterministically from
/// the seed). Ties keep the first candidate in grid order (gammas outer,
/// deltas inner for KRR).
TunedParams tune(LearnerKind learner, KernelKind kernel,
                 const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                 Task task, const ParamsGrid& grid, Validation scheme,
                 std::uint64_t seed);

/// Brute-force leave-one-out score of an arbitrary predictor: refits without
/// each row in turn. MSE for regression, misclassification rate for
/// classification.
double generic_loo(
    const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, Task task,
    const std::function<double(const Eigen::MatrixXd&, const Eigen::VectorXd&,
                               const Eigen::VectorXd&)>& predict);

}  // namespace splinemetric
