#include "splinemetric/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "splinemetric/error.hpp"
#include "splinemetric/rng.hpp"

namespace splinemetric {

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b) {
  const Eigen::VectorXd a2 = a.rowwise().squaredNorm();
  const Eigen::VectorXd b2 = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * a * b.transpose();
  d2.colwise() += a2;
  d2.rowwise() += b2.transpose();
  return d2.cwiseMax(0.0);
}

double sign_label(double v) { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b,
                              const KernelSpec& kernel) {
  if (a.cols() != b.cols()) {
    throw DimensionError("kernel arguments have different widths");
  }
  if (kernel.kind == KernelKind::kLinear) return a * b.transpose();
  if (!(kernel.gamma > 0.0) || !std::isfinite(kernel.gamma)) {
    throw ArgumentError("gaussian kernel needs a positive finite gamma");
  }
  return (-kernel.gamma * squared_distances(a, b)).array().exp();
}

KrrModel KrrModel::fit(const Eigen::MatrixXd& inputs,
                       const Eigen::VectorXd& targets,
                       const KernelSpec& kernel, double delta) {
  const Eigen::Index n = inputs.rows();
  if (n < 2) throw ArgumentError("kernel ridge regression needs n >= 2");
  if (targets.size() != n) {
    throw DimensionError("target length does not match the row count");
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw DataError("training data contains a non-finite value");
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw ArgumentError("ridge parameter delta must be positive");
  }

  KrrModel model;
  model.kernel_ = kernel;
  model.delta_ = delta;
  model.inputs_ = inputs;

  const Eigen::MatrixXd gram = kernel_matrix(inputs, inputs, kernel);
  Eigen::MatrixXd regularized = gram;
  regularized.diagonal().array() += delta;
  Eigen::LLT<Eigen::MatrixXd> chol(regularized);
  if (chol.info() != Eigen::Success) {
    throw ConditioningError(
        "K + delta I is not numerically positive definite");
  }
  model.coefficients_ = chol.solve(targets);
  model.fitted_ = gram * model.coefficients_;

  // Hat diagonal: H = K (K + delta I)^-1 shares its diagonal with the
  // symmetric (K + delta I)^-1 K.
  const Eigen::MatrixXd smoother = chol.solve(gram);
  model.loo_predictions_.resize(n);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double slack = 1.0 - smoother(i, i);
    if (!(slack > 0.0)) {
      throw ConditioningError(
          "hat diagonal reached 1; leave-one-out is undefined");
    }
    const double residual = (targets[i] - model.fitted_[i]) / slack;
    model.loo_predictions_[i] = targets[i] - residual;
    sum += residual * residual;
  }
  model.loo_mse_ = sum / static_cast<double>(n);
  return model;
}

double KrrModel::predict(const Eigen::VectorXd& query) const {
  if (query.size() != inputs_.cols()) {
    throw DimensionError("query width does not match the training inputs");
  }
  return predict_rows(query.transpose())[0];
}

Eigen::VectorXd KrrModel::predict_rows(const Eigen::MatrixXd& queries) const {
  return kernel_matrix(queries, inputs_, kernel_) * coefficients_;
}

double nke_predict(const Eigen::MatrixXd& inputs,
                   const Eigen::VectorXd& targets, double bandwidth,
                   const Eigen::VectorXd& query) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ArgumentError("bandwidth must be positive");
  }
  if (query.size() != inputs.cols()) {
    throw DimensionError("query width does not match the training inputs");
  }
  double weight_sum = 0.0;
  double value = 0.0;
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    const double z2 =
        (inputs.row(i).transpose() - query).squaredNorm() /
        (bandwidth * bandwidth);
    const double w = std::exp(-0.5 * z2);
    weight_sum += w;
    value += w * targets[i];
  }
  if (weight_sum <= 0.0) return targets.mean();  // all windows underflowed
  return value / weight_sum;
}

double knn_predict(const Eigen::MatrixXd& inputs,
                   const Eigen::VectorXd& targets, int k,
                   const Eigen::VectorXd& query, Task task) {
  const Eigen::Index n = inputs.rows();
  if (k < 1 || k > n) {
    throw ArgumentError("k = " + std::to_string(k) +
                        " outside [1, " + std::to_string(n) + "]");
  }
  if (query.size() != inputs.cols()) {
    throw DimensionError("query width does not match the training inputs");
  }
  std::vector<std::pair<double, Eigen::Index>> order(
      static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    order[static_cast<std::size_t>(i)] = {
        (inputs.row(i).transpose() - query).squaredNorm(), i};
  }
  std::partial_sort(order.begin(), order.begin() + k, order.end());
  double mean = 0.0;
  for (int j = 0; j < k; ++j) {
    mean += targets[order[static_cast<std::size_t>(j)].second];
  }
  mean /= static_cast<double>(k);
  return task == Task::kClassification ? sign_label(mean) : mean;
}

Eigen::VectorXd fd_derivative(const SampledFunction& x, int order) {
  return fd_derivative_rows(x.grid, x.values.transpose(), order)
      .row(0)
      .transpose();
}

Eigen::MatrixXd fd_derivative_rows(const SamplingGrid& grid,
                                   const Eigen::MatrixXd& rows, int order) {
  if (order != 1 && order != 2) {
    throw ArgumentError("finite-difference order must be 1 or 2");
  }
  const auto p = static_cast<Eigen::Index>(grid.size());
  if (rows.cols() != p) {
    throw DimensionError("row arity does not match the grid length");
  }
  if (p < order + 1) {
    throw GridError("grid of " + std::to_string(p) +
                    " points is too short for finite differences of order " +
                    std::to_string(order));
  }
  const auto& t = grid.points();
  Eigen::MatrixXd out(rows.rows(), p);
  if (order == 1) {
    for (Eigen::Index i = 1; i + 1 < p; ++i) {
      const double h1 = t[i] - t[i - 1];
      const double h2 = t[i + 1] - t[i];
      const double wl = -h2 / (h1 * (h1 + h2));
      const double wc = (h2 - h1) / (h1 * h2);
      const double wr = h1 / (h2 * (h1 + h2));
      out.col(i) = wl * rows.col(i - 1) + wc * rows.col(i) + wr * rows.col(i + 1);
    }
    out.col(0) = (rows.col(1) - rows.col(0)) / (t[1] - t[0]);
    out.col(p - 1) = (rows.col(p - 1) - rows.col(p - 2)) / (t[p - 1] - t[p - 2]);
  } else {
    for (Eigen::Index i = 1; i + 1 < p; ++i) {
      const double h1 = t[i] - t[i - 1];
      const double h2 = t[i + 1] - t[i];
      // Twice the second divided difference, exact for quadratics.
      const double scale = 2.0 / (h1 + h2);
      out.col(i) = scale * ((rows.col(i + 1) - rows.col(i)) / h2 -
                            (rows.col(i) - rows.col(i - 1)) / h1);
    }
    out.col(0) = out.col(1);
    out.col(p - 1) = out.col(p - 2);
  }
  return out;
}

std::vector<double> default_gamma_grid(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  if (n < 2) throw ArgumentError("gamma default needs at least two rows");
  std::vector<double> d2;
  // Cap the pair count so the median stays cheap on large datasets.
  const Eigen::Index stride = n > 500 ? n / 500 + 1 : 1;
  for (Eigen::Index i = 0; i < n; i += stride) {
    for (Eigen::Index j = i + 1; j < n; j += stride) {
      d2.push_back((rows.row(i) - rows.row(j)).squaredNorm());
    }
  }
  auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
  std::nth_element(d2.begin(), mid, d2.end());
  const double median = *mid;
  const double base = median > 0.0 ? 1.0 / median : 1.0;
  std::vector<double> grid(15);
  for (int i = 0; i < 15; ++i) {
    grid[static_cast<std::size_t>(i)] =
        base * std::pow(10.0, -2.0 + 4.0 * i / 14.0);
  }
  return grid;
}

std::vector<double> default_delta_grid() {
  std::vector<double> grid(11);
  for (int i = 0; i < 11; ++i) {
    grid[static_cast<std::size_t>(i)] = std::pow(10.0, -8.0 + i);
  }
  return grid;
}

namespace {

double loss_of(double prediction, double target, Task task) {
  if (task == Task::kClassification) {
    return sign_label(prediction) != target ? 1.0 : 0.0;
  }
  const double e = prediction - target;
  return e * e;
}

/// Deterministic fold assignment; round-robin within each class keeps the
/// folds stratified for classification.
std::vector<int> fold_assignment(const Eigen::VectorXd& targets, Task task,
                                 int folds, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(targets.size());
  std::vector<int> assignment(n, 0);
  Rng rng(seed);
  if (task == Task::kClassification) {
    for (double label : {-1.0, 1.0}) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (targets[static_cast<Eigen::Index>(i)] == label) members.push_back(i);
      }
      if (!members.empty() && members.size() < static_cast<std::size_t>(folds)) {
        throw ArgumentError(
            "stratified " + std::to_string(folds) +
            "-fold validation impossible: a class has only " +
            std::to_string(members.size()) + " members");
      }
      rng.shuffle(members);
      for (std::size_t i = 0; i < members.size(); ++i) {
        assignment[members[i]] = static_cast<int>(i % folds);
      }
    }
  } else {
    std::vector<std::size_t> members(n);
    std::iota(members.begin(), members.end(), 0);
    rng.shuffle(members);
    for (std::size_t i = 0; i < n; ++i) {
      assignment[members[i]] = static_cast<int>(i % folds);
    }
  }
  return assignment;
}

struct SplitView {
  Eigen::MatrixXd train_x, test_x;
  Eigen::VectorXd train_y, test_y;
};

SplitView take_fold(const Eigen::MatrixXd& inputs,
                    const Eigen::VectorXd& targets,
                    const std::vector<int>& assignment, int fold) {
  const auto n = static_cast<std::size_t>(inputs.rows());
  std::size_t in_fold = 0;
  for (int a : assignment) in_fold += a == fold ? 1 : 0;
  SplitView view;
  view.train_x.resize(static_cast<Eigen::Index>(n - in_fold), inputs.cols());
  view.test_x.resize(static_cast<Eigen::Index>(in_fold), inputs.cols());
  view.train_y.resize(static_cast<Eigen::Index>(n - in_fold));
  view.test_y.resize(static_cast<Eigen::Index>(in_fold));
  Eigen::Index tr = 0, te = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (assignment[i] == fold) {
      view.test_x.row(te) = inputs.row(row);
      view.test_y[te++] = targets[row];
    } else {
      view.train_x.row(tr) = inputs.row(row);
      view.train_y[tr++] = targets[row];
    }
  }
  return view;
}

}  // namespace

double generic_loo(
    const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, Task task,
    const std::function<double(const Eigen::MatrixXd&, const Eigen::VectorXd&,
                               const Eigen::VectorXd&)>& predict) {
  const Eigen::Index n = inputs.rows();
  if (n < 2) throw ArgumentError("leave-one-out needs n >= 2");
  Eigen::MatrixXd rest_x(n - 1, inputs.cols());
  Eigen::VectorXd rest_y(n - 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index r = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      rest_x.row(r) = inputs.row(j);
      rest_y[r++] = targets[j];
    }
    total += loss_of(predict(rest_x, rest_y, inputs.row(i).transpose()),
                     targets[i], task);
  }
  return total / static_cast<double>(n);
}

TunedParams tune(LearnerKind learner, KernelKind kernel,
                 const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                 Task task, const ParamsGrid& grid, Validation scheme,
                 std::uint64_t seed) {
  const Eigen::Index n = inputs.rows();
  if (n < 2) throw ArgumentError("tuning needs n >= 2");

  constexpr int kFolds = 4;
  std::vector<int> folds;
  if (scheme == Validation::kKfold4) {
    folds = fold_assignment(targets, task, kFolds, seed);
  }

  // Pooled validation loss of one candidate under the chosen scheme.
  const auto kfold_score = [&](auto&& predict_fold) {
    double total = 0.0;
    for (int f = 0; f < kFolds; ++f) {
      const SplitView view = take_fold(inputs, targets, folds, f);
      if (view.train_x.rows() == 0 || view.test_x.rows() == 0) continue;
      total += predict_fold(view);
    }
    return total / static_cast<double>(n);
  };

  TunedParams best;
  double best_score = std::numeric_limits<double>::infinity();
  bool first = true;
  const auto consider = [&](const TunedParams& candidate) {
    if (first || candidate.score < best_score) {
      best = candidate;
      best_score = candidate.score;
      first = false;
    }
  };

  switch (learner) {
    case LearnerKind::kKrr: {
      if (grid.deltas.empty()) {
        throw ArgumentError("KRR tuning needs a non-empty delta grid");
      }
      std::vector<double> gammas = kernel == KernelKind::kGaussian
                                       ? (grid.gammas.empty()
                                              ? default_gamma_grid(inputs)
                                              : grid.gammas)
                                       : std::vector<double>{0.0};
      for (double gamma : gammas) {
        const KernelSpec spec{kernel, gamma};
        for (double delta : grid.deltas) {
          TunedParams candidate;
          candidate.gamma = gamma;
          candidate.delta = delta;
          if (scheme == Validation::kLoo) {
            const KrrModel model = KrrModel::fit(inputs, targets, spec, delta);
            if (task == Task::kClassification) {
              double errors = 0.0;
              for (Eigen::Index i = 0; i < n; ++i) {
                errors += sign_label(model.loo_predictions()[i]) != targets[i]
                              ? 1.0
                              : 0.0;
              }
              candidate.score = errors / static_cast<double>(n);
            } else {
              candidate.score = model.loo_mse();
            }
          } else {
            candidate.score = kfold_score([&](const SplitView& view) {
              const KrrModel model =
                  KrrModel::fit(view.train_x, view.train_y, spec, delta);
              const Eigen::VectorXd pred = model.predict_rows(view.test_x);
              double loss = 0.0;
              for (Eigen::Index i = 0; i < pred.size(); ++i) {
                loss += loss_of(pred[i], view.test_y[i], task);
              }
              return loss;
            });
          }
          consider(candidate);
        }
      }
      break;
    }
    case LearnerKind::kNke: {
      if (grid.bandwidths.empty()) {
        throw ArgumentError("NKE tuning needs a non-empty bandwidth grid");
      }
      for (double bandwidth : grid.bandwidths) {
        if (!(bandwidth > 0.0)) {
          throw ArgumentError("bandwidth candidates must be positive");
        }
        TunedParams candidate;
        candidate.bandwidth = bandwidth;
        if (scheme == Validation::kLoo) {
          candidate.score = generic_loo(
              inputs, targets, task,
              [bandwidth](const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& u) {
                return nke_predict(x, y, bandwidth, u);
              });
        } else {
          candidate.score = kfold_score([&](const SplitView& view) {
            double loss = 0.0;
            for (Eigen::Index i = 0; i < view.test_x.rows(); ++i) {
              loss += loss_of(nke_predict(view.train_x, view.train_y,
                                          bandwidth,
                                          view.test_x.row(i).transpose()),
                              view.test_y[i], task);
            }
            return loss;
          });
        }
        consider(candidate);
      }
      break;
    }
    case LearnerKind::kKnn: {
      if (grid.ks.empty()) {
        throw ArgumentError("KNN tuning needs a non-empty k grid");
      }
      for (int k : grid.ks) {
        TunedParams candidate;
        candidate.k = k;
        if (scheme == Validation::kLoo) {
          candidate.score = generic_loo(
              inputs, targets, task,
              [k, task](const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& u) {
                return knn_predict(x, y, k, u, task);
              });
        } else {
          candidate.score = kfold_score([&](const SplitView& view) {
            double loss = 0.0;
            for (Eigen::Index i = 0; i < view.test_x.rows(); ++i) {
              loss += loss_of(knn_predict(view.train_x, view.train_y, k,
                                          view.test_x.row(i).transpose(),
                                          task),
                              view.test_y[i], task);
            }
            return loss;
          });
        }
        consider(candidate);
      }
      break;
    }
  }
  return best;
}

}  // namespace splinemetric
