#include "splinemetric/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "splinemetric/error.hpp"
#include "splinemetric/log.hpp"
#include "splinemetric/rng.hpp"
#include "splinemetric/spline.hpp"

namespace splinemetric {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct VariantInfo {
  bool smoothing = false;      // S1, S2
  bool interpolating = false;  // IS1, IS2
  bool finite_diff = false;    // FD1, FD2
  int order = 0;               // derivative order, 0 for O
};

VariantInfo variant_info(VariantTag tag) {
  switch (tag) {
    case VariantTag::kO:
      return {};
    case VariantTag::kS1:
      return {true, false, false, 1};
    case VariantTag::kS2:
      return {true, false, false, 2};
    case VariantTag::kIs1:
      return {false, true, false, 1};
    case VariantTag::kIs2:
      return {false, true, false, 2};
    case VariantTag::kFd1:
      return {false, false, true, 1};
    case VariantTag::kFd2:
      return {false, false, true, 2};
  }
  throw ArgumentError("unknown preprocessing variant");
}

std::uint64_t fnv1a(const std::vector<int>& values) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (int v : values) {
    auto word = static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
    for (int byte = 0; byte < 8; ++byte) {
      hash ^= (word >> (8 * byte)) & 0xffULL;
      hash *= 1099511628211ULL;
    }
  }
  return hash;
}

/// Largest-remainder apportionment of `total` seats by class counts.
std::vector<int> apportion(int total, const std::vector<int>& counts) {
  const double n = static_cast<double>(
      std::accumulate(counts.begin(), counts.end(), 0));
  std::vector<int> seats(counts.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double quota = total * counts[c] / n;
    seats[c] = static_cast<int>(std::floor(quota));
    assigned += seats[c];
    remainders.emplace_back(-(quota - std::floor(quota)), c);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i) {
    ++seats[remainders[i].second];
    ++assigned;
  }
  return seats;
}

struct IndexSplit {
  std::vector<int> train;
  std::vector<int> test;
};

IndexSplit draw_split(const FunctionalDataset& ds, const SplitPlan& plan,
                      std::uint64_t seed) {
  const int n = static_cast<int>(ds.size());
  Rng rng(seed);
  IndexSplit split;
  if (plan.stratified) {
    std::vector<std::vector<int>> members(2);
    for (int i = 0; i < n; ++i) {
      members[ds.targets[i] < 0.0 ? 0 : 1].push_back(i);
    }
    const std::vector<int> counts{static_cast<int>(members[0].size()),
                                  static_cast<int>(members[1].size())};
    const std::vector<int> test_seats = apportion(plan.test_size, counts);
    const std::vector<int> train_seats = apportion(plan.train_size, counts);
    for (std::size_t c = 0; c < members.size(); ++c) {
      if (train_seats[c] + test_seats[c] > counts[c]) {
        throw ArgumentError(
            "stratified split infeasible: class " + std::to_string(c) +
            " has " + std::to_string(counts[c]) + " members but needs " +
            std::to_string(train_seats[c] + test_seats[c]));
      }
      rng.shuffle(members[c]);
      split.test.insert(split.test.end(), members[c].begin(),
                        members[c].begin() + test_seats[c]);
      split.train.insert(split.train.end(),
                         members[c].begin() + test_seats[c],
                         members[c].begin() + test_seats[c] + train_seats[c]);
    }
  } else {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    split.train.assign(perm.begin(), perm.begin() + plan.train_size);
    split.test.assign(perm.begin() + plan.train_size,
                      perm.begin() + plan.train_size + plan.test_size);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

bool train_covers_classes(const FunctionalDataset& ds,
                          const std::vector<int>& train) {
  bool neg = false, pos = false;
  for (int i : train) {
    (ds.targets[i] < 0.0 ? neg : pos) = true;
  }
  return neg && pos;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& rows,
                          const std::vector<int>& indices) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(indices.size()), rows.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = rows.row(indices[i]);
  }
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v,
                     const std::vector<int>& indices) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = v[indices[i]];
  }
  return out;
}

struct Features {
  Eigen::MatrixXd rows;  // all dataset rows in variant feature space
  double lambda = kNan;
};

/// Variant feature map fitted on the training rows only; the per-row
/// transform is then applied to the whole dataset.
Features featurize(const FunctionalDataset& ds, VariantTag tag,
                   const std::vector<int>& train,
                   const std::vector<double>& lambda_candidates) {
  const VariantInfo info = variant_info(tag);
  Features features;
  if (info.smoothing) {
    const Eigen::MatrixXd train_rows = take_rows(ds.rows, train);
    const LambdaSelection selection = select_lambda(
        ds.grid, RkhsConfig(info.order), train_rows, lambda_candidates);
    const SplineSystem system(ds.grid, RkhsConfig(info.order),
                              selection.lambda);
    features.rows = system.transform_rows(ds.rows);
    features.lambda = selection.lambda;
  } else if (info.interpolating) {
    const SplineSystem system(ds.grid, RkhsConfig(info.order), 0.0);
    features.rows = system.transform_rows(ds.rows);
    features.lambda = 0.0;
  } else if (info.finite_diff) {
    features.rows = fd_derivative_rows(ds.grid, ds.rows, info.order);
  } else {
    features.rows = ds.rows;
  }
  return features;
}

std::vector<double> default_bandwidth_grid(const Eigen::MatrixXd& rows) {
  std::vector<double> gammas = default_gamma_grid(rows);
  // gamma = 1 / median d^2, so median distance = 1 / sqrt(gamma); reuse the
  // log spacing around it.
  std::vector<double> grid(gammas.size());
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    grid[grid.size() - 1 - i] = 1.0 / std::sqrt(gammas[i]);
  }
  return grid;
}

ParamsGrid resolve_grid(const LearnerConfig& learner,
                        const Eigen::MatrixXd& train_rows) {
  ParamsGrid grid = learner.grid;
  switch (learner.kind) {
    case LearnerKind::kKrr:
      if (grid.deltas.empty()) grid.deltas = default_delta_grid();
      // Empty gammas stay empty: tune() derives the median-distance grid
      // from the same training rows.
      break;
    case LearnerKind::kNke:
      if (grid.bandwidths.empty()) {
        grid.bandwidths = default_bandwidth_grid(train_rows);
      }
      break;
    case LearnerKind::kKnn:
      if (grid.ks.empty()) {
        const int n = static_cast<int>(train_rows.rows());
        for (int k : {1, 3, 5, 7, 9, 11, 13, 15}) {
          if (k <= n - 1) grid.ks.push_back(k);
        }
      }
      break;
  }
  return grid;
}

Validation resolve_scheme(const LearnerConfig& learner) {
  if (learner.scheme) return *learner.scheme;
  return learner.kind == LearnerKind::kKrr ? Validation::kLoo
                                           : Validation::kKfold4;
}

SplitVariantResult evaluate_variant(const FunctionalDataset& ds,
                                    const Features& features,
                                    const IndexSplit& split,
                                    const LearnerConfig& learner,
                                    std::uint64_t tune_seed) {
  const Eigen::MatrixXd train_x = take_rows(features.rows, split.train);
  const Eigen::MatrixXd test_x = take_rows(features.rows, split.test);
  Eigen::VectorXd train_y = take(ds.targets, split.train);
  const Eigen::VectorXd test_y = take(ds.targets, split.test);

  double offset = 0.0;
  if (learner.center_targets && ds.task == Task::kRegression) {
    offset = train_y.mean();
    train_y.array() -= offset;
  }

  const ParamsGrid grid = resolve_grid(learner, train_x);
  const Validation scheme = resolve_scheme(learner);

  SplitVariantResult result;
  result.lambda = features.lambda;
  result.params = tune(learner.kind, learner.kernel, train_x, train_y,
                       ds.task, grid, scheme, tune_seed);

  Eigen::VectorXd predictions(test_y.size());
  switch (learner.kind) {
    case LearnerKind::kKrr: {
      const KrrModel model =
          KrrModel::fit(train_x, train_y,
                        KernelSpec{learner.kernel, result.params.gamma},
                        result.params.delta);
      predictions = model.predict_rows(test_x);
      break;
    }
    case LearnerKind::kNke:
      for (Eigen::Index i = 0; i < test_x.rows(); ++i) {
        predictions[i] = nke_predict(train_x, train_y,
                                     result.params.bandwidth,
                                     test_x.row(i).transpose());
      }
      break;
    case LearnerKind::kKnn:
      for (Eigen::Index i = 0; i < test_x.rows(); ++i) {
        predictions[i] = knn_predict(train_x, train_y, result.params.k,
                                     test_x.row(i).transpose(), ds.task);
      }
      break;
  }

  if (ds.task == Task::kClassification) {
    double errors = 0.0;
    for (Eigen::Index i = 0; i < predictions.size(); ++i) {
      const double label = predictions[i] < 0.0 ? -1.0 : 1.0;
      errors += label != test_y[i] ? 1.0 : 0.0;
    }
    result.metric = errors / static_cast<double>(predictions.size());
    result.r2 = kNan;
  } else {
    predictions.array() += offset;
    std::vector<double> sq(static_cast<std::size_t>(predictions.size()));
    for (Eigen::Index i = 0; i < predictions.size(); ++i) {
      const double e = predictions[i] - test_y[i];
      sq[static_cast<std::size_t>(i)] = e * e;
    }
    result.metric = stable_sum(std::move(sq)) /
                    static_cast<double>(predictions.size());
    std::vector<double> targets(test_y.data(), test_y.data() + test_y.size());
    result.r2 = 1.0 - result.metric / sample_variance(targets);
  }
  return result;
}

std::string learner_name(const LearnerConfig& learner) {
  switch (learner.kind) {
    case LearnerKind::kKrr:
      return learner.kernel == KernelKind::kGaussian ? "KRR Gaussian"
                                                     : "KRR Linear";
    case LearnerKind::kNke:
      return "NKE";
    case LearnerKind::kKnn:
      return "KNN";
  }
  return "?";
}

std::string format_json_double(double v) {
  return nlohmann::json(v).dump();
}

}  // namespace

std::string to_string(VariantTag tag) {
  switch (tag) {
    case VariantTag::kO:
      return "O";
    case VariantTag::kS1:
      return "S1";
    case VariantTag::kS2:
      return "S2";
    case VariantTag::kIs1:
      return "IS1";
    case VariantTag::kIs2:
      return "IS2";
    case VariantTag::kFd1:
      return "FD1";
    case VariantTag::kFd2:
      return "FD2";
  }
  throw ArgumentError("unknown preprocessing variant");
}

VariantTag parse_variant(const std::string& name) {
  if (name == "O") return VariantTag::kO;
  if (name == "S1") return VariantTag::kS1;
  if (name == "S2") return VariantTag::kS2;
  if (name == "IS1") return VariantTag::kIs1;
  if (name == "IS2") return VariantTag::kIs2;
  if (name == "FD1") return VariantTag::kFd1;
  if (name == "FD2") return VariantTag::kFd2;
  throw ArgumentError("unknown preprocessing variant: '" + name + "'");
}

std::vector<double> RunReport::metrics_of(std::size_t variant_index) const {
  std::vector<double> series(splits.size());
  for (std::size_t s = 0; s < splits.size(); ++s) {
    series[s] = splits[s].variants[variant_index].metric;
  }
  return series;
}

RunReport run_benchmark(const FunctionalDataset& ds,
                        const std::vector<VariantTag>& variants,
                        const LearnerConfig& learner, const SplitPlan& plan,
                        const BenchmarkOptions& options) {
  if (variants.empty()) throw ArgumentError("variant list is empty");
  if (plan.n_splits < 1) throw ArgumentError("n_splits must be >= 1");
  if (plan.train_size < 2 || plan.test_size < 1) {
    throw ArgumentError("splits need train_size >= 2 and test_size >= 1");
  }
  const int n = static_cast<int>(ds.size());
  if (plan.train_size + plan.test_size > n) {
    throw ArgumentError("train_size + test_size = " +
                        std::to_string(plan.train_size + plan.test_size) +
                        " exceeds the dataset size " + std::to_string(n));
  }
  if (plan.stratified && ds.task != Task::kClassification) {
    throw ArgumentError("stratified splits only apply to classification");
  }
  if (!ds.has_target) throw ArgumentError("dataset has no targets");

  RunReport report;
  report.task = ds.task;
  report.metric_name = ds.task == Task::kClassification ? "mcr" : "mse";
  report.plan = plan;
  report.variants = variants;
  report.learner = learner;
  report.lambda_candidates = options.lambda_candidates.empty()
                                 ? default_lambda_grid()
                                 : options.lambda_candidates;
  report.splits.resize(static_cast<std::size_t>(plan.n_splits));

  const auto run_split = [&](int index) {
    SplitRecord record;
    record.index = index;
    IndexSplit split;
    int attempt = 0;
    for (;; ++attempt) {
      if (attempt > 100) {
        throw DataError(
            "could not draw a training split containing every class after "
            "100 attempts (split " + std::to_string(index) + ")");
      }
      const std::uint64_t stream =
          (static_cast<std::uint64_t>(attempt) << 32) |
          static_cast<std::uint64_t>(index);
      split = draw_split(ds, plan, subseed(plan.seed, stream));
      if (ds.task != Task::kClassification || train_covers_classes(ds, split.train)) {
        break;
      }
      log_info("split " + std::to_string(index) +
               ": training half misses a class, regenerating (attempt " +
               std::to_string(attempt + 1) + ")");
    }
    record.regenerated = attempt;
    record.train_indices = split.train;
    record.test_indices = split.test;
    record.train_hash = fnv1a(split.train);
    record.test_hash = fnv1a(split.test);
    const std::uint64_t split_seed = subseed(plan.seed, record.train_hash);
    record.variants.reserve(variants.size());
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const Features features =
          featurize(ds, variants[v], split.train, report.lambda_candidates);
      record.variants.push_back(
          evaluate_variant(ds, features, split, learner,
                           subseed(split_seed, v)));
    }
    report.splits[static_cast<std::size_t>(index)] = std::move(record);
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1 || plan.n_splits == 1) {
    for (int s = 0; s < plan.n_splits; ++s) run_split(s);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    const int worker_count = std::min(jobs, plan.n_splits);
    workers.reserve(static_cast<std::size_t>(worker_count));
    for (int w = 0; w < worker_count; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const int s = next.fetch_add(1);
          if (s >= plan.n_splits) return;
          try {
            run_split(s);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& worker : workers) worker.join();
    if (failure) std::rethrow_exception(failure);
  }

  // Aggregation happens on the ordered per-split records, so the report is
  // identical for any job count.
  finalize_report(report);
  return report;
}

void finalize_report(RunReport& report) {
  const std::size_t variant_count = report.variants.size();
  report.summaries.assign(variant_count, VariantSummary{});
  report.pairwise.clear();
  for (std::size_t v = 0; v < variant_count; ++v) {
    const std::vector<double> series = report.metrics_of(v);
    VariantSummary summary;
    summary.metric_mean = mean_of(series);
    summary.metric_sd = series.size() > 1 ? sample_sd(series) : 0.0;
    if (report.task == Task::kRegression) {
      std::vector<double> r2(series.size());
      for (std::size_t s = 0; s < report.splits.size(); ++s) {
        r2[s] = report.splits[s].variants[v].r2;
      }
      summary.r2_mean = mean_of(r2);
    } else {
      summary.r2_mean = kNan;
    }
    report.summaries[v] = summary;
  }
  if (report.splits.size() > 1) {
    for (std::size_t a = 0; a < variant_count; ++a) {
      for (std::size_t b = a + 1; b < variant_count; ++b) {
        const PairedTResult t = paired_t_test(
            report.metrics_of(a), report.metrics_of(b), kSignificanceLevel);
        report.pairwise.push_back(
            {a, b, t.statistic, t.p_value, t.significant});
      }
    }
  }
  report.ranking = rank_methods(report);
}

std::string rank_methods(const RunReport& report) {
  if (report.variants.size() < 2) {
    return report.variants.empty() ? std::string()
                                   : to_string(report.variants.front());
  }
  std::vector<std::size_t> order(report.variants.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return report.summaries[a].metric_mean <
                            report.summaries[b].metric_mean;
                   });
  const auto significant = [&](std::size_t a, std::size_t b) {
    for (const auto& test : report.pairwise) {
      if ((test.first == a && test.second == b) ||
          (test.first == b && test.second == a)) {
        return test.significant;
      }
    }
    // Single-split runs carry no pairwise tests; treat as not significant.
    return false;
  };
  std::string out = to_string(report.variants[order[0]]);
  for (std::size_t i = 1; i < order.size(); ++i) {
    out += significant(order[i - 1], order[i]) ? " < " : " <= ";
    out += to_string(report.variants[order[i]]);
  }
  return out;
}

nlohmann::ordered_json report_to_json(const RunReport& report) {
  using json = nlohmann::ordered_json;
  json root;
  root["schema"] = "splinemetric-report/1";
  root["task"] = report.task == Task::kClassification ? "classification"
                                                      : "regression";
  root["metric"] = report.metric_name;
  root["seed"] = report.plan.seed;
  root["n_splits"] = report.plan.n_splits;
  root["train_size"] = report.plan.train_size;
  root["test_size"] = report.plan.test_size;
  root["stratified"] = report.plan.stratified;
  root["gaussian_generator"] = kGaussianGeneratorId;
  root["learner"] = learner_name(report.learner);
  root["validation"] =
      resolve_scheme(report.learner) == Validation::kLoo ? "loo" : "kfold4";
  root["lambda_candidates"] = report.lambda_candidates;

  json variant_names = json::array();
  for (VariantTag tag : report.variants) variant_names.push_back(to_string(tag));
  root["variants"] = variant_names;

  json splits = json::array();
  for (const auto& record : report.splits) {
    json split;
    split["index"] = record.index;
    split["regenerated"] = record.regenerated;
    {
      std::ostringstream hex;
      hex << std::hex << record.train_hash << '/' << record.test_hash;
      split["hash"] = hex.str();
    }
    split["train_indices"] = record.train_indices;
    split["test_indices"] = record.test_indices;
    json per_variant = json::object();
    for (std::size_t v = 0; v < report.variants.size(); ++v) {
      const auto& result = record.variants[v];
      json entry;
      entry[report.metric_name] = result.metric;
      if (report.task == Task::kRegression) entry["r2"] = result.r2;
      if (std::isfinite(result.lambda)) entry["lambda"] = result.lambda;
      json params = json::object();
      switch (report.learner.kind) {
        case LearnerKind::kKrr:
          params["delta"] = result.params.delta;
          if (report.learner.kernel == KernelKind::kGaussian) {
            params["gamma"] = result.params.gamma;
          }
          break;
        case LearnerKind::kNke:
          params["bandwidth"] = result.params.bandwidth;
          break;
        case LearnerKind::kKnn:
          params["k"] = result.params.k;
          break;
      }
      params["validation_score"] = result.params.score;
      entry["params"] = params;
      per_variant[to_string(report.variants[v])] = entry;
    }
    split["variants"] = per_variant;
    splits.push_back(split);
  }
  root["splits"] = splits;

  json summary = json::object();
  for (std::size_t v = 0; v < report.variants.size(); ++v) {
    json entry;
    entry["mean_" + report.metric_name] = report.summaries[v].metric_mean;
    entry["sd_" + report.metric_name] = report.summaries[v].metric_sd;
    if (report.task == Task::kRegression) {
      entry["mean_r2"] = report.summaries[v].r2_mean;
    }
    summary[to_string(report.variants[v])] = entry;
  }
  root["summary"] = summary;

  json pairwise = json::array();
  for (const auto& test : report.pairwise) {
    json entry;
    entry["a"] = to_string(report.variants[test.first]);
    entry["b"] = to_string(report.variants[test.second]);
    entry["t"] = test.statistic;
    entry["p"] = test.p_value;
    entry["significant"] = test.significant;
    pairwise.push_back(entry);
  }
  root["pairwise"] = pairwise;
  root["ranking"] = report.ranking;
  return root;
}

std::string report_summary_csv(const RunReport& report) {
  std::ostringstream out;
  out << "method,data,metric,mean,sd,mean_r2\n";
  const std::string method = learner_name(report.learner);
  for (std::size_t v = 0; v < report.variants.size(); ++v) {
    out << method << ',' << to_string(report.variants[v]) << ','
        << report.metric_name << ','
        << format_json_double(report.summaries[v].metric_mean) << ','
        << format_json_double(report.summaries[v].metric_sd) << ',';
    if (report.task == Task::kRegression) {
      out << format_json_double(report.summaries[v].r2_mean);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace splinemetric
