#include <charconv>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "splinemetric/config.hpp"
#include "splinemetric/dataset.hpp"
#include "splinemetric/error.hpp"
#include "splinemetric/harness.hpp"
#include "splinemetric/io.hpp"
#include "splinemetric/learners.hpp"
#include "splinemetric/log.hpp"
#include "splinemetric/spline.hpp"

namespace sm = splinemetric;

namespace {

constexpr int kExitComputation = 1;
constexpr int kExitUsage = 2;

double parse_strict_double(const std::string& text, const char* what) {
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw sm::ArgumentError(std::string(what) + ": not a number: '" + text +
                            "'");
  }
  return value;
}

/// "auto" or a non-negative number.
std::optional<double> parse_lambda(const std::string& text) {
  if (text == "auto") return std::nullopt;
  const double value = parse_strict_double(text, "--lambda");
  if (value < 0.0 || !std::isfinite(value)) {
    throw sm::ArgumentError("--lambda must be >= 0 or 'auto'");
  }
  return value;
}

std::vector<double> parse_probe_points(const std::string& text) {
  std::vector<double> points;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const double t = parse_strict_double(token, "--probe");
    if (t < 0.0 || t > 1.0) {
      throw sm::ArgumentError("--probe points must lie in [0, 1]");
    }
    points.push_back(t);
  }
  if (points.empty()) throw sm::ArgumentError("--probe list is empty");
  return points;
}

std::string format_shortest(double v) { return nlohmann::json(v).dump(); }

sm::LoadOptions make_load_options(const std::string& target, bool no_rescale,
                                  const std::string& grid_file) {
  sm::LoadOptions options;
  options.target_column = target;
  options.rescale = !no_rescale;
  if (!grid_file.empty()) options.grid_file = grid_file;
  return options;
}

std::string lambda_curve_csv(const sm::LambdaSelection& selection) {
  std::ostringstream out;
  out << "lambda,criterion\n";
  for (const auto& point : selection.curve) {
    out << format_shortest(point.lambda) << ',';
    if (point.degenerate) {
      out << "degenerate";
    } else {
      out << format_shortest(point.criterion);
    }
    out << '\n';
  }
  return out.str();
}

struct SplineArgs {
  std::string input;
  std::string output;
  int order = 2;
  std::string lambda_text = "auto";
  std::string target = "last";
  std::string grid_file;
  bool no_rescale = false;
  std::string curve_path;
};

void add_spline_options(CLI::App* cmd, SplineArgs& args) {
  cmd->add_option("-i,--input", args.input, "input dataset CSV")->required();
  cmd->add_option("-o,--output", args.output, "output CSV")->required();
  cmd->add_option("-m,--m", args.order, "derivative order")
      ->check(CLI::IsMember({1, 2}));
  cmd->add_option("--lambda", args.lambda_text,
                  "smoothing parameter, or 'auto' for the leave-one-out "
                  "search");
  cmd->add_option("--target", args.target,
                  "target column: last, none, a header name, or #index");
  cmd->add_option("--grid", args.grid_file,
                  "abscissae file, one point per line");
  cmd->add_flag("--no-rescale", args.no_rescale,
                "keep the abscissae as given instead of mapping to [0, 1]");
  cmd->add_option("--lambda-curve", args.curve_path,
                  "write the (lambda, criterion) search curve CSV here");
}

/// Builds the spline system, running the lambda search when requested.
sm::SplineSystem prepare_system(const sm::FunctionalDataset& ds,
                                const SplineArgs& args,
                                std::optional<double> lambda) {
  double chosen;
  std::optional<sm::LambdaSelection> selection;
  if (lambda) {
    chosen = *lambda;
  } else {
    selection = sm::select_lambda(ds.grid, sm::RkhsConfig(args.order), ds.rows,
                                  sm::default_lambda_grid());
    chosen = selection->lambda;
  }
  if (!args.curve_path.empty()) {
    if (selection) {
      sm::write_file_atomic(args.curve_path, lambda_curve_csv(*selection));
    } else {
      sm::log_info("--lambda-curve ignored for a fixed lambda");
    }
  }
  std::printf("lambda = %s\n", format_shortest(chosen).c_str());
  return sm::SplineSystem(ds.grid, sm::RkhsConfig(args.order), chosen);
}

int cmd_smooth(const SplineArgs& args, const std::string& probe_text,
               const std::string& probe_path) {
  const auto lambda = parse_lambda(args.lambda_text);
  const std::vector<double> probes =
      probe_text.empty() ? std::vector<double>{} : parse_probe_points(probe_text);

  const sm::FunctionalDataset ds = sm::load_dataset(
      args.input, make_load_options(args.target, args.no_rescale,
                                    args.grid_file));
  const sm::SplineSystem system = prepare_system(ds, args, lambda);

  sm::FunctionalDataset out = ds;
  out.rows = ds.rows * system.hat_matrix().transpose();
  sm::save_dataset(out, args.output);

  if (!probes.empty()) {
    std::ostringstream csv;
    csv << "function,t,value";
    for (int j = 1; j <= args.order; ++j) csv << ",d" << j;
    csv << '\n';
    for (Eigen::Index i = 0; i < ds.rows.rows(); ++i) {
      const sm::SplineFit fit = system.fit(ds.rows.row(i).transpose());
      for (double t : probes) {
        csv << i << ',' << format_shortest(t) << ','
            << format_shortest(fit.value(t));
        for (int j = 1; j <= args.order; ++j) {
          csv << ',' << format_shortest(fit.derivative(t, j));
        }
        csv << '\n';
      }
    }
    const std::string path =
        probe_path.empty() ? args.output + ".probe.csv" : probe_path;
    sm::write_file_atomic(path, csv.str());
  }
  return 0;
}

int cmd_transform(const SplineArgs& args, bool invert) {
  const auto lambda = parse_lambda(args.lambda_text);
  const sm::FunctionalDataset ds = sm::load_dataset(
      args.input, make_load_options(args.target, args.no_rescale,
                                    args.grid_file));
  const sm::SplineSystem system = prepare_system(ds, args, lambda);

  sm::FunctionalDataset out = ds;
  if (invert) {
    for (Eigen::Index i = 0; i < ds.rows.rows(); ++i) {
      out.rows.row(i) =
          system.inverse_transform(ds.rows.row(i).transpose()).transpose();
    }
  } else {
    out.rows = system.transform_rows(ds.rows);
  }
  sm::save_dataset(out, args.output);
  return 0;
}

int cmd_benchmark(const std::string& config_path,
                  const std::string& report_override,
                  const std::string& summary_override,
                  std::optional<std::uint64_t> seed_override,
                  std::optional<int> jobs_override) {
  sm::RunConfig config = sm::load_run_config(config_path);
  if (!report_override.empty()) config.report_path = report_override;
  if (!summary_override.empty()) config.summary_path = summary_override;
  if (seed_override) config.plan.seed = *seed_override;
  if (jobs_override) {
    if (*jobs_override < 1) throw sm::ArgumentError("--jobs must be >= 1");
    config.jobs = *jobs_override;
  }

  const sm::RunReport report = sm::execute(config);
  sm::write_file_atomic(config.report_path,
                        sm::report_to_json(report).dump(2) + "\n");
  if (config.summary_path) {
    sm::write_file_atomic(*config.summary_path,
                          sm::report_summary_csv(report));
  }
  std::printf("%s\n", report.ranking.c_str());
  return 0;
}

int cmd_synth(const std::string& output, int n, int points, int harmonics,
              const std::string& rule_name, double noise_sd,
              std::uint64_t seed, const std::string& family,
              bool exclude_zero) {
  if (n < 2) throw sm::ArgumentError("--n must be >= 2");
  if (points < 2) throw sm::ArgumentError("--points must be >= 2");
  sm::SynthSpec spec{
      .n = static_cast<std::size_t>(n),
      .grid = sm::SamplingGrid::uniform(static_cast<std::size_t>(points),
                                        !exclude_zero),
      .harmonics = harmonics,
      .rule = sm::TargetRule::kDerivEnergy,
      .noise_sd = noise_sd,
      .seed = seed,
      .pure_sine = family == "sine"};
  if (rule_name == "mean") {
    spec.rule = sm::TargetRule::kMean;
  } else if (rule_name == "deriv-energy") {
    spec.rule = sm::TargetRule::kDerivEnergy;
  } else if (rule_name == "sign-deriv-energy") {
    spec.rule = sm::TargetRule::kSignDerivEnergy;
  } else {
    throw sm::ArgumentError("unknown target rule: " + rule_name);
  }
  sm::save_dataset(sm::synthesize(spec), output);
  return 0;
}

int cmd_noise(const std::string& input, const std::string& output, double sd,
              std::uint64_t seed, const std::string& target) {
  const sm::FunctionalDataset ds =
      sm::load_dataset(input, make_load_options(target, false, ""));
  sm::save_dataset(sm::add_noise(ds, sd, seed), output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "splinemetric: smoothing-spline preprocessing and benchmarks for "
      "sampled curves"};
  app.require_subcommand(1);

  SplineArgs smooth_args;
  std::string probe_text, probe_path;
  CLI::App* smooth = app.add_subcommand(
      "smooth", "fit smoothing splines and write the fitted values");
  add_spline_options(smooth, smooth_args);
  smooth->add_option("--probe", probe_text,
                     "comma-separated points to evaluate values/derivatives "
                     "at");
  smooth->add_option("--probe-output", probe_path,
                     "probe CSV path (default <output>.probe.csv)");

  SplineArgs transform_args;
  bool invert = false;
  CLI::App* transform = app.add_subcommand(
      "transform", "apply the metric square root R to every row");
  add_spline_options(transform, transform_args);
  transform->add_flag("--invert", invert,
                      "solve R u = row instead (undo a transform)");

  std::string config_path, report_override, summary_override;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> jobs_override;
  CLI::App* benchmark = app.add_subcommand(
      "benchmark", "run a paired random-split benchmark from a config file");
  benchmark->add_option("-c,--config", config_path, "JSON run configuration")
      ->required();
  benchmark->add_option("-o,--output", report_override,
                        "report JSON path (overrides the config)");
  benchmark->add_option("--summary", summary_override,
                        "summary CSV path (overrides the config)");
  benchmark->add_option("--seed", seed_override,
                        "top-level seed (overrides the config)");
  benchmark->add_option("--jobs", jobs_override,
                        "parallel split workers (overrides the config)");

  std::string synth_output, rule_name = "deriv-energy", family = "trig";
  int synth_n = 100, synth_points = 50, harmonics = 3;
  double synth_noise = 0.0;
  std::uint64_t synth_seed = 0;
  bool exclude_zero = false;
  CLI::App* synth =
      app.add_subcommand("synth", "generate a random trigonometric dataset");
  synth->add_option("-o,--output", synth_output, "output CSV")->required();
  synth->add_option("--n", synth_n, "number of functions");
  synth->add_option("--points", synth_points, "grid size");
  synth->add_option("--harmonics", harmonics, "number of harmonics J");
  synth->add_option("--target-rule", rule_name,
                    "mean, deriv-energy or sign-deriv-energy");
  synth->add_option("--noise-sd", synth_noise, "observation noise sd");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--family", family, "trig (default) or sine (b_j = 0)");
  synth->add_flag("--exclude-zero", exclude_zero,
                  "use the grid {l/p} instead of {l/(p-1)}");

  std::string noise_input, noise_output, noise_target = "last";
  double noise_sd = 0.0;
  std::uint64_t noise_seed = 0;
  CLI::App* noise =
      app.add_subcommand("noise", "add Gaussian observation noise to a CSV");
  noise->add_option("-i,--input", noise_input, "input dataset CSV")
      ->required();
  noise->add_option("-o,--output", noise_output, "output CSV")->required();
  noise->add_option("--sd", noise_sd, "noise standard deviation")->required();
  noise->add_option("--seed", noise_seed, "generator seed");
  noise->add_option("--target", noise_target, "target column spec");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (smooth->parsed()) return cmd_smooth(smooth_args, probe_text, probe_path);
    if (transform->parsed()) return cmd_transform(transform_args, invert);
    if (benchmark->parsed()) {
      return cmd_benchmark(config_path, report_override, summary_override,
                           seed_override, jobs_override);
    }
    if (synth->parsed()) {
      return cmd_synth(synth_output, synth_n, synth_points, harmonics,
                       rule_name, synth_noise, synth_seed, family,
                       exclude_zero);
    }
    if (noise->parsed()) {
      return cmd_noise(noise_input, noise_output, noise_sd, noise_seed,
                       noise_target);
    }
  } catch (const sm::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const sm::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const sm::ArgumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const sm::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitComputation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitComputation;
  }
  return 0;
}
