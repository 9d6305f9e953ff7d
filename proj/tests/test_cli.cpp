#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "splinemetric/dataset.hpp"
#include "splinemetric/io.hpp"
#include "splinemetric/spline.hpp"

using namespace splinemetric;

namespace {

namespace fs = std::filesystem;

struct CommandResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "splinemetric_cli_tests";
  fs::create_directories(dir);
  return dir;
}

CommandResult run_cli(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const fs::path err = work_dir() / "stderr.txt";
  const std::string command = std::string("\"") + SPLINEMETRIC_CLI_PATH +
                              "\" " + args + " > " + out.string() + " 2> " +
                              err.string();
  const int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = read_file(out.string());
  result.err = read_file(err.string());
  return result;
}

std::string path_of(const std::string& name) {
  return (work_dir() / name).string();
}

}  // namespace

TEST_CASE("smooth: auto lambda on polynomial data leaves tiny residuals") {
  // Lines are reproduced by the order-2 smoother for every lambda.
  const SamplingGrid grid = SamplingGrid::uniform(15);
  Eigen::MatrixXd rows(5, 15);
  for (int i = 0; i < 5; ++i) {
    for (int l = 0; l < 15; ++l) {
      rows(i, l) = 1.0 + i - 0.5 * i * grid[static_cast<std::size_t>(l)];
    }
  }
  const FunctionalDataset ds = FunctionalDataset::create(
      grid, rows, Eigen::VectorXd::Zero(5), Task::kRegression);
  save_dataset(ds, path_of("poly.csv"));

  const CommandResult r = run_cli("smooth -i " + path_of("poly.csv") + " -o " +
                                  path_of("poly_smooth.csv") +
                                  " --m 2 --lambda auto --lambda-curve " +
                                  path_of("poly_curve.csv"));
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("lambda = ") == 0);

  const FunctionalDataset fitted = load_dataset(path_of("poly_smooth.csv"));
  CHECK((fitted.rows - ds.rows).cwiseAbs().maxCoeff() < 1e-8);

  const std::string curve = read_file(path_of("poly_curve.csv"));
  CHECK(curve.find("lambda,criterion") == 0);

  // Probe evaluation: value and both derivatives of 1 + i - 0.5 i t.
  const CommandResult probe = run_cli(
      "smooth -i " + path_of("poly.csv") + " -o " + path_of("poly_s2.csv") +
      " --m 2 --lambda 0.001 --probe 0.25,0.75 --probe-output " +
      path_of("poly_probe.csv"));
  CHECK(probe.exit_code == 0);
  std::ifstream probe_csv(path_of("poly_probe.csv"));
  std::string line;
  std::getline(probe_csv, line);
  CHECK(line == "function,t,value,d1,d2");
  std::getline(probe_csv, line);  // function 0 at t = 0.25: constant 1
  std::stringstream ss(line);
  std::string field;
  std::getline(ss, field, ',');
  CHECK(field == "0");
  std::getline(ss, field, ',');
  std::getline(ss, field, ',');
  CHECK(std::stod(field) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("smooth: usage errors exit with code 2") {
  const CommandResult missing =
      run_cli("smooth -i " + path_of("no_such_file.csv") + " -o " +
              path_of("out.csv"));
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("no_such_file.csv") != std::string::npos);
  CHECK_FALSE(fs::exists(path_of("out.csv")));  // no partial outputs

  const CommandResult negative =
      run_cli("smooth -i " + path_of("poly.csv") + " -o " + path_of("out.csv") +
              " --lambda -1");
  CHECK(negative.exit_code == 2);
  CHECK_FALSE(fs::exists(path_of("out.csv")));

  const CommandResult bad_order =
      run_cli("smooth -i " + path_of("poly.csv") + " -o " + path_of("out.csv") +
              " --m 3");
  CHECK(bad_order.exit_code == 2);
}

TEST_CASE("transform: round trip, row counts and metric distances") {
  const CommandResult synth = run_cli(
      "synth -o " + path_of("tds.csv") +
      " --n 12 --points 20 --harmonics 2 --seed 5 --exclude-zero");
  CHECK(synth.exit_code == 0);

  const CommandResult fwd = run_cli(
      "transform -i " + path_of("tds.csv") + " -o " + path_of("tz.csv") +
      " --m 1 --lambda 0.001");
  CHECK(fwd.exit_code == 0);

  const FunctionalDataset original = load_dataset(path_of("tds.csv"));
  const FunctionalDataset transformed = load_dataset(path_of("tz.csv"));
  CHECK(transformed.size() == original.size());
  CHECK(transformed.targets == original.targets);

  // Euclidean distances in the transformed space match the metric.
  const SplineSystem system(original.grid, RkhsConfig(1), 0.001);
  for (int i = 1; i < 5; ++i) {
    const Eigen::VectorXd diff =
        (original.rows.row(0) - original.rows.row(i)).transpose();
    const double metric = system.inner(diff, diff);
    const double euclid =
        (transformed.rows.row(0) - transformed.rows.row(i)).squaredNorm();
    CHECK(euclid == doctest::Approx(metric).epsilon(1e-9));
  }

  const CommandResult back = run_cli(
      "transform -i " + path_of("tz.csv") + " -o " + path_of("tback.csv") +
      " --m 1 --lambda 0.001 --invert");
  CHECK(back.exit_code == 0);
  const FunctionalDataset recovered = load_dataset(path_of("tback.csv"));
  CHECK((recovered.rows - original.rows).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("synth: determinism and the pure-sine closed form") {
  const std::string args =
      "synth -o %OUT% --n 40 --points 25 --harmonics 1 --family sine "
      "--target-rule deriv-energy --seed 99";
  std::string first = args, second = args;
  first.replace(first.find("%OUT%"), 5, path_of("sine_a.csv"));
  second.replace(second.find("%OUT%"), 5, path_of("sine_b.csv"));
  CHECK(run_cli(first).exit_code == 0);
  CHECK(run_cli(second).exit_code == 0);
  CHECK(read_file(path_of("sine_a.csv")) == read_file(path_of("sine_b.csv")));

  // x(t) = a sin(2 pi t): recover a from a sample and check the target is
  // 2 pi^2 a^2.
  const FunctionalDataset ds = load_dataset(path_of("sine_a.csv"));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::size_t l = 3;  // grid point away from the sine's zeros
    const double t = ds.grid[l];
    const double a = ds.rows(static_cast<Eigen::Index>(i),
                             static_cast<Eigen::Index>(l)) /
                     std::sin(2.0 * std::numbers::pi * t);
    CHECK(ds.targets[static_cast<Eigen::Index>(i)] ==
          doctest::Approx(2.0 * std::numbers::pi * std::numbers::pi * a * a)
              .epsilon(1e-9));
  }

  CHECK(run_cli("synth -o " + path_of("tiny.csv") + " --n 1").exit_code == 2);
}

TEST_CASE("noise: sd zero copies the data, fixed seeds reproduce") {
  CHECK(run_cli("synth -o " + path_of("nds.csv") + " --n 8 --points 10 --seed 3")
            .exit_code == 0);
  CHECK(run_cli("noise -i " + path_of("nds.csv") + " -o " + path_of("n0.csv") +
                " --sd 0")
            .exit_code == 0);
  CHECK(load_dataset(path_of("n0.csv")).rows ==
        load_dataset(path_of("nds.csv")).rows);

  CHECK(run_cli("noise -i " + path_of("nds.csv") + " -o " + path_of("n1.csv") +
                " --sd 0.2 --seed 4")
            .exit_code == 0);
  CHECK(run_cli("noise -i " + path_of("nds.csv") + " -o " + path_of("n2.csv") +
                " --sd 0.2 --seed 4")
            .exit_code == 0);
  CHECK(read_file(path_of("n1.csv")) == read_file(path_of("n2.csv")));
  CHECK(load_dataset(path_of("n1.csv")).rows !=
        load_dataset(path_of("nds.csv")).rows);
}

TEST_CASE("benchmark: config runs, overrides and validation") {
  CHECK(run_cli("synth -o " + path_of("bds.csv") +
                " --n 30 --points 15 --harmonics 2 --seed 12")
            .exit_code == 0);

  const std::string config = R"({
  "dataset": ")" + path_of("bds.csv") + R"(",
  "variants": ["O", "FD1"],
  "learner": "krr",
  "kernel": "gaussian",
  "delta_grid": [1e-4, 1e-2],
  "lambda_grid": [1e-6, 1e-3],
  "n_splits": 3,
  "train_size": 20,
  "test_size": 10,
  "seed": 9,
  "report": ")" + path_of("breport.json") + R"(",
  "summary": ")" + path_of("bsummary.csv") + R"("
})";
  write_file_atomic(path_of("bench.json"), config);

  const CommandResult run =
      run_cli("benchmark -c " + path_of("bench.json"));
  CHECK(run.exit_code == 0);
  // Ranking echoed on stdout.
  CHECK((run.out.find("O <") != std::string::npos ||
         run.out.find("O <=") != std::string::npos ||
         run.out.find("< O") != std::string::npos ||
         run.out.find("<= O") != std::string::npos));
  CHECK(fs::exists(path_of("breport.json")));
  CHECK(read_file(path_of("bsummary.csv")).find("method,data,metric") == 0);

  // Same seed: byte-identical report.
  const std::string once = read_file(path_of("breport.json"));
  CHECK(run_cli("benchmark -c " + path_of("bench.json")).exit_code == 0);
  CHECK(read_file(path_of("breport.json")) == once);

  // Seed override changes the report.
  CHECK(run_cli("benchmark -c " + path_of("bench.json") + " --seed 10 -o " +
                path_of("breport2.json"))
            .exit_code == 0);
  CHECK(read_file(path_of("breport2.json")) != once);

  // Broken config: all problems enumerated at once, nothing written.
  const std::string bad = R"({
  "dataset": ")" + path_of("bds.csv") + R"(",
  "variants": [],
  "learner": "boosting",
  "n_splits": 2,
  "train_size": 20,
  "test_size": 10,
  "typo_key": 1,
  "report": ")" + path_of("bad_report.json") + R"("
})";
  write_file_atomic(path_of("bad.json"), bad);
  const CommandResult broken = run_cli("benchmark -c " + path_of("bad.json"));
  CHECK(broken.exit_code == 2);
  CHECK(broken.err.find("variants: must not be empty") != std::string::npos);
  CHECK(broken.err.find("learner:") != std::string::npos);
  CHECK(broken.err.find("typo_key") != std::string::npos);
  CHECK_FALSE(fs::exists(path_of("bad_report.json")));
}

TEST_CASE("usage: unknown subcommands and missing arguments exit 2") {
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("smooth").exit_code == 2);
}
