#include "splinemetric/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "splinemetric/error.hpp"
#include "splinemetric/io.hpp"
#include "splinemetric/rng.hpp"

namespace splinemetric {

namespace {

bool parse_double(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
  if (first == last) return false;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

SamplingGrid::SamplingGrid(std::vector<double> points)
    : points_(std::move(points)) {
  if (points_.empty()) throw GridError("sampling grid is empty");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double t = points_[i];
    if (!std::isfinite(t)) throw GridError("sampling grid has a non-finite point");
    if (t < 0.0 || t > 1.0) {
      throw GridError("sampling point " + format_double(t) +
                      " outside [0, 1]; rescale the abscissae first");
    }
    if (i > 0 && points_[i] <= points_[i - 1]) {
      throw GridError(
          points_[i] == points_[i - 1]
              ? "duplicate sampling point " + format_double(t)
              : "sampling points must be strictly increasing");
    }
  }
}

SamplingGrid SamplingGrid::uniform(std::size_t count, bool include_zero) {
  if (count == 0) throw GridError("sampling grid is empty");
  std::vector<double> pts(count);
  if (include_zero) {
    if (count == 1) {
      pts[0] = 0.0;
    } else {
      for (std::size_t l = 0; l < count; ++l)
        pts[l] = static_cast<double>(l) / static_cast<double>(count - 1);
    }
  } else {
    for (std::size_t l = 0; l < count; ++l)
      pts[l] = static_cast<double>(l + 1) / static_cast<double>(count);
  }
  return SamplingGrid(std::move(pts));
}

SamplingGrid SamplingGrid::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open grid file: " + path);
  std::vector<double> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    double v = 0.0;
    if (!parse_double(line, v)) {
      throw ParseError(path + ": line " + std::to_string(line_no) +
                       ": not a number: '" + line + "'");
    }
    pts.push_back(v);
  }
  return SamplingGrid(std::move(pts));
}

SamplingGrid SamplingGrid::rescaled() const {
  const double lo = points_.front();
  const double hi = points_.back();
  if (points_.size() < 2 || hi <= lo) {
    throw GridError("rescaling needs at least two distinct points");
  }
  std::vector<double> pts(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    pts[i] = (points_[i] - lo) / (hi - lo);
  }
  pts.front() = 0.0;
  pts.back() = 1.0;
  return SamplingGrid(std::move(pts));
}

MeshStats mesh_stats(const SamplingGrid& grid) {
  if (grid.size() < 2) {
    throw GridError("mesh statistics need at least two points");
  }
  const auto& t = grid.points();
  double max_gap = std::max(t.front(), 1.0 - t.back());
  double min_gap = t[1] - t[0];
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double gap = t[i] - t[i - 1];
    max_gap = std::max(max_gap, gap);
    min_gap = std::min(min_gap, gap);
  }
  return MeshStats{max_gap, min_gap, max_gap / min_gap};
}

SampledFunction::SampledFunction(SamplingGrid g, Eigen::VectorXd v)
    : grid(std::move(g)), values(std::move(v)) {
  if (static_cast<std::size_t>(values.size()) != grid.size()) {
    throw DimensionError("sampled values do not match the grid length");
  }
  if (!values.allFinite()) {
    throw DataError("sampled values contain a non-finite entry");
  }
}

FunctionalDataset FunctionalDataset::create(SamplingGrid grid,
                                            Eigen::MatrixXd rows,
                                            Eigen::VectorXd targets, Task task,
                                            bool has_target) {
  if (static_cast<std::size_t>(rows.cols()) != grid.size()) {
    throw DimensionError("row arity does not match the grid length");
  }
  if (rows.rows() < 2) {
    throw DataError("a dataset needs at least two functions, got " +
                    std::to_string(rows.rows()));
  }
  if (targets.size() != rows.rows()) {
    throw DimensionError("target vector length does not match the row count");
  }
  if (!rows.allFinite() || !targets.allFinite()) {
    throw DataError("dataset contains a non-finite value");
  }
  if (task == Task::kClassification && has_target) {
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
      if (targets[i] != -1.0 && targets[i] != 1.0) {
        throw DataError("classification target at row " + std::to_string(i) +
                        " is not in {-1, +1}");
      }
    }
  }
  return FunctionalDataset{std::move(grid), std::move(rows),
                           std::move(targets), task, has_target};
}

SampledFunction FunctionalDataset::function(std::size_t i) const {
  return SampledFunction(grid, rows.row(static_cast<Eigen::Index>(i)));
}

namespace {

struct TargetSelector {
  bool none = false;
  bool last = false;
  std::optional<std::size_t> index;
  std::optional<std::string> name;
};

TargetSelector parse_target_spec(const std::string& spec) {
  TargetSelector sel;
  if (spec == "none") {
    sel.none = true;
  } else if (spec == "last") {
    sel.last = true;
  } else if (!spec.empty() && spec.front() == '#') {
    double idx = 0.0;
    if (!parse_double(std::string_view(spec).substr(1), idx) || idx < 0 ||
        idx != std::floor(idx)) {
      throw ArgumentError("bad target column index: " + spec);
    }
    sel.index = static_cast<std::size_t>(idx);
  } else {
    sel.name = spec;
  }
  return sel;
}

}  // namespace

FunctionalDataset load_dataset(const std::string& path,
                               const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);

  const TargetSelector selector = parse_target_spec(options.target_column);

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<std::vector<double>> data;
  std::size_t arity = 0;
  std::size_t first_data_line = 0;

  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_double(fields[i], row[i])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (data.empty() && header.empty()) {
        header = std::move(fields);
        continue;
      }
      throw ParseError(path + ": line " + std::to_string(line_no) +
                       ": non-numeric field");
    }
    if (data.empty()) {
      arity = row.size();
      first_data_line = line_no;
    } else if (row.size() != arity) {
      throw ParseError(path + ": line " + std::to_string(line_no) +
                       ": expected " + std::to_string(arity) +
                       " fields, got " + std::to_string(row.size()));
    }
    data.push_back(std::move(row));
  }
  if (data.empty()) throw ParseError(path + ": no data rows");
  if (!header.empty() && header.size() != arity) {
    throw ParseError(path + ": header has " + std::to_string(header.size()) +
                     " fields but data rows (from line " +
                     std::to_string(first_data_line) + ") have " +
                     std::to_string(arity));
  }

  // Resolve the target column.
  std::optional<std::size_t> target_col;
  if (selector.last) {
    target_col = arity - 1;
  } else if (selector.index) {
    if (*selector.index >= arity) {
      throw ArgumentError("target column index " +
                          std::to_string(*selector.index) + " out of range");
    }
    target_col = *selector.index;
  } else if (selector.name) {
    if (header.empty()) {
      throw ArgumentError("target column by name needs a header row");
    }
    auto it = std::find(header.begin(), header.end(), *selector.name);
    if (it == header.end()) {
      throw ArgumentError("target column '" + *selector.name +
                          "' not found in header");
    }
    target_col = static_cast<std::size_t>(it - header.begin());
  }

  const bool has_target = target_col.has_value();
  const std::size_t channels = arity - (has_target ? 1 : 0);
  if (channels == 0) throw ParseError(path + ": no channel columns");

  // Channel abscissae: explicit grid file, else numeric header names, else
  // uniform over [0, 1].
  std::vector<double> abscissae;
  if (options.grid_file) {
    abscissae = SamplingGrid::from_file(*options.grid_file).points();
    if (abscissae.size() != channels) {
      throw DimensionError("grid file has " +
                           std::to_string(abscissae.size()) +
                           " points but the dataset has " +
                           std::to_string(channels) + " channels");
    }
  } else if (!header.empty()) {
    abscissae.reserve(channels);
    bool all_numeric = true;
    for (std::size_t i = 0; i < arity; ++i) {
      if (has_target && i == *target_col) continue;
      double v = 0.0;
      if (!parse_double(header[i], v)) {
        all_numeric = false;
        break;
      }
      abscissae.push_back(v);
    }
    if (!all_numeric) abscissae.clear();
  }

  SamplingGrid grid =
      abscissae.empty()
          ? SamplingGrid::uniform(channels)
          : [&] {
              // Validate ordering/distinctness on the raw wavelengths before
              // any rescale, so the error names the offending value.
              std::vector<double> raw = abscissae;
              for (std::size_t i = 1; i < raw.size(); ++i) {
                if (raw[i] == raw[i - 1]) {
                  throw GridError("duplicate abscissa " +
                                  format_double(raw[i]) + " in " + path);
                }
                if (raw[i] < raw[i - 1]) {
                  throw GridError("abscissae not increasing in " + path);
                }
              }
              const double lo = raw.front();
              const double hi = raw.back();
              if (options.rescale && (lo != 0.0 || hi != 1.0)) {
                for (double& t : raw) t = (t - lo) / (hi - lo);
                raw.front() = 0.0;
                raw.back() = 1.0;
              }
              return SamplingGrid(std::move(raw));
            }();

  const std::size_t n = data.size();
  Eigen::MatrixXd rows(n, channels);
  Eigen::VectorXd targets = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < arity; ++i) {
      if (has_target && i == *target_col) {
        targets[static_cast<Eigen::Index>(r)] = data[r][i];
      } else {
        rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c++)) =
            data[r][i];
      }
    }
  }
  return FunctionalDataset::create(std::move(grid), std::move(rows),
                                   std::move(targets), options.task,
                                   has_target);
}

std::string dataset_to_csv(const FunctionalDataset& ds) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ds.grid.size(); ++i) {
    if (i) out << ',';
    out << format_double(ds.grid[i]);
  }
  if (ds.has_target) out << ",target";
  out << '\n';
  for (Eigen::Index r = 0; r < ds.rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.rows.cols(); ++c) {
      if (c) out << ',';
      out << format_double(ds.rows(r, c));
    }
    if (ds.has_target) out << ',' << format_double(ds.targets[r]);
    out << '\n';
  }
  return out.str();
}

void save_dataset(const FunctionalDataset& ds, const std::string& path) {
  write_file_atomic(path, dataset_to_csv(ds));
}

FunctionalDataset add_noise(const FunctionalDataset& ds, double sd,
                            std::uint64_t seed) {
  if (sd < 0.0 || !std::isfinite(sd)) {
    throw ArgumentError("noise standard deviation must be >= 0");
  }
  FunctionalDataset out = ds;
  if (sd == 0.0) return out;
  Rng rng(seed);
  for (Eigen::Index r = 0; r < out.rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.rows.cols(); ++c) {
      out.rows(r, c) += sd * rng.gaussian();
    }
  }
  return out;
}

double TrigPoly::value(double t) const {
  double v = 0.0;
  for (std::size_t j = 0; j < sin_coeffs.size(); ++j) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(j + 1) * t;
    v += sin_coeffs[j] * std::sin(w) + cos_coeffs[j] * std::cos(w);
  }
  return v;
}

double TrigPoly::derivative(double t) const {
  double v = 0.0;
  for (std::size_t j = 0; j < sin_coeffs.size(); ++j) {
    const double omega = 2.0 * std::numbers::pi * static_cast<double>(j + 1);
    v += omega * (sin_coeffs[j] * std::cos(omega * t) -
                  cos_coeffs[j] * std::sin(omega * t));
  }
  return v;
}

double TrigPoly::derivative_energy() const {
  // Cross terms integrate to zero over [0, 1]; sin^2 and cos^2 average 1/2.
  double e = 0.0;
  for (std::size_t j = 0; j < sin_coeffs.size(); ++j) {
    const double jj = static_cast<double>(j + 1);
    e += jj * jj *
         (sin_coeffs[j] * sin_coeffs[j] + cos_coeffs[j] * cos_coeffs[j]);
  }
  return 2.0 * std::numbers::pi * std::numbers::pi * e;
}

std::vector<TrigPoly> synth_functions(std::size_t n, int harmonics,
                                      std::uint64_t seed, bool pure_sine) {
  if (harmonics < 1) throw ArgumentError("harmonics must be >= 1");
  std::vector<TrigPoly> fns(n);
  Rng rng(seed);
  for (auto& f : fns) {
    f.sin_coeffs.resize(static_cast<std::size_t>(harmonics));
    f.cos_coeffs.resize(static_cast<std::size_t>(harmonics));
    for (int j = 1; j <= harmonics; ++j) {
      const double scale = 1.0 / static_cast<double>(j);
      f.sin_coeffs[static_cast<std::size_t>(j - 1)] = scale * rng.gaussian();
      f.cos_coeffs[static_cast<std::size_t>(j - 1)] =
          pure_sine ? 0.0 : scale * rng.gaussian();
    }
  }
  return fns;
}

FunctionalDataset synthesize(const SynthSpec& spec) {
  if (spec.n < 2) {
    throw ArgumentError("synthetic dataset needs n >= 2, got " +
                        std::to_string(spec.n));
  }
  const auto fns =
      synth_functions(spec.n, spec.harmonics, subseed(spec.seed, 0),
                      spec.pure_sine);
  const auto p = static_cast<Eigen::Index>(spec.grid.size());
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(spec.n), p);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (Eigen::Index l = 0; l < p; ++l) {
      rows(static_cast<Eigen::Index>(i), l) =
          fns[i].value(spec.grid[static_cast<std::size_t>(l)]);
    }
  }
  if (spec.noise_sd > 0.0) {
    Rng rng(subseed(spec.seed, 1));
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      for (Eigen::Index c = 0; c < rows.cols(); ++c) {
        rows(r, c) += spec.noise_sd * rng.gaussian();
      }
    }
  } else if (spec.noise_sd < 0.0) {
    throw ArgumentError("noise standard deviation must be >= 0");
  }

  Eigen::VectorXd targets(static_cast<Eigen::Index>(spec.n));
  Task task = Task::kRegression;
  switch (spec.rule) {
    case TargetRule::kMean:
      targets = rows.rowwise().mean();
      break;
    case TargetRule::kDerivEnergy:
      for (std::size_t i = 0; i < spec.n; ++i) {
        targets[static_cast<Eigen::Index>(i)] = fns[i].derivative_energy();
      }
      break;
    case TargetRule::kSignDerivEnergy: {
      std::vector<double> energies(spec.n);
      for (std::size_t i = 0; i < spec.n; ++i) {
        energies[i] = fns[i].derivative_energy();
      }
      std::vector<double> sorted = energies;
      std::sort(sorted.begin(), sorted.end());
      const double median = sorted.size() % 2 == 1
                                ? sorted[sorted.size() / 2]
                                : 0.5 * (sorted[sorted.size() / 2 - 1] +
                                         sorted[sorted.size() / 2]);
      for (std::size_t i = 0; i < spec.n; ++i) {
        targets[static_cast<Eigen::Index>(i)] =
            energies[i] < median ? -1.0 : 1.0;
      }
      task = Task::kClassification;
      break;
    }
  }
  return FunctionalDataset::create(spec.grid, std::move(rows),
                                   std::move(targets), task);
}

FunctionalDataset derive_classification(const FunctionalDataset& ds,
                                        double threshold) {
  if (!ds.has_target) throw DataError("dataset has no targets to threshold");
  Eigen::VectorXd labels(ds.targets.size());
  for (Eigen::Index i = 0; i < ds.targets.size(); ++i) {
    labels[i] = ds.targets[i] < threshold ? -1.0 : 1.0;
  }
  return FunctionalDataset::create(ds.grid, ds.rows, std::move(labels),
                                   Task::kClassification);
}

}  // namespace splinemetric
