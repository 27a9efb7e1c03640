#include "bundling/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "bundling/error.h"
#include "bundling/format.h"

namespace bundling {

Dataset SynthDataset(std::size_t n, std::size_t d, std::size_t k,
                     std::uint64_t seed, const SynthOptions& options) {
  Require(k >= 2, "synthetic dataset needs k >= 2");
  Require(n >= k, "synthetic dataset needs n >= k");
  Require(d >= 1, "synthetic dataset needs d >= 1");
  Require(std::isfinite(options.separation) && options.separation > 0.0,
          "separation must be positive");

  Rng rng(seed);
  // Distinct corners whenever there are enough of them.
  const bool distinct = d < 63 && k <= (std::size_t{1} << d);
  std::vector<Vector> means;
  while (means.size() < k) {
    Vector mean(d);
    for (double& m : mean) {
      m = rng.Uniform() < 0.5 ? -options.separation : options.separation;
    }
    if (distinct && std::find(means.begin(), means.end(), mean) != means.end()) {
      continue;
    }
    means.push_back(std::move(mean));
  }

  std::vector<Vector> raw(n, Vector(d));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector& mean = means[i % k];
    for (std::size_t j = 0; j < d; ++j) {
      raw[i][j] = mean[j] + rng.Normal();
      lo = std::min(lo, raw[i][j]);
      hi = std::max(hi, raw[i][j]);
    }
  }

  const double span = hi - lo;
  std::vector<Example> examples(n);
  for (std::size_t i = 0; i < n; ++i) {
    examples[i].label = i % k;
    examples[i].features.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double v = span > 0.0 ? (raw[i][j] - lo) / span : 0.5;
      examples[i].features[j] = std::clamp(v, 0.0, 1.0);
    }
  }
  return Dataset(d, k, std::move(examples));
}

Dataset ReadDatasetCsv(std::istream& in,
                       std::optional<std::size_t> num_classes) {
  std::vector<Example> examples;
  std::size_t columns = 0;
  std::size_t max_label = 0;
  std::string line;
  std::size_t line_number = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string_view trimmed = Trim(line);
    if (trimmed.empty()) continue;
    const auto fields = Split(trimmed, ',');
    const std::string where = "line " + std::to_string(line_number);
    if (first_content_line) {
      first_content_line = false;
      double probe = 0.0;
      if (!ParseDouble(fields.front(), &probe)) continue;  // header
    }
    if (fields.size() < 2) {
      Fail(ErrorKind::kData, where + ": need at least one feature and a label");
    }
    if (columns == 0) columns = fields.size();
    if (fields.size() != columns) {
      Fail(ErrorKind::kData, where + ": expected " + std::to_string(columns) +
                                 " columns, found " +
                                 std::to_string(fields.size()));
    }
    Example ex;
    ex.features.resize(columns - 1);
    for (std::size_t j = 0; j + 1 < columns; ++j) {
      if (!ParseDouble(fields[j], &ex.features[j])) {
        Fail(ErrorKind::kData, where + ": bad feature value '" +
                                   std::string(Trim(fields[j])) + "'");
      }
      if (ex.features[j] < 0.0 || ex.features[j] > 1.0) {
        Fail(ErrorKind::kData, where + ": feature " + std::to_string(j) +
                                   " outside [0, 1]");
      }
    }
    if (!ParseSize(fields.back(), &ex.label)) {
      Fail(ErrorKind::kData, where + ": bad label '" +
                                 std::string(Trim(fields.back())) + "'");
    }
    max_label = std::max(max_label, ex.label);
    examples.push_back(std::move(ex));
  }
  if (examples.empty()) Fail(ErrorKind::kData, "dataset has no rows");
  const std::size_t k = num_classes.value_or(std::max<std::size_t>(2, max_label + 1));
  return Dataset(columns - 1, k, std::move(examples));
}

Dataset LoadDatasetCsv(const std::string& path,
                       std::optional<std::size_t> num_classes) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kData, "cannot open dataset '" + path + "'");
  return ReadDatasetCsv(in, num_classes);
}

void WriteDatasetCsv(std::ostream& out, const Dataset& dataset) {
  for (std::size_t j = 0; j < dataset.dimension(); ++j) out << 'x' << j << ',';
  out << "label\n";
  for (const Example& ex : dataset.examples()) {
    for (double v : ex.features) out << FormatDouble(v) << ',';
    out << ex.label << '\n';
  }
}

void SaveDatasetCsv(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kIo, "cannot write '" + path + "'");
  WriteDatasetCsv(out, dataset);
  if (!out) Fail(ErrorKind::kIo, "write to '" + path + "' failed");
}

}  // namespace bundling
