#ifndef BUNDLING_DATA_H_
#define BUNDLING_DATA_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "bundling/model.h"

namespace bundling {

struct SynthOptions {
  // Class means sit at random corners of [-separation, separation]^d, in
  // units of the unit-variance per-class noise.
  double separation = 3.0;
};

// k Gaussian blobs in R^d, squashed into [0, 1] by one affine map of the
// sample range. Labels cycle 0, 1, ..., k-1 so classes are balanced and any
// contiguous slice stays balanced up to rounding.
Dataset SynthDataset(std::size_t n, std::size_t d, std::size_t k,
                     std::uint64_t seed, const SynthOptions& options = {});

// CSV: d feature columns then an integer label column; an optional header
// line is detected by a non-numeric first field. When num_classes is not
// given it is max(label) + 1 (at least 2). Throws kData on bad rows or
// features outside [0, 1].
Dataset ReadDatasetCsv(std::istream& in,
                       std::optional<std::size_t> num_classes = std::nullopt);
Dataset LoadDatasetCsv(const std::string& path,
                       std::optional<std::size_t> num_classes = std::nullopt);

void WriteDatasetCsv(std::ostream& out, const Dataset& dataset);
void SaveDatasetCsv(const std::string& path, const Dataset& dataset);

}  // namespace bundling

#endif  // BUNDLING_DATA_H_
