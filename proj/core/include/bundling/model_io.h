#ifndef BUNDLING_MODEL_IO_H_
#define BUNDLING_MODEL_IO_H_

#include <iosfwd>
#include <string>

#include "bundling/model.h"

namespace bundling {

// Flat text format:
//
//   attack-bundling-model 1
//   architecture <softmax-linear|mlp1>
//   input_dim <d>
//   num_classes <k>
//   hidden <h>
//   <block> <count>
//   <count values, row-major, one line>
//
// for blocks hidden_weights, hidden_bias, output_weights, output_bias.
// Values use shortest round-trip formatting, so Load(Save(p)) == p exactly.
void WriteModel(std::ostream& out, const ModelParams& params);
ModelParams ReadModel(std::istream& in);

void SaveModel(const std::string& path, const ModelParams& params);
ModelParams LoadModel(const std::string& path);

}  // namespace bundling

#endif  // BUNDLING_MODEL_IO_H_
