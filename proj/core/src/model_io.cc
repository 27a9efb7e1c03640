#include "bundling/model_io.h"

#include <fstream>
#include <istream>
#include <ostream>

#include "bundling/error.h"
#include "bundling/format.h"

namespace bundling {
namespace {

constexpr char kMagic[] = "attack-bundling-model";

void WriteBlock(std::ostream& out, const char* name, const Vector& values) {
  out << name << ' ' << values.size() << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << ' ';
    out << FormatDouble(values[i]);
  }
  out << '\n';
}

std::string NextToken(std::istream& in, const char* what) {
  std::string token;
  if (!(in >> token)) {
    Fail(ErrorKind::kParse, std::string("model file truncated before ") + what);
  }
  return token;
}

void ExpectKey(std::istream& in, const char* key) {
  const std::string token = NextToken(in, key);
  if (token != key) {
    Fail(ErrorKind::kParse, std::string("model file: expected '") + key +
                                "', found '" + token + "'");
  }
}

std::size_t ReadSizeField(std::istream& in, const char* key) {
  ExpectKey(in, key);
  std::size_t value = 0;
  const std::string token = NextToken(in, key);
  if (!ParseSize(token, &value)) {
    Fail(ErrorKind::kParse, std::string("model file: bad value for ") + key);
  }
  return value;
}

Vector ReadBlock(std::istream& in, const char* key, std::size_t expected) {
  const std::size_t count = ReadSizeField(in, key);
  if (count != expected) {
    Fail(ErrorKind::kParse, std::string("model file: ") + key + " has " +
                                std::to_string(count) + " values, expected " +
                                std::to_string(expected));
  }
  Vector values(count);
  for (double& v : values) {
    const std::string token = NextToken(in, key);
    if (!ParseDouble(token, &v)) {
      Fail(ErrorKind::kParse, std::string("model file: bad number in ") + key);
    }
  }
  return values;
}

}  // namespace

void WriteModel(std::ostream& out, const ModelParams& params) {
  params.Validate();
  out << kMagic << " 1\n";
  out << "architecture " << ArchitectureName(params.architecture) << '\n';
  out << "input_dim " << params.input_dim << '\n';
  out << "num_classes " << params.num_classes << '\n';
  out << "hidden " << params.hidden << '\n';
  WriteBlock(out, "hidden_weights", params.hidden_weights);
  WriteBlock(out, "hidden_bias", params.hidden_bias);
  WriteBlock(out, "output_weights", params.output_weights);
  WriteBlock(out, "output_bias", params.output_bias);
}

ModelParams ReadModel(std::istream& in) {
  ExpectKey(in, kMagic);
  if (NextToken(in, "version") != "1") {
    Fail(ErrorKind::kParse, "model file: unsupported version");
  }
  ExpectKey(in, "architecture");
  ModelParams params;
  params.architecture = ParseArchitecture(NextToken(in, "architecture"));
  params.input_dim = ReadSizeField(in, "input_dim");
  params.num_classes = ReadSizeField(in, "num_classes");
  params.hidden = ReadSizeField(in, "hidden");
  const std::size_t width = params.feature_width();
  params.hidden_weights =
      ReadBlock(in, "hidden_weights", params.hidden * params.input_dim);
  params.hidden_bias = ReadBlock(in, "hidden_bias", params.hidden);
  params.output_weights =
      ReadBlock(in, "output_weights", params.num_classes * width);
  params.output_bias = ReadBlock(in, "output_bias", params.num_classes);
  try {
    params.Validate();
  } catch (const Error& e) {
    Fail(ErrorKind::kParse, std::string("model file: ") + e.what());
  }
  return params;
}

void SaveModel(const std::string& path, const ModelParams& params) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kIo, "cannot write '" + path + "'");
  WriteModel(out, params);
  if (!out) Fail(ErrorKind::kIo, "write to '" + path + "' failed");
}

ModelParams LoadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open model '" + path + "'");
  return ReadModel(in);
}

}  // namespace bundling
