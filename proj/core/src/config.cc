#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "bundling/error.h"
#include "bundling/experiment.h"
#include "bundling/format.h"

namespace bundling {
namespace {

class ConfigParser {
 public:
  ConfigParser(std::istream& in, std::string source)
      : in_(in), source_(std::move(source)) {}

  ExperimentConfig Parse() {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_;
      std::string_view text = raw;
      if (const auto hash = text.find('#'); hash != std::string_view::npos) {
        text = text.substr(0, hash);
      }
      text = Trim(text);
      if (text.empty()) continue;
      if (text.front() == '[') {
        OpenSection(text);
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string_view::npos) Error("expected 'key = value'");
      key_ = std::string(Trim(text.substr(0, eq)));
      value_ = std::string(Trim(text.substr(eq + 1)));
      if (key_.empty()) Error("empty key");
      if (!seen_keys_.insert(section_ + "/" + key_).second) {
        FieldError("duplicate key");
      }
      Assign();
    }
    return config_;
  }

 private:
  [[noreturn]] void Error(const std::string& message) const {
    Fail(ErrorKind::kParse,
         source_ + ":" + std::to_string(line_) + ": " + message);
  }

  [[noreturn]] void FieldError(const std::string& message) const {
    Error("field '" + key_ + "': " + message);
  }

  void OpenSection(std::string_view text) {
    if (text.back() != ']') Error("unterminated section header");
    const std::string_view inner = Trim(text.substr(1, text.size() - 2));
    if (inner.rfind("attack", 0) == 0 && inner.size() > 6 &&
        (inner[6] == ' ' || inner[6] == '\t')) {
      const std::string id(Trim(inner.substr(6)));
      if (id.empty()) Error("attack section needs an id");
      for (const AttackConfig& a : config_.attacks) {
        if (a.attack_id == id) Error("duplicate attack id '" + id + "'");
      }
      AttackConfig attack;
      attack.attack_id = id;
      config_.attacks.push_back(attack);
      section_ = "attack " + id;
      return;
    }
    static const std::set<std::string_view> kSections = {
        "experiment", "data", "model", "criterion", "budget", "report"};
    if (!kSections.contains(inner)) {
      Error("unknown section '" + std::string(inner) + "'");
    }
    section_ = std::string(inner);
  }

  double Double() const {
    double v = 0.0;
    if (!ParseDouble(value_, &v)) FieldError("expected a number, got '" + value_ + "'");
    return v;
  }

  std::size_t Size() const {
    std::size_t v = 0;
    if (!ParseSize(value_, &v)) {
      FieldError("expected a non-negative integer, got '" + value_ + "'");
    }
    return v;
  }

  std::uint64_t Uint64() const {
    unsigned long long v = 0;
    if (!ParseUint64(value_, &v)) {
      FieldError("expected a non-negative integer, got '" + value_ + "'");
    }
    return static_cast<std::uint64_t>(v);
  }

  bool Bool() const {
    if (value_ == "true") return true;
    if (value_ == "false") return false;
    FieldError("expected true or false, got '" + value_ + "'");
  }

  // "a, b, c" or "first:last:count".
  std::vector<double> DoubleList() const {
    std::vector<double> values;
    if (value_.empty()) return values;
    if (value_.find(':') != std::string::npos) {
      const auto parts = Split(value_, ':');
      double first = 0.0;
      double last = 0.0;
      std::size_t count = 0;
      if (parts.size() != 3 || !ParseDouble(parts[0], &first) ||
          !ParseDouble(parts[1], &last) || !ParseSize(parts[2], &count)) {
        FieldError("expected first:last:count");
      }
      return LinearGrid(first, last, count);
    }
    for (std::string_view part : Split(value_, ',')) {
      double v = 0.0;
      if (!ParseDouble(part, &v)) FieldError("bad number '" + std::string(Trim(part)) + "'");
      values.push_back(v);
    }
    return values;
  }

  std::vector<std::size_t> SizeList() const {
    std::vector<std::size_t> values;
    if (value_.empty()) return values;
    for (std::string_view part : Split(value_, ',')) {
      std::size_t v = 0;
      if (!ParseSize(part, &v)) FieldError("bad integer '" + std::string(Trim(part)) + "'");
      values.push_back(v);
    }
    return values;
  }

  template <typename Fn>
  auto Wrap(Fn&& fn) const {
    try {
      return fn();
    } catch (const bundling::Error& e) {
      FieldError(e.what());
    }
  }

  void Assign() {
    if (section_.empty()) Error("key outside of a section");
    if (section_.rfind("attack ", 0) == 0) return AssignAttack(config_.attacks.back());
    ExperimentConfig& c = config_;
    if (section_ == "experiment") {
      if (key_ == "seed") return void(c.seed = Uint64());
      if (key_ == "output_dir") return void(c.output_dir = value_);
      if (key_ == "workers") return void(c.workers = Size());
    } else if (section_ == "data") {
      DataSource& d = c.data;
      if (key_ == "source") {
        if (value_ == "synthetic") return void(d.kind = DataSourceKind::kSynthetic);
        if (value_ == "csv") return void(d.kind = DataSourceKind::kCsv);
        FieldError("expected synthetic or csv");
      }
      if (key_ == "n") return void(d.n = Size());
      if (key_ == "d") return void(d.d = Size());
      if (key_ == "k") return void(d.k = Size());
      if (key_ == "seed") return void(d.seed = Uint64());
      if (key_ == "separation") return void(d.separation = Double());
      if (key_ == "path") return void(d.path = value_);
      if (key_ == "eval_path") return void(d.eval_path = value_);
      if (key_ == "eval") return void(d.eval = Size());
    } else if (section_ == "model") {
      if (key_ == "architecture") {
        return void(c.architecture = Wrap([&] { return ParseArchitecture(value_); }));
      }
      if (key_ == "hidden") return void(c.train.hidden = Size());
      if (key_ == "learning_rate") return void(c.train.learning_rate = Double());
      if (key_ == "epochs") return void(c.train.epochs = Size());
      if (key_ == "batch_size") return void(c.train.batch_size = Size());
      if (key_ == "seed") return void(c.train.seed = Uint64());
      if (key_ == "weight_decay") return void(c.train.weight_decay = Double());
      if (key_ == "load") return void(c.model_path = value_);
    } else if (section_ == "criterion") {
      if (key_ == "kind") {
        return void(c.criterion.kind = Wrap([&] { return ParseCriterionKind(value_); }));
      }
      if (key_ == "threshold") return void(c.criterion.threshold = Double());
    } else if (section_ == "budget") {
      if (key_ == "max_units") {
        if (value_ == "unlimited") {
          return void(c.budget.max_attack_units_per_example =
                          BudgetPolicy{}.max_attack_units_per_example);
        }
        return void(c.budget.max_attack_units_per_example = Size());
      }
      if (key_ == "early_stop") return void(c.budget.early_stop = Bool());
    } else if (section_ == "report") {
      if (key_ == "thresholds") return void(c.thresholds = DoubleList());
      if (key_ == "epsilons") return void(c.epsilons = DoubleList());
      if (key_ == "gap_n") return void(c.gap_n = SizeList());
      if (key_ == "dump_candidates") return void(c.dump_candidates = Bool());
    }
    FieldError("unknown key in [" + section_ + "]");
  }

  void AssignAttack(AttackConfig& a) {
    if (key_ == "variant") {
      return void(a.variant = Wrap([&] { return ParseAttackVariant(value_); }));
    }
    if (key_ == "epsilon") return void(a.epsilon = Double());
    if (key_ == "step_size") return void(a.step_size = Double());
    if (key_ == "num_steps") return void(a.num_steps = Size());
    if (key_ == "num_restarts") return void(a.num_restarts = Size());
    if (key_ == "random_init") return void(a.random_init = Bool());
    if (key_ == "num_samples") return void(a.num_samples = Size());
    if (key_ == "seed_stream") return void(a.seed_stream = Uint64());
    if (key_ == "first_restart") return void(a.first_restart = Size());
    FieldError("unknown key in [" + section_ + "]");
  }

  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
  std::string section_;
  std::string key_;
  std::string value_;
  std::set<std::string> seen_keys_;
  ExperimentConfig config_;
};

std::string JoinDoubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    out += FormatDouble(values[i]);
  }
  return out;
}

}  // namespace

void ExperimentConfig::Validate() const {
  auto check = [](bool ok, const std::string& field, const std::string& what) {
    if (!ok) Fail(ErrorKind::kContract, "config field '" + field + "': " + what);
  };
  check(workers >= 1, "experiment.workers", "must be at least 1");
  check(!output_dir.empty(), "experiment.output_dir", "must not be empty");
  if (data.kind == DataSourceKind::kSynthetic) {
    check(data.k >= 2, "data.k", "must be at least 2");
    check(data.n >= data.k, "data.n", "must be at least k");
    check(data.d >= 1, "data.d", "must be at least 1");
    check(std::isfinite(data.separation) && data.separation > 0.0,
          "data.separation", "must be positive");
    check(data.eval >= 1 && data.eval < data.n, "data.eval",
          "must be in [1, n) so both splits are non-empty");
  } else {
    check(!data.path.empty(), "data.path", "required for csv data");
  }
  try {
    train.Validate();
  } catch (const bundling::Error& e) {
    check(false, "model", e.what());
  }
  check(architecture != Architecture::kMlp1 || train.hidden >= 1, "model.hidden",
        "must be positive for mlp1");
  check(criterion.kind != CriterionKind::kMaxConfidence ||
            (criterion.threshold >= 0.5 && criterion.threshold < 1.0),
        "criterion.threshold", "must lie in [0.5, 1)");
  for (double t : thresholds) {
    check(t >= 0.5 && t < 1.0, "report.thresholds", "values must lie in [0.5, 1)");
  }
  check(std::is_sorted(thresholds.begin(), thresholds.end()), "report.thresholds",
        "must be ascending");
  for (double e : epsilons) check(e >= 0.0, "report.epsilons", "must be non-negative");
  check(std::is_sorted(epsilons.begin(), epsilons.end()), "report.epsilons",
        "must be ascending");
  for (std::size_t n : gap_n) check(n >= 1, "report.gap_n", "values must be >= 1");

  std::set<std::string> ids;
  for (const AttackConfig& a : attacks) {
    const std::string field = "attack " + a.attack_id;
    check(a.attack_id != "none" && a.attack_id != "max" && a.attack_id != "bundled",
          field, "id is reserved");
    check(a.attack_id.find(',') == std::string::npos, field, "id must not contain ','");
    check(ids.insert(a.attack_id).second, field, "duplicate id");
    try {
      a.Validate();
    } catch (const bundling::Error& e) {
      check(false, field, e.what());
    }
  }
}

ExperimentConfig ParseConfig(std::istream& in, const std::string& source) {
  ExperimentConfig config = ConfigParser(in, source).Parse();
  try {
    config.Validate();
  } catch (const bundling::Error& e) {
    Fail(ErrorKind::kParse, source + ": " + e.what());
  }
  return config;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kParse, "cannot open config '" + path + "'");
  return ParseConfig(in, path);
}

std::string SerializeConfig(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[experiment]\n"
      << "seed = " << c.seed << '\n'
      << "output_dir = " << c.output_dir << '\n'
      << "workers = " << c.workers << '\n';

  const DataSource& d = c.data;
  out << "\n[data]\n";
  out << "source = " << (d.kind == DataSourceKind::kCsv ? "csv" : "synthetic") << '\n';
  out << "n = " << d.n << '\n'
      << "d = " << d.d << '\n'
      << "k = " << d.k << '\n'
      << "seed = " << d.seed << '\n'
      << "separation = " << FormatDouble(d.separation) << '\n';
  if (!d.path.empty()) out << "path = " << d.path << '\n';
  if (!d.eval_path.empty()) out << "eval_path = " << d.eval_path << '\n';
  out << "eval = " << d.eval << '\n';

  out << "\n[model]\n"
      << "architecture = " << ArchitectureName(c.architecture) << '\n'
      << "hidden = " << c.train.hidden << '\n'
      << "learning_rate = " << FormatDouble(c.train.learning_rate) << '\n'
      << "epochs = " << c.train.epochs << '\n'
      << "batch_size = " << c.train.batch_size << '\n'
      << "seed = " << c.train.seed << '\n'
      << "weight_decay = " << FormatDouble(c.train.weight_decay) << '\n';
  if (!c.model_path.empty()) out << "load = " << c.model_path << '\n';

  out << "\n[criterion]\n"
      << "kind = " << CriterionKindName(c.criterion.kind) << '\n'
      << "threshold = " << FormatDouble(c.criterion.threshold) << '\n';

  out << "\n[budget]\n";
  if (c.budget.max_attack_units_per_example ==
      BudgetPolicy{}.max_attack_units_per_example) {
    out << "max_units = unlimited\n";
  } else {
    out << "max_units = " << c.budget.max_attack_units_per_example << '\n';
  }
  out << "early_stop = " << (c.budget.early_stop ? "true" : "false") << '\n';

  out << "\n[report]\n"
      << "thresholds = " << JoinDoubles(c.thresholds) << '\n'
      << "epsilons = " << JoinDoubles(c.epsilons) << '\n'
      << "gap_n = ";
  for (std::size_t i = 0; i < c.gap_n.size(); ++i) {
    out << (i > 0 ? ", " : "") << c.gap_n[i];
  }
  out << '\n' << "dump_candidates = " << (c.dump_candidates ? "true" : "false") << '\n';

  for (const AttackConfig& a : c.attacks) {
    out << "\n[attack " << a.attack_id << "]\n"
        << "variant = " << AttackVariantName(a.variant) << '\n'
        << "epsilon = " << FormatDouble(a.epsilon) << '\n'
        << "step_size = " << FormatDouble(a.step_size) << '\n'
        << "num_steps = " << a.num_steps << '\n'
        << "num_restarts = " << a.num_restarts << '\n'
        << "random_init = " << (a.random_init ? "true" : "false") << '\n'
        << "num_samples = " << a.num_samples << '\n';
    if (a.seed_stream) out << "seed_stream = " << *a.seed_stream << '\n';
    out << "first_restart = " << a.first_restart << '\n';
  }
  return out.str();
}

}  // namespace bundling
