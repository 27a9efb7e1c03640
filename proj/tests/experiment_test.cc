#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bundling/error.h"
#include "bundling/experiment.h"
#include "bundling/model_io.h"

namespace bundling {
namespace {

namespace fs = std::filesystem;

constexpr const char* kSmallConfig = R"(# small experiment
[experiment]
seed = 99
output_dir = unused
workers = 2

[data]
source = synthetic
n = 240
d = 5
k = 3
seed = 4
separation = 5
eval = 60

[model]
architecture = mlp1
hidden = 8
epochs = 5
seed = 2

[criterion]
kind = misclassify

[budget]
early_stop = false

[report]
thresholds = 0.5:0.9:5
epsilons = 0, 0.1, 0.2, 0.3
gap_n = 1, 2, 10
dump_candidates = true

[attack pgd]
variant = pgd
num_steps = 10
num_restarts = 2

[attack noise]
variant = uniform_noise
num_samples = 20
)";

ExperimentConfig Parse(const std::string& text) {
  std::istringstream in(text);
  return ParseConfig(in, "test.cfg");
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::current_path() / "experiment_test_out" / name;
  fs::remove_all(dir);
  return dir;
}

std::string ParseErrorMessage(const std::string& text) {
  try {
    Parse(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    return e.what();
  }
  ADD_FAILURE() << "no parse error";
  return "";
}

TEST(ConfigTest, ParsesFields) {
  const ExperimentConfig c = Parse(kSmallConfig);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.workers, 2u);
  EXPECT_EQ(c.data.n, 240u);
  EXPECT_EQ(c.data.separation, 5.0);
  EXPECT_EQ(c.train.hidden, 8u);
  EXPECT_EQ(c.criterion.kind, CriterionKind::kMisclassify);
  EXPECT_FALSE(c.budget.early_stop);
  EXPECT_EQ(c.thresholds, (std::vector<double>{0.5, 0.6, 0.7, 0.8, 0.9}));
  EXPECT_EQ(c.epsilons, (std::vector<double>{0, 0.1, 0.2, 0.3}));
  ASSERT_EQ(c.attacks.size(), 2u);
  EXPECT_EQ(c.attacks[0].attack_id, "pgd");
  EXPECT_EQ(c.attacks[0].num_steps, 10u);
  EXPECT_EQ(c.attacks[1].variant, AttackVariant::kUniformNoise);
}

TEST(ConfigTest, SerializeRoundTrips) {
  for (const std::string& text : {std::string(kSmallConfig), DefaultConfigText()}) {
    const ExperimentConfig c = Parse(text);
    EXPECT_EQ(Parse(SerializeConfig(c)), c);
  }
  ExperimentConfig odd = Parse(kSmallConfig);
  odd.budget.max_attack_units_per_example = 3;
  odd.attacks[0].seed_stream = 12345678901234567ull;
  odd.attacks[0].first_restart = 4;
  odd.thresholds = {0.5, 0.1 + 0.2 + 0.3};
  EXPECT_EQ(Parse(SerializeConfig(odd)), odd);
}

TEST(ConfigTest, ShippedDefaultMatchesBuiltIn) {
  EXPECT_EQ(ReadFile(fs::path(BUNDLING_SOURCE_DIR) / "configs" / "default.cfg"), DefaultConfigText());
  const ExperimentConfig c = Parse(DefaultConfigText());
  EXPECT_EQ(c.attacks.size(), 5u);
  EXPECT_EQ(c.criterion, Criterion::MaxConfidence(0.9));
}

TEST(ConfigTest, ErrorsNameLineAndField) {
  const std::string bad_number = ParseErrorMessage("[data]\nn = 10\nseparation = wide\n");
  EXPECT_NE(bad_number.find("test.cfg:3"), std::string::npos) << bad_number;
  EXPECT_NE(bad_number.find("field 'separation'"), std::string::npos) << bad_number;

  const std::string unknown = ParseErrorMessage("[model]\n\nhiden = 3\n");
  EXPECT_NE(unknown.find("test.cfg:3"), std::string::npos) << unknown;
  EXPECT_NE(unknown.find("'hiden'"), std::string::npos) << unknown;

  const std::string dup = ParseErrorMessage("[model]\nepochs = 3\nepochs = 4\n");
  EXPECT_NE(dup.find("test.cfg:3"), std::string::npos) << dup;

  EXPECT_NE(ParseErrorMessage("[attack a]\nvariant = cw\n").find("field 'variant'"),
            std::string::npos);
  EXPECT_NE(ParseErrorMessage("seed = 1\n").find("outside of a section"), std::string::npos);
  EXPECT_NE(ParseErrorMessage("[criterion]\nkind = max_confidence\nthreshold = 1.2\n")
                .find("criterion.threshold"),
            std::string::npos);
  EXPECT_NE(ParseErrorMessage("[attack none]\n").find("reserved"), std::string::npos);
  EXPECT_NE(ParseErrorMessage("[report]\nthresholds = 0.9, 0.6\n").find("ascending"),
            std::string::npos);
}

TEST(ConfigTest, MissingFileIsParseError) {
  try {
    LoadConfig("/nonexistent/dir/x.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
  }
}

TEST(ExperimentTest, WritesAllArtifactsDeterministically) {
  const ExperimentConfig c = Parse(kSmallConfig);
  const fs::path a = FreshDir("a");
  const fs::path b = FreshDir("b");
  const ExperimentReport ra = RunExperiment(c, a.string());
  ExperimentConfig serial = c;
  serial.workers = 1;
  RunExperiment(serial, b.string());
  for (const char* name :
       {"rates.csv", "sf_curve.csv", "norm_curve.csv", "wat_gap.csv", "bundle.csv",
        "bundle_summary.csv", "model.txt", "candidates.csv", "summary.txt"}) {
    ASSERT_TRUE(fs::exists(a / name)) << name;
    EXPECT_EQ(ReadFile(a / name), ReadFile(b / name)) << name;
  }
  EXPECT_EQ(ra.files.size(), 9u);
  EXPECT_EQ(ReadFile(a / "wat_gap.csv"), "n,wat,bundled,gap\n1,1,1,0\n2,0.5,1,0.5\n10,0.1,1,0.9\n");
  EXPECT_GE(ra.bundled_error_rate, *ra.tables.wat.wat_max);
  const std::string sf = ReadFile(a / "sf_curve.csv");
  EXPECT_EQ(std::count(sf.begin(), sf.end(), '\n'), 6);
  const ModelParams model = LoadModel((a / "model.txt").string());
  EXPECT_EQ(model.hidden, 8u);
}

TEST(ExperimentTest, NoAttacksReportsCleanErrorOnly) {
  ExperimentConfig c = Parse(kSmallConfig);
  c.attacks.clear();
  c.dump_candidates = false;
  const fs::path dir = FreshDir("empty");
  const ExperimentReport r = RunExperiment(c, dir.string());
  EXPECT_EQ(r.bundled_error_rate, r.clean_error);
  EXPECT_NE(ReadFile(dir / "summary.txt").find("no attacks configured"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "candidates.csv"));
}

TEST(ExperimentTest, CsvDataAndLoadedModel) {
  const fs::path dir = FreshDir("csv");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "data.csv");
    out << "x0,x1,label\n";
    for (int i = 0; i < 40; ++i) {
      const double v = (i % 2) ? 0.9 - 0.001 * i : 0.1 + 0.001 * i;
      out << v << ',' << 1.0 - v << ',' << (i % 2) << '\n';
    }
  }
  ExperimentConfig c = Parse(kSmallConfig);
  c.data.kind = DataSourceKind::kCsv;
  c.data.path = (dir / "data.csv").string();
  c.data.eval = 10;
  c.architecture = Architecture::kSoftmaxLinear;
  const ExperimentReport first = RunExperiment(c, (dir / "first").string());
  c.model_path = (dir / "first" / "model.txt").string();
  const ExperimentReport second = RunExperiment(c, (dir / "second").string());
  EXPECT_EQ(ReadFile(dir / "first" / "rates.csv"), ReadFile(dir / "second" / "rates.csv"));
  EXPECT_EQ(first.clean_error, second.clean_error);
}

TEST(ExperimentTest, BadDataIsDataError) {
  const fs::path dir = FreshDir("bad");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "data.csv");
    out << "0.5,1.7,0\n0.2,0.3,1\n0.4,0.4,0\n";
  }
  ExperimentConfig c = Parse(kSmallConfig);
  c.data.kind = DataSourceKind::kCsv;
  c.data.path = (dir / "data.csv").string();
  c.data.eval = 1;
  try {
    RunExperiment(c, (dir / "out").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
  c.data.path = (dir / "missing.csv").string();
  try {
    RunExperiment(c, (dir / "out").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
  }
}

TEST(ExperimentTest, OutputDirEnvironmentOverride) {
  ExperimentConfig c;
  c.output_dir = "from_config";
  unsetenv("BUNDLING_OUTPUT_DIR");
  EXPECT_EQ(ResolveOutputDir(c), "from_config");
  setenv("BUNDLING_OUTPUT_DIR", "from_env", 1);
  EXPECT_EQ(ResolveOutputDir(c), "from_env");
  unsetenv("BUNDLING_OUTPUT_DIR");
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
#ifdef BUNDLING_CLI
    cli_ = BUNDLING_CLI;
#else
    GTEST_SKIP() << "attack_bundle not built";
#endif
    dir_ = FreshDir("cli");
    fs::create_directories(dir_);
  }

  int RunCli(const std::string& args) {
    const std::string cmd = "BUNDLING_OUTPUT_DIR='" + (dir_ / "out").string() + "' '" +
                            cli_ + "' " + args + " > '" + (dir_ / "stdout.txt").string() +
                            "' 2> '" + (dir_ / "stderr.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  void WriteText(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
  }

  std::string cli_;
  fs::path dir_;
};

TEST_F(CliTest, ExitCodes) {
  WriteText("good.cfg", kSmallConfig);
  EXPECT_EQ(RunCli("run '" + (dir_ / "good.cfg").string() + "'"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "rates.csv"));

  WriteText("bad.cfg", "[model]\nepochs = many\n");
  EXPECT_EQ(RunCli("run '" + (dir_ / "bad.cfg").string() + "'"), 2);
  EXPECT_NE(ReadFile(dir_ / "stderr.txt").find("bad.cfg:2"), std::string::npos);
  EXPECT_EQ(RunCli("frobnicate"), 2);

  WriteText("data.csv", "0.5,-0.2,0\n0.1,0.1,1\n");
  WriteText("csv.cfg", "[data]\nsource = csv\npath = " + (dir_ / "data.csv").string() +
                           "\neval = 1\n[attack a]\nvariant = fgsm\n");
  EXPECT_EQ(RunCli("run '" + (dir_ / "csv.cfg").string() + "'"), 3);

  WriteText("diverge.cfg", std::string(kSmallConfig) + "\n");
  ExperimentConfig diverging = Parse(kSmallConfig);
  diverging.train.learning_rate = 1e300;
  WriteText("diverge.cfg", SerializeConfig(diverging));
  EXPECT_EQ(RunCli("train '" + (dir_ / "diverge.cfg").string() + "'"), 4);
}

TEST_F(CliTest, SynthAndGap) {
  EXPECT_EQ(RunCli("synth 30 4 3 5 '" + (dir_ / "s.csv").string() + "'"), 0);
  const std::string csv = ReadFile(dir_ / "s.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x0,x1,x2,x3,label");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 31);
  EXPECT_EQ(RunCli("gap 1 2 1000"), 0);
  EXPECT_EQ(ReadFile(dir_ / "stdout.txt"),
            "n,wat,bundled,gap\n1,1,1,0\n2,0.5,1,0.5\n1000,0.001,1,0.999\n");
  // Invalid sizes are argument errors.
  EXPECT_EQ(RunCli("synth 0 4 3 5 '" + (dir_ / "t.csv").string() + "'"), 2);
}

}  // namespace
}  // namespace bundling
