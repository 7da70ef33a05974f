#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fdrscca/cli/commands.hpp"
#include "fdrscca/cli/csv.hpp"
#include "fdrscca/cli/run_config.hpp"
#include "fdrscca/simulation.hpp"

namespace fs = std::filesystem;
using namespace fdrscca;
using namespace fdrscca::cli;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("fdrscca_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix(const std::string& path, const Matrix& m, bool header) {
  std::ofstream out(path);
  if (header) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << "f" << j;
    out << "\n";
  }
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << "\n";
  }
}

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "fdrscca");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Invocation r;
  r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Two toy files with a strong 5 x 5 signal block.
void write_toy(const TempDir& dir) {
  BlockModelSpec spec;
  spec.px = 20;
  spec.py = 15;
  spec.sx = spec.sy = 5;
  spec.rho_cross = 0.6;
  spec.rho_within = 0.7;
  const DataMatrixPair d = sample_joint_gaussian(build_block_model(spec), 120, 4);
  write_matrix(dir / "x.csv", d.x(), true);
  write_matrix(dir / "y.csv", d.y(), false);
}

}  // namespace

TEST(Csv, HeaderDetectionAndValues) {
  const CsvMatrix m = parse_csv_matrix("a,b\n1,2\n3.5,-4e-1\n", "t");
  EXPECT_TRUE(m.has_header);
  EXPECT_EQ(m.names, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(m.values.rows(), 2);
  EXPECT_DOUBLE_EQ(m.values(1, 1), -0.4);

  const CsvMatrix bare = parse_csv_matrix("1,2\r\n3,4\r\n", "t");
  EXPECT_FALSE(bare.has_header);
  EXPECT_EQ(bare.values.rows(), 2);
}

TEST(Csv, DiagnosticsNameRowAndColumn) {
  try {
    parse_csv_matrix("a,b,c\n1,2,3\n4,5,abc\n", "bad.csv");
    FAIL() << "expected CsvError";
  } catch (const CsvError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.column(), 3u);
    EXPECT_NE(std::string(e.what()).find("bad.csv"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("abc"), std::string::npos);
  }
  EXPECT_THROW(parse_csv_matrix("1,2\n3\n", "t"), CsvError);
  EXPECT_THROW(parse_csv_matrix("1,nan\n", "t"), CsvError);
  EXPECT_THROW(parse_csv_matrix("", "t"), CsvError);
}

TEST(Csv, StratumColumnIsRemoved) {
  const CsvMatrix m = parse_csv_matrix("g,a,b\ncase,1,2\nctrl,3,4\n", "t", std::string("g"));
  EXPECT_EQ(m.values.cols(), 2);
  ASSERT_TRUE(m.strata.has_value());
  EXPECT_EQ((*m.strata)[1], "ctrl");
  const CsvMatrix idx = parse_csv_matrix("1,7,2\n0,8,4\n", "t", std::string("0"));
  EXPECT_EQ(idx.values.cols(), 2);
  EXPECT_DOUBLE_EQ(idx.values(1, 0), 8.0);
  EXPECT_THROW(parse_csv_matrix("a,b\n1,2\n", "t", std::string("zz")), CsvError);
}

TEST(Csv, Formatting) {
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(csv_cell("plain"), "plain");
  EXPECT_EQ(csv_cell("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_cell("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Config, MergeAndReject) {
  RunConfig base;
  const RunConfig c = merge_config(base, Json::parse(R"({"q": 0.05, "seed": 7,
      "simulate": {"reps": 3, "methods": ["cv"]}})"));
  EXPECT_DOUBLE_EQ(c.q_u, 0.05);
  EXPECT_DOUBLE_EQ(c.q_v, 0.05);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.simulate.reps, 3);
  EXPECT_THROW(merge_config(base, Json::parse(R"({"qq": 1})")), ConfigError);
  EXPECT_THROW(merge_config(base, Json::parse(R"({"simulate": {"bogus": 1}})")), ConfigError);
  EXPECT_THROW(merge_config(base, Json::parse(R"({"q": "high"})")), ConfigError);
}

TEST(Config, FullScaleGrid) {
  const RunConfig c = merge_config(RunConfig{}, Json::parse(R"({"simulate": {"full_scale": true}})"));
  EXPECT_EQ(c.simulate.px, 1500);
  EXPECT_EQ(c.simulate.reps, 500);
  EXPECT_EQ(c.simulate.sx.back(), 120);
}

TEST(Config, FlagsOverrideConfigFile) {
  TempDir dir;
  std::ofstream(dir / "cfg.json") << R"({"mode": "verify", "verify": {"only": "lemma"}})";
  // The flag wins over the file's "lemma".
  const Invocation r = invoke({"--config", dir / "cfg.json", "--only", "bh"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("bh"), std::string::npos);
  EXPECT_EQ(r.out.find("lemma"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({"--mode", "dance"}).code, kExitUsage);
  EXPECT_EQ(invoke({"--mode", "analyze"}).code, kExitUsage);  // missing --x/--y
  EXPECT_EQ(invoke({"--q", "1.5", "--mode", "verify"}).code, kExitUsage);
  EXPECT_EQ(invoke({"--config", "/nonexistent/cfg.json"}).code, kExitUsage);
  const Invocation v = invoke({"--version"});
  EXPECT_EQ(v.code, kExitOk);
  EXPECT_NE(v.out.find("0.3.0"), std::string::npos);
}

TEST(Cli, AnalyzeWritesConsistentOutputs) {
  TempDir dir;
  write_toy(dir);
  const Invocation r = invoke({"--mode", "analyze", "--x", dir / "x.csv", "--y", dir / "y.csv",
                               "--seed", "11", "--out", dir / "out"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json result = Json::parse(slurp(dir / "out/result.json"));
  EXPECT_EQ(result.at("seed").get<std::uint64_t>(), 11u);
  for (const char* side : {"u", "v"}) {
    const Json& s = result.at(side);
    std::vector<Index> prelim;
    for (const Json& f : s.at("tested")) prelim.push_back(f.at("index").get<Index>());
    const auto rejected = s.at("rejected").get<std::vector<Index>>();
    EXPECT_TRUE(std::includes(prelim.begin(), prelim.end(), rejected.begin(), rejected.end()))
        << side;
  }
  EXPECT_TRUE(fs::exists(dir / "out/u.csv"));
  EXPECT_TRUE(fs::exists(dir / "out/manifest.json"));
  EXPECT_EQ(slurp(dir / "out/u.csv").rfind("# fdrscca", 0), 0u);
  const Json manifest = Json::parse(slurp(dir / "out/manifest.json"));
  EXPECT_EQ(manifest.at("seed_source"), "flag");
}

TEST(Cli, AnalyzeIsByteIdenticalAcrossRuns) {
  TempDir dir;
  write_toy(dir);
  for (const char* out : {"a", "b"}) {
    ASSERT_EQ(invoke({"--mode", "analyze", "--x", dir / "x.csv", "--y", dir / "y.csv", "--seed",
                      "5", "--out", dir / out})
                  .code,
              kExitOk);
  }
  EXPECT_EQ(slurp(dir / "a/result.json"), slurp(dir / "b/result.json"));
  EXPECT_EQ(slurp(dir / "a/u.csv"), slurp(dir / "b/u.csv"));
}

TEST(Cli, AnalyzeInputErrors) {
  TempDir dir;
  write_toy(dir);
  std::ofstream(dir / "bad.csv") << "a,b,c\n1,2,3\n4,5,abc\n";
  Invocation r = invoke({"--mode", "analyze", "--x", dir / "bad.csv", "--y", dir / "y.csv",
                         "--seed", "1", "--out", dir / "o"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("row 2"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("column 3"), std::string::npos) << r.err;

  std::ofstream(dir / "short.csv") << "1,2\n3,4\n";
  r = invoke({"--mode", "analyze", "--x", dir / "short.csv", "--y", dir / "y.csv", "--seed", "1",
              "--out", dir / "o"});
  EXPECT_EQ(r.code, kExitUsage);  // row counts differ

  r = invoke({"--mode", "analyze", "--x", dir / "missing.csv", "--y", dir / "y.csv", "--seed",
              "1", "--out", dir / "o"});
  EXPECT_EQ(r.code, kExitUsage);
}

TEST(Cli, AnalyzeLibraryErrorsExitThree) {
  TempDir dir;
  Matrix x = Matrix::Random(30, 3);
  x.col(1).setConstant(2.0);
  write_matrix(dir / "x.csv", x, false);
  write_matrix(dir / "y.csv", Matrix::Random(30, 2), false);
  const Invocation r = invoke({"--mode", "analyze", "--x", dir / "x.csv", "--y", dir / "y.csv",
                               "--seed", "1", "--out", dir / "o"});
  EXPECT_EQ(r.code, kExitPipeline);
  EXPECT_EQ(r.err.rfind("ConstantColumn: ", 0), 0u) << r.err;
}

TEST(Cli, SimulateSmoke) {
  TempDir dir;
  std::ofstream(dir / "cfg.json") << R"({"simulate": {"n": 150, "px": 60, "py": 60,
      "sx": [1, 10], "sy": [10], "reps": 1, "target_nnz": 20}})";
  const auto start = std::chrono::steady_clock::now();
  const Invocation r = invoke({"--mode", "simulate", "--config", dir / "cfg.json", "--seed", "3",
                               "--out", dir / "sim"});
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_LT(seconds, 10.0);
  const std::string summary = slurp(dir / "sim/summary.csv");
  EXPECT_NE(summary.find("fdr_corrected"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "sim/plot_fdr_v.csv"));

  const Invocation bad = invoke({"--mode", "simulate", "--config", dir / "cfg.json", "--methods",
                                 "lasso", "--out", dir / "sim2"});
  EXPECT_EQ(bad.code, kExitUsage);
}

TEST(Cli, VerifyOnlyRunsOneCheck) {
  const Invocation r = invoke({"--mode", "verify", "--only", "bh"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  EXPECT_EQ(r.out.find("theorem1"), std::string::npos);
  EXPECT_EQ(invoke({"--mode", "verify", "--only", "nope"}).code, kExitUsage);
}
