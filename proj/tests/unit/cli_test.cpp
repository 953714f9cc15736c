#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"

namespace shadowlab::cli {
namespace {

namespace fs = std::filesystem;

struct Captured {
  int code = 0;
  std::string out;
  std::string err;
};

Captured run(const std::vector<std::string>& args,
             const std::optional<fs::path>& out_dir = std::nullopt) {
  std::ostringstream out;
  std::ostringstream err;
  Captured c;
  const ParseResult parsed = parse(args);
  if (!parsed.invocation) {
    c.code = parsed.exit_code;
    c.err = parsed.message;
    return c;
  }
  c.code = dispatch(*parsed.invocation, out, err, out_dir);
  c.out = out.str();
  c.err = err.str();
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("shadowlab_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path tiny_config(const fs::path& dir) {
  const fs::path p = dir / "tiny.json";
  std::ofstream(p) << R"({"instance": {"d": 2, "m": 2}, "protocol": {"n": 3, "k": 2},
    "trials": 4, "threads": 1})";
  return p;
}

TEST(CliParse, NoArgumentsIsAnError) {
  const ParseResult r = parse({});
  EXPECT_FALSE(r.invocation);
  EXPECT_NE(r.exit_code, kExitOk);
}

TEST(CliParse, RejectsUnknownFlagsAndMismatchedOverrides) {
  EXPECT_EQ(run({"plan", "--bogus"}).code, kExitValidation);
  EXPECT_EQ(run({"plan", "--alg", "alg1", "--p", "3"}).code, kExitValidation);
  EXPECT_EQ(run({"plan", "--alg", "alg2", "--k", "3"}).code, kExitValidation);
  EXPECT_EQ(run({"run"}).code, kExitValidation);
}

TEST(CliPlan, PrintsEffectiveConfigAndPlan) {
  const Captured c = run({"plan", "--m", "100", "--eps", "0.1", "--delta", "0.01"});
  EXPECT_EQ(c.code, kExitOk);
  EXPECT_NE(c.out.find("# effective configuration"), std::string::npos);
  EXPECT_NE(c.out.find("\"epsilon\": 0.1"), std::string::npos);
  EXPECT_NE(c.out.find("k: 922"), std::string::npos) << c.out;
}

TEST(CliRun, WritesRecordsSummaryAndTrajectory) {
  const fs::path dir = scratch("run");
  const Captured c = run({"run", "--config", tiny_config(dir).string(), "--out", "rec.csv",
                          "--trajectory", "traj.csv", "--seed", "3"},
                         dir);
  ASSERT_EQ(c.code, kExitOk) << c.err;
  EXPECT_TRUE(fs::exists(dir / "rec.csv"));
  EXPECT_TRUE(fs::exists(dir / "rec.summary.txt"));
  EXPECT_TRUE(fs::exists(dir / "traj.csv"));
  std::ifstream in(dir / "rec.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "trial,index,estimate,truth,abs_error,within,engine,seed");
  EXPECT_NE(c.out.find("\"seed\": 3"), std::string::npos);
}

TEST(CliRun, BudgetExitCode) {
  const fs::path dir = scratch("budget");
  const Captured c = run({"run", "--config", tiny_config(dir).string(), "--engine", "full", "--n",
                          "40"});
  EXPECT_EQ(c.code, kExitBudget);
}

TEST(CliPlan, InfeasibleExitCode) {
  const Captured c = run({"plan", "--m", "1000000000000", "--eps", "0.001", "--delta", "0.01"});
  EXPECT_EQ(c.code, kExitInfeasible) << c.out << c.err;
}

TEST(CliCompare, TinyInstanceAgrees) {
  const fs::path dir = scratch("compare");
  EXPECT_EQ(run({"compare", "--config", tiny_config(dir).string()}).code, kExitOk);
}

TEST(CliAudit, ScalarKindPasses) {
  EXPECT_EQ(run({"audit", "--kind", "cos-bound", "--count", "100"}).code, kExitOk);
}

TEST(CliDist, WritesPmf) {
  const fs::path dir = scratch("dist");
  const Captured c = run({"dist", "--kind", "fourier", "--p", "2", "--n", "2", "--out", "f.csv"}, dir);
  ASSERT_EQ(c.code, kExitOk) << c.err;
  std::ifstream in(dir / "f.csv");
  std::string line;
  double total = 0.0;
  std::getline(in, line);
  while (std::getline(in, line)) total += std::stod(line.substr(line.find(',') + 1));
  EXPECT_NEAR(total, 1.0, 1e-12);
}

}  // namespace
}  // namespace shadowlab::cli
