#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace shadowlab::cli {

enum class Subcommand { kPlan, kRun, kSweep, kAudit, kCompare, kDist };

/// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,  // bad flags, bad config, I/O failure
  kExitInfeasible = 2,  // planner found no admissible parameters
  kExitBudget = 3,      // full simulation refused by the amplitude budget
  kExitViolation = 4,   // audit or compare found a violated bound
};

struct Invocation {
  Subcommand subcommand = Subcommand::kPlan;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;

  std::optional<std::uint64_t> seed;
  std::optional<std::string> engine;
  std::optional<std::string> algorithm;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<std::uint64_t> m;
  std::optional<std::uint64_t> n;
  std::optional<std::uint64_t> k;
  std::optional<std::uint64_t> p;
  std::optional<double> eta;
  std::optional<std::uint64_t> trials;
  std::optional<unsigned> threads;
  bool union_bound = false;

  std::string kind;              // audit kind or dist kind
  std::uint64_t count = 1000;    // audit instances or grid points
  std::size_t round = 2;         // compare
  std::vector<std::uint64_t> m_values{4, 16, 64};  // sweep
  double target_failure = 0.1;   // sweep
  std::optional<std::filesystem::path> trajectory;  // run: trajectory CSV of trial 0
};

struct ParseResult {
  std::optional<Invocation> invocation;
  int exit_code = kExitOk;  // meaningful when invocation is empty
  std::string message;      // usage or error text
};

ParseResult parse(const std::vector<std::string>& args);

/// Executes the invocation; `env_out_dir` is the default output directory.
int dispatch(const Invocation& invocation, std::ostream& out, std::ostream& err,
             const std::optional<std::filesystem::path>& env_out_dir = {});

/// parse + dispatch, reading SHADOWLAB_OUT_DIR from the environment.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shadowlab::cli
