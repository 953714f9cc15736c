#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shadowlab/engine_full.hpp"
#include "shadowlab/linalg.hpp"
#include "shadowlab/protocol.hpp"

namespace shadowlab {

enum class FamilyKind { kRandomProjector, kRandomPovm, kPauli, kCommuting, kFromFile };
enum class StateKind { kRandomMixed, kRandomPure, kFromFile };
enum class EngineKind { kFull, kKickback, kMarginal, kNaive };

FamilyKind parse_family_kind(const std::string& text);
StateKind parse_state_kind(const std::string& text);
EngineKind parse_engine_kind(const std::string& text);
std::string to_string(FamilyKind kind);
std::string to_string(StateKind kind);
std::string to_string(EngineKind kind);

struct InstanceSpec {
  Index d = 4;
  std::uint64_t m = 16;
  FamilyKind family = FamilyKind::kRandomProjector;
  StateKind state = StateKind::kRandomMixed;
  /// Projector rank for random-projector; defaults to max(1, d/2).
  std::optional<Index> rank;
  /// Seed for drawing the instance (independent of the trial seeds).
  std::uint64_t seed = 1;
  std::vector<std::filesystem::path> family_files;
  std::filesystem::path state_file;
};

struct ProtocolSpec {
  Algorithm algorithm = Algorithm::kAlg1;
  double epsilon = 0.2;
  double delta = 0.05;
  ProtocolConstants constants;
  LowMemConstants lowmem;
  bool union_bound = false;
  /// Plan with the bounded-commutator variant using the instance's Cmax.
  bool use_cmax = false;
  std::optional<std::uint64_t> n;
  std::optional<std::uint64_t> k;
  std::optional<std::uint64_t> p;
};

struct ExperimentConfig {
  InstanceSpec instance;
  ProtocolSpec protocol;
  EngineKind engine = EngineKind::kKickback;
  std::uint64_t trials = 100;
  std::uint64_t seed = 1;
  /// Readout flip rate for rotation ancillas; absent means noiseless.
  std::optional<double> eta;
  bool debias = true;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
  std::uint64_t max_amplitudes = kDefaultMaxAmplitudes;

  void validate() const;
};

/// JSON document with sections "instance", "protocol" and top-level run keys.
/// Relative file paths are resolved against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON rendering of every field (the effective configuration).
std::string format_config(const ExperimentConfig& config);

struct Instance {
  DensityMatrix rho;
  std::vector<PovmElement> ms;
  std::vector<double> truths;  // Tr[M_i rho]
};

Instance build_instance(const InstanceSpec& spec);

struct ResolvedPlan {
  RoundParams params;
  bool feasible = true;
  std::string report;  // planner text, including any overrides
};

/// Runs the planner for the config and applies n/k/p overrides. Throws
/// InfeasiblePlan when the planner fails and no override fills the gap.
ResolvedPlan resolve_plan(const ExperimentConfig& config, const Instance& instance);

}  // namespace shadowlab
