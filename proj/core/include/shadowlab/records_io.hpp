#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "shadowlab/experiment_config.hpp"
#include "shadowlab/harness.hpp"

namespace shadowlab {

/// CSV with header trial,index,estimate,truth,abs_error,within,engine,seed.
/// Doubles are written with 17 significant digits so a read-back is exact.
std::string format_records_csv(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> parse_records_csv(const std::string& text);
void write_records_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_records_csv(const std::filesystem::path& path);

/// Human-readable run summary: effective config, plan report, per-index table.
std::string format_summary(const ExperimentConfig& config, const ExperimentResult& result);
void write_summary(const std::filesystem::path& path, const ExperimentConfig& config,
                   const ExperimentResult& result);

/// One row per round: round,lambda,estimate,truth,S1,S2_bound,cum_deviation.
std::string format_trajectory_csv(const KickbackTrajectory& trajectory);
void write_trajectory_csv(const std::filesystem::path& path, const KickbackTrajectory& trajectory);

}  // namespace shadowlab
