#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "shadowlab/engine_full.hpp"
#include "shadowlab/engine_sampler.hpp"
#include "shadowlab/experiment_config.hpp"

namespace shadowlab {

struct TrialRecord {
  std::uint64_t trial = 0;
  std::uint64_t index = 0;  // 1-based
  double estimate = 0.0;
  double truth = 0.0;
  double abs_error = 0.0;
  bool within = false;  // abs_error <= epsilon
  EngineKind engine = EngineKind::kKickback;
  std::uint64_t seed = 0;

  bool operator==(const TrialRecord&) const = default;
};

struct IndexSummary {
  std::uint64_t index = 0;
  double truth = 0.0;
  double failure_rate = 0.0;
  double max_error = 0.0;
  double mean_error = 0.0;
};

struct ExperimentSummary {
  std::uint64_t trials = 0;
  std::uint64_t m = 0;
  double epsilon = 0.0;
  std::vector<IndexSummary> per_index;
  double mean_failure_rate = 0.0;  // per-index failure rate averaged over indices
  double max_failure_rate = 0.0;   // worst index
  double simultaneous_failure_rate = 0.0;  // trials with any index failing
  double max_error = 0.0;
  double mean_error = 0.0;
  double mean_estimate_bias = 0.0;  // mean of estimate - truth
  std::uint64_t guard_violations = 0;
  std::uint64_t copies_per_trial = 0;
};

/// Aggregates records laid out trial-major (m records per trial).
ExperimentSummary summarize(const std::vector<TrialRecord>& records, std::uint64_t m,
                            double epsilon);

struct ExperimentResult {
  std::vector<TrialRecord> records;  // sorted by (trial, index)
  ExperimentSummary summary;
  RoundParams params;
  std::string plan_report;
};

/// Trial t runs with seed base_seed + t; records are identical for any thread
/// count.
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const Instance& instance,
                                const RoundParams& params);

struct CompareResult {
  double tv = 0.0;
  DiscreteDistribution full;
  DiscreteDistribution sampler;
};

/// Exact round-`round` pmf of engine-full against the kickback-averaged pmf.
CompareResult engine_compare(const Instance& instance, const RoundParams& params,
                             std::size_t round, const FullSimConfig& config = {});

/// Joint law of the raw outcomes of rounds 1 and 2 under engine-full against
/// the kickback surrogate, whose two outputs are independent given the
/// instance. Exploratory: the surrogate only claims exact marginals.
struct JointCompareResult {
  std::map<std::pair<std::int64_t, std::int64_t>, double> full;
  std::map<std::pair<std::int64_t, std::int64_t>, double> surrogate;
  double tv = 0.0;
  double marginal_tv = 0.0;  // round-2 marginals, for reference
};

JointCompareResult joint_compare(const Instance& instance, const RoundParams& params,
                                 const FullSimConfig& config = {});

/// Two-sided Wilson score interval for `successes` out of `trials`.
std::pair<double, double> wilson_interval(double rate, std::uint64_t trials, double z = 1.96);

struct SweepOptions {
  std::vector<std::uint64_t> m_values{4, 16, 64};
  /// Largest index-averaged per-index failure rate accepted at a probe.
  double target_failure = 0.1;
  std::uint64_t trials = 200;
  std::uint64_t n_ceiling = std::uint64_t{1} << 22;
  double z = 1.96;
};

struct SweepPoint {
  std::uint64_t m = 0;
  std::uint64_t k = 0;
  std::uint64_t n_min = 0;
  double failure_rate = 0.0;  // at n_min
  double band_low = 0.0;
  double band_high = 0.0;
  std::uint64_t n_below = 0;  // largest probed n that failed (0 if none)
  double failure_below = 0.0;
  std::uint64_t probes = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double slope = 0.0;  // least-squares slope of log n_min against log m
  double intercept = 0.0;
};

/// Least-squares fit of log y against log x.
std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

/// For each m, the smallest n (k from the planner or the override) whose
/// index-averaged per-index failure rate is at most the target, found by
/// doubling then bisection with common random numbers across probes. Always
/// runs the kickback engine.
SweepResult sweep_scaling(const ExperimentConfig& base, const SweepOptions& options);
/// Same search with a caller-supplied instance for each m.
SweepResult sweep_scaling(const ExperimentConfig& base, const SweepOptions& options,
                          const std::function<Instance(std::uint64_t m)>& make_instance);

struct NoiseReport {
  double eta = 0.0;
  ExperimentSummary noiseless;
  ExperimentSummary noisy_raw;       // flips, no correction
  ExperimentSummary noisy_debiased;  // flips, de-biased fraction
  double raw_bias_shift = 0.0;       // mean estimate bias change without correction
  double debiased_bias_shift = 0.0;
  /// Twice the binomial standard error at the mean of the two index-averaged
  /// rates (floored at 0.5 / trials).
  double tolerance = 0.0;
  bool rates_match = false;  // |debiased - noiseless| <= tolerance
};

/// Runs the config three times on identical seeds: noiseless, with readout
/// flips at rate eta, and with flips plus de-biasing.
NoiseReport noise_injection(const ExperimentConfig& config, double eta);

}  // namespace shadowlab
