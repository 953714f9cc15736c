#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "shadowlab/audit.hpp"
#include "shadowlab/error.hpp"
#include "shadowlab/harness.hpp"

namespace shadowlab {
namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.instance.d = 2;
  c.instance.m = 4;
  c.protocol.epsilon = 0.25;
  c.protocol.delta = 0.1;
  c.protocol.n = 200;
  c.protocol.k = 40;
  c.trials = 30;
  c.seed = 7;
  c.threads = 1;
  return c;
}

TEST(Summarize, CountsFailuresPerIndexAndJointly) {
  std::vector<TrialRecord> r;
  // two trials, two indices; trial 0 fails index 2, trial 1 fails both
  const bool within[2][2] = {{true, false}, {false, false}};
  for (std::uint64_t t = 0; t < 2; ++t) {
    for (std::uint64_t i = 1; i <= 2; ++i) {
      TrialRecord rec;
      rec.trial = t;
      rec.index = i;
      rec.truth = 0.5;
      rec.estimate = within[t][i - 1] ? 0.6 : 0.9;
      rec.abs_error = std::abs(rec.estimate - rec.truth);
      rec.within = within[t][i - 1];
      r.push_back(rec);
    }
  }
  const ExperimentSummary s = summarize(r, 2, 0.2);
  EXPECT_EQ(s.trials, 2u);
  EXPECT_DOUBLE_EQ(s.per_index[0].failure_rate, 0.5);
  EXPECT_DOUBLE_EQ(s.per_index[1].failure_rate, 1.0);
  EXPECT_DOUBLE_EQ(s.mean_failure_rate, 0.75);
  EXPECT_DOUBLE_EQ(s.max_failure_rate, 1.0);
  EXPECT_DOUBLE_EQ(s.simultaneous_failure_rate, 1.0);
  EXPECT_NEAR(s.max_error, 0.4, 1e-15);
  EXPECT_NEAR(s.mean_estimate_bias, (0.1 + 0.4 + 0.4 + 0.4) / 4, 1e-15);
}

TEST(Wilson, KnownValues) {
  const auto [lo, hi] = wilson_interval(0.5, 100);
  EXPECT_NEAR(lo, 0.4038, 1e-4);
  EXPECT_NEAR(hi, 0.5962, 1e-4);
  const auto [lo0, hi0] = wilson_interval(0.0, 200);
  EXPECT_EQ(lo0, 0.0);
  EXPECT_NEAR(hi0, 3.8416 / (200 + 3.8416), 1e-12);
}

TEST(LogLogFit, RecoversPowerLaw) {
  const std::vector<double> x{4, 16, 64, 256};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 0.5));
  const auto [slope, intercept] = loglog_fit(x, y);
  EXPECT_NEAR(slope, 0.5, 1e-12);
  EXPECT_NEAR(intercept, std::log(3.0), 1e-12);
  EXPECT_THROW(loglog_fit({1.0}, {2.0}), ValidationError);
  EXPECT_THROW(loglog_fit({1.0, -2.0}, {1.0, 1.0}), ValidationError);
}

TEST(RunExperiment, DeterministicAndThreadInvariant) {
  ExperimentConfig c = small_config();
  const ExperimentResult a = run_experiment(c);
  c.threads = 3;
  const ExperimentResult b = run_experiment(c);
  ASSERT_EQ(a.records.size(), c.trials * c.instance.m);
  EXPECT_EQ(a.records, b.records);
  for (std::size_t j = 0; j < a.records.size(); ++j) {
    EXPECT_EQ(a.records[j].trial, j / 4);
    EXPECT_EQ(a.records[j].index, j % 4 + 1);
  }
  c.seed = 8;
  EXPECT_NE(run_experiment(c).records, a.records);
}

TEST(RunExperiment, EveryEngineRuns) {
  for (EngineKind e : {EngineKind::kKickback, EngineKind::kMarginal, EngineKind::kNaive}) {
    ExperimentConfig c = small_config();
    c.engine = e;
    const ExperimentResult r = run_experiment(c);
    EXPECT_EQ(r.records.size(), 120u);
    EXPECT_FALSE(r.plan_report.empty());
  }
  ExperimentConfig c = small_config();
  c.engine = EngineKind::kFull;
  c.protocol.n = 3;
  c.protocol.k = 1;
  c.trials = 5;
  EXPECT_EQ(run_experiment(c).summary.copies_per_trial, 3u);
  c.max_amplitudes = 16;
  EXPECT_THROW(run_experiment(c), BudgetExceeded);
}

TEST(RunExperiment, IdentityRoundsAreExactOnAverage) {
  // Every M_i = I: each estimate is the inverse map of a Binomial(k, 3/4) fraction.
  ExperimentConfig c = small_config();
  c.instance.m = 2;
  c.trials = 20;
  Instance inst{DensityMatrix::maximally_mixed(2),
                {PovmElement::identity(2), PovmElement::identity(2)},
                {1.0, 1.0}};
  RoundParams params;
  params.n = 100'000;
  params.k = 10'000;
  const ExperimentResult r = run_experiment(c, inst, params);
  for (const TrialRecord& rec : r.records) {
    EXPECT_EQ(rec.truth, 1.0);
    EXPECT_LT(rec.abs_error, 0.05);
  }
  EXPECT_EQ(r.summary.guard_violations, 0u);
}

TEST(Compare, FullAgainstSampler) {
  ExperimentConfig c = small_config();
  c.instance.m = 2;
  const Instance inst = build_instance(c.instance);
  RoundParams params;
  params.n = 3;
  params.k = 2;
  const CompareResult r = engine_compare(inst, params, 2);
  EXPECT_LE(r.tv, 1e-8);
  EXPECT_NEAR(r.full.total_mass(), 1.0, 1e-12);
}

TEST(JointCompare, MassesAndMarginals) {
  ExperimentConfig c = small_config();
  c.instance.m = 2;
  const Instance inst = build_instance(c.instance);
  RoundParams params;
  params.n = 3;
  params.k = 2;
  const JointCompareResult r = joint_compare(inst, params);
  double full = 0.0;
  double surrogate = 0.0;
  for (const auto& [key, p] : r.full) full += p;
  for (const auto& [key, p] : r.surrogate) surrogate += p;
  EXPECT_NEAR(full, 1.0, 1e-12);
  EXPECT_NEAR(surrogate, 1.0, 1e-12);
  EXPECT_LE(r.marginal_tv, 1e-10);
  EXPECT_GE(r.tv, r.marginal_tv);
}

TEST(JointCompare, IdentitySecondRoundIsIndependent) {
  // M_2 = I: round 2 is Binomial(k, 3/4) whatever round 1 did.
  Instance inst{random_density(2, 2, std::uint64_t{40}),
                {random_projector(2, 1, std::uint64_t{41}), PovmElement::identity(2)},
                {}};
  RoundParams params;
  params.n = 2;
  params.k = 2;
  EXPECT_LE(joint_compare(inst, params).tv, 1e-12);
}

TEST(Sweep, CommutingFamilyIsFlat) {
  ExperimentConfig c = small_config();
  c.instance.family = FamilyKind::kCommuting;
  c.protocol.n.reset();
  c.protocol.k = 150;
  SweepOptions opts;
  opts.m_values = {2, 8};
  opts.trials = 40;
  opts.target_failure = 0.2;
  const SweepResult r = sweep_scaling(c, opts);
  ASSERT_EQ(r.points.size(), 2u);
  for (const SweepPoint& p : r.points) {
    EXPECT_LE(p.failure_rate, 0.2);
    EXPECT_LE(p.band_low, p.failure_rate);
    EXPECT_GE(p.band_high, p.failure_rate);
    if (p.n_below > 0) EXPECT_GT(p.failure_below, 0.2);
  }
}

TEST(Sweep, RejectsSingleM) {
  SweepOptions opts;
  opts.m_values = {4};
  EXPECT_THROW(sweep_scaling(small_config(), opts), ValidationError);
}

TEST(Noise, ZeroRateMatchesNoiseless) {
  const NoiseReport r = noise_injection(small_config(), 0.0);
  EXPECT_EQ(r.noiseless.mean_failure_rate, r.noisy_raw.mean_failure_rate);
  EXPECT_EQ(r.noiseless.mean_estimate_bias, r.noisy_debiased.mean_estimate_bias);
  EXPECT_TRUE(r.rates_match);
}

TEST(Noise, ReportFieldsAndValidation) {
  ExperimentConfig c = small_config();
  const NoiseReport r = noise_injection(c, 0.2);
  EXPECT_EQ(r.eta, 0.2);
  EXPECT_GT(r.tolerance, 0.0);
  EXPECT_NE(r.raw_bias_shift, 0.0);
  EXPECT_EQ(r.rates_match,
            std::abs(r.noisy_debiased.mean_failure_rate - r.noiseless.mean_failure_rate) <=
                r.tolerance);
  EXPECT_THROW(noise_injection(c, 0.5), ValidationError);
  c.engine = EngineKind::kNaive;
  EXPECT_THROW(noise_injection(c, 0.1), ValidationError);
}

TEST(DeviationChain, TelescopesToDeviation) {
  Rng rng(31);
  const DensityMatrix rho = random_density(4, 4, rng);
  std::vector<PovmElement> ms;
  for (int i = 0; i < 6; ++i) ms.push_back(random_projector(4, 2, rng));
  RoundParams params;
  params.n = 50;
  params.k = 8;
  TrajectoryOptions opts;
  opts.keep_states = true;
  const KickbackTrajectory t = trajectory_run(rho, ms, params, 5, opts);
  for (std::size_t target = 1; target <= ms.size(); ++target) {
    const DeviationChain chain = deviation_chain(t, ms, target);
    EXPECT_EQ(chain.steps.size(), target - 1);
    double sum = 0.0;
    for (const DeviationStep& s : chain.steps) sum += s.delta;
    EXPECT_NEAR(sum, chain.deviation, 1e-12);
    EXPECT_LE(std::abs(chain.deviation - chain.first_order_sum), chain.second_order_sum + 1e-12);
    EXPECT_TRUE(deviation_audit(t, ms, target).pass());
  }
}

TEST(Audit, ScalarInequalitiesHold) {
  for (AuditKind kind : {AuditKind::kCosBound, AuditKind::kExpBound, AuditKind::kLipschitz}) {
    const AuditReport r = run_audit(kind, 2001, 1);
    EXPECT_TRUE(r.pass()) << format_report(r);
    EXPECT_GT(r.checks, 0u);
  }
}

TEST(Audit, ReportTracksWorstCheck) {
  AuditReport r;
  r.check_le(1.0, 2.0, "a");
  r.check_le(3.0, 2.0, "b");
  EXPECT_FALSE(r.pass());
  EXPECT_EQ(r.worst.rfind("b", 0), 0u);
  EXPECT_EQ(r.checks, 2u);
  EXPECT_EQ(parse_audit_kind(to_string(AuditKind::kSubgaussian)), AuditKind::kSubgaussian);
  EXPECT_THROW(parse_audit_kind("nope"), ValidationError);
}

}  // namespace
}  // namespace shadowlab
