#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "shadowlab/error.hpp"
#include "shadowlab/protocol.hpp"
#include "shadowlab/resources.hpp"

namespace shadowlab {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(ScalarMaps, ThetaOfMean) {
  EXPECT_DOUBLE_EQ(theta_of_mean(0.0), kPi / 3);
  EXPECT_DOUBLE_EQ(theta_of_mean(1.0), 2 * kPi / 3);
  EXPECT_DOUBLE_EQ(theta_of_mean(0.5), kPi / 2);
  EXPECT_THROW(theta_of_mean(1.1), ValidationError);
  EXPECT_THROW(theta_of_mean(-0.01), ValidationError);
}

TEST(ScalarMaps, ReadoutProb) {
  EXPECT_NEAR(readout_prob(kPi / 3), 0.25, 1e-15);
  EXPECT_NEAR(readout_prob(kPi / 2), 0.5, 1e-15);
  EXPECT_NEAR(readout_prob(2 * kPi / 3), 0.75, 1e-15);
}

TEST(ScalarMaps, EstimateFromFraction) {
  EXPECT_NEAR(estimate_from_fraction(0.25), 0.0, 1e-15);
  EXPECT_NEAR(estimate_from_fraction(0.75), 1.0, 1e-15);
  EXPECT_NEAR(estimate_from_fraction(0.5), 0.5, 1e-15);
  EXPECT_NEAR(estimate_from_fraction(0.0), -1.0, 1e-15);
  EXPECT_NEAR(estimate_from_fraction(1.0), 2.0, 1e-15);
  EXPECT_EQ(estimate_from_fraction(0.0, true), 0.0);
  EXPECT_EQ(estimate_from_fraction(1.0, true), 1.0);
  EXPECT_THROW(estimate_from_fraction(1.5), ValidationError);
}

TEST(ScalarMaps, PipelineFixedPoint) {
  for (int i = 0; i <= 1000; ++i) {
    const double s = i / 1000.0;
    EXPECT_NEAR(estimate_from_fraction(readout_prob(theta_of_mean(s))), s, 1e-12);
  }
}

TEST(ScalarMaps, EstimateMonotoneAndLipschitz) {
  const double lipschitz = 6.0 / kPi * 2.0 / std::sqrt(3.0);
  double prev = estimate_from_fraction(0.0);
  for (int i = 1; i <= 2000; ++i) {
    const double mu = i / 2000.0;
    const double e = estimate_from_fraction(mu);
    EXPECT_GT(e, prev);
    prev = e;
  }
  const int grid = 2000;
  for (int i = 1; i < grid; ++i) {
    const double a = 0.25 + 0.5 * (i - 1) / grid + 1e-9;
    const double b = 0.25 + 0.5 * i / grid;
    EXPECT_LE(std::abs(estimate_from_fraction(b) - estimate_from_fraction(a)),
              lipschitz * std::abs(b - a) * (1 + 1e-12));
  }
}

TEST(ScalarMaps, EstimateLowmem) {
  EXPECT_EQ(estimate_lowmem(0, 4), 0.0);
  EXPECT_EQ(estimate_lowmem(8, 8), 1.0);
  EXPECT_EQ(estimate_lowmem(-3, 8), -0.375);
  EXPECT_THROW(estimate_lowmem(128, 8), ValidationError);  // N = 128, R = [-128, 127]
  EXPECT_NO_THROW(estimate_lowmem(-128, 8));
}

TEST(ReadoutNoise, CorrectedFraction) {
  EXPECT_EQ(corrected_fraction(0.3, ReadoutNoise{}), 0.3);
  EXPECT_NEAR(corrected_fraction(0.3, ReadoutNoise{0.1, true}), 0.25, 1e-15);
  EXPECT_EQ(corrected_fraction(0.3, ReadoutNoise{0.1, false}), 0.3);
  EXPECT_EQ(corrected_fraction(0.05, ReadoutNoise{0.1, true}), 0.0);
  EXPECT_EQ(corrected_fraction(0.97, ReadoutNoise{0.1, true}), 1.0);
  EXPECT_THROW((ReadoutNoise{0.5, true}).validate(), ValidationError);
  EXPECT_NO_THROW((ReadoutNoise{0.5, false}).validate());
  EXPECT_THROW((ReadoutNoise{0.6, false}).validate(), ValidationError);
}

TEST(Constants, Defaults) {
  const ProtocolConstants c;
  EXPECT_DOUBLE_EQ(c.c1, kPi / 6);
  EXPECT_NEAR(c.c2, kPi * kPi * (std::exp(2.0) - 3.0) / 36.0, 1e-15);
  ProtocolConstants bad;
  bad.C = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

// Independent evaluation of the four sample-size inequalities.
bool alg1_holds(double m, double eps, double delta, double k, double n, double c0, double c1,
                double c2, double C) {
  const double l = std::log(1.0 / delta);
  return k >= c0 * l / (eps * eps) && n >= 10 * k &&
         n * n >= 8 * c1 * c1 * m * k * l / (eps * eps) &&
         c2 * C * C * (m * k / (n * n) * std::log(2.0) + k / (n * n) * l) <= eps;
}

TEST(PlanAlg1, SingleElementExample) {
  ProtocolConstants c;
  c.c0 = 1.0;
  const Alg1Plan plan = plan_alg1(1, 0.1, 0.01, c);
  EXPECT_TRUE(plan.feasible);
  EXPECT_EQ(plan.k, 461u);
  EXPECT_EQ(plan.n, 4610u);
  EXPECT_TRUE(alg1_holds(1, 0.1, 0.01, 461, 4610, 1.0, c.c1, c.c2, c.C));
  EXPECT_FALSE(alg1_holds(1, 0.1, 0.01, 461, 4609, 1.0, c.c1, c.c2, c.C));
  // constraint 3 alone would allow n near 682
  const double n3 = std::sqrt(8 * c.c1 * c.c1 * 461 * std::log(100.0) / 0.01);
  EXPECT_NEAR(n3, 682.4, 0.1);
  ASSERT_EQ(plan.constraints.size(), 4u);
  for (const ConstraintCheck& check : plan.constraints) EXPECT_TRUE(check.holds()) << check.name;
}

TEST(PlanAlg1, ReturnedNIsMinimalUnderIndependentCheck) {
  const ProtocolConstants c;
  for (std::uint64_t m : {1u, 10u, 100u, 1000u, 100000u}) {
    for (double eps : {0.05, 0.2}) {
      const Alg1Plan plan = plan_alg1(m, eps, 0.05, c);
      ASSERT_TRUE(plan.feasible);
      const double k = static_cast<double>(plan.k);
      const double n = static_cast<double>(plan.n);
      EXPECT_TRUE(alg1_holds(m, eps, 0.05, k, n, c.c0, c.c1, c.c2, c.C));
      EXPECT_FALSE(alg1_holds(m, eps, 0.05, k, n - 1, c.c0, c.c1, c.c2, c.C));
      EXPECT_GE(plan.n, 10 * plan.k);
    }
  }
}

TEST(PlanAlg1, CmaxZeroGivesTenK) {
  const Alg1Plan plan = plan_alg1(500, 0.1, 0.05, ProtocolConstants{}, 0.0);
  EXPECT_TRUE(plan.feasible);
  EXPECT_EQ(plan.n, 10 * plan.k);
  // informational alternative row is reported but not enforced
  bool has_info = false;
  for (const ConstraintCheck& check : plan.constraints) has_info = has_info || !check.enforced;
  EXPECT_TRUE(has_info);
}

TEST(PlanAlg1, MonotoneInM) {
  const Alg1Plan small = plan_alg1(10, 0.1, 0.05);
  const Alg1Plan large = plan_alg1(100, 0.1, 0.05);
  EXPECT_GE(large.n, small.n);
  EXPECT_EQ(large.k, small.k);
}

TEST(PlanAlg1, UnionBoundUsesDeltaOverM) {
  PlanOptions options;
  options.union_bound = true;
  const Alg1Plan plan = plan_alg1(20, 0.2, 0.1, ProtocolConstants{}, std::nullopt, options);
  EXPECT_DOUBLE_EQ(plan.effective_delta, 0.1 / 20);
  EXPECT_EQ(plan.k, plan_alg1(1, 0.2, 0.005).k);
}

TEST(PlanAlg1, InfeasibleBelowCeilingIsReported) {
  PlanOptions options;
  options.n_ceiling = 100;
  const Alg1Plan plan = plan_alg1(10, 0.1, 0.05, ProtocolConstants{}, std::nullopt, options);
  EXPECT_FALSE(plan.feasible);
  EXPECT_NE(format_plan(plan).find("feasible: false"), std::string::npos);
}

TEST(PlanAlg1, RejectsBadInputs) {
  EXPECT_THROW(plan_alg1(0, 0.1, 0.1), ValidationError);
  EXPECT_THROW(plan_alg1(1, 0.0, 0.1), ValidationError);
  EXPECT_THROW(plan_alg1(1, 0.1, 1.0), ValidationError);
}

TEST(PlanAlg2, SingleElementExample) {
  const Alg2Plan plan = plan_alg2(1, 0.1, 0.1);
  EXPECT_TRUE(plan.feasible);
  EXPECT_EQ(plan.n, 256u);
  EXPECT_EQ(plan.N, 2u * 256u * 256u);
  EXPECT_NEAR(plan.p_lower, std::log(10.0) / 0.01, 1e-9);
  EXPECT_NEAR(plan.p_upper, 256.0 * 256.0 * 0.01 / std::log(10.0), 1e-9);
  EXPECT_EQ(plan.p, 231u);
  for (const ConstraintCheck& check : plan.constraints) EXPECT_TRUE(check.holds()) << check.name;
  const std::string report = format_plan(plan);
  EXPECT_NE(report.find("p_interval"), std::string::npos) << report;
}

TEST(PlanAlg2, PowerOfTwoAndCounterRange) {
  for (std::uint64_t m : {1u, 4u, 32u}) {
    const Alg2Plan plan = plan_alg2(m, 0.2, 0.05);
    ASSERT_TRUE(plan.feasible);
    EXPECT_EQ(plan.n & (plan.n - 1), 0u);
    EXPECT_EQ(plan.N, 2 * plan.n * plan.n);
    EXPECT_LT(plan.p, plan.N);
    EXPECT_NO_THROW(round_params(plan).validate());
  }
}

TEST(PlanAlg2, DoublingMAtMostDoublesLowerBound) {
  for (std::uint64_t m : {1u, 3u, 10u, 50u}) {
    EXPECT_LE(plan_alg2(2 * m, 0.1, 0.1).p_lower, 2 * plan_alg2(m, 0.1, 0.1).p_lower + 1e-9);
  }
}

TEST(RoundParams, Validation) {
  RoundParams p;
  p.algorithm = Algorithm::kAlg2;
  p.n = 3;
  EXPECT_THROW(p.validate(), ValidationError);
  p.n = 2;
  p.p = 8;  // N = 8
  EXPECT_THROW(p.validate(), ValidationError);
  p.p = 7;
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(parse_algorithm("alg2"), Algorithm::kAlg2);
  EXPECT_EQ(to_string(Algorithm::kAlg1), "alg1");
  EXPECT_THROW(parse_algorithm("alg3"), ValidationError);
}

TEST(Resources, BatchExample) {
  const std::vector<std::uint64_t> sizes{5, 7};
  const ResourceEstimate r = estimate_resources(2, 3, 10, sizes, CircuitVariant::kBatch);
  EXPECT_EQ(r.gate_units, 180u);
  EXPECT_EQ(r.ancilla_qubits, 13u);
}

TEST(Resources, MemoryVariants) {
  const std::vector<std::uint64_t> sizes{5, 7};
  EXPECT_EQ(estimate_resources(2, 3, 10, sizes, CircuitVariant::kConstMemory).ancilla_qubits, 2u);
  EXPECT_EQ(estimate_resources(2, 3, 10, sizes, CircuitVariant::kLogMemory).ancilla_qubits, 4u);
  EXPECT_EQ(estimate_resources(2, 3, 10, sizes, CircuitVariant::kReadOnce).ancilla_qubits, 16u);
  EXPECT_THROW(estimate_resources(3, 3, 10, sizes, CircuitVariant::kBatch), ValidationError);
  EXPECT_THROW(parse_circuit_variant("teleport"), ValidationError);
  EXPECT_EQ(parse_circuit_variant("log-memory"), CircuitVariant::kLogMemory);
}

}  // namespace
}  // namespace shadowlab
