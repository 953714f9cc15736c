#include <bit>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "shadowlab/engine_full.hpp"
#include "shadowlab/engine_sampler.hpp"
#include "shadowlab/error.hpp"

namespace shadowlab {
namespace {

ComplexMatrix diag2(double a, double b) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

ComplexVector kron_vec(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

ComplexVector basis(Index dim, Index i) {
  ComplexVector v = ComplexVector::Zero(dim);
  v(i) = 1.0;
  return v;
}

RoundParams alg1(std::uint64_t n, std::uint64_t k) {
  RoundParams p;
  p.n = n;
  p.k = k;
  return p;
}

RoundParams alg2(std::uint64_t n, std::uint64_t p) {
  RoundParams r;
  r.algorithm = Algorithm::kAlg2;
  r.n = n;
  r.p = p;
  return r;
}

double binomial_pmf(int k, int c, double q) {
  return std::exp(std::lgamma(k + 1.0) - std::lgamma(c + 1.0) - std::lgamma(k - c + 1.0)) *
         std::pow(q, c) * std::pow(1 - q, k - c);
}

// Normalized copies-register vector of an initialized state.
ComplexVector copies_of(const JointPureState& s) {
  const std::vector<AncillaBranch> branches = ancilla_branches(s);
  ComplexVector c = branches.front().copies;
  return c / c.norm();
}

ComplexMatrix copies_density(const std::vector<AncillaBranch>& branches) {
  ComplexMatrix out = ComplexMatrix::Zero(branches.front().copies.size(), branches.front().copies.size());
  for (const AncillaBranch& b : branches) out += b.copies * b.copies.adjoint();
  return out;
}

TEST(InitRound, SingleCopyQubitAncilla) {
  const DensityMatrix rho = DensityMatrix::pure(basis(2, 0));
  const JointPureState s = init_round(rho, alg1(1, 1));
  EXPECT_EQ(s.amplitudes().size(), 8);
  EXPECT_NEAR(s.norm(), 1.0, 1e-12);
  EXPECT_NEAR(s.reduced_ancillas()(1, 1).real(), 0.25, 1e-15);
}

TEST(InitRound, PurificationReproducesState) {
  const JointPureState mixed = init_round(DensityMatrix::maximally_mixed(2), alg1(1, 1));
  EXPECT_LE((mixed.reduced_copies() - ComplexMatrix::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff(),
            1e-10);
  const DensityMatrix rho = random_density(2, 2, std::uint64_t{5});
  const JointPureState two = init_round(rho, alg1(2, 1));
  ComplexMatrix expected(4, 4);
  for (Index a = 0; a < 2; ++a)
    for (Index b = 0; b < 2; ++b) expected.block(2 * a, 2 * b, 2, 2) = rho.matrix()(a, b) * rho.matrix();
  EXPECT_LE((two.reduced_copies() - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(InitRound, CounterStateMarginal) {
  const JointPureState s = init_round(DensityMatrix::maximally_mixed(2), alg2(2, 1));
  const ComplexMatrix a = s.reduced_ancillas();
  const Index N = 8;
  EXPECT_EQ(s.ancilla_dim(), 16);
  EXPECT_NEAR(a(N - 1, N - 1).real(), 1.0 / 6, 1e-15);
  EXPECT_NEAR(a(N, N).real(), 2.0 / 3, 1e-15);
  EXPECT_NEAR(a(N + 1, N + 1).real(), 1.0 / 6, 1e-15);
}

TEST(InitRound, BudgetRefusal) {
  FullSimConfig small;
  small.max_amplitudes = 1000;
  EXPECT_THROW(init_round(DensityMatrix::maximally_mixed(2), alg1(4, 2), small), BudgetExceeded);
  EXPECT_EQ(check_amplitude_budget(2, alg1(4, 2), FullSimConfig{}), 1024u);
}

TEST(RoundUnitary, ZeroIsIdentity) {
  JointPureState s = init_round(random_density(2, 2, std::uint64_t{1}), alg1(2, 2));
  const ComplexVector before = s.amplitudes();
  apply_round_unitary(s, PovmElement::zero(2));
  EXPECT_LE((s.amplitudes() - before).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RoundUnitary, IdentityRotatesEveryAncillaByPiOverThree) {
  const std::uint64_t k = 2;
  JointPureState s = init_round(random_density(2, 2, std::uint64_t{2}), alg1(3, k));
  apply_round_unitary(s, PovmElement::identity(2));
  const ComplexMatrix a = s.reduced_ancillas();
  for (Index idx = 0; idx < 4; ++idx) {
    const int ones = std::popcount(static_cast<unsigned>(idx));
    EXPECT_NEAR(a(idx, idx).real(), std::pow(0.75, ones) * std::pow(0.25, 2 - ones), 1e-12);
  }
}

TEST(RoundUnitary, CounterShiftsByN) {
  const RoundParams params = alg2(2, 1);
  const JointPureState init = init_round(DensityMatrix::pure(basis(2, 1)), params);
  const Index N = 8;
  const Index x = 3;
  JointPureState s(2, 2, params, kron_vec(copies_of(init), basis(2 * N, x + N)));
  apply_round_unitary(s, PovmElement::identity(2));
  EXPECT_NEAR(s.reduced_ancillas()(x + 2 + N, x + 2 + N).real(), 1.0, 1e-12);
  // wraparound: x = N - 1 shifted by 2 lands on -N + 1
  JointPureState w(2, 2, params, kron_vec(copies_of(init), basis(2 * N, 2 * N - 1)));
  apply_round_unitary(w, PovmElement::identity(2));
  EXPECT_NEAR(w.reduced_ancillas()(1, 1).real(), 1.0, 1e-12);
}

TEST(RoundUnitary, CounterRejectsNonProjector) {
  JointPureState s = init_round(DensityMatrix::maximally_mixed(2), alg2(2, 1));
  EXPECT_THROW(apply_round_unitary(s, PovmElement(diag2(0.5, 0.0))), ValidationError);
}

TEST(RoundUnitary, PreservesNorm) {
  Rng rng(3);
  for (int t = 0; t < 5; ++t) {
    JointPureState s = init_round(random_density(2, 2, rng), alg1(3, 2));
    apply_round_unitary(s, random_povm_element(2, rng));
    EXPECT_NEAR(s.norm(), 1.0, 1e-9);
    JointPureState c = init_round(random_density(2, 2, rng), alg2(2, 3));
    apply_round_unitary(c, random_projector(2, 1, rng));
    EXPECT_NEAR(c.norm(), 1.0, 1e-9);
  }
}

TEST(RoundUnitary, ActsTriviallyOnPurifiers) {
  // Reduced state of each purifier is unchanged by the round.
  const DensityMatrix rho = random_density(2, 2, std::uint64_t{8});
  JointPureState s = init_round(rho, alg1(1, 2));
  std::vector<AncillaBranch> before = ancilla_branches(s);
  apply_round_unitary(s, random_povm_element(2, std::uint64_t{9}));
  const ComplexMatrix a = copies_density(before);
  const ComplexMatrix b = copies_density(ancilla_branches(s));
  // trace out the system factor (most significant) of the d*d copy register
  auto purifier = [](const ComplexMatrix& m) {
    ComplexMatrix out = ComplexMatrix::Zero(2, 2);
    for (Index sys = 0; sys < 2; ++sys) out += m.block(2 * sys, 2 * sys, 2, 2);
    return out;
  };
  EXPECT_LE((purifier(a) - purifier(b)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Measure, DeterministicAncillaGivesZero) {
  const RoundParams params = alg1(1, 3);
  const JointPureState init = init_round(DensityMatrix::maximally_mixed(2), params);
  const JointPureState s(2, 1, params, kron_vec(copies_of(init), basis(8, 0)));
  Rng rng(4);
  for (int t = 0; t < 20; ++t) EXPECT_EQ(measure_ancillas(s, rng).outcome, 0);
}

TEST(Measure, FlipsLeaveCollapseUntouched) {
  const RoundParams params = alg1(2, 2);
  JointPureState s = init_round(random_density(2, 2, std::uint64_t{3}), params);
  apply_round_unitary(s, random_povm_element(2, std::uint64_t{4}));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng a(seed);
    Rng b(seed);
    const MeasureResult clean = measure_ancillas(s, a);
    const MeasureResult noisy = measure_ancillas(s, b, 0.2);
    EXPECT_EQ(clean.true_outcome, noisy.true_outcome);
    EXPECT_EQ(clean.collapsed.amplitudes(), noisy.collapsed.amplitudes());
  }
}

TEST(Measure, FlipsShiftMeanFraction) {
  const RoundParams params = alg1(1, 2);
  JointPureState s = init_round(DensityMatrix::pure(basis(2, 0)), params);
  apply_round_unitary(s, PovmElement(diag2(1.0, 0.0)));  // eigenvalue 1: p = 3/4
  const double p = 0.75;
  const double eta = 0.1;
  Rng rng(5);
  const int samples = 100'000;
  double sum = 0.0;
  for (int t = 0; t < samples; ++t) sum += static_cast<double>(measure_ancillas(s, rng, eta).outcome) / 2.0;
  const double expected = p + eta * (1 - 2 * p);
  const double q = (1 - eta) * p + eta * (1 - p);
  const double se = std::sqrt(q * (1 - q) / (2.0 * samples));
  EXPECT_NEAR(sum / samples, expected, 4 * se);
}

TEST(ExactDist, EigenstateGivesBinomialThreeQuarters) {
  const std::uint64_t k = 3;
  const std::vector<PovmElement> ms{PovmElement(diag2(1.0, 0.0))};
  const DiscreteDistribution d =
      exact_output_distribution(DensityMatrix::pure(basis(2, 0)), ms, alg1(2, k), 1);
  for (int c = 0; c <= 3; ++c) EXPECT_NEAR(d.pmf(c), binomial_pmf(3, c, 0.75), 1e-12);
}

TEST(ExactDist, MixedTwoCopiesOneAncilla) {
  const std::vector<PovmElement> ms{PovmElement(diag2(1.0, 0.0))};
  const DiscreteDistribution d =
      exact_output_distribution(DensityMatrix::maximally_mixed(2), ms, alg1(2, 1), 1);
  EXPECT_NEAR(d.pmf(1), 0.25 * 0.25 + 0.5 * 0.5 + 0.25 * 0.75, 1e-12);
  EXPECT_NEAR(d.pmf(1), 0.5, 1e-12);
}

TEST(ExactDist, RoundOneMatchesClosedForm) {
  Rng rng(6);
  for (int t = 0; t < 5; ++t) {
    const DensityMatrix rho = random_density(2, 2, rng);
    const std::vector<PovmElement> ms{random_projector(2, 1, rng)};
    const RoundParams params = alg1(3, 2);
    EXPECT_LE(total_variation(exact_output_distribution(rho, ms, params, 1),
                              round_output_dist_alg1(rho, ms[0], 3, 2)),
              1e-9);
  }
}

TEST(ExactDist, PreMeasuringCopiesLeavesPmfUnchanged) {
  Rng rng(7);
  const DensityMatrix rho = random_density(2, 2, rng);
  const PovmElement m = random_povm_element(2, rng);
  ComplexMatrix dephased = ComplexMatrix::Zero(2, 2);
  for (Index i = 0; i < 2; ++i) {
    const ComplexMatrix p = m.spectral().projector(i, 1);
    dephased += p * rho.matrix() * p;
  }
  const std::vector<PovmElement> ms{m};
  EXPECT_LE(total_variation(exact_output_distribution(rho, ms, alg1(3, 2), 1),
                            exact_output_distribution(DensityMatrix(dephased), ms, alg1(3, 2), 1)),
            1e-10);
}

TEST(ExactDist, RoundTwoMatchesKickbackAverage) {
  Rng rng(8);
  for (int t = 0; t < 3; ++t) {
    const DensityMatrix rho = random_density(2, 2, rng);
    const std::vector<PovmElement> ms{random_projector(2, 1, rng), random_projector(2, 1, rng)};
    const RoundParams params = alg1(3, 2);
    EXPECT_LE(total_variation(exact_output_distribution(rho, ms, params, 2),
                              marginal_output_dist(rho, ms, params, 2)),
              1e-8);
  }
}

TEST(ExactDist, CounterRoundTwoMatchesKickbackAverage) {
  Rng rng(9);
  const DensityMatrix rho = random_density(2, 2, rng);
  const std::vector<PovmElement> ms{random_projector(2, 1, rng), random_projector(2, 1, rng)};
  const RoundParams params = alg2(2, 2);
  EXPECT_LE(total_variation(exact_output_distribution(rho, ms, params, 2),
                            marginal_output_dist(rho, ms, params, 2)),
            1e-8);
}

TEST(ExactDist, CommutingOrderIrrelevant) {
  const DensityMatrix rho = random_density(2, 2, std::uint64_t{10});
  const PovmElement a(diag2(1.0, 0.0));
  const PovmElement b(diag2(0.2, 0.7));
  const std::vector<PovmElement> ab{a, b};
  const std::vector<PovmElement> ba{b, a};
  const RoundParams params = alg1(2, 2);
  EXPECT_LE(total_variation(exact_output_distribution(rho, ab, params, 2),
                            exact_output_distribution(rho, ba, params, 1)),
            1e-9);
}

TEST(ExactDist, XBasisReadoutGivesSameCopiesState) {
  const DensityMatrix rho = random_density(2, 2, std::uint64_t{11});
  JointPureState s = init_round(rho, alg1(2, 2));
  apply_round_unitary(s, random_projector(2, 1, std::uint64_t{12}));
  const ComplexMatrix traced = copies_density(ancilla_branches(s));
  ComplexMatrix h(2, 2);
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  for (std::uint64_t u = 0; u < 2; ++u) {
    const std::size_t slot[] = {s.ancilla_slot(u)};
    s.apply_local(slot, h);
  }
  const ComplexMatrix x_read = copies_density(ancilla_branches(s));
  EXPECT_LE((traced - x_read).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(RunProtocol, IdentityRoundsGiveHighEstimates) {
  const std::vector<PovmElement> ms(3, PovmElement::identity(2));
  const RoundParams params = alg1(2, 2);
  const auto records = run_protocol(DensityMatrix::maximally_mixed(2), ms, params, 13);
  ASSERT_EQ(records.size(), 3u);
  for (const FullRoundRecord& r : records) {
    EXPECT_GE(r.outcome, 0);
    EXPECT_LE(r.outcome, 2);
    EXPECT_DOUBLE_EQ(r.estimate, estimate_from_fraction(r.outcome / 2.0));
  }
  const auto again = run_protocol(DensityMatrix::maximally_mixed(2), ms, params, 13);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(records[i].outcome, again[i].outcome);
}

TEST(RunProtocol, IdentityOutcomeLawIsBinomial) {
  const std::vector<PovmElement> ms{PovmElement::identity(2)};
  const RoundParams params = alg1(1, 2);
  std::vector<std::int64_t> draws;
  for (std::uint64_t seed = 0; seed < 20000; ++seed) {
    draws.push_back(run_protocol(DensityMatrix::maximally_mixed(2), ms, params, seed)[0].outcome);
  }
  const DiscreteDistribution expected({0, 1, 2}, {0.0625, 0.375, 0.5625});
  EXPECT_LE(total_variation(empirical_distribution(draws), expected), 0.02);
}

TEST(RunProtocol, CounterEstimates) {
  const std::vector<PovmElement> ms{PovmElement::identity(2), PovmElement::zero(2)};
  const auto records = run_protocol(DensityMatrix::maximally_mixed(2), ms, alg2(2, 1), 14);
  ASSERT_EQ(records.size(), 2u);
  // A = n surely for M = I, and S in [-1, 1]
  EXPECT_GE(records[0].outcome, 1);
  EXPECT_LE(records[0].outcome, 3);
  EXPECT_GE(records[1].outcome, -1);
  EXPECT_LE(records[1].outcome, 1);
  EXPECT_DOUBLE_EQ(records[0].estimate, records[0].outcome / 2.0);
}

}  // namespace
}  // namespace shadowlab
