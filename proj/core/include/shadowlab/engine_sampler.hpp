#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shadowlab/distributions.hpp"
#include "shadowlab/linalg.hpp"
#include "shadowlab/protocol.hpp"

namespace shadowlab {

/// Budget on C(n + g - 1, g - 1) * (k + 1) terms of an exact round pmf.
inline constexpr double kRoundEnumerationBudget = 1e6;

/// Distinct eigenvalues of M (merged within 1e-9) with weights Tr[P rho].
struct SpectralWeights {
  std::vector<double> eigenvalues;
  std::vector<double> weights;
};

SpectralWeights spectral_weights(const PovmElement& m, const DensityMatrix& rho);

/// Conjugation angle of one kickback: pi lambda / (6n) for the rotation
/// protocol, lambda / n for the counter protocol (lambda = pi L / (2n)).
double kickback_angle(Algorithm algorithm, double lambda, std::uint64_t n);

/// e^{-i angle M} rho e^{+i angle M}.
DensityMatrix kickback_conjugate(const DensityMatrix& rho, const PovmElement& m, double angle);

/// One kickback step; `guard_ok`, when given, receives |angle| ||M|| <= 1.
DensityMatrix kickback_step(const DensityMatrix& rho, const PovmElement& m, double lambda,
                            std::uint64_t n, Algorithm algorithm = Algorithm::kAlg1,
                            bool* guard_ok = nullptr);

struct RoundOutcome {
  std::size_t round = 0;
  double sample_mean = 0.0;  // mean eigenvalue over the n copies
  double theta = 0.0;        // rotation angle; zero for the counter protocol
  std::int64_t raw = 0;      // ones count, or counter value in [-N, N-1]
  double mu = 0.0;           // fraction of ones, or the counter value
  double estimate = 0.0;
};

/// Exact pmf over ones counts {0..k} for one rotation-protocol round.
DiscreteDistribution round_output_dist_alg1(const DensityMatrix& rho, const PovmElement& m,
                                            std::uint64_t n, std::uint64_t k,
                                            double budget = kRoundEnumerationBudget);

/// Exact pmf over counter values in [-N, N-1] for one counter-protocol round.
DiscreteDistribution round_output_dist_alg2(const DensityMatrix& rho, const PovmElement& m,
                                            std::uint64_t n, std::uint64_t p);

DiscreteDistribution round_output_dist(const DensityMatrix& rho, const PovmElement& m,
                                       const RoundParams& params);

RoundOutcome round_output_sample_alg1(const DensityMatrix& rho, const PovmElement& m,
                                      std::uint64_t n, std::uint64_t k, Rng& rng,
                                      const ReadoutNoise& noise = {});
RoundOutcome round_output_sample_alg1(const DensityMatrix& rho, const PovmElement& m,
                                      std::uint64_t n, std::uint64_t k, std::uint64_t seed);

RoundOutcome round_output_sample_alg2(const DensityMatrix& rho, const PovmElement& m,
                                      std::uint64_t n, std::uint64_t p, Rng& rng);
RoundOutcome round_output_sample_alg2(const DensityMatrix& rho, const PovmElement& m,
                                      std::uint64_t n, std::uint64_t p, std::uint64_t seed);

RoundOutcome round_output_sample(const DensityMatrix& rho, const PovmElement& m,
                                 const RoundParams& params, Rng& rng,
                                 const ReadoutNoise& noise = {});

/// Draws one kickback eigenvalue lambda (integer Rademacher sum, or pi L / (2n)).
double sample_kickback_lambda(const RoundParams& params, Rng& rng);

/// Kickback eigenvalue law as (lambda, probability) pairs.
std::vector<std::pair<double, double>> kickback_lambda_table(const RoundParams& params);

/// Estimate for index `target` (1-based) with the exact marginal law of the
/// protocol: earlier kickbacks are sampled and folded, then one round is
/// sampled on the resulting state. The output stream is Rng(seed), so
/// target = 1 reproduces round_output_sample with the same seed.
RoundOutcome marginal_sample(const DensityMatrix& rho, std::span<const PovmElement> ms,
                             const RoundParams& params, std::size_t target, std::uint64_t seed,
                             const ReadoutNoise& noise = {});

/// Exact marginal pmf of round `target` averaged over all earlier kickback
/// eigenvalues. Throws BudgetExceeded above `max_paths` kickback sequences.
DiscreteDistribution marginal_output_dist(const DensityMatrix& rho,
                                          std::span<const PovmElement> ms,
                                          const RoundParams& params, std::size_t target,
                                          std::uint64_t max_paths = 1'000'000);

struct TrajectoryOptions {
  ReadoutNoise noise;
  /// Fill per-round S1 / S2 bound / deviation fields (O(m^2) matrix work).
  bool audit_fields = false;
  /// Keep every rho_j in the result.
  bool keep_states = false;
  /// Test hook: every lambda_j is forced to zero.
  bool zero_lambdas = false;
  /// Throw instead of counting when |angle| ||M|| > 1 at a step.
  bool strict_guard = false;
};

struct TrajectoryRound {
  RoundOutcome outcome;
  double lambda = 0.0;     // kickback applied after this round
  double truth = 0.0;      // Tr[M_j rho]
  double shadow = 0.0;     // Tr[M_j rho_j]
  double s1 = 0.0;         // sum_{l<j} first-order terms for index j
  double s2_bound = 0.0;   // sum_{l<j} second-order bounds for index j
  double cum_deviation = 0.0;  // Tr[M_j rho_j] - Tr[M_j rho]
};

struct KickbackTrajectory {
  RoundParams params;
  std::vector<double> lambdas;
  std::vector<DensityMatrix> states;  // rho_1..rho_m when keep_states
  std::vector<TrajectoryRound> rounds;
  std::uint64_t guard_violations = 0;
};

/// One lambda trajectory with a round-local output per index. Each output
/// carries the exact marginal law; the joint law across indices is not that of
/// the physical protocol.
KickbackTrajectory trajectory_run(const DensityMatrix& rho, std::span<const PovmElement> ms,
                                  const RoundParams& params, std::uint64_t seed,
                                  const TrajectoryOptions& options = {});

struct NaiveResult {
  std::vector<double> estimates;
  std::uint64_t per_index = 0;
  std::uint64_t total_copies = 0;
};

/// ceil(ln(2m / delta) / (2 eps^2)) fresh copies per index.
std::uint64_t naive_copies_per_index(std::uint64_t m, double epsilon, double delta);

NaiveResult naive_baseline_run(const DensityMatrix& rho, std::span<const PovmElement> ms,
                               double epsilon, double delta, std::uint64_t seed);

/// Counter value (A + S) wrapped into [-N, N-1].
std::int64_t wrap_counter(std::int64_t value, std::uint64_t N);

}  // namespace shadowlab
