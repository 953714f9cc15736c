#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace shadowlab {

// ---------------------------------------------------------------------------
// Scalar maps of a single estimation round.
//
// The ancilla rotation angle for an eigenvalue sample mean s is
// theta = pi/3 * (1 + s); each ancilla reads |1> with probability sin^2(theta/2)
// and the fraction mu of ones is inverted by (6/pi) asin(sqrt(mu)) - 1.
// ---------------------------------------------------------------------------

double theta_of_mean(double sample_mean);
double readout_prob(double theta);

/// Raw values lie in [-1, 2]; `clamp` restricts the result to [0, 1].
double estimate_from_fraction(double mu, bool clamp = false);

/// Counter-register estimate mu / n. `mu` must lie in [-N, N - 1], N = 2 n^2.
double estimate_lowmem(std::int64_t mu, std::uint64_t n);

/// Half-width N = 2 n^2 of the counter register range [-N, N - 1].
std::uint64_t counter_half_range(std::uint64_t n);

/// Readout flips applied to rotation ancillas, with optional de-biasing
/// mu -> (mu - eta) / (1 - 2 eta) before inversion (requires eta < 1/2).
struct ReadoutNoise {
  double eta = 0.0;
  bool debias = false;

  void validate() const;
};

/// Fraction of ones used for inversion: the de-biased value clamped to [0, 1]
/// when de-biasing is on and eta > 0, otherwise `mu` unchanged.
double corrected_fraction(double mu, const ReadoutNoise& noise);

// ---------------------------------------------------------------------------
// Planners
// ---------------------------------------------------------------------------

inline constexpr double kDefaultC0 = 2.0;
inline constexpr double kDefaultC1 = std::numbers::pi / 6.0;
/// pi^2 (e^2 - 3) / 36
inline constexpr double kDefaultC2 = 1.2032846497398342;
inline constexpr double kDefaultSubgaussianC = 2.0;

struct ProtocolConstants {
  double c0 = kDefaultC0;
  double c1 = kDefaultC1;
  double c2 = kDefaultC2;
  double C = kDefaultSubgaussianC;

  void validate() const;
};

/// Constants of the counter-register planner (C2 does not occur).
struct LowMemConstants {
  double C0 = 1.0;
  double C1 = 1.0;
  double C3 = 1.0;
  double C4 = 1.0;
  double C5 = 1.0;

  void validate() const;
};

enum class Relation { kLessEqual, kGreaterEqual };

/// One inequality evaluated at the chosen parameters: lhs (relation) rhs.
/// `margin` is positive when the inequality holds with room to spare.
struct ConstraintCheck {
  std::string name;
  double lhs = 0.0;
  Relation relation = Relation::kGreaterEqual;
  double rhs = 0.0;
  bool enforced = true;  // informational rows are reported but not required

  double margin() const { return relation == Relation::kGreaterEqual ? lhs - rhs : rhs - lhs; }
  bool holds() const { return margin() >= 0.0; }
};

struct PlanOptions {
  /// Replace delta by delta / m (simultaneous guarantee over all indices).
  bool union_bound = false;
  /// Largest n the planner will consider before reporting infeasibility.
  std::uint64_t n_ceiling = 1'000'000'000'000ULL;
};

struct Alg1Plan {
  std::uint64_t m = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double effective_delta = 0.0;  // delta or delta / m under the union bound
  ProtocolConstants constants;
  std::optional<double> cmax_used;
  bool union_bound = false;
  std::uint64_t k = 0;
  std::uint64_t n = 0;
  bool feasible = false;
  std::vector<ConstraintCheck> constraints;
};

struct Alg2Plan {
  std::uint64_t m = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double effective_delta = 0.0;
  LowMemConstants constants;
  bool union_bound = false;
  std::uint64_t n = 0;  // power of two
  std::uint64_t p = 0;
  std::uint64_t N = 0;  // 2 n^2
  double p_lower = 0.0;  // admissible real interval for p at the chosen n
  double p_upper = 0.0;
  bool feasible = false;
  std::vector<ConstraintCheck> constraints;
};

/// Evaluates the four sample-size constraints for given (m, eps, delta, k, n).
/// With `cmax`, the bounded-commutator variant is used and the general
/// coefficient 8 c1^2 is appended as an informational row.
std::vector<ConstraintCheck> alg1_constraints(std::uint64_t m, double epsilon, double delta,
                                              std::uint64_t k, std::uint64_t n,
                                              const ProtocolConstants& constants,
                                              std::optional<double> cmax);

Alg1Plan plan_alg1(std::uint64_t m, double epsilon, double delta,
                   const ProtocolConstants& constants = {}, std::optional<double> cmax = {},
                   const PlanOptions& options = {});

std::vector<ConstraintCheck> alg2_constraints(std::uint64_t m, double epsilon, double delta,
                                              std::uint64_t n, std::uint64_t p,
                                              const LowMemConstants& constants);

Alg2Plan plan_alg2(std::uint64_t m, double epsilon, double delta,
                   const LowMemConstants& constants = {}, const PlanOptions& options = {});

enum class Algorithm { kAlg1, kAlg2 };

Algorithm parse_algorithm(const std::string& text);  // "alg1" | "alg2"
std::string to_string(Algorithm algorithm);

/// Parameters of one estimation round shared by every engine. `k` is the
/// ancilla count of the rotation protocol, `p` the counter-state parameter of
/// the counter-register protocol; the unused one is ignored.
struct RoundParams {
  Algorithm algorithm = Algorithm::kAlg1;
  std::uint64_t n = 1;
  std::uint64_t k = 1;
  std::uint64_t p = 1;

  void validate() const;
  std::uint64_t N() const { return counter_half_range(n); }
};

RoundParams round_params(const Alg1Plan& plan);
RoundParams round_params(const Alg2Plan& plan);

/// Text report: parameters then one "name: lhs >= rhs margin" line per constraint.
std::string format_plan(const Alg1Plan& plan);
std::string format_plan(const Alg2Plan& plan);

}  // namespace shadowlab
