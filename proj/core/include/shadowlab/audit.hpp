#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "shadowlab/engine_sampler.hpp"
#include "shadowlab/linalg.hpp"

namespace shadowlab {

/// Floating-point allowance when comparing two sides of an inequality:
/// a check fails when lhs > rhs + kAuditSlack * max(1, |rhs|).
inline constexpr double kAuditSlack = 1e-12;

struct AuditReport {
  std::string kind;
  std::uint64_t instances = 0;
  std::uint64_t checks = 0;
  /// Largest lhs - rhs over all checks (after slack); negative when every
  /// inequality holds with room.
  double max_violation = -std::numeric_limits<double>::infinity();
  std::string worst;  // description of the check attaining max_violation
  std::vector<std::string> notes;

  bool pass() const { return max_violation <= 0.0; }
  /// Records lhs <= rhs.
  void check_le(double lhs, double rhs, const std::string& what);
  void merge(const AuditReport& other);
};

std::string format_report(const AuditReport& report);

/// One step l of the deviation chain for target index i.
struct DeviationStep {
  std::size_t step = 0;      // 1-based round l < i
  double lambda = 0.0;
  double a_norm = 0.0;       // ||A||, A = angle_l M_l
  double delta = 0.0;        // Tr[M_i rho_{l+1}] - Tr[M_i rho_l]
  double q = 0.0;            // Tr[i [M_l, M_i] rho_l]
  double s1 = 0.0;           // angle_l * q
  double matrix_lhs = 0.0;   // ||e^{iA} M_i e^{-iA} - M_i - i[A, M_i]||
  double rhs = 0.0;          // ||[A,[A,M_i]]|| times the series coefficient
  double scalar_bound = 0.0; // c2 lambda^2 / n^2, or 4 c(||A||) ||A||^2 ||M_i||
};

struct DeviationChain {
  std::size_t target = 0;
  std::vector<DeviationStep> steps;
  double deviation = 0.0;  // Tr[M_i rho_i] - Tr[M_i rho]
  double first_order_sum = 0.0;
  double second_order_sum = 0.0;  // sum of rhs
  double lambda_q_sum = 0.0;      // sum lambda_l q_l
  double scalar_sum = 0.0;        // sum of scalar bounds
  double first_order_coefficient = 0.0;  // pi / (6n) or 1 / n
};

/// Evaluates the chain for `target` (1-based) on a trajectory run with
/// keep_states.
DeviationChain deviation_chain(const KickbackTrajectory& trajectory,
                               std::span<const PovmElement> ms, std::size_t target);

/// Every inequality of the chain for one target index.
AuditReport deviation_audit(const KickbackTrajectory& trajectory,
                            std::span<const PovmElement> ms, std::size_t target);

enum class AuditKind {
  kConjugateBound,
  kDeviationChain,
  kCosBound,
  kExpBound,
  kLipschitz,
  kNormalization,
  kSubgaussian,
};

AuditKind parse_audit_kind(const std::string& text);
std::string to_string(AuditKind kind);
std::vector<AuditKind> all_audit_kinds();

/// Random Hermitian pairs with ||A|| <= 1 over the listed dimensions.
AuditReport audit_conjugate_bound(std::uint64_t count, std::uint64_t seed,
                                  std::span<const Index> dims = {});

struct DeviationAuditOptions {
  std::vector<Index> dims{2, 4, 8};
  std::uint64_t max_m = 32;
  double epsilon = 0.2;
  double delta = 0.05;
};

/// Random instances with planner-chosen (n, k); every target of every
/// trajectory is audited.
AuditReport audit_deviation_chain(std::uint64_t count, std::uint64_t seed,
                                  const DeviationAuditOptions& options = {});

/// cos(x) <= 1 - x^2/4 on a grid over [-pi/2, pi/2].
AuditReport audit_cos_bound(std::uint64_t points);
/// e^{-x} <= 1 - x + x^2/2 on a grid over [0, 50].
AuditReport audit_exp_bound(std::uint64_t points);
/// The inverse readout map is (6/pi)(2/sqrt 3)-Lipschitz on (1/4, 3/4).
AuditReport audit_lipschitz(std::uint64_t points);

/// Exact binomial identity up to p = 64, Fourier pmf normalization for
/// p <= 20 and n <= 64 (pairs with p < 2n^2), counter amplitudes vs noise pmf.
AuditReport audit_normalization();

/// E[exp(L^2/K^2)] <= 2 for the Fourier pmf and E[exp(lambda^2/(4k))] <= 2.
AuditReport audit_subgaussian();

/// Dispatch used by the command line; `count` is the instance or grid size.
AuditReport run_audit(AuditKind kind, std::uint64_t count, std::uint64_t seed);

}  // namespace shadowlab
