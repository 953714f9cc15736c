#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shadowlab/distributions.hpp"
#include "shadowlab/linalg.hpp"
#include "shadowlab/protocol.hpp"

namespace shadowlab {

inline constexpr std::uint64_t kDefaultMaxAmplitudes = std::uint64_t{1} << 26;

struct FullSimConfig {
  std::uint64_t max_amplitudes = kDefaultMaxAmplitudes;
  /// Cap on simultaneously tracked earlier-outcome branches in exact enumeration.
  std::uint64_t max_branches = std::uint64_t{1} << 16;
};

/// Amplitude count d^{2n} * ancilla_dim of a run; throws BudgetExceeded when it
/// is above `config.max_amplitudes`.
std::uint64_t check_amplitude_budget(Index d, const RoundParams& params,
                                     const FullSimConfig& config);

/// Pure state of n purified copies (each of dimension d * d: system then
/// purifier) followed by the ancilla register. Subsystems are laid out with the
/// first listed one most significant.
class JointPureState {
 public:
  JointPureState(Index copy_dim, std::uint64_t copies, RoundParams params, ComplexVector amplitudes);

  Index copy_dim() const { return d_; }
  std::uint64_t copies() const { return n_; }
  const RoundParams& params() const { return params_; }
  Index ancilla_dim() const { return ancilla_dim_; }
  Index copies_dim() const { return static_cast<Index>(amplitudes_.size()) / ancilla_dim_; }
  const ComplexVector& amplitudes() const { return amplitudes_; }
  ComplexVector& amplitudes() { return amplitudes_; }

  /// Subsystem dimensions: [sys_1, pur_1, ..., sys_n, pur_n, ancillas...], with
  /// k qubits for the rotation protocol and one 2N-level counter otherwise.
  const std::vector<Index>& dims() const { return dims_; }
  std::size_t system_slot(std::uint64_t copy) const { return 2 * copy; }
  std::size_t ancilla_slot(std::uint64_t unit) const { return 2 * n_ + unit; }

  /// Applies `gate` to the listed subsystems (first listed most significant
  /// within the gate).
  void apply_local(std::span<const std::size_t> slots, const ComplexMatrix& gate);

  double norm() const { return amplitudes_.norm(); }

  /// Reduced state of the n system factors (purifiers and ancillas traced out).
  ComplexMatrix reduced_copies() const;
  /// Reduced state of the ancilla register.
  ComplexMatrix reduced_ancillas() const;

 private:
  Index d_;
  std::uint64_t n_;
  RoundParams params_;
  Index ancilla_dim_;
  std::vector<Index> dims_;
  ComplexVector amplitudes_;
};

/// |psi_0> = R_X(pi/3)|0> for each rotation ancilla.
ComplexVector rotation_ancilla_state();
/// Initial ancilla register vector for one round.
ComplexVector initial_ancilla_vector(const RoundParams& params);

/// (purification of rho)^{(x) n} (x) initial ancillas.
JointPureState init_round(const DensityMatrix& rho, const RoundParams& params,
                          const FullSimConfig& config = {});

/// Replaces the ancilla register with a fresh one; `copies_vector` has the
/// copies-register dimension d^{2n}.
JointPureState reinit_ancillas(const JointPureState& like, const ComplexVector& copies_vector);

/// Unitary coupling M on every copy to the ancilla register. Rotation protocol:
/// n*k factors exp(-i pi/(6n) M (x) X). Counter protocol: per copy P (x) Q + (I-P) (x) I
/// with Q|x> = |x+1 mod 2N>; M must be a projector.
void apply_round_unitary(JointPureState& state, const PovmElement& m);

/// Raw readout of a basis index of the ancilla register: the number of ones
/// for the rotation protocol, the counter value x in [-N, N-1] otherwise.
std::int64_t outcome_of_ancilla_index(const RoundParams& params, Index ancilla_index);

/// Estimate produced by post-processing a raw outcome.
double estimate_of_outcome(const RoundParams& params, std::int64_t outcome);

struct MeasureResult {
  std::int64_t outcome = 0;        // raw outcome as read (after readout flips)
  std::int64_t true_outcome = 0;   // outcome of the Born sample before flips
  JointPureState collapsed;        // copies collapsed, fresh ancillas
};

/// Born-samples the ancilla register in the computational basis, collapses the
/// copies register and re-initializes the ancillas. `flip_rate` flips each
/// rotation-ancilla bit of the reported outcome independently; the copies
/// register collapses on the unflipped outcome.
MeasureResult measure_ancillas(const JointPureState& state, Rng& rng, double flip_rate = 0.0);

struct AncillaBranch {
  Index ancilla_index = 0;
  ComplexVector copies;  // unnormalized; squared norm is the Born weight
};

/// Unnormalized copies-register branches for every ancilla basis index with
/// nonzero weight (above `min_weight`).
std::vector<AncillaBranch> ancilla_branches(const JointPureState& state, double min_weight = 0.0);

struct FullRoundRecord {
  std::size_t round = 0;
  std::int64_t outcome = 0;
  double estimate = 0.0;
};

/// Runs the whole protocol on n purified copies, one round per element of ms.
std::vector<FullRoundRecord> run_protocol(const DensityMatrix& rho,
                                          std::span<const PovmElement> ms,
                                          const RoundParams& params, std::uint64_t seed,
                                          const FullSimConfig& config = {},
                                          const ReadoutNoise& noise = {});

/// Exact pmf of the raw outcome of round `round_index` (1-based), summing the
/// Born weights over all earlier-round outcome branches.
DiscreteDistribution exact_output_distribution(const DensityMatrix& rho,
                                               std::span<const PovmElement> ms,
                                               const RoundParams& params,
                                               std::size_t round_index,
                                               const FullSimConfig& config = {});

}  // namespace shadowlab
