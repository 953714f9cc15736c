#include "shadowlab/engine_full.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "shadowlab/error.hpp"

namespace shadowlab {

namespace {

constexpr double kPi = std::numbers::pi;

Index ancilla_dim_of(const RoundParams& params) {
  if (params.algorithm == Algorithm::kAlg1) {
    if (params.k >= 30) throw BudgetExceeded("full simulation: k >= 30 ancilla qubits");
    return Index{1} << params.k;
  }
  return static_cast<Index>(2 * params.N());
}

ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

ComplexVector purification(const DensityMatrix& rho) {
  const SpectralDecomposition s = spectral_decompose(rho.matrix());
  const Index d = rho.dim();
  ComplexVector psi = ComplexVector::Zero(d * d);
  for (Index r = 0; r < d; ++r) {
    const double w = std::sqrt(std::max(0.0, s.eigenvalues(r)));
    for (Index sys = 0; sys < d; ++sys) psi(sys * d + r) = w * s.eigenvectors(sys, r);
  }
  return psi;
}

ComplexVector copies_vector(const DensityMatrix& rho, std::uint64_t n) {
  const ComplexVector one = purification(rho);
  ComplexVector out = ComplexVector::Ones(1);
  for (std::uint64_t c = 0; c < n; ++c) out = kron(out, one);
  return out;
}

ComplexMatrix translation(Index dim) {
  ComplexMatrix q = ComplexMatrix::Zero(dim, dim);
  for (Index i = 0; i < dim; ++i) q((i + 1) % dim, i) = 1.0;
  return q;
}

// Rows indexed by the kept subsystems, columns by the rest.
ComplexMatrix split_matrix(const ComplexVector& amplitudes, const std::vector<Index>& dims,
                           const std::vector<bool>& keep) {
  Index keep_dim = 1;
  Index rest_dim = 1;
  for (std::size_t s = 0; s < dims.size(); ++s) (keep[s] ? keep_dim : rest_dim) *= dims[s];
  ComplexMatrix out = ComplexMatrix::Zero(keep_dim, rest_dim);
  std::vector<Index> digit(dims.size(), 0);
  for (Index t = 0; t < amplitudes.size(); ++t) {
    Index row = 0;
    Index col = 0;
    for (std::size_t s = 0; s < dims.size(); ++s) {
      if (keep[s]) {
        row = row * dims[s] + digit[s];
      } else {
        col = col * dims[s] + digit[s];
      }
    }
    out(row, col) = amplitudes(t);
    for (std::size_t s = dims.size(); s-- > 0;) {
      if (++digit[s] < dims[s]) break;
      digit[s] = 0;
    }
  }
  return out;
}

ComplexMatrix round_gate(const PovmElement& m, const RoundParams& params, Index ancilla_unit_dim) {
  const Index d = m.dim();
  if (params.algorithm == Algorithm::kAlg1) {
    const double alpha = kPi / (6.0 * static_cast<double>(params.n));
    const SpectralDecomposition& s = m.spectral();
    ComplexMatrix gate = ComplexMatrix::Zero(2 * d, 2 * d);
    for (Index j = 0; j < d; ++j) {
      const ComplexVector v = s.eigenvectors.col(j);
      const ComplexMatrix proj = v * v.adjoint();
      const double a = alpha * s.eigenvalues(j);
      ComplexMatrix rot(2, 2);
      rot << std::cos(a), Complex(0.0, -std::sin(a)), Complex(0.0, -std::sin(a)), std::cos(a);
      gate += Eigen::kroneckerProduct(proj, rot).eval();
    }
    return gate;
  }
  if (!m.is_projector()) {
    throw ValidationError("counter-register round requires a projector measurement");
  }
  const ComplexMatrix& p = m.matrix();
  const ComplexMatrix q = translation(ancilla_unit_dim);
  const ComplexMatrix id_d = ComplexMatrix::Identity(d, d);
  const ComplexMatrix id_q = ComplexMatrix::Identity(ancilla_unit_dim, ancilla_unit_dim);
  return Eigen::kroneckerProduct(p, q).eval() + Eigen::kroneckerProduct((id_d - p).eval(), id_q).eval();
}

}  // namespace

std::uint64_t check_amplitude_budget(Index d, const RoundParams& params,
                                     const FullSimConfig& config) {
  params.validate();
  double log_size = 2.0 * static_cast<double>(params.n) * std::log2(static_cast<double>(d));
  log_size += params.algorithm == Algorithm::kAlg1
                  ? static_cast<double>(params.k)
                  : std::log2(2.0 * static_cast<double>(params.N()));
  const double limit = std::log2(static_cast<double>(config.max_amplitudes));
  if (log_size > limit + 1e-9) {
    std::ostringstream os;
    os << "full simulation needs 2^" << log_size << " amplitudes; the budget allows "
       << config.max_amplitudes;
    throw BudgetExceeded(os.str());
  }
  return static_cast<std::uint64_t>(std::llround(std::exp2(log_size)));
}

JointPureState::JointPureState(Index copy_dim, std::uint64_t copies, RoundParams params,
                               ComplexVector amplitudes)
    : d_(copy_dim), n_(copies), params_(params), ancilla_dim_(ancilla_dim_of(params)),
      amplitudes_(std::move(amplitudes)) {
  for (std::uint64_t c = 0; c < n_; ++c) {
    dims_.push_back(d_);
    dims_.push_back(d_);
  }
  if (params_.algorithm == Algorithm::kAlg1) {
    for (std::uint64_t a = 0; a < params_.k; ++a) dims_.push_back(2);
  } else {
    dims_.push_back(ancilla_dim_);
  }
  Index total = 1;
  for (Index dim : dims_) total *= dim;
  if (amplitudes_.size() != total) {
    throw DimensionMismatch("JointPureState: amplitude vector does not match the register layout");
  }
}

void JointPureState::apply_local(std::span<const std::size_t> slots, const ComplexMatrix& gate) {
  const std::size_t count = dims_.size();
  std::vector<Index> stride(count, 1);
  for (std::size_t s = count - 1; s-- > 0;) stride[s] = stride[s + 1] * dims_[s + 1];

  Index gate_dim = 1;
  std::vector<bool> used(count, false);
  for (std::size_t slot : slots) {
    if (slot >= count || used[slot]) throw ValidationError("apply_local: invalid slot list");
    used[slot] = true;
    gate_dim *= dims_[slot];
  }
  if (gate.rows() != gate_dim || gate.cols() != gate_dim) {
    throw DimensionMismatch("apply_local: gate dimension does not match the slots");
  }
  std::vector<Index> offsets(static_cast<std::size_t>(gate_dim), 0);
  for (Index local = 0; local < gate_dim; ++local) {
    Index rem = local;
    Index off = 0;
    for (std::size_t i = slots.size(); i-- > 0;) {
      const Index dim = dims_[slots[i]];
      off += (rem % dim) * stride[slots[i]];
      rem /= dim;
    }
    offsets[static_cast<std::size_t>(local)] = off;
  }

  ComplexVector in(gate_dim);
  ComplexVector out(gate_dim);
  const Index total = amplitudes_.size();
  for (Index base = 0; base < total; ++base) {
    bool is_base = true;
    for (std::size_t slot : slots) {
      if ((base / stride[slot]) % dims_[slot] != 0) {
        is_base = false;
        break;
      }
    }
    if (!is_base) continue;
    for (Index i = 0; i < gate_dim; ++i) in(i) = amplitudes_(base + offsets[static_cast<std::size_t>(i)]);
    out.noalias() = gate * in;
    for (Index i = 0; i < gate_dim; ++i) amplitudes_(base + offsets[static_cast<std::size_t>(i)]) = out(i);
  }
}

ComplexMatrix JointPureState::reduced_copies() const {
  std::vector<bool> keep(dims_.size(), false);
  for (std::uint64_t c = 0; c < n_; ++c) keep[system_slot(c)] = true;
  const ComplexMatrix psi = split_matrix(amplitudes_, dims_, keep);
  return psi * psi.adjoint();
}

ComplexMatrix JointPureState::reduced_ancillas() const {
  const Eigen::Map<const ComplexMatrix> psi(amplitudes_.data(), ancilla_dim_, copies_dim());
  return psi * psi.adjoint();
}

ComplexVector rotation_ancilla_state() {
  ComplexVector v(2);
  v << std::cos(kPi / 6.0), Complex(0.0, -std::sin(kPi / 6.0));
  return v;
}

ComplexVector initial_ancilla_vector(const RoundParams& params) {
  if (params.algorithm == Algorithm::kAlg1) {
    const ComplexVector one = rotation_ancilla_state();
    ComplexVector out = ComplexVector::Ones(1);
    for (std::uint64_t a = 0; a < params.k; ++a) out = kron(out, one);
    return out;
  }
  const PsiPState psi(params.p, params.n);
  return psi.amplitudes().cast<Complex>();
}

JointPureState init_round(const DensityMatrix& rho, const RoundParams& params,
                          const FullSimConfig& config) {
  check_amplitude_budget(rho.dim(), params, config);
  return JointPureState(rho.dim(), params.n, params,
                        kron(copies_vector(rho, params.n), initial_ancilla_vector(params)));
}

JointPureState reinit_ancillas(const JointPureState& like, const ComplexVector& copies) {
  if (copies.size() != like.copies_dim()) {
    throw DimensionMismatch("reinit_ancillas: copies vector has the wrong dimension");
  }
  return JointPureState(like.copy_dim(), like.copies(), like.params(),
                        kron(copies, initial_ancilla_vector(like.params())));
}

void apply_round_unitary(JointPureState& state, const PovmElement& m) {
  if (m.dim() != state.copy_dim()) {
    throw DimensionMismatch("apply_round_unitary: measurement and copy dimensions differ");
  }
  const RoundParams& params = state.params();
  const Index unit_dim = params.algorithm == Algorithm::kAlg1 ? 2 : state.ancilla_dim();
  const ComplexMatrix gate = round_gate(m, params, unit_dim);
  const std::uint64_t units = params.algorithm == Algorithm::kAlg1 ? params.k : 1;
  for (std::uint64_t c = 0; c < state.copies(); ++c) {
    for (std::uint64_t a = 0; a < units; ++a) {
      const std::size_t slots[] = {state.system_slot(c), state.ancilla_slot(a)};
      state.apply_local(slots, gate);
    }
  }
}

std::int64_t outcome_of_ancilla_index(const RoundParams& params, Index ancilla_index) {
  if (params.algorithm == Algorithm::kAlg1) {
    return std::popcount(static_cast<std::uint64_t>(ancilla_index));
  }
  return static_cast<std::int64_t>(ancilla_index) - static_cast<std::int64_t>(params.N());
}

double estimate_of_outcome(const RoundParams& params, std::int64_t outcome) {
  if (params.algorithm == Algorithm::kAlg1) {
    return estimate_from_fraction(static_cast<double>(outcome) / static_cast<double>(params.k));
  }
  return estimate_lowmem(outcome, params.n);
}

MeasureResult measure_ancillas(const JointPureState& state, Rng& rng, double flip_rate) {
  if (flip_rate < 0.0 || flip_rate > 0.5) {
    throw ValidationError("measure_ancillas: flip rate must lie in [0, 1/2]");
  }
  if (flip_rate > 0.0 && state.params().algorithm != Algorithm::kAlg1) {
    throw ValidationError("measure_ancillas: readout flips apply to rotation ancillas only");
  }
  const Index adim = state.ancilla_dim();
  const Eigen::Map<const ComplexMatrix> psi(state.amplitudes().data(), adim, state.copies_dim());
  const RealVector weights = psi.rowwise().squaredNorm();
  std::discrete_distribution<Index> born(weights.data(), weights.data() + weights.size());
  const Index a = born(rng);

  const ComplexVector row = psi.row(a).transpose();
  const std::int64_t true_outcome = outcome_of_ancilla_index(state.params(), a);
  std::int64_t outcome = true_outcome;
  if (flip_rate > 0.0) {
    const auto k = static_cast<std::int64_t>(state.params().k);
    std::binomial_distribution<std::int64_t> keep_ones(true_outcome, 1.0 - flip_rate);
    std::binomial_distribution<std::int64_t> new_ones(k - true_outcome, flip_rate);
    outcome = keep_ones(rng) + new_ones(rng);
  }
  return MeasureResult{outcome, true_outcome, reinit_ancillas(state, row / row.norm())};
}

std::vector<AncillaBranch> ancilla_branches(const JointPureState& state, double min_weight) {
  const Index adim = state.ancilla_dim();
  const Eigen::Map<const ComplexMatrix> psi(state.amplitudes().data(), adim, state.copies_dim());
  std::vector<AncillaBranch> out;
  for (Index a = 0; a < adim; ++a) {
    const double w = psi.row(a).squaredNorm();
    if (w > min_weight) out.push_back(AncillaBranch{a, psi.row(a).transpose()});
  }
  return out;
}

std::vector<FullRoundRecord> run_protocol(const DensityMatrix& rho,
                                          std::span<const PovmElement> ms,
                                          const RoundParams& params, std::uint64_t seed,
                                          const FullSimConfig& config, const ReadoutNoise& noise) {
  noise.validate();
  JointPureState state = init_round(rho, params, config);
  Rng rng(seed);
  std::vector<FullRoundRecord> records;
  records.reserve(ms.size());
  for (std::size_t j = 0; j < ms.size(); ++j) {
    apply_round_unitary(state, ms[j]);
    MeasureResult r = measure_ancillas(state, rng, noise.eta);
    double estimate;
    if (params.algorithm == Algorithm::kAlg1) {
      const double mu = static_cast<double>(r.outcome) / static_cast<double>(params.k);
      estimate = estimate_from_fraction(corrected_fraction(mu, noise));
    } else {
      estimate = estimate_of_outcome(params, r.outcome);
    }
    records.push_back(FullRoundRecord{j + 1, r.outcome, estimate});
    state = std::move(r.collapsed);
  }
  return records;
}

DiscreteDistribution exact_output_distribution(const DensityMatrix& rho,
                                               std::span<const PovmElement> ms,
                                               const RoundParams& params,
                                               std::size_t round_index,
                                               const FullSimConfig& config) {
  if (round_index == 0 || round_index > ms.size()) {
    throw ValidationError("exact_output_distribution: round index out of range");
  }
  const JointPureState first = init_round(rho, params, config);
  std::vector<ComplexVector> branches{copies_vector(rho, params.n)};

  for (std::size_t j = 0; j + 1 < round_index; ++j) {
    std::vector<ComplexVector> next;
    for (const ComplexVector& b : branches) {
      JointPureState s = reinit_ancillas(first, b);
      apply_round_unitary(s, ms[j]);
      for (AncillaBranch& ab : ancilla_branches(s)) {
        next.push_back(std::move(ab.copies));
        if (next.size() > config.max_branches) {
          std::ostringstream os;
          os << "exact enumeration exceeds " << config.max_branches << " outcome branches";
          throw BudgetExceeded(os.str());
        }
      }
    }
    branches = std::move(next);
  }

  std::map<std::int64_t, double> pmf;
  const Index adim = first.ancilla_dim();
  for (Index a = 0; a < adim; ++a) pmf[outcome_of_ancilla_index(params, a)] += 0.0;
  for (const ComplexVector& b : branches) {
    JointPureState s = reinit_ancillas(first, b);
    apply_round_unitary(s, ms[round_index - 1]);
    const Eigen::Map<const ComplexMatrix> psi(s.amplitudes().data(), adim, s.copies_dim());
    const RealVector w = psi.rowwise().squaredNorm();
    for (Index a = 0; a < adim; ++a) pmf[outcome_of_ancilla_index(params, a)] += w(a);
  }
  std::vector<std::int64_t> values;
  std::vector<double> probs;
  for (const auto& [x, p] : pmf) {
    values.push_back(x);
    probs.push_back(p);
  }
  return {std::move(values), std::move(probs)};
}

}  // namespace shadowlab
