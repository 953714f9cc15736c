#include "shadowlab/audit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "shadowlab/distributions.hpp"
#include "shadowlab/error.hpp"
#include "shadowlab/protocol.hpp"

namespace shadowlab {

namespace {

constexpr double kPi = std::numbers::pi;

ComplexMatrix random_hermitian(Index d, Rng& rng) {
  const ComplexMatrix g = ginibre(d, d, rng);
  return 0.5 * (g + g.adjoint());
}

std::string describe(const std::string& what, double lhs, double rhs) {
  std::ostringstream os;
  os << what << ": " << lhs << " <= " << rhs;
  return os.str();
}

}  // namespace

void AuditReport::check_le(double lhs, double rhs, const std::string& what) {
  ++checks;
  const double violation = lhs - rhs - kAuditSlack * std::max(1.0, std::abs(rhs));
  if (violation > max_violation || std::isnan(violation)) {
    max_violation = std::isnan(violation) ? std::numeric_limits<double>::infinity() : violation;
    worst = describe(what, lhs, rhs);
  }
}

void AuditReport::merge(const AuditReport& other) {
  instances += other.instances;
  checks += other.checks;
  if (other.max_violation > max_violation) {
    max_violation = other.max_violation;
    worst = other.worst;
  }
  notes.insert(notes.end(), other.notes.begin(), other.notes.end());
}

std::string format_report(const AuditReport& report) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "audit: " << report.kind << '\n'
     << "instances: " << report.instances << '\n'
     << "checks: " << report.checks << '\n'
     << "max_violation: " << report.max_violation << '\n'
     << "worst: " << (report.worst.empty() ? "-" : report.worst) << '\n';
  for (const std::string& note : report.notes) os << "note: " << note << '\n';
  os << "result: " << (report.pass() ? "pass" : "FAIL") << '\n';
  return os.str();
}

DeviationChain deviation_chain(const KickbackTrajectory& trajectory,
                               std::span<const PovmElement> ms, std::size_t target) {
  if (target == 0 || target > ms.size()) throw ValidationError("deviation_chain: target out of range");
  if (trajectory.states.size() < target) {
    throw ValidationError("deviation_chain: trajectory states through the target round are required");
  }
  const RoundParams& params = trajectory.params;
  const double nd = static_cast<double>(params.n);
  const ComplexMatrix& b = ms[target - 1].matrix();
  const double b_norm = operator_norm(b);
  const Complex i_unit(0.0, 1.0);

  DeviationChain chain;
  chain.target = target;
  chain.first_order_coefficient = params.algorithm == Algorithm::kAlg1 ? kPi / (6.0 * nd) : 1.0 / nd;
  for (std::size_t l = 0; l + 1 < target; ++l) {
    DeviationStep st;
    st.step = l + 1;
    st.lambda = trajectory.lambdas[l];
    const double angle = kickback_angle(params.algorithm, st.lambda, params.n);
    const ComplexMatrix a = angle * ms[l].matrix();
    st.a_norm = operator_norm(a);
    const DensityMatrix& rho_l = trajectory.states[l];
    const DensityMatrix& rho_next = trajectory.states[l + 1];
    st.delta = expectation(b, rho_next) - expectation(b, rho_l);
    const ComplexMatrix comm_lb = i_unit * commutator(ms[l].matrix(), b);
    st.q = expectation(comm_lb, rho_l);
    st.s1 = angle * st.q;

    const ComplexMatrix u = expm_i(ms[l].spectral(), angle);
    const ComplexMatrix rotated = u * b * u.adjoint();
    st.matrix_lhs = operator_norm(rotated - b - i_unit * commutator(a, b));
    const double coefficient =
        st.a_norm <= 1.0 ? kConjugateBoundCoefficient : commutator_series_coefficient(st.a_norm);
    st.rhs = operator_norm(commutator(a, commutator(a, b))) * coefficient;
    st.scalar_bound = params.algorithm == Algorithm::kAlg1 && st.a_norm <= 1.0
                          ? kDefaultC2 * st.lambda * st.lambda / (nd * nd)
                          : 4.0 * coefficient * st.a_norm * st.a_norm * b_norm;

    chain.first_order_sum += st.s1;
    chain.second_order_sum += st.rhs;
    chain.lambda_q_sum += st.lambda * st.q;
    chain.scalar_sum += st.scalar_bound;
    chain.steps.push_back(st);
  }
  chain.deviation = expectation(b, trajectory.states[target - 1]) - expectation(b, trajectory.states[0]);
  return chain;
}

AuditReport deviation_audit(const KickbackTrajectory& trajectory,
                            std::span<const PovmElement> ms, std::size_t target) {
  const DeviationChain chain = deviation_chain(trajectory, ms, target);
  AuditReport report;
  report.kind = "deviation-chain";
  report.instances = 1;
  double telescoped = 0.0;
  for (const DeviationStep& st : chain.steps) {
    std::ostringstream tag;
    tag << "target " << target << " step " << st.step;
    report.check_le(std::abs(st.delta - st.s1), st.matrix_lhs, tag.str() + " |delta - S1| <= matrix norm");
    report.check_le(st.matrix_lhs, st.rhs, tag.str() + " conjugation bound");
    report.check_le(st.rhs, st.scalar_bound, tag.str() + " second-order scalar bound");
    report.check_le(std::abs(st.q), 2.0, tag.str() + " |q| <= 2");
    telescoped += st.delta;
  }
  report.check_le(std::abs(telescoped - chain.deviation), 0.0, "telescoping sum");
  report.check_le(std::abs(chain.deviation),
                  std::abs(chain.first_order_sum) + chain.second_order_sum, "triangle inequality");
  report.check_le(std::abs(chain.deviation),
                  chain.first_order_coefficient * std::abs(chain.lambda_q_sum) + chain.scalar_sum,
                  "telescoped bound");
  if (trajectory.params.algorithm == Algorithm::kAlg1 && trajectory.guard_violations > 0) {
    report.notes.push_back("trajectory left the |angle| ||M|| <= 1 regime; general coefficient used");
  }
  return report;
}

AuditKind parse_audit_kind(const std::string& text) {
  for (AuditKind kind : all_audit_kinds()) {
    if (to_string(kind) == text) return kind;
  }
  throw ValidationError("unknown audit kind '" + text + "'");
}

std::string to_string(AuditKind kind) {
  switch (kind) {
    case AuditKind::kConjugateBound: return "conjugate-bound";
    case AuditKind::kDeviationChain: return "deviation-chain";
    case AuditKind::kCosBound: return "cos-bound";
    case AuditKind::kExpBound: return "exp-bound";
    case AuditKind::kLipschitz: return "lipschitz";
    case AuditKind::kNormalization: return "normalization";
    case AuditKind::kSubgaussian: return "subgaussian";
  }
  return "unknown";
}

std::vector<AuditKind> all_audit_kinds() {
  return {AuditKind::kConjugateBound, AuditKind::kDeviationChain, AuditKind::kCosBound,
          AuditKind::kExpBound,       AuditKind::kLipschitz,      AuditKind::kNormalization,
          AuditKind::kSubgaussian};
}

AuditReport audit_conjugate_bound(std::uint64_t count, std::uint64_t seed,
                                  std::span<const Index> dims) {
  static const Index kDefaultDims[] = {2, 4, 8, 16};
  if (dims.empty()) dims = kDefaultDims;
  AuditReport report;
  report.kind = "conjugate-bound";
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::uint64_t t = 0; t < count; ++t) {
    const Index d = dims[t % dims.size()];
    ComplexMatrix a = random_hermitian(d, rng);
    a *= (1.0 - unit(rng)) / operator_norm(a);  // ||A|| uniform in (0, 1]
    const ComplexMatrix b = random_hermitian(d, rng);
    const ConjugateDeviation cd = conjugate_deviation(a, b);
    std::ostringstream tag;
    tag << "pair " << t << " (d=" << d << ")";
    report.check_le(cd.lhs, cd.rhs, tag.str());
    ++report.instances;
  }
  return report;
}

AuditReport audit_deviation_chain(std::uint64_t count, std::uint64_t seed,
                                  const DeviationAuditOptions& options) {
  if (options.dims.empty() || options.max_m == 0) {
    throw ValidationError("audit_deviation_chain: empty dimension list or max_m = 0");
  }
  AuditReport report;
  report.kind = "deviation-chain";
  Rng rng(seed);
  std::uint64_t guard_runs = 0;
  for (std::uint64_t t = 0; t < count; ++t) {
    const Index d = options.dims[t % options.dims.size()];
    std::uniform_int_distribution<std::uint64_t> pick_m(1, options.max_m);
    const std::uint64_t m = pick_m(rng);
    std::vector<PovmElement> ms;
    ms.reserve(m);
    for (std::uint64_t j = 0; j < m; ++j) {
      if (t % 2 == 0) {
        std::uniform_int_distribution<Index> pick_rank(1, std::max<Index>(1, d - 1));
        ms.push_back(random_projector(d, pick_rank(rng), rng));
      } else {
        ms.push_back(random_povm_element(d, rng));
      }
    }
    const DensityMatrix rho = random_density(d, d, rng);
    const Alg1Plan plan = plan_alg1(m, options.epsilon, options.delta);
    TrajectoryOptions topts;
    topts.keep_states = true;
    const KickbackTrajectory traj = trajectory_run(rho, ms, round_params(plan), rng(), topts);
    if (traj.guard_violations > 0) ++guard_runs;
    for (std::size_t i = 1; i <= m; ++i) {
      AuditReport one = deviation_audit(traj, ms, i);
      one.instances = 0;
      one.notes.clear();
      report.merge(one);
    }
    ++report.instances;
  }
  if (guard_runs > 0) {
    report.notes.push_back(std::to_string(guard_runs) +
                           " trajectories left the |angle| ||M|| <= 1 regime");
  }
  return report;
}

AuditReport audit_cos_bound(std::uint64_t points) {
  if (points < 2) throw ValidationError("audit_cos_bound: need at least two grid points");
  AuditReport report;
  report.kind = "cos-bound";
  for (std::uint64_t t = 0; t < points; ++t) {
    const double x = -kPi / 2.0 + kPi * static_cast<double>(t) / static_cast<double>(points - 1);
    report.check_le(std::cos(x), 1.0 - x * x / 4.0, "cos at x=" + std::to_string(x));
  }
  report.instances = points;
  return report;
}

AuditReport audit_exp_bound(std::uint64_t points) {
  if (points < 2) throw ValidationError("audit_exp_bound: need at least two grid points");
  AuditReport report;
  report.kind = "exp-bound";
  for (std::uint64_t t = 0; t < points; ++t) {
    const double x = 50.0 * static_cast<double>(t) / static_cast<double>(points - 1);
    report.check_le(std::exp(-x), 1.0 - x + x * x / 2.0, "exp at x=" + std::to_string(x));
  }
  report.instances = points;
  return report;
}

AuditReport audit_lipschitz(std::uint64_t points) {
  if (points < 2) throw ValidationError("audit_lipschitz: need at least two grid points");
  AuditReport report;
  report.kind = "lipschitz";
  const double constant = (6.0 / kPi) * (2.0 / std::sqrt(3.0));
  std::vector<double> grid(points);
  for (std::uint64_t t = 0; t < points; ++t) {
    // Open interval: endpoints excluded.
    grid[t] = 0.25 + 0.5 * (static_cast<double>(t) + 0.5) / static_cast<double>(points);
  }
  for (std::uint64_t t = 0; t + 1 < points; ++t) {
    const double a = grid[t];
    const double b = grid[t + 1];
    report.check_le(std::abs(estimate_from_fraction(a) - estimate_from_fraction(b)),
                    constant * std::abs(a - b), "adjacent pair at " + std::to_string(a));
  }
  const double lo = grid.front();
  const double hi = grid.back();
  report.check_le(std::abs(estimate_from_fraction(lo) - estimate_from_fraction(hi)),
                  constant * (hi - lo), "extreme pair");
  report.instances = points;
  return report;
}

AuditReport audit_normalization() {
  AuditReport report;
  report.kind = "normalization";
  for (unsigned p = 1; p <= 64; ++p) {
    BigInt sum = 0;
    for (unsigned j = 0; j <= 2 * p; ++j) {
      const BigInt c = binomial_exact(2 * p, j);
      sum += c * c;
    }
    const BigInt central = binomial_exact(4 * p, 2 * p);
    report.check_le(sum == central ? 0.0 : 1.0, 0.0, "Vandermonde identity p=" + std::to_string(p));
    ++report.instances;
  }

  std::uint64_t skipped = 0;
  for (std::uint64_t n = 1; n <= 64; ++n) {
    const std::uint64_t N = counter_half_range(n);
    for (std::uint64_t p = 1; p <= 20; ++p) {
      if (p >= N) {
        ++skipped;
        continue;
      }
      const FourierLDist f(p, n);
      double total = 0.0;
      for (std::int64_t l = -static_cast<std::int64_t>(N); l < static_cast<std::int64_t>(N); ++l) {
        total += f.pmf(l);
      }
      report.check_le(std::abs(total - 1.0), 1e-10,
                      "Fourier pmf sum p=" + std::to_string(p) + " n=" + std::to_string(n));
      ++report.instances;
    }
  }
  if (skipped > 0) {
    report.notes.push_back(std::to_string(skipped) +
                           " (p, n) pairs with p >= 2n^2 are outside the register and skipped");
  }

  for (std::uint64_t p = 1; p <= 64; ++p) {
    const PsiPState psi(p, 8);
    const NoiseSDist noise(p);
    const auto pi = static_cast<std::int64_t>(p);
    const BigInt denom = binomial_exact(static_cast<unsigned>(4 * p), static_cast<unsigned>(2 * p));
    for (std::int64_t x = -pi; x <= pi; ++x) {
      const auto [num, den] = psi.squared_amplitude_exact(x);
      const BigInt c = binomial_exact(static_cast<unsigned>(2 * p), static_cast<unsigned>(pi + x));
      // Cross-multiplied comparison against C(2p, p+x)^2 / C(4p, 2p).
      const bool exact = num * denom == c * c * den;
      report.check_le(exact ? 0.0 : 1.0, 0.0,
                      "squared amplitude p=" + std::to_string(p) + " x=" + std::to_string(x));
      const double a = psi.amplitude(x);
      report.check_le(std::abs(a * a - noise.pmf(x)), 1e-15,
                      "floating amplitude p=" + std::to_string(p) + " x=" + std::to_string(x));
    }
    ++report.instances;
  }
  return report;
}

AuditReport audit_subgaussian() {
  AuditReport report;
  report.kind = "subgaussian";
  for (std::uint64_t n = 1; n <= 64; ++n) {
    const std::uint64_t N = counter_half_range(n);
    for (std::uint64_t p = 1; p <= 20 && p < N; ++p) {
      const FourierLDist f(p, n);
      const double value = subgaussian_mgf(f.table(), fourier_subgaussian_scale(p, n));
      report.check_le(value, 2.0, "Fourier L p=" + std::to_string(p) + " n=" + std::to_string(n));
      ++report.instances;
    }
  }
  for (std::uint64_t k = 1; k <= 64; ++k) {
    const LambdaDist lam(k);
    const double value = subgaussian_mgf(lam.table(), 2.0 * std::sqrt(static_cast<double>(k)));
    report.check_le(value, 2.0, "lambda k=" + std::to_string(k));
    ++report.instances;
  }
  return report;
}

AuditReport run_audit(AuditKind kind, std::uint64_t count, std::uint64_t seed) {
  switch (kind) {
    case AuditKind::kConjugateBound: return audit_conjugate_bound(count, seed);
    case AuditKind::kDeviationChain: return audit_deviation_chain(count, seed);
    case AuditKind::kCosBound: return audit_cos_bound(count);
    case AuditKind::kExpBound: return audit_exp_bound(count);
    case AuditKind::kLipschitz: return audit_lipschitz(count);
    case AuditKind::kNormalization: return audit_normalization();
    case AuditKind::kSubgaussian: return audit_subgaussian();
  }
  throw ValidationError("unknown audit kind");
}

}  // namespace shadowlab
