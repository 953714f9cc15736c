#include "shadowlab/engine_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "shadowlab/error.hpp"

namespace shadowlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEigenvalueMergeTol = 1e-9;

std::vector<double> binomial_pmf(std::uint64_t k, double q) {
  std::vector<double> out(k + 1, 0.0);
  if (q <= 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (q >= 1.0) {
    out[k] = 1.0;
    return out;
  }
  const double kd = static_cast<double>(k);
  const double lq = std::log(q);
  const double lr = std::log1p(-q);
  for (std::uint64_t c = 0; c <= k; ++c) {
    const double cd = static_cast<double>(c);
    out[c] = std::exp(log_binomial(kd, cd) + cd * lq + (kd - cd) * lr);
  }
  return out;
}

// Calls visit(counts) for every composition of n into counts.size() parts.
template <typename Visit>
void for_each_composition(std::uint64_t n, std::vector<std::uint64_t>& counts, std::size_t pos,
                          Visit& visit) {
  if (pos + 1 == counts.size()) {
    counts[pos] = n;
    visit(counts);
    return;
  }
  for (std::uint64_t c = 0; c <= n; ++c) {
    counts[pos] = c;
    for_each_composition(n - c, counts, pos + 1, visit);
  }
}

double projector_weight(const PovmElement& m, const DensityMatrix& rho) {
  if (!m.is_projector()) {
    throw ValidationError("counter-register round requires a projector measurement");
  }
  const SpectralWeights sw = spectral_weights(m, rho);
  double w = 0.0;
  for (std::size_t g = 0; g < sw.eigenvalues.size(); ++g) {
    if (sw.eigenvalues[g] > 0.5) w += sw.weights[g];
  }
  return std::clamp(w, 0.0, 1.0);
}

std::uint64_t sample_binomial(std::uint64_t trials, double q, Rng& rng) {
  if (trials == 0 || q <= 0.0) return 0;
  if (q >= 1.0) return trials;
  std::binomial_distribution<std::uint64_t> dist(trials, q);
  return dist(rng);
}

// Per-run samplers whose tables are expensive to rebuild every round.
struct RoundSamplers {
  std::optional<LambdaDist> lambda;
  std::optional<NoiseSDist> noise;
  std::optional<FourierLDist> fourier;

  explicit RoundSamplers(const RoundParams& params) {
    if (params.algorithm == Algorithm::kAlg1) {
      lambda.emplace(params.k);
    } else {
      noise.emplace(params.p);
      fourier.emplace(params.p, params.n);
    }
  }

  double sample_lambda(Rng& rng) const {
    if (lambda) return static_cast<double>(lambda->sample(rng));
    return fourier->lambda_of(fourier->sample(rng));
  }
};

RoundOutcome sample_alg1(const DensityMatrix& rho, const PovmElement& m, std::uint64_t n,
                         std::uint64_t k, Rng& rng, const ReadoutNoise& noise) {
  const SpectralWeights sw = spectral_weights(m, rho);
  std::uint64_t remaining = n;
  double remaining_mass = 1.0;
  double eigen_sum = 0.0;
  for (std::size_t g = 0; g < sw.eigenvalues.size() && remaining > 0; ++g) {
    std::uint64_t c;
    if (g + 1 == sw.eigenvalues.size()) {
      c = remaining;
    } else {
      const double q = remaining_mass > 0.0 ? std::clamp(sw.weights[g] / remaining_mass, 0.0, 1.0) : 1.0;
      c = sample_binomial(remaining, q, rng);
    }
    eigen_sum += static_cast<double>(c) * sw.eigenvalues[g];
    remaining -= c;
    remaining_mass -= sw.weights[g];
  }
  RoundOutcome r;
  r.sample_mean = std::clamp(eigen_sum / static_cast<double>(n), 0.0, 1.0);
  r.theta = theta_of_mean(r.sample_mean);
  const std::uint64_t ones = sample_binomial(k, readout_prob(r.theta), rng);
  std::uint64_t read = ones;
  if (noise.eta > 0.0) {
    read = sample_binomial(ones, 1.0 - noise.eta, rng) + sample_binomial(k - ones, noise.eta, rng);
  }
  r.raw = static_cast<std::int64_t>(read);
  r.mu = static_cast<double>(read) / static_cast<double>(k);
  r.estimate = estimate_from_fraction(corrected_fraction(r.mu, noise));
  return r;
}

RoundOutcome sample_alg2(const DensityMatrix& rho, const PovmElement& m, std::uint64_t n,
                         const NoiseSDist& noise, Rng& rng) {
  const double w = projector_weight(m, rho);
  const std::uint64_t a = sample_binomial(n, w, rng);
  const std::int64_t s = noise.sample(rng);
  RoundOutcome r;
  r.sample_mean = static_cast<double>(a) / static_cast<double>(n);
  r.raw = wrap_counter(static_cast<std::int64_t>(a) + s, counter_half_range(n));
  r.mu = static_cast<double>(r.raw);
  r.estimate = estimate_lowmem(r.raw, n);
  return r;
}

RoundOutcome sample_round(const DensityMatrix& rho, const PovmElement& m,
                          const RoundParams& params, const RoundSamplers& samplers, Rng& rng,
                          const ReadoutNoise& noise) {
  if (params.algorithm == Algorithm::kAlg1) return sample_alg1(rho, m, params.n, params.k, rng, noise);
  if (noise.eta > 0.0) {
    throw ValidationError("readout flips apply to the rotation protocol only");
  }
  return sample_alg2(rho, m, params.n, *samplers.noise, rng);
}

double operator_norm_of(const PovmElement& m) {
  const RealVector& ev = m.spectral().eigenvalues;
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace

SpectralWeights spectral_weights(const PovmElement& m, const DensityMatrix& rho) {
  if (m.dim() != rho.dim()) {
    throw DimensionMismatch("spectral_weights: measurement and state dimensions differ");
  }
  const SpectralDecomposition& s = m.spectral();
  const ComplexMatrix rotated = s.eigenvectors.adjoint() * rho.matrix() * s.eigenvectors;
  SpectralWeights out;
  for (Index j = 0; j < s.dim(); ++j) {
    const double value = s.eigenvalues(j);
    const double weight = std::max(0.0, rotated(j, j).real());
    if (!out.eigenvalues.empty() && value - out.eigenvalues.back() <= kEigenvalueMergeTol) {
      out.weights.back() += weight;
    } else {
      out.eigenvalues.push_back(value);
      out.weights.push_back(weight);
    }
  }
  return out;
}

double kickback_angle(Algorithm algorithm, double lambda, std::uint64_t n) {
  const double nd = static_cast<double>(n);
  return algorithm == Algorithm::kAlg1 ? kPi * lambda / (6.0 * nd) : lambda / nd;
}

DensityMatrix kickback_conjugate(const DensityMatrix& rho, const PovmElement& m, double angle) {
  if (angle == 0.0) return rho;
  return conjugate(rho, expm_i(m.spectral(), -angle));
}

DensityMatrix kickback_step(const DensityMatrix& rho, const PovmElement& m, double lambda,
                            std::uint64_t n, Algorithm algorithm, bool* guard_ok) {
  const double angle = kickback_angle(algorithm, lambda, n);
  if (guard_ok != nullptr) *guard_ok = std::abs(angle) * operator_norm_of(m) <= 1.0;
  return kickback_conjugate(rho, m, angle);
}

DiscreteDistribution round_output_dist_alg1(const DensityMatrix& rho, const PovmElement& m,
                                            std::uint64_t n, std::uint64_t k, double budget) {
  if (n == 0 || k == 0) throw ValidationError("round_output_dist_alg1: n and k must be positive");
  const SpectralWeights sw = spectral_weights(m, rho);
  const std::size_t groups = sw.eigenvalues.size();
  const double nd = static_cast<double>(n);
  const double terms =
      std::exp(log_binomial(nd + static_cast<double>(groups) - 1.0, static_cast<double>(groups) - 1.0)) *
      static_cast<double>(k + 1);
  if (terms > budget) {
    std::ostringstream os;
    os << "exact round pmf needs about " << terms << " terms; the budget is " << budget;
    throw BudgetExceeded(os.str());
  }
  std::vector<double> log_w(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    log_w[g] = sw.weights[g] > 0.0 ? std::log(sw.weights[g]) : -std::numeric_limits<double>::infinity();
  }
  std::vector<double> pmf(k + 1, 0.0);
  std::vector<std::uint64_t> counts(groups, 0);
  auto visit = [&](const std::vector<std::uint64_t>& v) {
    double log_p = std::lgamma(nd + 1.0);
    double eigen_sum = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
      if (v[g] == 0) continue;
      if (sw.weights[g] <= 0.0) return;
      const double c = static_cast<double>(v[g]);
      log_p += c * log_w[g] - std::lgamma(c + 1.0);
      eigen_sum += c * sw.eigenvalues[g];
    }
    const double weight = std::exp(log_p);
    const double s = std::clamp(eigen_sum / nd, 0.0, 1.0);
    const std::vector<double> b = binomial_pmf(k, readout_prob(theta_of_mean(s)));
    for (std::uint64_t c = 0; c <= k; ++c) pmf[c] += weight * b[c];
  };
  for_each_composition(n, counts, 0, visit);

  std::vector<std::int64_t> values(k + 1);
  for (std::uint64_t c = 0; c <= k; ++c) values[c] = static_cast<std::int64_t>(c);
  return {std::move(values), std::move(pmf)};
}

DiscreteDistribution round_output_dist_alg2(const DensityMatrix& rho, const PovmElement& m,
                                            std::uint64_t n, std::uint64_t p) {
  RoundParams params;
  params.algorithm = Algorithm::kAlg2;
  params.n = n;
  params.p = p;
  params.validate();
  const double w = projector_weight(m, rho);
  const std::uint64_t N = counter_half_range(n);
  const auto half = static_cast<std::int64_t>(N);
  const NoiseSDist noise(p);
  const std::vector<double> a_pmf = binomial_pmf(n, w);
  std::vector<double> pmf(2 * N, 0.0);
  for (std::uint64_t a = 0; a <= n; ++a) {
    if (a_pmf[a] == 0.0) continue;
    const auto& sv = noise.table().values();
    const auto& sp = noise.table().probs();
    for (std::size_t i = 0; i < sv.size(); ++i) {
      const std::int64_t x = wrap_counter(static_cast<std::int64_t>(a) + sv[i], N);
      pmf[static_cast<std::size_t>(x + half)] += a_pmf[a] * sp[i];
    }
  }
  std::vector<std::int64_t> values(2 * N);
  for (std::int64_t x = -half; x < half; ++x) values[static_cast<std::size_t>(x + half)] = x;
  return {std::move(values), std::move(pmf)};
}

DiscreteDistribution round_output_dist(const DensityMatrix& rho, const PovmElement& m,
                                       const RoundParams& params) {
  params.validate();
  if (params.algorithm == Algorithm::kAlg1) return round_output_dist_alg1(rho, m, params.n, params.k);
  return round_output_dist_alg2(rho, m, params.n, params.p);
}

RoundOutcome round_output_sample_alg1(const DensityMatrix& rho, const PovmElement& m,
                                      std::uint64_t n, std::uint64_t k, Rng& rng,
                                      const ReadoutNoise& noise) {
  if (n == 0 || k == 0) throw ValidationError("round_output_sample_alg1: n and k must be positive");
  noise.validate();
  return sample_alg1(rho, m, n, k, rng, noise);
}

RoundOutcome round_output_sample_alg1(const DensityMatrix& rho, const PovmElement& m,
                                      std::uint64_t n, std::uint64_t k, std::uint64_t seed) {
  Rng rng(seed);
  return round_output_sample_alg1(rho, m, n, k, rng);
}

RoundOutcome round_output_sample_alg2(const DensityMatrix& rho, const PovmElement& m,
                                      std::uint64_t n, std::uint64_t p, Rng& rng) {
  RoundParams params;
  params.algorithm = Algorithm::kAlg2;
  params.n = n;
  params.p = p;
  params.validate();
  return sample_alg2(rho, m, n, NoiseSDist(p), rng);
}

RoundOutcome round_output_sample_alg2(const DensityMatrix& rho, const PovmElement& m,
                                      std::uint64_t n, std::uint64_t p, std::uint64_t seed) {
  Rng rng(seed);
  return round_output_sample_alg2(rho, m, n, p, rng);
}

RoundOutcome round_output_sample(const DensityMatrix& rho, const PovmElement& m,
                                 const RoundParams& params, Rng& rng, const ReadoutNoise& noise) {
  params.validate();
  noise.validate();
  if (params.algorithm == Algorithm::kAlg1) {
    return sample_alg1(rho, m, params.n, params.k, rng, noise);
  }
  if (noise.eta > 0.0) throw ValidationError("readout flips apply to the rotation protocol only");
  return sample_alg2(rho, m, params.n, NoiseSDist(params.p), rng);
}

double sample_kickback_lambda(const RoundParams& params, Rng& rng) {
  params.validate();
  return RoundSamplers(params).sample_lambda(rng);
}

std::vector<std::pair<double, double>> kickback_lambda_table(const RoundParams& params) {
  params.validate();
  std::vector<std::pair<double, double>> out;
  if (params.algorithm == Algorithm::kAlg1) {
    const LambdaDist dist(params.k);
    for (std::size_t i = 0; i < dist.table().size(); ++i) {
      out.emplace_back(static_cast<double>(dist.table().values()[i]), dist.table().probs()[i]);
    }
  } else {
    const FourierLDist dist(params.p, params.n);
    for (std::size_t i = 0; i < dist.table().size(); ++i) {
      out.emplace_back(dist.lambda_of(dist.table().values()[i]), dist.table().probs()[i]);
    }
  }
  return out;
}

RoundOutcome marginal_sample(const DensityMatrix& rho, std::span<const PovmElement> ms,
                             const RoundParams& params, std::size_t target, std::uint64_t seed,
                             const ReadoutNoise& noise) {
  params.validate();
  noise.validate();
  if (target == 0 || target > ms.size()) throw ValidationError("marginal_sample: target out of range");
  const RoundSamplers samplers(params);
  Rng out_rng(seed);
  Rng lambda_rng(derive_seed(seed, 1));
  DensityMatrix state = rho;
  for (std::size_t j = 0; j + 1 < target; ++j) {
    const double lambda = samplers.sample_lambda(lambda_rng);
    state = kickback_conjugate(state, ms[j], kickback_angle(params.algorithm, lambda, params.n));
  }
  RoundOutcome r = sample_round(state, ms[target - 1], params, samplers, out_rng, noise);
  r.round = target;
  return r;
}

DiscreteDistribution marginal_output_dist(const DensityMatrix& rho,
                                          std::span<const PovmElement> ms,
                                          const RoundParams& params, std::size_t target,
                                          std::uint64_t max_paths) {
  params.validate();
  if (target == 0 || target > ms.size()) {
    throw ValidationError("marginal_output_dist: target out of range");
  }
  const std::vector<std::pair<double, double>> table = kickback_lambda_table(params);
  const double paths = std::pow(static_cast<double>(table.size()), static_cast<double>(target - 1));
  if (paths > static_cast<double>(max_paths)) {
    std::ostringstream os;
    os << "kickback averaging needs " << paths << " eigenvalue sequences; the budget is " << max_paths;
    throw BudgetExceeded(os.str());
  }

  std::vector<std::int64_t> values;
  std::vector<double> acc;
  auto add = [&](const DensityMatrix& state, double weight) {
    const DiscreteDistribution d = round_output_dist(state, ms[target - 1], params);
    if (values.empty()) {
      values.assign(d.values().begin(), d.values().end());
      acc.assign(d.size(), 0.0);
    }
    for (std::size_t i = 0; i < d.size(); ++i) acc[i] += weight * d.probs()[i];
  };
  auto recurse = [&](auto& self, const DensityMatrix& state, std::size_t j, double weight) -> void {
    if (j + 1 == target) {
      add(state, weight);
      return;
    }
    for (const auto& [lambda, p] : table) {
      if (p <= 0.0) continue;
      self(self,
           kickback_conjugate(state, ms[j], kickback_angle(params.algorithm, lambda, params.n)),
           j + 1, weight * p);
    }
  };
  recurse(recurse, rho, 0, 1.0);
  return {std::move(values), std::move(acc)};
}

KickbackTrajectory trajectory_run(const DensityMatrix& rho, std::span<const PovmElement> ms,
                                  const RoundParams& params, std::uint64_t seed,
                                  const TrajectoryOptions& options) {
  params.validate();
  options.noise.validate();
  const RoundSamplers samplers(params);
  const std::size_t m = ms.size();
  const bool keep = options.keep_states || options.audit_fields;

  KickbackTrajectory traj;
  traj.params = params;
  traj.rounds.resize(m);
  traj.lambdas.resize(m, 0.0);
  std::vector<DensityMatrix> states;
  if (keep) states.reserve(m);

  DensityMatrix state = rho;
  for (std::size_t j = 0; j < m; ++j) {
    if (keep) states.push_back(state);
    Rng out_rng(derive_seed(seed, j, 0));
    Rng lambda_rng(derive_seed(seed, j, 1));
    TrajectoryRound& row = traj.rounds[j];
    row.outcome = sample_round(state, ms[j], params, samplers, out_rng, options.noise);
    row.outcome.round = j + 1;
    row.truth = expectation(ms[j], rho);
    row.shadow = expectation(ms[j], state);
    row.cum_deviation = row.shadow - row.truth;

    const double lambda = options.zero_lambdas ? 0.0 : samplers.sample_lambda(lambda_rng);
    row.lambda = lambda;
    traj.lambdas[j] = lambda;
    if (j + 1 == m) break;
    const double angle = kickback_angle(params.algorithm, lambda, params.n);
    if (params.algorithm == Algorithm::kAlg1 && std::abs(angle) * operator_norm_of(ms[j]) > 1.0) {
      if (options.strict_guard) {
        throw ValidationError("kickback step leaves the |angle| ||M|| <= 1 regime");
      }
      ++traj.guard_violations;
    }
    state = kickback_conjugate(state, ms[j], angle);
  }

  if (options.audit_fields) {
    const double nd = static_cast<double>(params.n);
    for (std::size_t i = 0; i < m; ++i) {
      double s1 = 0.0;
      double s2 = 0.0;
      for (std::size_t l = 0; l < i; ++l) {
        const double angle = kickback_angle(params.algorithm, traj.lambdas[l], params.n);
        const ComplexMatrix ic = Complex(0.0, 1.0) * commutator(ms[l].matrix(), ms[i].matrix());
        s1 += angle * expectation(ic, states[l]);
        if (params.algorithm == Algorithm::kAlg1) {
          s2 += kDefaultC2 * traj.lambdas[l] * traj.lambdas[l] / (nd * nd);
        } else {
          const ComplexMatrix a = angle * ms[l].matrix();
          s2 += operator_norm(commutator(a, commutator(a, ms[i].matrix()))) *
                commutator_series_coefficient(operator_norm(a));
        }
      }
      traj.rounds[i].s1 = s1;
      traj.rounds[i].s2_bound = s2;
    }
  }
  if (options.keep_states) traj.states = std::move(states);
  return traj;
}

std::uint64_t naive_copies_per_index(std::uint64_t m, double epsilon, double delta) {
  if (m == 0) throw ValidationError("naive baseline: m must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0)) {
    throw ValidationError("naive baseline: epsilon and delta must lie in (0, 1)");
  }
  return static_cast<std::uint64_t>(
      std::ceil(std::log(2.0 * static_cast<double>(m) / delta) / (2.0 * epsilon * epsilon)));
}

NaiveResult naive_baseline_run(const DensityMatrix& rho, std::span<const PovmElement> ms,
                               double epsilon, double delta, std::uint64_t seed) {
  NaiveResult out;
  out.per_index = naive_copies_per_index(ms.size(), epsilon, delta);
  out.total_copies = out.per_index * ms.size();
  Rng rng(seed);
  for (const PovmElement& m : ms) {
    const double truth = std::clamp(expectation(m, rho), 0.0, 1.0);
    const std::uint64_t hits = sample_binomial(out.per_index, truth, rng);
    out.estimates.push_back(static_cast<double>(hits) / static_cast<double>(out.per_index));
  }
  return out;
}

std::int64_t wrap_counter(std::int64_t value, std::uint64_t N) {
  const auto two_n = static_cast<std::int64_t>(2 * N);
  const auto half = static_cast<std::int64_t>(N);
  std::int64_t r = (value + half) % two_n;
  if (r < 0) r += two_n;
  return r - half;
}

}  // namespace shadowlab
