#include "shadowlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "shadowlab/error.hpp"

namespace shadowlab {

namespace {

struct TrialOutput {
  std::vector<double> estimates;
  std::uint64_t guard_violations = 0;
};

TrialOutput run_trial(const ExperimentConfig& config, const Instance& instance,
                      const RoundParams& params, std::uint64_t seed) {
  ReadoutNoise noise;
  if (config.eta) {
    noise.eta = *config.eta;
    noise.debias = config.debias;
  }
  TrialOutput out;
  const std::size_t m = instance.ms.size();
  switch (config.engine) {
    case EngineKind::kFull: {
      FullSimConfig fs;
      fs.max_amplitudes = config.max_amplitudes;
      for (const FullRoundRecord& r : run_protocol(instance.rho, instance.ms, params, seed, fs, noise)) {
        out.estimates.push_back(r.estimate);
      }
      break;
    }
    case EngineKind::kKickback: {
      TrajectoryOptions opts;
      opts.noise = noise;
      const KickbackTrajectory traj = trajectory_run(instance.rho, instance.ms, params, seed, opts);
      for (const TrajectoryRound& r : traj.rounds) out.estimates.push_back(r.outcome.estimate);
      out.guard_violations = traj.guard_violations;
      break;
    }
    case EngineKind::kMarginal:
      for (std::size_t i = 1; i <= m; ++i) {
        out.estimates.push_back(
            marginal_sample(instance.rho, instance.ms, params, i, derive_seed(seed, i), noise).estimate);
      }
      break;
    case EngineKind::kNaive:
      out.estimates = naive_baseline_run(instance.rho, instance.ms, config.protocol.epsilon,
                                         config.protocol.delta, seed)
                          .estimates;
      break;
  }
  return out;
}

}  // namespace

ExperimentSummary summarize(const std::vector<TrialRecord>& records, std::uint64_t m,
                            double epsilon) {
  if (m == 0) throw ValidationError("summarize: m must be positive");
  if (records.size() % m != 0) throw ValidationError("summarize: record count is not a multiple of m");
  ExperimentSummary s;
  s.m = m;
  s.epsilon = epsilon;
  s.trials = records.size() / m;
  s.per_index.resize(m);
  for (std::uint64_t i = 0; i < m; ++i) s.per_index[i].index = i + 1;
  if (s.trials == 0) return s;

  std::uint64_t simultaneous = 0;
  double error_sum = 0.0;
  double bias_sum = 0.0;
  for (std::uint64_t t = 0; t < s.trials; ++t) {
    bool any_fail = false;
    for (std::uint64_t i = 0; i < m; ++i) {
      const TrialRecord& r = records[t * m + i];
      IndexSummary& is = s.per_index[i];
      is.truth = r.truth;
      if (!r.within) {
        is.failure_rate += 1.0;
        any_fail = true;
      }
      is.max_error = std::max(is.max_error, r.abs_error);
      is.mean_error += r.abs_error;
      error_sum += r.abs_error;
      bias_sum += r.estimate - r.truth;
    }
    if (any_fail) ++simultaneous;
  }
  const double trials = static_cast<double>(s.trials);
  for (IndexSummary& is : s.per_index) {
    is.failure_rate /= trials;
    is.mean_error /= trials;
    s.mean_failure_rate += is.failure_rate;
    s.max_failure_rate = std::max(s.max_failure_rate, is.failure_rate);
    s.max_error = std::max(s.max_error, is.max_error);
  }
  s.mean_failure_rate /= static_cast<double>(m);
  s.simultaneous_failure_rate = static_cast<double>(simultaneous) / trials;
  s.mean_error = error_sum / static_cast<double>(records.size());
  s.mean_estimate_bias = bias_sum / static_cast<double>(records.size());
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Instance instance = build_instance(config.instance);
  const ResolvedPlan plan = resolve_plan(config, instance);
  ExperimentResult result = run_experiment(config, instance, plan.params);
  result.plan_report = plan.report;
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const Instance& instance,
                                const RoundParams& params) {
  config.validate();
  params.validate();
  if (config.engine != EngineKind::kNaive) {
    for (const PovmElement& m : instance.ms) {
      if (m.dim() != instance.rho.dim()) throw DimensionMismatch("instance dimensions differ");
    }
  }
  if (config.engine == EngineKind::kFull) {
    FullSimConfig fs;
    fs.max_amplitudes = config.max_amplitudes;
    check_amplitude_budget(instance.rho.dim(), params, fs);
  }

  const std::uint64_t m = instance.ms.size();
  const std::uint64_t trials = config.trials;
  std::vector<TrialRecord> records(trials * m);
  std::vector<std::uint64_t> guards(trials, 0);

  unsigned workers = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
  workers = static_cast<unsigned>(std::clamp<std::uint64_t>(workers, 1, trials));

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::uint64_t t = next.fetch_add(1);
      if (t >= trials) return;
      try {
        const std::uint64_t seed = config.seed + t;
        const TrialOutput out = run_trial(config, instance, params, seed);
        guards[t] = out.guard_violations;
        for (std::uint64_t i = 0; i < m; ++i) {
          TrialRecord& r = records[t * m + i];
          r.trial = t;
          r.index = i + 1;
          r.estimate = out.estimates[i];
          r.truth = instance.truths[i];
          r.abs_error = std::abs(r.estimate - r.truth);
          r.within = r.abs_error <= config.protocol.epsilon;
          r.engine = config.engine;
          r.seed = seed;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(trials);
        return;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult result;
  result.params = params;
  result.summary = summarize(records, m, config.protocol.epsilon);
  for (std::uint64_t g : guards) result.summary.guard_violations += g;
  result.summary.copies_per_trial =
      config.engine == EngineKind::kNaive
          ? naive_copies_per_index(m, config.protocol.epsilon, config.protocol.delta) * m
          : params.n;
  result.records = std::move(records);
  return result;
}

CompareResult engine_compare(const Instance& instance, const RoundParams& params,
                             std::size_t round, const FullSimConfig& config) {
  CompareResult out;
  out.full = exact_output_distribution(instance.rho, instance.ms, params, round, config);
  out.sampler = marginal_output_dist(instance.rho, instance.ms, params, round);
  out.tv = total_variation(out.full, out.sampler);
  return out;
}

JointCompareResult joint_compare(const Instance& instance, const RoundParams& params,
                                 const FullSimConfig& config) {
  if (instance.ms.size() < 2) throw ValidationError("joint_compare: needs at least two rounds");
  JointCompareResult out;
  JointPureState first = init_round(instance.rho, params, config);
  apply_round_unitary(first, instance.ms[0]);
  for (const AncillaBranch& b : ancilla_branches(first)) {
    const std::int64_t o1 = outcome_of_ancilla_index(params, b.ancilla_index);
    JointPureState s = reinit_ancillas(first, b.copies);
    apply_round_unitary(s, instance.ms[1]);
    const Index adim = s.ancilla_dim();
    const Eigen::Map<const ComplexMatrix> psi(s.amplitudes().data(), adim, s.copies_dim());
    const RealVector w = psi.rowwise().squaredNorm();
    for (Index a = 0; a < adim; ++a) {
      if (w(a) > 0.0) out.full[{o1, outcome_of_ancilla_index(params, a)}] += w(a);
    }
  }

  const DiscreteDistribution d1 = round_output_dist(instance.rho, instance.ms[0], params);
  const DiscreteDistribution d2 = marginal_output_dist(instance.rho, instance.ms, params, 2);
  for (std::size_t i = 0; i < d1.size(); ++i) {
    for (std::size_t j = 0; j < d2.size(); ++j) {
      const double p = d1.probs()[i] * d2.probs()[j];
      if (p > 0.0) out.surrogate[{d1.values()[i], d2.values()[j]}] += p;
    }
  }

  std::map<std::pair<std::int64_t, std::int64_t>, double> diff = out.full;
  for (const auto& [key, p] : out.surrogate) diff[key] -= p;
  for (const auto& [key, p] : diff) out.tv += 0.5 * std::abs(p);

  std::map<std::int64_t, double> full2;
  for (const auto& [key, p] : out.full) full2[key.second] += p;
  for (std::size_t j = 0; j < d2.size(); ++j) full2[d2.values()[j]] -= d2.probs()[j];
  for (const auto& [x, p] : full2) out.marginal_tv += 0.5 * std::abs(p);
  return out;
}

std::pair<double, double> wilson_interval(double rate, std::uint64_t trials, double z) {
  if (trials == 0) throw ValidationError("wilson_interval: no trials");
  const double n = static_cast<double>(trials);
  const double z2 = z * z;
  const double centre = (rate + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(rate * (1.0 - rate) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("loglog_fit: need at least two matching points");
  }
  const double count = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw ValidationError("loglog_fit: values must be positive");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) throw ValidationError("loglog_fit: x values must differ");
  const double slope = (count * sxy - sx * sy) / denom;
  return {slope, (sy - slope * sx) / count};
}

SweepResult sweep_scaling(const ExperimentConfig& base, const SweepOptions& options) {
  return sweep_scaling(base, options, [&base](std::uint64_t m) {
    InstanceSpec spec = base.instance;
    spec.m = m;
    return build_instance(spec);
  });
}

SweepResult sweep_scaling(const ExperimentConfig& base, const SweepOptions& options,
                          const std::function<Instance(std::uint64_t m)>& make_instance) {
  if (base.protocol.algorithm != Algorithm::kAlg1) {
    throw ValidationError("sweep_scaling: the sweep searches n for the rotation protocol (alg1)");
  }
  if (options.m_values.size() < 2) throw ValidationError("sweep_scaling: need at least two m values");
  if (options.trials == 0) throw ValidationError("sweep_scaling: trials must be positive");

  ExperimentConfig cfg = base;
  cfg.engine = EngineKind::kKickback;
  cfg.trials = options.trials;
  cfg.validate();

  SweepResult result;
  std::vector<double> ms;
  std::vector<double> ns;
  for (std::uint64_t m : options.m_values) {
    const Instance instance = make_instance(m);
    SweepPoint point;
    point.m = m;
    point.k = base.protocol.k ? *base.protocol.k
                              : plan_alg1(m, base.protocol.epsilon, base.protocol.delta,
                                          base.protocol.constants)
                                    .k;
    auto probe = [&](std::uint64_t n) {
      RoundParams params;
      params.algorithm = Algorithm::kAlg1;
      params.n = n;
      params.k = point.k;
      ++point.probes;
      return run_experiment(cfg, instance, params).summary.mean_failure_rate;
    };

    std::uint64_t hi = 1;
    double hi_rate = probe(hi);
    std::uint64_t lo = 0;
    double lo_rate = 1.0;
    while (hi_rate > options.target_failure) {
      lo = hi;
      lo_rate = hi_rate;
      if (hi > options.n_ceiling / 2) {
        throw InfeasiblePlan("sweep did not reach the target failure rate below n = " +
                             std::to_string(options.n_ceiling) + " at m = " + std::to_string(m));
      }
      hi *= 2;
      hi_rate = probe(hi);
    }
    while (lo != 0 && hi - lo > 1) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      const double rate = probe(mid);
      if (rate <= options.target_failure) {
        hi = mid;
        hi_rate = rate;
      } else {
        lo = mid;
        lo_rate = rate;
      }
    }
    point.n_min = hi;
    point.failure_rate = hi_rate;
    std::tie(point.band_low, point.band_high) = wilson_interval(hi_rate, options.trials, options.z);
    point.n_below = lo;
    point.failure_below = lo == 0 ? 0.0 : lo_rate;
    result.points.push_back(point);
    ms.push_back(static_cast<double>(m));
    ns.push_back(static_cast<double>(point.n_min));
  }
  std::tie(result.slope, result.intercept) = loglog_fit(ms, ns);
  return result;
}

NoiseReport noise_injection(const ExperimentConfig& config, double eta) {
  if (!(eta >= 0.0 && eta < 0.5)) throw ValidationError("noise_injection: eta must lie in [0, 1/2)");
  if (config.protocol.algorithm != Algorithm::kAlg1) {
    throw ValidationError("noise_injection: readout flips apply to the rotation protocol (alg1)");
  }
  if (config.engine == EngineKind::kNaive) {
    throw ValidationError("noise_injection: the naive engine has no ancilla readout");
  }
  const Instance instance = build_instance(config.instance);
  const RoundParams params = resolve_plan(config, instance).params;

  ExperimentConfig clean = config;
  clean.eta.reset();
  ExperimentConfig raw = config;
  raw.eta = eta;
  raw.debias = false;
  ExperimentConfig corrected = config;
  corrected.eta = eta;
  corrected.debias = true;

  NoiseReport report;
  report.eta = eta;
  report.noiseless = run_experiment(clean, instance, params).summary;
  report.noisy_raw = run_experiment(raw, instance, params).summary;
  report.noisy_debiased = run_experiment(corrected, instance, params).summary;
  report.raw_bias_shift = report.noisy_raw.mean_estimate_bias - report.noiseless.mean_estimate_bias;
  report.debiased_bias_shift =
      report.noisy_debiased.mean_estimate_bias - report.noiseless.mean_estimate_bias;

  const double trials = static_cast<double>(config.trials);
  const double pooled = std::max(
      0.5 * (report.noiseless.mean_failure_rate + report.noisy_debiased.mean_failure_rate),
      0.5 / trials);
  report.tolerance = 2.0 * std::sqrt(pooled * (1.0 - pooled) / trials);
  report.rates_match = std::abs(report.noisy_debiased.mean_failure_rate -
                                report.noiseless.mean_failure_rate) <= report.tolerance;
  return report;
}

}  // namespace shadowlab
