#include "shadowlab/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "shadowlab/error.hpp"

namespace shadowlab {

namespace {

constexpr double kPi = std::numbers::pi;

void require_probability_pair(double epsilon, double delta) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ValidationError("epsilon must lie in (0, 1)");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ValidationError("delta must lie in (0, 1)");
  }
}

double effective_delta(std::uint64_t m, double delta, bool union_bound) {
  return union_bound ? delta / static_cast<double>(m) : delta;
}

bool enforced_hold(const std::vector<ConstraintCheck>& checks) {
  for (const auto& c : checks) {
    if (c.enforced && !c.holds()) return false;
  }
  return true;
}

const char* relation_symbol(Relation r) { return r == Relation::kGreaterEqual ? ">=" : "<="; }

void format_constraints(std::ostringstream& os, const std::vector<ConstraintCheck>& checks) {
  os << "constraints:\n";
  for (const auto& c : checks) {
    os << "  " << c.name << ": " << c.lhs << ' ' << relation_symbol(c.relation) << ' ' << c.rhs
       << " margin " << c.margin();
    if (!c.enforced) os << " (informational)";
    else if (!c.holds()) os << " VIOLATED";
    os << '\n';
  }
}

}  // namespace

double theta_of_mean(double sample_mean) {
  if (sample_mean < -1e-9 || sample_mean > 1.0 + 1e-9 || std::isnan(sample_mean)) {
    std::ostringstream os;
    os << "theta_of_mean: sample mean " << sample_mean << " outside [0, 1]";
    throw ValidationError(os.str());
  }
  return kPi / 3.0 * (1.0 + sample_mean);
}

double readout_prob(double theta) {
  const double s = std::sin(theta / 2.0);
  return s * s;
}

double estimate_from_fraction(double mu, bool clamp) {
  if (!(mu >= 0.0 && mu <= 1.0)) {
    std::ostringstream os;
    os << "estimate_from_fraction: fraction " << mu << " outside [0, 1]";
    throw ValidationError(os.str());
  }
  const double estimate = 6.0 / kPi * std::asin(std::sqrt(mu)) - 1.0;
  if (clamp) return std::clamp(estimate, 0.0, 1.0);
  return estimate;
}

std::uint64_t counter_half_range(std::uint64_t n) { return 2 * n * n; }

double estimate_lowmem(std::int64_t mu, std::uint64_t n) {
  if (n == 0) throw ValidationError("estimate_lowmem: n must be positive");
  const auto half = static_cast<std::int64_t>(counter_half_range(n));
  if (mu < -half || mu > half - 1) {
    std::ostringstream os;
    os << "estimate_lowmem: outcome " << mu << " outside [" << -half << ", " << half - 1 << "]";
    throw ValidationError(os.str());
  }
  return static_cast<double>(mu) / static_cast<double>(n);
}

void ReadoutNoise::validate() const {
  if (!(eta >= 0.0 && eta <= 0.5)) {
    throw ValidationError("readout flip rate must lie in [0, 1/2]");
  }
  if (debias && eta >= 0.5) {
    throw ValidationError("de-biasing requires a readout flip rate below 1/2");
  }
}

double corrected_fraction(double mu, const ReadoutNoise& noise) {
  if (!(noise.debias && noise.eta > 0.0)) return mu;
  return std::clamp((mu - noise.eta) / (1.0 - 2.0 * noise.eta), 0.0, 1.0);
}

void ProtocolConstants::validate() const {
  if (!(c0 > 0.0 && c1 > 0.0 && c2 > 0.0 && C > 0.0)) {
    throw ValidationError("protocol constants c0, c1, c2, C must be strictly positive");
  }
}

void LowMemConstants::validate() const {
  if (!(C0 > 0.0 && C1 > 0.0 && C3 > 0.0 && C4 > 0.0 && C5 > 0.0)) {
    throw ValidationError("low-memory constants C0..C5 must be strictly positive");
  }
}

// --- Algorithm 1 ------------------------------------------------------------

std::vector<ConstraintCheck> alg1_constraints(std::uint64_t m, double epsilon, double delta,
                                              std::uint64_t k, std::uint64_t n,
                                              const ProtocolConstants& c,
                                              std::optional<double> cmax) {
  const double log_inv_delta = std::log(1.0 / delta);
  const double md = static_cast<double>(m);
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  const double n2 = nd * nd;
  const double eps2 = epsilon * epsilon;

  std::vector<ConstraintCheck> out;
  out.push_back({"ancilla_count k >= c0 eps^-2 ln(1/delta)", kd, Relation::kGreaterEqual,
                 c.c0 / eps2 * log_inv_delta});
  out.push_back({"n >= 10k", nd, Relation::kGreaterEqual, 10.0 * kd});

  const double first_order_base = md * kd / eps2 * log_inv_delta * c.c1 * c.c1;
  const double second_order_base =
      c.c2 * c.C * c.C * (md * kd / n2 * std::numbers::ln2 + kd / n2 * log_inv_delta);
  if (!cmax) {
    out.push_back({"n^2 >= 8 c1^2 m k eps^-2 ln(1/delta)", n2, Relation::kGreaterEqual,
                   8.0 * first_order_base});
    out.push_back({"c2 C^2 (m k ln2 + k ln(1/delta)) / n^2 <= eps", second_order_base,
                   Relation::kLessEqual, epsilon});
  } else {
    const double cm = *cmax;
    out.push_back({"n^2 >= 2 c1^2 Cmax^2 m k eps^-2 ln(1/delta)", n2, Relation::kGreaterEqual,
                   2.0 * cm * cm * first_order_base});
    out.push_back({"c2 C^2 Cmax (m k ln2 + k ln(1/delta)) / n^2 <= eps", second_order_base * cm,
                   Relation::kLessEqual, epsilon});
    ConstraintCheck alt{"n^2 >= 8 c1^2 Cmax^2 m k eps^-2 ln(1/delta) [alternative coefficient]",
                        n2, Relation::kGreaterEqual, 8.0 * cm * cm * first_order_base};
    alt.enforced = false;
    out.push_back(alt);
  }
  return out;
}

Alg1Plan plan_alg1(std::uint64_t m, double epsilon, double delta,
                   const ProtocolConstants& constants, std::optional<double> cmax,
                   const PlanOptions& options) {
  if (m < 1) throw ValidationError("plan_alg1: m must be at least 1");
  require_probability_pair(epsilon, delta);
  constants.validate();
  if (cmax && !(*cmax >= 0.0)) throw ValidationError("plan_alg1: Cmax must be nonnegative");

  Alg1Plan plan;
  plan.m = m;
  plan.epsilon = epsilon;
  plan.delta = delta;
  plan.union_bound = options.union_bound;
  plan.effective_delta = effective_delta(m, delta, options.union_bound);
  plan.constants = constants;
  plan.cmax_used = cmax;

  const double d_eff = plan.effective_delta;
  plan.k = static_cast<std::uint64_t>(
      std::ceil(constants.c0 / (epsilon * epsilon) * std::log(1.0 / d_eff)));
  plan.k = std::max<std::uint64_t>(plan.k, 1);

  auto satisfied = [&](std::uint64_t n) {
    return enforced_hold(alg1_constraints(m, epsilon, d_eff, plan.k, n, constants, cmax));
  };

  std::uint64_t lo = 10 * plan.k;
  std::uint64_t hi = options.n_ceiling;
  if (lo > hi || !satisfied(hi)) {
    plan.n = lo > hi ? lo : hi;
    plan.feasible = false;
    plan.constraints = alg1_constraints(m, epsilon, d_eff, plan.k, plan.n, constants, cmax);
    return plan;
  }
  // Constraints 2-4 are monotone in n: find the smallest satisfying n.
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (satisfied(mid)) hi = mid;
    else lo = mid + 1;
  }
  plan.n = lo;
  plan.feasible = true;
  plan.constraints = alg1_constraints(m, epsilon, d_eff, plan.k, plan.n, constants, cmax);
  return plan;
}

// --- Algorithm 2 ------------------------------------------------------------

std::vector<ConstraintCheck> alg2_constraints(std::uint64_t m, double epsilon, double delta,
                                              std::uint64_t n, std::uint64_t p,
                                              const LowMemConstants& c) {
  const double log_inv_delta = std::log(1.0 / delta);
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);
  const double eps2 = epsilon * epsilon;

  std::vector<ConstraintCheck> out;
  out.push_back({"n >= C0 ln(1/delta) / eps^2", nd, Relation::kGreaterEqual,
                 c.C0 * log_inv_delta / eps2});
  const bool pow2 = n != 0 && (n & (n - 1)) == 0;
  out.push_back({"n is a power of two", pow2 ? 1.0 : 0.0, Relation::kGreaterEqual, 1.0});
  out.push_back({"p <= C1 n^2 eps^2 / ln(1/delta)", pd, Relation::kLessEqual,
                 c.C1 * nd * nd * eps2 / log_inv_delta});
  out.push_back({"p >= C3 m ln(1/delta) / eps^2", pd, Relation::kGreaterEqual,
                 c.C3 * md * log_inv_delta / eps2});
  out.push_back({"p >= C4 ln(1/delta) / eps + C5 m / eps", pd, Relation::kGreaterEqual,
                 c.C4 * log_inv_delta / epsilon + c.C5 * md / epsilon});
  out.push_back({"p <= N - 1 (state fits the counter register)", pd, Relation::kLessEqual,
                 static_cast<double>(counter_half_range(n)) - 1.0});
  return out;
}

Alg2Plan plan_alg2(std::uint64_t m, double epsilon, double delta,
                   const LowMemConstants& constants, const PlanOptions& options) {
  if (m < 1) throw ValidationError("plan_alg2: m must be at least 1");
  require_probability_pair(epsilon, delta);
  constants.validate();

  Alg2Plan plan;
  plan.m = m;
  plan.epsilon = epsilon;
  plan.delta = delta;
  plan.union_bound = options.union_bound;
  plan.effective_delta = effective_delta(m, delta, options.union_bound);
  plan.constants = constants;

  const double d_eff = plan.effective_delta;
  const double log_inv_delta = std::log(1.0 / d_eff);
  const double eps2 = epsilon * epsilon;
  const double md = static_cast<double>(m);

  const double p_lower = std::max(constants.C3 * md * log_inv_delta / eps2,
                                  constants.C4 * log_inv_delta / epsilon + constants.C5 * md / epsilon);
  const double n_min = constants.C0 * log_inv_delta / eps2;

  std::uint64_t n = 1;
  while (static_cast<double>(n) < n_min) n *= 2;

  for (; n <= options.n_ceiling; n *= 2) {
    const double nd = static_cast<double>(n);
    const double p_upper =
        std::min(constants.C1 * nd * nd * eps2 / log_inv_delta,
                 static_cast<double>(counter_half_range(n)) - 1.0);
    const double p_lo_int = std::max(1.0, std::ceil(p_lower));
    plan.n = n;
    plan.N = counter_half_range(n);
    plan.p_lower = p_lower;
    plan.p_upper = p_upper;
    if (p_lo_int <= std::floor(p_upper)) {
      plan.p = static_cast<std::uint64_t>(p_lo_int);
      plan.feasible = true;
      break;
    }
    if (n > options.n_ceiling / 2) break;
  }
  if (!plan.feasible) plan.p = static_cast<std::uint64_t>(std::max(1.0, std::ceil(p_lower)));
  plan.constraints = alg2_constraints(m, epsilon, d_eff, plan.n, plan.p, constants);
  return plan;
}

// --- reports ------------------------------------------------------------------

std::string format_plan(const Alg1Plan& plan) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "algorithm: alg1\n"
     << "m: " << plan.m << "\n"
     << "epsilon: " << plan.epsilon << "\n"
     << "delta: " << plan.delta << "\n"
     << "union_bound: " << (plan.union_bound ? "true" : "false") << "\n"
     << "effective_delta: " << plan.effective_delta << "\n"
     << "constants: c0=" << plan.constants.c0 << " c1=" << plan.constants.c1
     << " c2=" << plan.constants.c2 << " C=" << plan.constants.C << "\n";
  if (plan.cmax_used) os << "cmax: " << *plan.cmax_used << "\n";
  os << "k: " << plan.k << "\n"
     << "n: " << plan.n << "\n"
     << "feasible: " << (plan.feasible ? "true" : "false") << "\n";
  format_constraints(os, plan.constraints);
  return os.str();
}

std::string format_plan(const Alg2Plan& plan) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "algorithm: alg2\n"
     << "m: " << plan.m << "\n"
     << "epsilon: " << plan.epsilon << "\n"
     << "delta: " << plan.delta << "\n"
     << "union_bound: " << (plan.union_bound ? "true" : "false") << "\n"
     << "effective_delta: " << plan.effective_delta << "\n"
     << "constants: C0=" << plan.constants.C0 << " C1=" << plan.constants.C1
     << " C3=" << plan.constants.C3 << " C4=" << plan.constants.C4
     << " C5=" << plan.constants.C5 << "\n"
     << "n: " << plan.n << "\n"
     << "N: " << plan.N << "\n"
     << "p: " << plan.p << "\n"
     << "p_interval: [" << plan.p_lower << ", " << plan.p_upper << "]\n"
     << "feasible: " << (plan.feasible ? "true" : "false") << "\n";
  format_constraints(os, plan.constraints);
  return os.str();
}

Algorithm parse_algorithm(const std::string& text) {
  if (text == "alg1") return Algorithm::kAlg1;
  if (text == "alg2") return Algorithm::kAlg2;
  throw ValidationError("unknown algorithm '" + text + "' (expected alg1 or alg2)");
}

std::string to_string(Algorithm algorithm) {
  return algorithm == Algorithm::kAlg1 ? "alg1" : "alg2";
}

void RoundParams::validate() const {
  if (n == 0) throw ValidationError("round parameters: n must be at least 1");
  if (algorithm == Algorithm::kAlg1) {
    if (k == 0) throw ValidationError("round parameters: k must be at least 1");
    return;
  }
  if ((n & (n - 1)) != 0) throw ValidationError("round parameters: n must be a power of two");
  if (p == 0) throw ValidationError("round parameters: p must be at least 1");
  if (p >= N()) {
    throw ValidationError("round parameters: p must be below N = 2 n^2");
  }
}

RoundParams round_params(const Alg1Plan& plan) {
  RoundParams r;
  r.algorithm = Algorithm::kAlg1;
  r.n = plan.n;
  r.k = plan.k;
  return r;
}

RoundParams round_params(const Alg2Plan& plan) {
  RoundParams r;
  r.algorithm = Algorithm::kAlg2;
  r.n = plan.n;
  r.p = plan.p;
  return r;
}

}  // namespace shadowlab
