#include "shadowlab/distributions.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "shadowlab/error.hpp"

namespace shadowlab {

namespace {

constexpr double kPi = std::numbers::pi;

double log_sum_exp(std::span<const double> logs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : logs) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

double big_to_double(const BigInt& v) { return v.convert_to<double>(); }

}  // namespace

BigInt binomial_exact(unsigned n, unsigned k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  BigInt result = 1;
  for (unsigned i = 1; i <= k; ++i) {
    result *= n - k + i;
    result /= i;
  }
  return result;
}

double log_binomial(double n, double k) {
  if (k < 0.0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// --- DiscreteDistribution ------------------------------------------------------

DiscreteDistribution::DiscreteDistribution(std::vector<std::int64_t> values,
                                           std::vector<double> probs)
    : values_(std::move(values)), probs_(std::move(probs)) {
  if (values_.size() != probs_.size()) {
    throw ValidationError("DiscreteDistribution: values and probabilities differ in length");
  }
  if (values_.empty()) throw ValidationError("DiscreteDistribution: empty support");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (i > 0 && values_[i] <= values_[i - 1]) {
      throw ValidationError("DiscreteDistribution: support must be strictly increasing");
    }
    if (!(probs_[i] >= 0.0) || !std::isfinite(probs_[i])) {
      throw ValidationError("DiscreteDistribution: probabilities must be finite and >= 0");
    }
  }
  cumulative_.resize(probs_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    acc += probs_[i];
    cumulative_[i] = acc;
  }
}

double DiscreteDistribution::pmf(std::int64_t x) const {
  const auto it = std::lower_bound(values_.begin(), values_.end(), x);
  if (it == values_.end() || *it != x) return 0.0;
  return probs_[static_cast<std::size_t>(it - values_.begin())];
}

double DiscreteDistribution::total_mass() const {
  return cumulative_.empty() ? 0.0 : cumulative_.back();
}

double DiscreteDistribution::mean() const { return moment(1); }

double DiscreteDistribution::moment(int order) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    acc += probs_[i] * std::pow(static_cast<double>(values_[i]), order);
  }
  return acc;
}

std::int64_t DiscreteDistribution::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, total_mass());
  const double u = unit(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return values_[static_cast<std::size_t>(it - cumulative_.begin())];
}

double total_variation(const DiscreteDistribution& a, const DiscreteDistribution& b) {
  std::map<std::int64_t, double> diff;
  for (std::size_t i = 0; i < a.size(); ++i) diff[a.values()[i]] += a.probs()[i];
  for (std::size_t i = 0; i < b.size(); ++i) diff[b.values()[i]] -= b.probs()[i];
  double acc = 0.0;
  for (const auto& [value, d] : diff) acc += std::abs(d);
  return 0.5 * acc;
}

DiscreteDistribution empirical_distribution(std::span<const std::int64_t> draws) {
  if (draws.empty()) throw ValidationError("empirical_distribution: no draws");
  std::map<std::int64_t, std::uint64_t> counts;
  for (auto x : draws) ++counts[x];
  std::vector<std::int64_t> values;
  std::vector<double> probs;
  const double total = static_cast<double>(draws.size());
  for (const auto& [x, c] : counts) {
    values.push_back(x);
    probs.push_back(static_cast<double>(c) / total);
  }
  return {std::move(values), std::move(probs)};
}

// --- LambdaDist -----------------------------------------------------------------

LambdaDist::LambdaDist(std::uint64_t k) : k_(k) {
  if (k == 0) throw ValidationError("LambdaDist: k must be at least 1");
  std::vector<std::int64_t> values;
  std::vector<double> probs;
  const auto ki = static_cast<std::int64_t>(k);
  const double log_total = static_cast<double>(k) * std::numbers::ln2;
  for (std::int64_t ones = 0; ones <= ki; ++ones) {
    values.push_back(2 * ones - ki);
    probs.push_back(std::exp(log_binomial(static_cast<double>(k), static_cast<double>(ones)) -
                             log_total));
  }
  if (k <= 256) {
    const BigInt total = BigInt(1) << static_cast<unsigned>(k);
    for (std::int64_t ones = 0; ones <= ki; ++ones) {
      probs[static_cast<std::size_t>(ones)] =
          big_to_double(binomial_exact(static_cast<unsigned>(k), static_cast<unsigned>(ones))) /
          big_to_double(total);
    }
  }
  table_ = DiscreteDistribution(std::move(values), std::move(probs));
}

std::pair<BigInt, BigInt> LambdaDist::pmf_exact(std::int64_t lambda) const {
  const auto ki = static_cast<std::int64_t>(k_);
  const BigInt total = BigInt(1) << static_cast<unsigned>(k_);
  if (lambda < -ki || lambda > ki || (lambda + ki) % 2 != 0) return {BigInt(0), total};
  return {binomial_exact(static_cast<unsigned>(k_), static_cast<unsigned>((ki + lambda) / 2)),
          total};
}

std::int64_t LambdaDist::sample(Rng& rng) const {
  std::uint64_t remaining = k_;
  std::int64_t ones = 0;
  while (remaining > 0) {
    std::uint64_t word = rng();
    if (remaining < 64) word &= (std::uint64_t{1} << remaining) - 1;
    ones += std::popcount(word);
    remaining -= std::min<std::uint64_t>(remaining, 64);
  }
  return 2 * ones - static_cast<std::int64_t>(k_);
}

// --- NoiseSDist -----------------------------------------------------------------

NoiseSDist::NoiseSDist(std::uint64_t p) : p_(p) {
  if (p == 0) throw ValidationError("NoiseSDist: p must be at least 1");
  const auto pi = static_cast<std::int64_t>(p);
  std::vector<std::int64_t> values;
  std::vector<double> probs;
  if (p <= kExactNoiseMaxP) {
    const BigInt denom = binomial_exact(static_cast<unsigned>(4 * p), static_cast<unsigned>(2 * p));
    const double denom_d = big_to_double(denom);
    for (std::int64_t x = -pi; x <= pi; ++x) {
      const BigInt c = binomial_exact(static_cast<unsigned>(2 * p), static_cast<unsigned>(pi + x));
      values.push_back(x);
      probs.push_back(big_to_double(c * c) / denom_d);
    }
  } else {
    const double log_denom = log_binomial(4.0 * static_cast<double>(p), 2.0 * static_cast<double>(p));
    for (std::int64_t x = -pi; x <= pi; ++x) {
      values.push_back(x);
      probs.push_back(std::exp(
          2.0 * log_binomial(2.0 * static_cast<double>(p), static_cast<double>(pi + x)) - log_denom));
    }
  }
  table_ = DiscreteDistribution(std::move(values), std::move(probs));
}

std::pair<BigInt, BigInt> NoiseSDist::pmf_exact(std::int64_t x) const {
  if (p_ > kExactNoiseMaxP) {
    throw ValidationError("NoiseSDist::pmf_exact: exact path limited to p <= 64");
  }
  const auto pi = static_cast<std::int64_t>(p_);
  const BigInt denom =
      binomial_exact(static_cast<unsigned>(4 * p_), static_cast<unsigned>(2 * p_));
  if (x < -pi || x > pi) return {BigInt(0), denom};
  const BigInt c = binomial_exact(static_cast<unsigned>(2 * p_), static_cast<unsigned>(pi + x));
  return {c * c, denom};
}

// --- FourierLDist ---------------------------------------------------------------

FourierLDist::FourierLDist(std::uint64_t p, std::uint64_t n) : p_(p), n_(n) {
  if (p == 0) throw ValidationError("FourierLDist: p must be at least 1");
  if (n == 0) throw ValidationError("FourierLDist: n must be positive");
  N_ = 2 * n * n;
  if (p >= N_) {
    std::ostringstream os;
    os << "FourierLDist: p = " << p << " must be below N = " << N_
       << " for |psi_p> to fit the counter register";
    throw ValidationError(os.str());
  }
  const double pd = static_cast<double>(p);
  double log_central;
  if (p <= kExactNoiseMaxP) {
    log_central = std::log(
        big_to_double(binomial_exact(static_cast<unsigned>(4 * p), static_cast<unsigned>(2 * p))));
  } else {
    log_central = log_binomial(4.0 * pd, 2.0 * pd);
  }
  log_norm_ = std::numbers::ln2 + log_central + std::log(static_cast<double>(N_));

  std::vector<std::int64_t> values;
  std::vector<double> probs;
  const auto half = static_cast<std::int64_t>(N_);
  for (std::int64_t l = -half; l < half; ++l) {
    const double v = std::exp(log_pmf(l));
    if (v > 0.0) {
      values.push_back(l);
      probs.push_back(v);
    }
  }
  table_ = DiscreteDistribution(std::move(values), std::move(probs));
}

double FourierLDist::log_pmf(std::int64_t l) const {
  const auto half = static_cast<std::int64_t>(N_);
  if (l < -half || l >= half) return -std::numeric_limits<double>::infinity();
  const double c = 2.0 * std::cos(static_cast<double>(l) * kPi / (2.0 * static_cast<double>(N_)));
  if (c <= 0.0) return -std::numeric_limits<double>::infinity();
  return 4.0 * static_cast<double>(p_) * std::log(c) - log_norm_;
}

double FourierLDist::pmf(std::int64_t l) const { return std::exp(log_pmf(l)); }

double FourierLDist::lambda_of(std::int64_t l) const {
  return kPi * static_cast<double>(l) / (2.0 * static_cast<double>(n_));
}

// --- PsiPState ------------------------------------------------------------------

PsiPState::PsiPState(std::uint64_t p, std::uint64_t n)
    : p_(p), N_(2 * n * n), noise_(p == 0 ? 1 : p) {
  if (p == 0) throw ValidationError("PsiPState: p must be at least 1");
  if (n == 0) throw ValidationError("PsiPState: n must be positive");
  if (p >= N_) {
    std::ostringstream os;
    os << "PsiPState: support [-" << p << ", " << p << "] does not fit the register [-" << N_
       << ", " << N_ - 1 << "]";
    throw ValidationError(os.str());
  }
}

double PsiPState::amplitude(std::int64_t x) const { return std::sqrt(noise_.pmf(x)); }

RealVector PsiPState::amplitudes() const {
  RealVector a = RealVector::Zero(static_cast<Index>(2 * N_));
  const auto pi = static_cast<std::int64_t>(p_);
  const auto half = static_cast<std::int64_t>(N_);
  for (std::int64_t x = -pi; x <= pi; ++x) a(static_cast<Index>(x + half)) = amplitude(x);
  return a;
}

std::pair<BigInt, BigInt> PsiPState::squared_amplitude_exact(std::int64_t x) const {
  return noise_.pmf_exact(x);
}

// --- tail bounds and sub-Gaussian checks -----------------------------------------

double subgaussian_mgf(const DiscreteDistribution& dist, double K) {
  if (!(K > 0.0)) throw ValidationError("subgaussian_mgf: K must be positive");
  std::vector<double> logs;
  logs.reserve(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double p = dist.probs()[i];
    if (p <= 0.0) continue;
    const double x = static_cast<double>(dist.values()[i]);
    logs.push_back(std::log(p) + x * x / (K * K));
  }
  return std::exp(log_sum_exp(logs));
}

double fourier_subgaussian_scale(std::uint64_t p, std::uint64_t n) {
  const double N = static_cast<double>(2 * n * n);
  return 4.0 * N / (kPi * std::sqrt(static_cast<double>(p)));
}

double tail_bound_hoeffding(std::span<const std::pair<double, double>> ranges, double t) {
  if (ranges.empty()) throw ValidationError("tail_bound_hoeffding: no variables");
  if (t < 0.0) throw ValidationError("tail_bound_hoeffding: t must be nonnegative");
  double spread = 0.0;
  for (const auto& [a, b] : ranges) {
    if (b < a) throw ValidationError("tail_bound_hoeffding: range with b < a");
    spread += (b - a) * (b - a);
  }
  if (spread <= 0.0) throw ValidationError("tail_bound_hoeffding: all ranges degenerate");
  return 2.0 * std::exp(-2.0 * t * t / spread);
}

double tail_bound_azuma(std::span<const double> bounds, double epsilon) {
  if (bounds.empty()) throw ValidationError("tail_bound_azuma: no increments");
  if (epsilon < 0.0) throw ValidationError("tail_bound_azuma: epsilon must be nonnegative");
  double acc = 0.0;
  for (double c : bounds) {
    if (c < 0.0) throw ValidationError("tail_bound_azuma: increment bounds must be >= 0");
    acc += c * c;
  }
  if (acc <= 0.0) throw ValidationError("tail_bound_azuma: all increment bounds zero");
  return 2.0 * std::exp(-epsilon * epsilon / (2.0 * acc));
}

void write_pmf_csv(const DiscreteDistribution& dist, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write pmf table " + path.string());
  out << "value,probability\n" << std::setprecision(17);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    out << dist.values()[i] << ',' << dist.probs()[i] << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace shadowlab
