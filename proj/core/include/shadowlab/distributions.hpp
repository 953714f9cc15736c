#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "shadowlab/linalg.hpp"

namespace shadowlab {

using BigInt = boost::multiprecision::cpp_int;

BigInt binomial_exact(unsigned n, unsigned k);
/// ln C(n, k) through lgamma; -inf outside 0 <= k <= n.
double log_binomial(double n, double k);

/// Finite pmf on sorted integer support points, with an inverse-CDF sampler.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;
  /// `values` strictly increasing; `probs` nonnegative, same length.
  DiscreteDistribution(std::vector<std::int64_t> values, std::vector<double> probs);

  std::span<const std::int64_t> values() const { return values_; }
  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return values_.size(); }

  double pmf(std::int64_t x) const;
  double total_mass() const;
  double mean() const;
  double moment(int order) const;
  std::int64_t sample(Rng& rng) const;

 private:
  std::vector<std::int64_t> values_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

double total_variation(const DiscreteDistribution& a, const DiscreteDistribution& b);

/// Builds a distribution from a histogram of draws.
DiscreteDistribution empirical_distribution(std::span<const std::int64_t> draws);

/// Sum of k independent uniform +-1 signs.
class LambdaDist {
 public:
  explicit LambdaDist(std::uint64_t k);

  std::uint64_t k() const { return k_; }
  double pmf(std::int64_t lambda) const { return table_.pmf(lambda); }
  /// C(k, (k + lambda)/2) and 2^k; zero numerator off the support.
  std::pair<BigInt, BigInt> pmf_exact(std::int64_t lambda) const;
  const DiscreteDistribution& table() const { return table_; }
  /// Draws k fair signs (bits of uniform 64-bit words) and sums them.
  std::int64_t sample(Rng& rng) const;

 private:
  std::uint64_t k_;
  DiscreteDistribution table_;
};

/// Counter noise S with pmf C(2p, p+x)^2 / C(4p, 2p) on x in [-p, p].
class NoiseSDist {
 public:
  explicit NoiseSDist(std::uint64_t p);

  std::uint64_t p() const { return p_; }
  double pmf(std::int64_t x) const { return table_.pmf(x); }
  /// Exact numerator and denominator; only for 4p <= 256.
  std::pair<BigInt, BigInt> pmf_exact(std::int64_t x) const;
  const DiscreteDistribution& table() const { return table_; }
  std::int64_t sample(Rng& rng) const { return table_.sample(rng); }

 private:
  std::uint64_t p_;
  DiscreteDistribution table_;
};

/// Largest p for which the exact (unbounded integer) paths are used.
inline constexpr std::uint64_t kExactNoiseMaxP = 64;

/// Fourier-basis outcome L of the counter state, on R = [-N, N-1], N = 2n^2:
/// f(l) = (2 cos(l pi / 2N))^{4p} / (2 C(4p, 2p) N). Computed in log space.
/// Requires p < N: for larger p the counter state wraps around the register
/// and f no longer sums to one.
class FourierLDist {
 public:
  FourierLDist(std::uint64_t p, std::uint64_t n);

  std::uint64_t p() const { return p_; }
  std::uint64_t n() const { return n_; }
  std::uint64_t N() const { return N_; }
  double log_pmf(std::int64_t l) const;
  double pmf(std::int64_t l) const;
  /// Points whose pmf underflows to zero are dropped from the table.
  const DiscreteDistribution& table() const { return table_; }
  std::int64_t sample(Rng& rng) const { return table_.sample(rng); }
  /// Kickback eigenvalue lambda = pi L / (2n) of n*T for outcome L.
  double lambda_of(std::int64_t l) const;

 private:
  std::uint64_t p_;
  std::uint64_t n_;
  std::uint64_t N_;
  double log_norm_;
  DiscreteDistribution table_;
};

/// Counter initial state |psi_p> with amplitudes C(2p, p+x) / sqrt(C(4p, 2p)).
/// The support [-p, p] must fit in [-N, N-1], so p < N.
class PsiPState {
 public:
  PsiPState(std::uint64_t p, std::uint64_t n);

  std::uint64_t p() const { return p_; }
  std::uint64_t N() const { return N_; }
  double amplitude(std::int64_t x) const;
  /// Amplitude vector indexed by x + N for x in [-N, N-1].
  RealVector amplitudes() const;
  /// Squared amplitude as an exact fraction (4p <= 256).
  std::pair<BigInt, BigInt> squared_amplitude_exact(std::int64_t x) const;

 private:
  std::uint64_t p_;
  std::uint64_t N_;
  NoiseSDist noise_;
};

/// sum_x pmf(x) exp(x^2 / K^2), accumulated in log space.
double subgaussian_mgf(const DiscreteDistribution& dist, double K);

/// K = 4N / (pi sqrt(p)), the claimed sub-Gaussian scale of L.
double fourier_subgaussian_scale(std::uint64_t p, std::uint64_t n);

/// 2 exp(-2 t^2 / sum (b_i - a_i)^2).
double tail_bound_hoeffding(std::span<const std::pair<double, double>> ranges, double t);
/// 2 exp(-eps^2 / (2 sum c_i^2)).
double tail_bound_azuma(std::span<const double> bounds, double epsilon);

/// Two-column CSV "value,probability".
void write_pmf_csv(const DiscreteDistribution& dist, const std::filesystem::path& path);

}  // namespace shadowlab
