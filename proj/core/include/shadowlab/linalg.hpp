#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace shadowlab {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Random stream handle shared by every sampler in the library.
using Rng = std::mt19937_64;

/// Independent 64-bit seed for sub-stream `stream` of `seed` (via std::seed_seq).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);

/// Absolute tolerance for Hermiticity, trace and spectrum checks. Violations
/// up to this size are repaired (symmetrized or clipped), larger ones rejected.
inline constexpr double kStateTolerance = 1e-9;

/// Largest entrywise |H - H^dagger|.
double max_asymmetry(const ComplexMatrix& h);

/// Validates that `h` is square and Hermitian within kStateTolerance and
/// returns the symmetrized copy (H + H^dagger) / 2. `what` names the operand in
/// error messages.
ComplexMatrix hermitian_part(const ComplexMatrix& h, std::string_view what = "matrix");

struct SpectralDecomposition {
  RealVector eigenvalues;      // ascending
  ComplexMatrix eigenvectors;  // unitary, one eigenvector per column

  Index dim() const { return eigenvalues.size(); }
  ComplexMatrix reconstruct() const;
  /// Projector onto the span of eigenvector columns [first, first + count).
  ComplexMatrix projector(Index first, Index count) const;
};

SpectralDecomposition spectral_decompose(const ComplexMatrix& h);

/// exp(i t H) for Hermitian H.
ComplexMatrix expm_i(const ComplexMatrix& h, double t);
ComplexMatrix expm_i(const SpectralDecomposition& s, double t);

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

/// Largest singular value.
double operator_norm(const ComplexMatrix& a);

/// Positive semidefinite, trace-one operator.
class DensityMatrix {
 public:
  /// Validates Hermiticity, unit trace and positivity within kStateTolerance.
  /// Tiny negative eigenvalues are clipped to zero.
  explicit DensityMatrix(const ComplexMatrix& m);

  static DensityMatrix pure(const ComplexVector& psi);
  static DensityMatrix maximally_mixed(Index d);
  static DensityMatrix diagonal(std::span<const double> probabilities);

  Index dim() const { return matrix_.rows(); }
  const ComplexMatrix& matrix() const { return matrix_; }

 private:
  ComplexMatrix matrix_;
};

/// Hermitian operator with spectrum in [0, 1], with its cached eigensystem.
class PovmElement {
 public:
  explicit PovmElement(const ComplexMatrix& m);

  static PovmElement identity(Index d);
  static PovmElement zero(Index d);

  Index dim() const { return matrix_.rows(); }
  const ComplexMatrix& matrix() const { return matrix_; }
  const SpectralDecomposition& spectral() const { return spectral_; }
  bool is_projector() const { return is_projector_; }

 private:
  ComplexMatrix matrix_;
  SpectralDecomposition spectral_;
  bool is_projector_ = false;
};

/// U rho U^dagger.
DensityMatrix conjugate(const DensityMatrix& rho, const ComplexMatrix& u);

/// Tr[M rho]; the imaginary residue must vanish to 1e-10.
double expectation(const ComplexMatrix& hermitian, const DensityMatrix& rho);
double expectation(const PovmElement& m, const DensityMatrix& rho);

/// Standard complex Gaussian entries, E|z|^2 = 1.
ComplexMatrix ginibre(Index rows, Index cols, Rng& rng);
/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
ComplexMatrix haar_unitary(Index d, Rng& rng);

/// G G^dagger / Tr[G G^dagger] with G a d x rank Ginibre matrix.
DensityMatrix random_density(Index d, Index rank, Rng& rng);
DensityMatrix random_density(Index d, Index rank, std::uint64_t seed);
/// Projector onto the first `rank` columns of a Haar unitary.
PovmElement random_projector(Index d, Index rank, Rng& rng);
PovmElement random_projector(Index d, Index rank, std::uint64_t seed);
/// Random Hermitian matrix rescaled affinely so its spectrum spans [0, 1].
PovmElement random_povm_element(Index d, Rng& rng);
PovmElement random_povm_element(Index d, std::uint64_t seed);

/// max over pairs i < j of ||[M_i, M_j]||; zero for a single element.
double cmax_of_family(std::span<const PovmElement> family);

struct ConjugateDeviation {
  double lhs = 0.0;  // ||e^{iA} B e^{-iA} - B - i[A,B]||
  double rhs = 0.0;  // ||[A,[A,B]]|| (e^2 - 3) / 4
};

/// Both sides of the second-order conjugation bound. Requires ||A|| <= 1.
ConjugateDeviation conjugate_deviation(const ComplexMatrix& a, const ComplexMatrix& b);

/// Coefficient c(a) with ||e^{iA}Be^{-iA} - B - i[A,B]|| <= c(||A||) ||[A,[A,B]]||,
/// namely sum_{j>=2} (2a)^{j-2} / j! = (e^{2a} - 1 - 2a) / (4a^2). Equals
/// (e^2 - 3) / 4 at a = 1 and is increasing in a.
double commutator_series_coefficient(double a_norm);

inline constexpr double kConjugateBoundCoefficient = 1.0972640247326624;  // (e^2 - 3) / 4

ComplexMatrix pauli_x();
ComplexMatrix pauli_y();
ComplexMatrix pauli_z();

}  // namespace shadowlab
