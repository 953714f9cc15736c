#include "shadowlab/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "shadowlab/error.hpp"

namespace shadowlab {

namespace {

void require_square(const ComplexMatrix& m, std::string_view what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream os;
    os << what << " must be a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    throw DimensionMismatch(os.str());
  }
}

void require_finite(const ComplexMatrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw ValidationError(std::string(what) + " has non-finite entries");
  }
}

void require_same_dim(const ComplexMatrix& a, const ComplexMatrix& b, std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << what << ": dimension mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows()
       << "x" << b.cols();
    throw DimensionMismatch(os.str());
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(substream), hi(substream)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double max_asymmetry(const ComplexMatrix& h) {
  if (h.rows() != h.cols()) return INFINITY;
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

ComplexMatrix hermitian_part(const ComplexMatrix& h, std::string_view what) {
  require_square(h, what);
  require_finite(h, what);
  const double asym = max_asymmetry(h);
  if (asym > kStateTolerance) {
    std::ostringstream os;
    os << what << " is not Hermitian: max |H - H^dagger| = " << asym;
    throw ValidationError(os.str());
  }
  return (h + h.adjoint()) * 0.5;
}

ComplexMatrix SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
}

ComplexMatrix SpectralDecomposition::projector(Index first, Index count) const {
  const auto block = eigenvectors.middleCols(first, count);
  return block * block.adjoint();
}

SpectralDecomposition spectral_decompose(const ComplexMatrix& h) {
  const ComplexMatrix sym = hermitian_part(h, "spectral_decompose input");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw ValidationError("Hermitian eigensolver failed to converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

ComplexMatrix expm_i(const SpectralDecomposition& s, double t) {
  ComplexVector phases(s.dim());
  for (Index i = 0; i < s.dim(); ++i) phases(i) = std::polar(1.0, t * s.eigenvalues(i));
  return s.eigenvectors * phases.asDiagonal() * s.eigenvectors.adjoint();
}

ComplexMatrix expm_i(const ComplexMatrix& h, double t) { return expm_i(spectral_decompose(h), t); }

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_square(a, "commutator lhs");
  require_same_dim(a, b, "commutator");
  return a * b - b * a;
}

double operator_norm(const ComplexMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(a);
  return svd.singularValues()(0);
}

// --- DensityMatrix ---------------------------------------------------------

DensityMatrix::DensityMatrix(const ComplexMatrix& m) {
  ComplexMatrix h = hermitian_part(m, "density matrix");
  const double trace = h.trace().real();
  if (std::abs(trace - 1.0) > kStateTolerance) {
    std::ostringstream os;
    os << "density matrix trace is " << trace << ", expected 1";
    throw ValidationError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
  const double min_eig = solver.eigenvalues()(0);
  if (min_eig < -kStateTolerance) {
    std::ostringstream os;
    os << "density matrix is not positive semidefinite: min eigenvalue " << min_eig;
    throw ValidationError(os.str());
  }
  if (min_eig < 0.0) {
    RealVector clipped = solver.eigenvalues().cwiseMax(0.0);
    clipped /= clipped.sum();
    h = solver.eigenvectors() * clipped.cast<Complex>().asDiagonal() *
        solver.eigenvectors().adjoint();
  }
  matrix_ = std::move(h);
}

DensityMatrix DensityMatrix::pure(const ComplexVector& psi) {
  const double norm = psi.norm();
  if (norm == 0.0) throw ValidationError("pure state vector has zero norm");
  const ComplexVector unit = psi / norm;
  return DensityMatrix(unit * unit.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(Index d) {
  if (d < 1) throw ValidationError("dimension must be positive");
  return DensityMatrix(ComplexMatrix::Identity(d, d) / static_cast<double>(d));
}

DensityMatrix DensityMatrix::diagonal(std::span<const double> probabilities) {
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Index>(probabilities.size()),
                                        static_cast<Index>(probabilities.size()));
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    m(static_cast<Index>(i), static_cast<Index>(i)) = probabilities[i];
  }
  return DensityMatrix(m);
}

// --- PovmElement -----------------------------------------------------------

PovmElement::PovmElement(const ComplexMatrix& m) {
  ComplexMatrix h = hermitian_part(m, "POVM element");
  SpectralDecomposition s = spectral_decompose(h);
  const double lo = s.eigenvalues.minCoeff();
  const double hi = s.eigenvalues.maxCoeff();
  if (lo < -kStateTolerance || hi > 1.0 + kStateTolerance) {
    std::ostringstream os;
    os << "POVM element spectrum [" << lo << ", " << hi << "] leaves [0, 1]";
    throw ValidationError(os.str());
  }
  if (lo < 0.0 || hi > 1.0) {
    s.eigenvalues = s.eigenvalues.cwiseMax(0.0).cwiseMin(1.0);
    h = s.reconstruct();
  }
  is_projector_ = std::all_of(s.eigenvalues.begin(), s.eigenvalues.end(), [](double v) {
    return std::abs(v) <= kStateTolerance || std::abs(v - 1.0) <= kStateTolerance;
  });
  matrix_ = std::move(h);
  spectral_ = std::move(s);
}

PovmElement PovmElement::identity(Index d) { return PovmElement(ComplexMatrix::Identity(d, d)); }

PovmElement PovmElement::zero(Index d) { return PovmElement(ComplexMatrix::Zero(d, d)); }

// --- state operations ------------------------------------------------------

DensityMatrix conjugate(const DensityMatrix& rho, const ComplexMatrix& u) {
  require_same_dim(rho.matrix(), u, "conjugate");
  const double unitarity =
      (u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
  if (unitarity > kStateTolerance) {
    std::ostringstream os;
    os << "conjugate: operator is not unitary, max |U^dagger U - I| = " << unitarity;
    throw ValidationError(os.str());
  }
  return DensityMatrix(u * rho.matrix() * u.adjoint());
}

double expectation(const ComplexMatrix& hermitian, const DensityMatrix& rho) {
  require_same_dim(hermitian, rho.matrix(), "expectation");
  // Tr[M rho] = sum_ij M_ij rho_ji
  const Complex value = (hermitian.cwiseProduct(rho.matrix().transpose())).sum();
  if (std::abs(value.imag()) > 1e-10) {
    std::ostringstream os;
    os << "expectation has imaginary residue " << value.imag() << "; operator not Hermitian?";
    throw ValidationError(os.str());
  }
  return value.real();
}

double expectation(const PovmElement& m, const DensityMatrix& rho) {
  return expectation(m.matrix(), rho);
}

// --- random instances --------------------------------------------------------

ComplexMatrix ginibre(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  ComplexMatrix g(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(r, c) = Complex(re, im);
    }
  }
  return g;
}

ComplexMatrix haar_unitary(Index d, Rng& rng) {
  const ComplexMatrix g = ginibre(d, d, rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(d, d);
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < d; ++i) {
    const Complex diag = r(i, i);
    const double mag = std::abs(diag);
    if (mag > 0.0) q.col(i) *= diag / mag;
  }
  return q;
}

DensityMatrix random_density(Index d, Index rank, Rng& rng) {
  if (d < 1 || rank < 1 || rank > d) {
    std::ostringstream os;
    os << "random_density: rank " << rank << " out of range [1, " << d << "]";
    throw ValidationError(os.str());
  }
  const ComplexMatrix g = ginibre(d, rank, rng);
  ComplexMatrix m = g * g.adjoint();
  m /= m.trace().real();
  return DensityMatrix(m);
}

DensityMatrix random_density(Index d, Index rank, std::uint64_t seed) {
  Rng rng(seed);
  return random_density(d, rank, rng);
}

PovmElement random_projector(Index d, Index rank, Rng& rng) {
  if (d < 1 || rank < 1 || rank > d) {
    std::ostringstream os;
    os << "random_projector: rank " << rank << " out of range [1, " << d << "]";
    throw ValidationError(os.str());
  }
  const ComplexMatrix u = haar_unitary(d, rng);
  const auto cols = u.leftCols(rank);
  return PovmElement(cols * cols.adjoint());
}

PovmElement random_projector(Index d, Index rank, std::uint64_t seed) {
  Rng rng(seed);
  return random_projector(d, rank, rng);
}

PovmElement random_povm_element(Index d, Rng& rng) {
  if (d < 1) throw ValidationError("random_povm_element: dimension must be positive");
  if (d == 1) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return PovmElement(ComplexMatrix::Constant(1, 1, unit(rng)));
  }
  const ComplexMatrix g = ginibre(d, d, rng);
  const ComplexMatrix h = (g + g.adjoint()) * 0.5;
  SpectralDecomposition s = spectral_decompose(h);
  const double lo = s.eigenvalues.minCoeff();
  const double hi = s.eigenvalues.maxCoeff();
  s.eigenvalues = ((s.eigenvalues.array() - lo) / (hi - lo)).matrix();
  return PovmElement(s.reconstruct());
}

PovmElement random_povm_element(Index d, std::uint64_t seed) {
  Rng rng(seed);
  return random_povm_element(d, rng);
}

double cmax_of_family(std::span<const PovmElement> family) {
  if (family.empty()) throw ValidationError("cmax_of_family: empty family");
  double best = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    for (std::size_t j = i + 1; j < family.size(); ++j) {
      best = std::max(best, operator_norm(commutator(family[i].matrix(), family[j].matrix())));
    }
  }
  return best;
}

ConjugateDeviation conjugate_deviation(const ComplexMatrix& a, const ComplexMatrix& b) {
  const ComplexMatrix ha = hermitian_part(a, "conjugate_deviation A");
  const ComplexMatrix hb = hermitian_part(b, "conjugate_deviation B");
  require_same_dim(ha, hb, "conjugate_deviation");
  const double a_norm = operator_norm(ha);
  if (a_norm > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "conjugate_deviation requires ||A|| <= 1, got " << a_norm;
    throw ValidationError(os.str());
  }
  const ComplexMatrix u = expm_i(ha, 1.0);
  const ComplexMatrix ab = commutator(ha, hb);
  const ComplexMatrix residual = u * hb * u.adjoint() - hb - Complex(0.0, 1.0) * ab;
  return {operator_norm(residual), operator_norm(commutator(ha, ab)) * kConjugateBoundCoefficient};
}

double commutator_series_coefficient(double a_norm) {
  if (a_norm < 0.0) throw ValidationError("commutator_series_coefficient: negative norm");
  const double x = 2.0 * a_norm;
  if (x < 1e-4) {
    // (e^x - 1 - x) / x^2 = 1/2 + x/6 + x^2/24 + ...
    return 0.5 + x / 6.0 + x * x / 24.0;
  }
  return std::expm1(x) / (x * x) - 1.0 / x;
}

ComplexMatrix pauli_x() {
  ComplexMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

ComplexMatrix pauli_y() {
  ComplexMatrix m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}

ComplexMatrix pauli_z() {
  ComplexMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

}  // namespace shadowlab
