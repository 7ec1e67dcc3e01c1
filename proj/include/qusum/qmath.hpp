#pragma once

#include <Eigen/Dense>

#include <complex>
#include <limits>
#include <string>
#include <vector>

namespace qusum::qmath {

using Matrix = Eigen::MatrixXcd;

// Eigenvalues below this are treated as kernel when building supports,
// logs and fractional inverse powers.
inline constexpr double kEigCutoff = 1e-12;
inline constexpr double kHermTol = 1e-12;

inline double inf() { return std::numeric_limits<double>::infinity(); }

// Hermitian matrix with validated symmetry. Stored exactly symmetrized so
// downstream eigensolvers see H == H^dagger to machine precision.
class HermitianOperator {
 public:
  explicit HermitianOperator(const Matrix& m);
  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

// Unit-trace positive semidefinite operator. Eigenvalues may dip to -1e-12
// from rounding; anything below that is rejected.
class DensityMatrix {
 public:
  explicit DensityMatrix(const Matrix& m);
  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  HermitianOperator hermitian() const { return HermitianOperator(m_); }

 private:
  Matrix m_;
};

// eigenvalues descending; eigenvector columns orthonormal, phase fixed so the
// first component with modulus > 1e-12 is real positive.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Matrix eigenvectors;
};

struct ProbabilityVector {
  std::vector<double> probs;
  std::vector<std::string> labels;

  ProbabilityVector() = default;
  ProbabilityVector(std::vector<double> pr, std::vector<std::string> lb);
  size_t size() const { return probs.size(); }
};

SpectralDecomposition spectral_decompose(const HermitianOperator& h);

// true iff every sigma eigenvector above cutoff lies in the span of rho
// eigenvectors above cutoff (leakage onto the rho kernel <= 1e-12).
bool support_contained(const DensityMatrix& sigma, const DensityMatrix& rho);

// tr[sigma (log sigma - log rho)] in nats; +inf on support violation.
double quantum_relative_entropy(const DensityMatrix& sigma, const DensityMatrix& rho);

// log2 of the largest eigenvalue of rho^{-1/2} sigma rho^{-1/2} (bits);
// +inf on support violation.
double max_relative_entropy(const DensityMatrix& sigma, const DensityMatrix& rho);

// (1/(alpha-1)) log tr[sigma^alpha rho^{1-alpha}] in nats. alpha in (0,1) or
// (1,inf); alpha > 1 needs supp(sigma) inside supp(rho), else +inf.
double renyi_relative_entropy(const DensityMatrix& sigma, const DensityMatrix& rho,
                              double alpha);

// (1/(alpha-1)) log tr[(rho^{(1-alpha)/2alpha} sigma rho^{(1-alpha)/2alpha})^alpha]
// in nats; same alpha domain as the non-sandwiched version.
double sandwiched_renyi(const DensityMatrix& sigma, const DensityMatrix& rho,
                        double alpha);

// sum q log(q/p) in nats over a shared alphabet; 0 log 0 = 0 and
// q > 0 where p = 0 gives +inf. Labels must match entry by entry.
double kl_divergence(const ProbabilityVector& q, const ProbabilityVector& p);

// -log min{ tr[E rho] : tr[E sigma] >= 1-eps, 0 <= E <= I } in nats.
// eps in [0,1). Exact for supp(sigma) inside supp(rho); sigma weight outside
// the rho support is absorbed at zero cost.
double hypothesis_testing_relative_entropy(const DensityMatrix& sigma,
                                           const DensityMatrix& rho, double eps);

// {"dim": n, "re": [...], "im": [...]} with row-major flattening.
std::string to_json(const HermitianOperator& h);
HermitianOperator operator_from_json(const std::string& text);

}  // namespace qusum::qmath
