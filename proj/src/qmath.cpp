#include "qusum/qmath.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace qusum::qmath {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw std::invalid_argument(std::string(what) + ": matrix must be square and non-empty");
}

// strictly positive part of the spectrum, orthonormal vectors
struct Support {
  Eigen::VectorXd vals;  // eigenvalues > kEigCutoff, descending
  Matrix vecs;
};

Support support_of(const DensityMatrix& m) {
  SpectralDecomposition s = spectral_decompose(m.hermitian());
  int k = 0;
  while (k < s.eigenvalues.size() && s.eigenvalues(k) > kEigCutoff) ++k;
  return Support{s.eigenvalues.head(k), s.eigenvectors.leftCols(k)};
}

}  // namespace

HermitianOperator::HermitianOperator(const Matrix& m) {
  require_square(m, "HermitianOperator");
  double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (dev > kHermTol)
    throw std::invalid_argument("HermitianOperator: not Hermitian, max deviation " +
                                std::to_string(dev));
  m_ = 0.5 * (m + m.adjoint().eval());
}

DensityMatrix::DensityMatrix(const Matrix& m) {
  HermitianOperator h(m);
  m_ = h.matrix();
  double tr = m_.trace().real();
  if (std::abs(tr - 1.0) > 1e-12)
    throw std::invalid_argument("DensityMatrix: trace " + std::to_string(tr) + " != 1");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("DensityMatrix: negative eigenvalue " +
                                std::to_string(es.eigenvalues().minCoeff()));
}

ProbabilityVector::ProbabilityVector(std::vector<double> pr, std::vector<std::string> lb)
    : probs(std::move(pr)), labels(std::move(lb)) {
  if (probs.size() != labels.size())
    throw std::invalid_argument("ProbabilityVector: size mismatch");
  double sum = 0;
  for (double p : probs) {
    if (!(p >= -1e-12)) throw std::invalid_argument("ProbabilityVector: negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("ProbabilityVector: sums to " + std::to_string(sum));
}

SpectralDecomposition spectral_decompose(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix());
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_decompose: eigensolver failed");
  const int n = h.dim();
  SpectralDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  // Eigen returns ascending order; flip to descending.
  for (int i = 0; i < n; ++i) {
    out.eigenvalues(i) = es.eigenvalues()(n - 1 - i);
    out.eigenvectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  // phase convention: first component with |v_i| > cutoff made real positive
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < n; ++r) {
      std::complex<double> v = out.eigenvectors(r, i);
      if (std::abs(v) > kEigCutoff) {
        out.eigenvectors.col(i) *= std::conj(v) / std::abs(v);
        break;
      }
    }
  }
  return out;
}

bool support_contained(const DensityMatrix& sigma, const DensityMatrix& rho) {
  Support rs = support_of(rho);
  if (rs.vals.size() == rho.dim()) return true;
  SpectralDecomposition ss = spectral_decompose(sigma.hermitian());
  for (int i = 0; i < ss.eigenvalues.size(); ++i) {
    if (ss.eigenvalues(i) <= kEigCutoff) break;
    double inside = (rs.vecs.adjoint() * ss.eigenvectors.col(i)).squaredNorm();
    if (1.0 - inside > 1e-12) return false;
  }
  return true;
}

double quantum_relative_entropy(const DensityMatrix& sigma, const DensityMatrix& rho) {
  if (!support_contained(sigma, rho)) return inf();
  Support ss = support_of(sigma);
  double tr_s_log_s = 0;
  for (int i = 0; i < ss.vals.size(); ++i) tr_s_log_s += ss.vals(i) * std::log(ss.vals(i));
  Support rs = support_of(rho);
  double tr_s_log_r = 0;
  for (int k = 0; k < rs.vals.size(); ++k) {
    double w = (rs.vecs.col(k).adjoint() * sigma.matrix() * rs.vecs.col(k))(0, 0).real();
    tr_s_log_r += std::log(rs.vals(k)) * w;
  }
  return tr_s_log_s - tr_s_log_r;
}

double max_relative_entropy(const DensityMatrix& sigma, const DensityMatrix& rho) {
  if (!support_contained(sigma, rho)) return inf();
  Support rs = support_of(rho);
  Matrix pinv_sqrt = Matrix::Zero(rho.dim(), rho.dim());
  for (int k = 0; k < rs.vals.size(); ++k)
    pinv_sqrt += (1.0 / std::sqrt(rs.vals(k))) * rs.vecs.col(k) * rs.vecs.col(k).adjoint();
  Matrix m = pinv_sqrt * sigma.matrix() * pinv_sqrt;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint().eval()),
                                           Eigen::EigenvaluesOnly);
  double lam = std::max(es.eigenvalues().maxCoeff(), 0.0);
  return std::log2(lam);
}

double renyi_relative_entropy(const DensityMatrix& sigma, const DensityMatrix& rho,
                              double alpha) {
  if (!(alpha > 0) || alpha == 1.0)
    throw std::domain_error("renyi_relative_entropy: alpha must be in (0,1) or (1,inf)");
  if (alpha > 1.0 && !support_contained(sigma, rho)) return inf();
  Support ss = support_of(sigma);
  Support rs = support_of(rho);
  double t = 0;
  for (int i = 0; i < ss.vals.size(); ++i) {
    for (int k = 0; k < rs.vals.size(); ++k) {
      double ov = std::norm((rs.vecs.col(k).adjoint() * ss.vecs.col(i))(0, 0));
      t += std::pow(ss.vals(i), alpha) * std::pow(rs.vals(k), 1.0 - alpha) * ov;
    }
  }
  if (t <= 0) return inf();  // orthogonal supports, alpha < 1
  return std::log(t) / (alpha - 1.0);
}

double sandwiched_renyi(const DensityMatrix& sigma, const DensityMatrix& rho,
                        double alpha) {
  if (!(alpha > 0) || alpha == 1.0)
    throw std::domain_error("sandwiched_renyi: alpha must be in (0,1) or (1,inf)");
  if (alpha > 1.0 && !support_contained(sigma, rho)) return inf();
  Support rs = support_of(rho);
  double expo = (1.0 - alpha) / (2.0 * alpha);
  Matrix a = Matrix::Zero(rho.dim(), rho.dim());
  for (int k = 0; k < rs.vals.size(); ++k)
    a += std::pow(rs.vals(k), expo) * rs.vecs.col(k) * rs.vecs.col(k).adjoint();
  Matrix m = a * sigma.matrix() * a;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint().eval()),
                                           Eigen::EigenvaluesOnly);
  double t = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double lam = es.eigenvalues()(i);
    if (lam > 0) t += std::pow(lam, alpha);
  }
  if (t <= 0) return inf();
  return std::log(t) / (alpha - 1.0);
}

double kl_divergence(const ProbabilityVector& q, const ProbabilityVector& p) {
  if (q.labels != p.labels)
    throw std::invalid_argument("kl_divergence: outcome label sets differ");
  double d = 0;
  for (size_t i = 0; i < q.probs.size(); ++i) {
    if (q.probs[i] <= 0) continue;
    if (p.probs[i] <= 0) return inf();
    d += q.probs[i] * std::log(q.probs[i] / p.probs[i]);
  }
  return d;
}

namespace {

// positive eigenspace of a Hermitian pencil slice, with its boundary kernel
struct Split {
  double g_plus = 0;    // tr[P_{>0} B]
  double cost_plus = 0; // tr[P_{>0} D]
  double g_ker = 0;     // tr[P_{0} B]
  double cost_ker = 0;  // tr[P_{0} D]
};

Split split_at(const Matrix& b, const Eigen::VectorXd& d, double t, double ker_tol) {
  Matrix a = b;
  for (int i = 0; i < d.size(); ++i) a(i, i) -= t * d(i);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint().eval()));
  Split out;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const auto& v = es.eigenvectors().col(i);
    double gb = (v.adjoint() * b * v)(0, 0).real();
    double gd = 0;
    for (int r = 0; r < d.size(); ++r) gd += d(r) * std::norm(v(r));
    if (es.eigenvalues()(i) > ker_tol) {
      out.g_plus += gb;
      out.cost_plus += gd;
    } else if (es.eigenvalues()(i) > -ker_tol) {
      out.g_ker += gb;
      out.cost_ker += gd;
    }
  }
  return out;
}

}  // namespace

double hypothesis_testing_relative_entropy(const DensityMatrix& sigma,
                                           const DensityMatrix& rho, double eps) {
  if (!(eps >= 0.0) || eps >= 1.0)
    throw std::domain_error("hypothesis_testing_relative_entropy: eps must be in [0,1)");
  Support rs = support_of(rho);
  const int k = static_cast<int>(rs.vals.size());
  // sigma compressed onto supp(rho); weight outside is accepted at zero cost
  Matrix b = rs.vecs.adjoint() * sigma.matrix() * rs.vecs;
  b = 0.5 * (b + b.adjoint().eval());
  double inside = b.trace().real();
  double target = (1.0 - eps) - (1.0 - inside);
  if (target <= 1e-14) return inf();

  // breakpoints: generalized eigenvalues of (sigma, rho) on supp(rho)
  Eigen::VectorXd dvec = rs.vals;
  Matrix c(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      c(i, j) = b(i, j) / std::sqrt(dvec(i) * dvec(j));
  Eigen::SelfAdjointEigenSolver<Matrix> ces(0.5 * (c + c.adjoint().eval()),
                                            Eigen::EigenvaluesOnly);
  std::vector<double> bps;
  for (int i = 0; i < k; ++i) bps.push_back(std::max(ces.eigenvalues()(i), 0.0));
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end(),
                        [](double x, double y) { return std::abs(x - y) <= 1e-11 * (1 + x); }),
            bps.end());

  const double ker_tol = 1e-10 * std::max(1.0, b.cwiseAbs().maxCoeff());
  const double slack = 1e-11;
  std::optional<double> best;
  auto consider = [&](double cost) {
    if (!best || cost < *best) best = cost;
  };

  // kernel mixing at each breakpoint covers the jumps of g(t)
  for (double t : bps) {
    Split s = split_at(b, dvec, t, ker_tol);
    double lo = s.g_plus, hi = s.g_plus + s.g_ker;
    if (target >= lo - slack && target <= hi + slack) {
      double cfrac = s.g_ker > 1e-300 ? std::clamp((target - lo) / s.g_ker, 0.0, 1.0)
                                      : 0.0;
      consider(s.cost_plus + cfrac * s.cost_ker);
    }
  }
  // interior crossings between consecutive breakpoints (g continuous there)
  std::vector<double> edges;
  edges.push_back(0.0);
  for (double t : bps) edges.push_back(t);
  auto g_of = [&](double t) { return split_at(b, dvec, t, ker_tol).g_plus; };
  for (size_t i = 0; i + 1 < edges.size(); ++i) {
    double a0 = edges[i], a1 = edges[i + 1];
    if (a1 - a0 <= 1e-12) continue;
    double pad = 1e-7 * (a1 - a0);
    double lo = a0 + pad, hi = a1 - pad;
    double glo = g_of(lo), ghi = g_of(hi);
    if (!(ghi - slack <= target && target <= glo + slack)) continue;
    for (int it = 0; it < 100 && hi - lo > 1e-14 * (1 + hi); ++it) {
      double mid = 0.5 * (lo + hi);
      if (g_of(mid) >= target)
        lo = mid;
      else
        hi = mid;
    }
    Split s = split_at(b, dvec, 0.5 * (lo + hi), ker_tol);
    consider(s.cost_plus);
  }
  // t = 0: the support projector of the compressed sigma
  {
    Split s = split_at(b, dvec, 0.0, ker_tol);
    if (s.g_plus >= target - slack) consider(s.cost_plus);
  }
  if (!best) throw std::runtime_error("hypothesis_testing_relative_entropy: no feasible test found");
  if (*best <= 0) return inf();
  return -std::log(*best);
}

std::string to_json(const HermitianOperator& h) {
  nlohmann::json j;
  const int n = h.dim();
  j["dim"] = n;
  std::vector<double> re, im;
  re.reserve(n * n);
  im.reserve(n * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      re.push_back(h.matrix()(r, c).real());
      im.push_back(h.matrix()(r, c).imag());
    }
  j["re"] = re;
  j["im"] = im;
  return j.dump();
}

HermitianOperator operator_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  const int n = j.at("dim").get<int>();
  auto re = j.at("re").get<std::vector<double>>();
  auto im = j.at("im").get<std::vector<double>>();
  if (static_cast<int>(re.size()) != n * n || static_cast<int>(im.size()) != n * n)
    throw std::invalid_argument("operator_from_json: wrong entry count");
  Matrix m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      m(r, c) = {re[r * n + c], im[r * n + c]};
  return HermitianOperator(m);
}

}  // namespace qusum::qmath
