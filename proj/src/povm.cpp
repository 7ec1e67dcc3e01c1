#include "qusum/povm.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace qusum::povm {

namespace {

constexpr double kPi = std::numbers::pi;

double block_weight(const schur::Block& blk) {
  // multiplicity * exp(log_scale) without intermediate overflow
  return std::exp(std::log(static_cast<double>(blk.multiplicity)) + blk.log_scale);
}

void require_compatible(const schur::BlockDecomposition& pre,
                        const schur::BlockDecomposition& post) {
  if (pre.l != post.l) throw std::invalid_argument("block decompositions have different l");
  if (pre.blocks.size() != post.blocks.size())
    throw std::invalid_argument("block decompositions have different sector sets");
  for (const auto& [two_j, blk] : pre.blocks) {
    auto it = post.blocks.find(two_j);
    if (it == post.blocks.end() || it->second.multiplicity != blk.multiplicity)
      throw std::invalid_argument("block decompositions have mismatched sectors");
  }
}

// maximize a scalar function on [a, b] by golden section
template <class F>
double golden_max(const F& f, double a, double b, double tol) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

BlockMeasurement hayashi_measurement(int l) {
  if (l < 1 || l > 64) throw std::invalid_argument("hayashi_measurement: l must be in [1, 64]");
  BlockMeasurement m;
  m.l = l;
  for (int two_j = l; two_j >= (l % 2); two_j -= 2) m.angles[two_j] = 0.0;
  return m;
}

OutcomePair outcome_distribution(const schur::BlockDecomposition& pre,
                                 const schur::BlockDecomposition& post,
                                 const BlockMeasurement& meas) {
  require_compatible(pre, post);
  if (meas.l != pre.l) throw std::invalid_argument("outcome_distribution: measurement l mismatch");
  OutcomePair out;
  out.l = pre.l;
  std::vector<double> probs_p, probs_q;
  std::vector<std::string> labels;

  for (auto it = pre.blocks.rbegin(); it != pre.blocks.rend(); ++it) {
    const int two_j = it->first;
    const schur::Block& bp = it->second;
    const schur::Block& bq = post.blocks.at(two_j);
    auto ang = meas.angles.find(two_j);
    if (ang == meas.angles.end())
      throw std::invalid_argument("outcome_distribution: missing angle for a sector");
    Eigen::MatrixXd d = schur::wigner_d(two_j, ang->second);
    Eigen::MatrixXd ap = bp.op.real(), aq = bq.op.real();
    const double log_nu = std::log(static_cast<double>(bp.multiplicity));
    for (int k = 0; k <= two_j; ++k) {
      double ep = d.col(k).dot(ap * d.col(k));
      double eq = d.col(k).dot(aq * d.col(k));
      double lp = ep > 0 ? log_nu + bp.log_scale + std::log(ep) : -qmath::inf();
      double lq = eq > 0 ? log_nu + bq.log_scale + std::log(eq) : -qmath::inf();
      out.outcomes.emplace_back(two_j, two_j - 2 * k);
      out.log_p.push_back(lp);
      out.log_q.push_back(lq);
      probs_p.push_back(std::exp(lp));
      probs_q.push_back(std::exp(lq));
      labels.push_back("j2=" + std::to_string(two_j) + ":m2=" + std::to_string(two_j - 2 * k));
    }
  }
  out.p = qmath::ProbabilityVector(probs_p, labels);
  out.q = qmath::ProbabilityVector(probs_q, labels);

  double kl = 0;
  for (size_t i = 0; i < out.log_q.size(); ++i) {
    if (out.log_q[i] == -qmath::inf()) continue;
    if (out.log_p[i] == -qmath::inf()) {
      kl = qmath::inf();
      break;
    }
    kl += std::exp(out.log_q[i]) * (out.log_q[i] - out.log_p[i]);
  }
  out.per_copy_rate = kl / out.l;
  return out;
}

BlockMeasurement optimize_angles(const schur::BlockDecomposition& pre,
                                 const schur::BlockDecomposition& post) {
  require_compatible(pre, post);
  BlockMeasurement meas;
  meas.l = pre.l;
  for (const auto& [two_j, bp] : pre.blocks) {
    const schur::Block& bq = post.blocks.at(two_j);
    Eigen::MatrixXd ap = bp.op.real(), aq = bq.op.real();
    const double tp = ap.trace(), tq = aq.trace();
    if (two_j == 0 || tp <= 0 || tq <= 0) {
      meas.angles[two_j] = 0.0;
      continue;
    }
    // conditional KL inside the sector; the j-marginal does not move with eta
    auto f = [&](double eta) {
      Eigen::MatrixXd d = schur::wigner_d(two_j, eta);
      double kl = 0;
      for (int k = 0; k <= two_j; ++k) {
        double qk = d.col(k).dot(aq * d.col(k)) / tq;
        if (qk <= 0) continue;
        double pk = d.col(k).dot(ap * d.col(k)) / tp;
        if (pk <= 0) return qmath::inf();
        kl += qk * std::log(qk / pk);
      }
      return kl;
    };
    const int grid = 64;
    int best = 0;
    double fbest = f(0.0);
    for (int i = 1; i < grid; ++i) {
      double v = f(i * kPi / grid);
      if (v > fbest) {
        fbest = v;
        best = i;
      }
    }
    double lo = (best - 1) * kPi / grid, hi = (best + 1) * kPi / grid;
    double eta = golden_max(f, lo, hi, 1e-8);
    if (f(eta) < fbest) eta = best * kPi / grid;
    eta = std::fmod(eta, kPi);
    if (eta < 0) eta += kPi;
    meas.angles[two_j] = eta;
  }
  return meas;
}

double measured_rate(const schur::BlockDecomposition& pre,
                     const schur::BlockDecomposition& post,
                     const BlockMeasurement& meas) {
  return outcome_distribution(pre, post, meas).per_copy_rate;
}

double grid_oracle_single_copy(const qmath::DensityMatrix& rho,
                               const qmath::DensityMatrix& sigma, int grid_size) {
  if (rho.dim() != 2 || sigma.dim() != 2)
    throw std::invalid_argument("grid_oracle_single_copy: qubit states required");
  if (grid_size < 8) throw std::invalid_argument("grid_oracle_single_copy: grid too coarse");
  auto bloch = [](const qmath::Matrix& m) {
    Eigen::Vector3d v;
    v(0) = 2 * m(0, 1).real();
    v(1) = -2 * m(0, 1).imag();
    v(2) = (m(0, 0) - m(1, 1)).real();
    return v;
  };
  Eigen::Vector3d v0 = bloch(rho.matrix()), v1 = bloch(sigma.matrix());
  // orthonormal frame for the plane spanned by both Bloch vectors
  Eigen::Vector3d e1 = v0.norm() > 1e-12 ? v0.normalized()
                       : (v1.norm() > 1e-12 ? v1.normalized() : Eigen::Vector3d::UnitZ());
  Eigen::Vector3d u = v1 - v1.dot(e1) * e1;
  Eigen::Vector3d e2;
  if (u.norm() > 1e-12) {
    e2 = u.normalized();
  } else {
    e2 = e1.cross(Eigen::Vector3d::UnitX());
    if (e2.norm() < 1e-6) e2 = e1.cross(Eigen::Vector3d::UnitY());
    e2.normalize();
  }
  auto f = [&](double phi) {
    Eigen::Vector3d n = std::cos(phi) * e1 + std::sin(phi) * e2;
    double kl = 0;
    for (double s : {1.0, -1.0}) {
      double q = 0.5 * (1 + s * n.dot(v1));
      if (q <= 0) continue;
      double p = 0.5 * (1 + s * n.dot(v0));
      if (p <= 0) return qmath::inf();
      kl += q * std::log(q / p);
    }
    return kl;
  };
  int best = 0;
  double fbest = f(0.0);
  for (int i = 1; i < grid_size; ++i) {
    double v = f(i * kPi / grid_size);
    if (v > fbest) {
      fbest = v;
      best = i;
    }
  }
  double phi = golden_max(f, (best - 1) * kPi / grid_size, (best + 1) * kPi / grid_size, 1e-10);
  return std::max(f(phi), fbest);
}

namespace {

// -- per-sector solver for sup_X tr[S X] - tr[R exp(X)] ---------------------
//
// omega = exp(X) keeps the iterate positive definite at any dynamic range;
// the objective is concave in X, so the damped Newton iteration below finds
// the global optimum of the sector.

constexpr double kEps = std::numeric_limits<double>::epsilon();

double dd1(double x, double y) {
  double hd = 0.5 * (x - y), m = 0.5 * (x + y);
  if (std::abs(hd) < 1e-4) {
    double h2 = hd * hd;
    return std::exp(m) * (1.0 + h2 / 6.0 * (1.0 + h2 / 20.0));
  }
  return std::exp(m) * std::sinh(hd) / hd;
}

double dd2(double a, double b, double c) {
  double lo = std::min({a, b, c}), hi = std::max({a, b, c});
  double spread = hi - lo;
  if (spread < 1e-4) {
    double m = (a + b + c) / 3.0;
    double da = a - m, db = b - m, dc = c - m;
    double q = da * da + db * db + dc * dc + da * db + db * dc + da * dc;
    return std::exp(m) * (0.5 + q / 24.0);
  }
  double mid = a + b + c - lo - hi;
  return (dd1(hi, mid) - dd1(mid, lo)) / spread;
}

struct SectorResult {
  Eigen::MatrixXd omega;
  double contribution = 0.0;  // tr[S X] - tr[R exp(X)]
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Factored sector matrix M = g^T diag(lam) g. The weights lam are exact from
// construction, so conjugations computed through the factors keep entrywise
// errors proportional to their own Cauchy-Schwarz bound instead of the
// eps * ||M|| a dense product is limited to.
struct SectorFactors {
  Eigen::MatrixXd g;    // full sector dim x solver dim, orthonormal-ish columns
  Eigen::VectorXd lam;  // full sector dim, nonnegative
};

struct SectorProblem {
  Eigen::MatrixXd s, r;               // dense projections, unit trace
  const SectorFactors* fs = nullptr;  // optional factored forms
  const SectorFactors* fr = nullptr;
};

struct Eigh {
  Eigen::VectorXd lam;
  Eigen::MatrixXd q;
  bool ok = false;
};

Eigh eigh(const Eigen::MatrixXd& x) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x);
  Eigh e;
  if (es.info() != Eigen::Success) return e;
  e.lam = es.eigenvalues();
  e.q = es.eigenvectors();
  e.ok = std::abs(e.lam.maxCoeff()) < 690 && std::abs(e.lam.minCoeff()) < 690;
  return e;
}

// Q^T M Q together with an entrywise rounding floor. The absolute-value
// product tracks the largest term each entry sums over, so entries formed by
// cancellation get an absolute floor while benign ones keep a relative one;
// the sqrt(diag) terms account for rounding of the rotation factors
// themselves. Through SectorFactors both stay localized at any dynamic range.
void rotated_with_floor(const Eigen::MatrixXd& m, const SectorFactors* f,
                        const Eigen::MatrixXd& q, Eigen::MatrixXd& mt,
                        Eigen::MatrixXd& err) {
  if (f != nullptr) {
    const Eigen::MatrixXd w = f->g * q;
    const Eigen::MatrixXd wa = w.cwiseAbs();
    mt = w.transpose() * f->lam.asDiagonal() * w;
    err = wa.transpose() * f->lam.asDiagonal() * wa;
  } else {
    const Eigen::MatrixXd qa = q.cwiseAbs();
    mt = q.transpose() * m * q;
    err = qa.transpose() * m.cwiseAbs() * qa;
  }
  const int n = static_cast<int>(mt.rows());
  Eigen::VectorXd sq(n);
  for (int a = 0; a < n; ++a) sq(a) = std::sqrt(std::max(mt(a, a), 0.0));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) err(a, b) += sq(a) + sq(b);
}

double quad_diag(const Eigen::MatrixXd& m, const SectorFactors* f,
                 const Eigen::VectorXd& u) {
  if (f != nullptr) {
    Eigen::VectorXd v = f->g * u;
    return v.cwiseAbs2().dot(f->lam);
  }
  return u.dot(m * u);
}

double sector_objective(const SectorProblem& pb, const Eigh& e) {
  double acc = 0;
  for (int a = 0; a < e.lam.size(); ++a) {
    const Eigen::VectorXd u = e.q.col(a);
    acc += e.lam(a) * quad_diag(pb.s, pb.fs, u);
    acc -= std::exp(e.lam(a)) * quad_diag(pb.r, pb.fr, u);
  }
  return acc;
}

SectorResult solve_sector(const SectorProblem& pb, Eigen::MatrixXd x, int budget, double tol) {
  const int n = static_cast<int>(pb.s.rows());
  const int ncoord = n * (n + 1) / 2;
  SectorResult res;
  Eigh e = eigh(x);
  if (!e.ok) {
    x.setZero();
    e = eigh(x);
  }
  double fx = sector_objective(pb, e);

  const bool dbg = std::getenv("QUSUM_VAR_DEBUG") != nullptr;
  const double gain_floor = 4.0 * kEps;
  double mu = 1e-6;  // Levenberg damping in the Jacobi-scaled metric
  int stalled = 0;
  for (res.iterations = 0; res.iterations < budget; ++res.iterations) {
    // Gradient entries inside their rounding floor (the rt term amplified by
    // dd1) are pure noise: they are dropped from the step, the norm, and the
    // norm's reference scale. Keeping them would feed the solve junk of size
    // eps * exp(lam) and stall the damping loop long before the resolvable
    // part converges.
    Eigen::MatrixXd st, rt, se, re;
    rotated_with_floor(pb.s, pb.fs, e.q, st, se);
    rotated_with_floor(pb.r, pb.fr, e.q, rt, re);
    Eigen::MatrixXd grad_t(n, n);
    double g2 = 0, sc2 = 1.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const double k1 = dd1(e.lam(a), e.lam(b));
        const double m = rt(a, b) * k1;
        double g = st(a, b) - m;
        if (std::abs(g) <= 8 * kEps * (se(a, b) + re(a, b) * k1)) {
          g = 0;
        } else {
          g2 += g * g;
          sc2 += st(a, b) * st(a, b) + m * m;
        }
        grad_t(a, b) = g;
      }
    res.grad_norm = std::sqrt(g2);
    if (g2 <= tol * tol * sc2) {
      res.converged = true;
      break;
    }

    // Hessian of tr[R exp(X)] in the eigenframe of the current iterate
    auto t3 = [&](int a, int b, int c) { return dd2(e.lam(a), e.lam(b), e.lam(c)); };
    auto helem = [&](int i, int j, int k, int l) {
      double h = 0;
      if (j == k) h += rt(l, i) * t3(i, j, l);
      if (i == l) h += rt(j, k) * t3(k, i, j);
      return h;
    };
    std::vector<std::pair<int, int>> coords;
    coords.reserve(ncoord);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) coords.emplace_back(i, j);
    Eigen::MatrixXd hess(ncoord, ncoord);
    Eigen::VectorXd gv(ncoord);
    for (int p = 0; p < ncoord; ++p) {
      auto [i, j] = coords[p];
      gv(p) = i == j ? grad_t(i, i) : 2 * grad_t(i, j);
      for (int q = p; q < ncoord; ++q) {
        auto [k, l] = coords[q];
        double v = helem(i, j, k, l);
        if (i != j) v += helem(j, i, k, l);
        if (k != l) v += helem(i, j, l, k);
        if (i != j && k != l) v += helem(j, i, l, k);
        hess(p, q) = v;
        hess(q, p) = v;
      }
    }

    // Jacobi-scaled solve: curvature spans the square of the iterate's
    // dynamic range, which would drown the soft directions in a raw LDLT.
    // The diagonal floor is relative to the largest curvature: rows whose
    // true curvature is below it are sub-resolution (their gradient entries
    // were masked above), and an absolute floor would let rounding-level
    // diagonal junk blow up the scaled system instead.
    double hdmax = 1e-300;
    for (int p = 0; p < ncoord; ++p) hdmax = std::max(hdmax, hess(p, p));
    Eigen::VectorXd dscale(ncoord);
    for (int p = 0; p < ncoord; ++p)
      dscale(p) = std::sqrt(std::max(hess(p, p), 1e-24 * hdmax));
    Eigen::MatrixXd scaled(ncoord, ncoord);
    for (int p = 0; p < ncoord; ++p)
      for (int q = 0; q < ncoord; ++q) scaled(p, q) = hess(p, q) / (dscale(p) * dscale(q));
    Eigen::VectorXd gs = gv.cwiseQuotient(dscale);

    // Damping interpolates between the Newton step and a preconditioned
    // gradient step; it grows when the quadratic model misleads and decays
    // to recover quadratic convergence near the optimum.
    const double prev_fx = fx;
    bool stepped = false;
    for (int attempt = 0; attempt < 60 && !stepped && mu < 1e15; ++attempt) {
      Eigen::MatrixXd reg = scaled + mu * Eigen::MatrixXd::Identity(ncoord, ncoord);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
      if (ldlt.info() != Eigen::Success) {
        mu *= 10;
        continue;
      }
      Eigen::VectorXd delta = ldlt.solve(gs).cwiseQuotient(dscale);
      double slope = gv.dot(delta);
      if (!std::isfinite(slope) || slope <= 0) {
        mu *= 10;
        continue;
      }
      Eigen::MatrixXd dir = Eigen::MatrixXd::Zero(n, n);
      for (int p = 0; p < ncoord; ++p) {
        auto [i, j] = coords[p];
        dir(i, j) = delta(p);
        dir(j, i) = delta(p);
      }
      dir = (e.q * dir * e.q.transpose()).eval();
      // Trust box on the step itself. Directions the post state barely
      // touches have near-zero curvature, and a Newton step built from
      // rounding-level gradient entries there can be astronomically long;
      // unchecked it parks eigenvalues hundreds of log-units away, where
      // recovery is numerically impossible.
      const double dmax = dir.cwiseAbs().maxCoeff();
      if (dmax > 25.0) {
        dir *= 25.0 / dmax;
        slope *= 25.0 / dmax;
      }
      double alpha = 1.0;
      for (int ls = 0; ls < 8; ++ls) {
        Eigen::MatrixXd xn = x + alpha * dir;
        Eigh en = eigh(0.5 * (xn + xn.transpose().eval()));
        if (en.ok) {
          double fn = sector_objective(pb, en);
          if (std::isfinite(fn) && fn >= fx + 0.1 * alpha * slope) {
            x = std::move(xn);
            e = en;
            fx = fn;
            stepped = true;
            if (alpha == 1.0) mu = std::max(mu / 3, 1e-14);
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!stepped) mu *= 10;
    }
    if (dbg)
      std::fprintf(stderr, "n=%d it=%d g=%.3e fx=%.12e mu=%.1e lam=[%.2f,%.2f] stepped=%d\n",
                   n, res.iterations, res.grad_norm, fx, mu, e.lam.minCoeff(),
                   e.lam.maxCoeff(), int(stepped));
    if (!stepped) break;  // numerically stuck
    // Gradient entries for stiff coordinate pairs sit on a rounding floor of
    // order eps * exp(lam_max), so the Frobenius tolerance is unreachable once
    // the iterate spans a wide log-range. Six successive accepted steps that
    // each gain less than double resolution certify the attainable ascent is
    // exhausted; the objective value is then converged even though the raw
    // gradient is not small.
    if (fx - prev_fx <= gain_floor * (1.0 + std::abs(fx))) {
      if (++stalled >= 6) {
        res.converged = true;
        break;
      }
    } else {
      stalled = 0;
    }
  }

  {
    // report the resolvable gradient at the final iterate, masked and scaled
    // the same way as the in-loop convergence test
    Eigen::MatrixXd st, rt, se, re;
    rotated_with_floor(pb.s, pb.fs, e.q, st, se);
    rotated_with_floor(pb.r, pb.fr, e.q, rt, re);
    double g2 = 0, sc2 = 1.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const double k1 = dd1(e.lam(a), e.lam(b));
        const double m = rt(a, b) * k1;
        const double g = st(a, b) - m;
        if (std::abs(g) <= 8 * kEps * (se(a, b) + re(a, b) * k1)) continue;
        g2 += g * g;
        sc2 += st(a, b) * st(a, b) + m * m;
      }
    res.grad_norm = std::sqrt(g2);
    res.converged = res.converged || g2 <= tol * tol * sc2;
  }
  res.contribution = fx;
  Eigen::MatrixXd expx = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a)
    expx += std::exp(e.lam(a)) * e.q.col(a) * e.q.col(a).transpose();
  res.omega = 0.5 * (expx + expx.transpose().eval());
  return res;
}

}  // namespace

VariationalResult variational_measured_entropy(const schur::BlockDecomposition& pre,
                                               const schur::BlockDecomposition& post,
                                               const VariationalOptions& opts) {
  require_compatible(pre, post);
  VariationalResult out;
  std::mt19937_64 rng(opts.init_seed);
  std::normal_distribution<double> normal(0.0, 0.4);
  int budget = opts.max_iterations;
  double total = 1.0;  // the +1 of the variational functional
  bool all_converged = true;

  for (const auto& [two_j, bp] : pre.blocks) {
    const schur::Block& bq = post.blocks.at(two_j);
    const int n = two_j + 1;
    if (bp.op.imag().cwiseAbs().maxCoeff() > 1e-12 ||
        bq.op.imag().cwiseAbs().maxCoeff() > 1e-12)
      throw std::invalid_argument("variational_measured_entropy: real sector matrices required");
    const double wp = block_weight(bp), wq = block_weight(bq);
    Eigen::MatrixXd r = wp * bp.op.real();
    Eigen::MatrixXd s = wq * bq.op.real();
    const double pj = r.trace(), qj = s.trace();
    out.block_two_j.push_back(two_j);
    if (qj <= 0 && pj <= 0) {
      out.omega_blocks.push_back(Eigen::MatrixXd::Identity(n, n));
      continue;
    }
    if (qj > 0 && pj <= 0) {
      // post-change weight in a sector the reference never populates
      out.value = qmath::inf();
      out.omega_blocks.push_back(Eigen::MatrixXd::Identity(n, n));
      out.converged = true;
      return out;
    }
    if (qj <= 0) {
      // sup contribution is 0 in the omega -> 0 limit
      out.omega_blocks.push_back(1e-14 * Eigen::MatrixXd::Identity(n, n));
      continue;
    }
    // Solve the sector on unit-trace matrices and undo the shift afterwards:
    // sup_X tr[S X] - tr[R e^X] = q (sup_Y tr[S/q Y] - tr[R/p e^Y] + log(q/p))
    // under X = Y + log(q/p) I. Sector weights span hundreds of log-units
    // across a long block, and only the normalized problem keeps the solver's
    // progress and convergence thresholds commensurate with its objective.
    r /= pj;
    s /= qj;
    // Restrict to the subspace where either state carries weight above eta.
    // Directions below it move the value by less than n * eta * |log omega|
    // yet stretch the iterate's log-range linearly with l, which is what
    // breaks Newton at long blocks: the truncated problem has a log-range
    // bounded by |log eta| regardless of l. The complement's own optimum is
    // the omega -> 0 limit, so dropping it keeps the value an attainable
    // lower bound, off by under n * eta * |log eta| from the full sector sup.
    constexpr double kEta = 1e-17;
    const bool factored = bp.frame.size() > 0 && bq.frame.size() > 0;
    Eigen::MatrixXd basis;  // n x keep, orthonormal columns
    SectorFactors fac_r, fac_s;
    SectorProblem prob;
    if (factored) {
      // exact unit-trace spectra; the dense ops lose everything below eps
      fac_r.lam = (bp.log_spectrum.array() - std::log(bp.op.real().trace())).exp();
      fac_s.lam = (bq.log_spectrum.array() - std::log(bq.op.real().trace())).exp();
      std::vector<int> cr, cs;
      for (int a = 0; a < n; ++a) {
        if (fac_r.lam(a) >= kEta) cr.push_back(a);
        if (fac_s.lam(a) >= kEta) cs.push_back(a);
      }
      Eigen::MatrixXd cols(n, cr.size() + cs.size());
      for (std::size_t c = 0; c < cr.size(); ++c) cols.col(c) = bp.frame.col(cr[c]);
      for (std::size_t c = 0; c < cs.size(); ++c)
        cols.col(cr.size() + c) = bq.frame.col(cs[c]);
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(cols);
      const int keep = std::max<int>(1, static_cast<int>(qr.rank()));
      basis = qr.householderQ() * Eigen::MatrixXd::Identity(n, keep);
      fac_r.g = bp.frame.transpose() * basis;
      fac_s.g = bq.frame.transpose() * basis;
      prob.r = fac_r.g.transpose() * fac_r.lam.asDiagonal() * fac_r.g;
      prob.s = fac_s.g.transpose() * fac_s.lam.asDiagonal() * fac_s.g;
      prob.fr = &fac_r;
      prob.fs = &fac_s;
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> span(r + s);
      if (span.info() != Eigen::Success)
        throw std::runtime_error("variational_measured_entropy: sector eigensolver failed");
      int keep = 0;
      for (int a = 0; a < n; ++a) keep += span.eigenvalues()(a) >= kEta ? 1 : 0;
      keep = std::max(keep, 1);  // tr[r + s] = 2, the top direction always stays
      basis = span.eigenvectors().rightCols(keep);
      prob.r = basis.transpose() * r * basis;
      prob.s = basis.transpose() * s * basis;
    }
    const int keep = static_cast<int>(basis.cols());
    // Exact optimum of the commuting restriction: omega = diag(S)/diag(R).
    // Exact whenever [S, R] = 0, and a short Newton path away otherwise.
    Eigen::MatrixXd x0 = Eigen::MatrixXd::Zero(keep, keep);
    for (int a = 0; a < keep; ++a) {
      double sa = std::max(prob.s(a, a), 1e-300), ra = std::max(prob.r(a, a), 1e-300);
      x0(a, a) = std::clamp(std::log(sa) - std::log(ra), -650.0, 650.0);
    }
    if (opts.random_init) {
      for (int a = 0; a < keep; ++a)
        for (int b = a; b < keep; ++b) {
          double v = normal(rng);
          x0(a, b) += v;
          if (b != a) x0(b, a) += v;
        }
    }
    SectorResult sec = solve_sector(prob, x0, std::max(1, budget), opts.grad_tol);
    budget -= sec.iterations;
    out.iterations += sec.iterations;
    out.grad_norm = std::max(out.grad_norm, sec.grad_norm);
    all_converged = all_converged && sec.converged;
    total += qj * (sec.contribution + std::log(qj) - std::log(pj));
    Eigen::MatrixXd omega = basis * sec.omega * basis.transpose();
    if (keep < n) {
      // complement weights are at most n * eta on both sides
      const double tc = 1.0 - prob.r.trace(), uc = 1.0 - prob.s.trace();
      const double wc = tc > 0 && uc > 0 ? uc / tc : 1e-14;
      omega += wc * (Eigen::MatrixXd::Identity(n, n) - basis * basis.transpose());
    }
    out.omega_blocks.push_back((qj / pj) * omega);
  }
  out.value = total;
  out.converged = all_converged;
  return out;
}

std::int64_t sufficient_block_length(const qmath::DensityMatrix& rho,
                                     const qmath::DensityMatrix& sigma, double eps) {
  if (!(eps > 0.0 && eps < 1.0))
    throw std::domain_error("sufficient_block_length: eps must be in (0,1)");
  const double ln2 = std::numbers::ln2;
  double d = qmath::quantum_relative_entropy(sigma, rho);
  if (!(d > 0) || !std::isfinite(d))
    throw std::domain_error("sufficient_block_length: states must satisfy 0 < D < inf");
  double d32 = qmath::renyi_relative_entropy(sigma, rho, 1.5);
  if (!std::isfinite(d32))
    throw std::domain_error("sufficient_block_length: Renyi-3/2 divergence must be finite");
  // the finite-sample bound bookkeeping is base 2 throughout
  const double d2 = d / ln2, d32_2 = d32 / ln2;
  const double cc = 4.0 * std::sqrt(2.0) * (d32_2 + 2.0) * std::log2(2.0 / eps);
  const double a = 0.5 * eps * d2;
  const double b = (1.0 - 0.5 * eps) * cc;
  const double c = 1.0 - eps;
  auto ok = [&](std::int64_t l) {
    double dl = static_cast<double>(l);
    return a - b / std::sqrt(dl) - c / dl >= 0.0;
  };
  double ustar = (-b + std::sqrt(b * b + 4 * a * c)) / (2 * c);
  std::int64_t l = ustar > 0 ? static_cast<std::int64_t>(std::ceil(1.0 / (ustar * ustar) - 1e-9))
                             : (std::int64_t{1} << 60);
  l = std::max<std::int64_t>(1, l);
  while (l > 1 && ok(l - 1)) --l;
  while (!ok(l)) {
    if (l > (std::int64_t{1} << 61)) throw std::runtime_error("sufficient_block_length: overflow");
    ++l;
  }
  return l;
}

}  // namespace qusum::povm
