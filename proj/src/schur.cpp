#include "qusum/schur.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qusum::schur {

namespace {

constexpr double kPi = std::numbers::pi;

void require_l(int l) {
  if (l < 1 || l > 64) throw std::invalid_argument("l must be in [1, 64]");
}

unsigned __int128 binom128(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 acc = 1;
  for (int i = 1; i <= k; ++i) {
    acc = acc * static_cast<unsigned>(n - k + i);
    acc /= static_cast<unsigned>(i);  // divides exactly: acc is C(n-k+i, i)
  }
  return acc;
}

// Wigner's explicit sum. Stable only while (j+1)|theta| stays below ~1:
// the alternating terms then decay geometrically and nothing cancels.
Eigen::MatrixXd wigner_d_sum(int two_j, double theta) {
  const int n = two_j + 1;
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  const double log_c = c == 0.0 ? 0.0 : std::log(std::abs(c));
  const double log_s = s == 0.0 ? 0.0 : std::log(std::abs(s));
  Eigen::MatrixXd d(n, n);
  for (int rp = 0; rp < n; ++rp) {     // row: two_m' = two_j - 2 rp
    for (int cl = 0; cl < n; ++cl) {   // col: two_m  = two_j - 2 cl
      const int jmp_p = two_j - rp;    // j + m'
      const int jmp_m = rp;            // j - m'
      const int jm_p = two_j - cl;     // j + m
      const int jm_m = cl;             // j - m
      const int sdiff = jm_m - jmp_m;  // m' - m
      const double pref = 0.5 * (std::lgamma(jm_p + 1) + std::lgamma(jm_m + 1) +
                                 std::lgamma(jmp_p + 1) + std::lgamma(jmp_m + 1));
      const int s_lo = std::max(0, -sdiff);
      const int s_hi = std::min(jm_p, jmp_m);
      double acc = 0;
      for (int k = s_lo; k <= s_hi; ++k) {
        const int ce = jm_p + jmp_m - 2 * k;  // cos exponent
        const int se = sdiff + 2 * k;         // sin exponent
        if (s == 0.0 && se > 0) continue;
        if (c == 0.0 && ce > 0) continue;
        double lg = pref - std::lgamma(jm_p - k + 1) - std::lgamma(k + 1) -
                    std::lgamma(sdiff + k + 1) - std::lgamma(jmp_m - k + 1) +
                    ce * log_c + se * log_s;
        double sign = (sdiff + k) % 2 ? -1.0 : 1.0;
        if (c < 0 && ce % 2) sign = -sign;
        if (s < 0 && se % 2) sign = -sign;
        acc += sign * std::exp(lg);
      }
      d(rp, cl) = acc;
    }
  }
  return d;
}

}  // namespace

std::uint64_t multiplicity(int l, int two_j) {
  require_l(l);
  if (two_j < 0 || two_j > l || (l - two_j) % 2 != 0)
    throw std::invalid_argument("multiplicity: two_j must have the parity of l and lie in [0, l]");
  const int k = (l - two_j) / 2;
  unsigned __int128 num = binom128(l, k) * static_cast<unsigned>(two_j + 1);
  unsigned __int128 den = static_cast<unsigned>((l + two_j) / 2 + 1);
  unsigned __int128 nu = num / den;  // divides exactly
  return static_cast<std::uint64_t>(nu);
}

Eigen::MatrixXd wigner_d(int two_j, double theta) {
  if (two_j < 0) throw std::invalid_argument("wigner_d: two_j must be >= 0");
  const int n = two_j + 1;
  if (theta == 0.0) return Eigen::MatrixXd::Identity(n, n);
  if (two_j == 0) return Eigen::MatrixXd::Ones(1, 1);
  // 2pi periodicity up to (-1)^{2j}
  double k = std::nearbyint(theta / (2 * kPi));
  double t = theta - k * 2 * kPi;
  double sign = (two_j % 2 != 0) && (std::fmod(std::abs(k), 2.0) == 1.0) ? -1.0 : 1.0;
  if (t == 0.0) return sign * Eigen::MatrixXd::Identity(n, n);
  // scale into the regime where the explicit sum is well conditioned,
  // then square back up; composition is exact group structure.
  int halvings = 0;
  double scale = std::abs(t) * (two_j / 2 + 1);
  while (scale > 1.0 && halvings < 40) {
    scale /= 2;
    ++halvings;
  }
  Eigen::MatrixXd d = wigner_d_sum(two_j, std::ldexp(t, -halvings));
  for (int i = 0; i < halvings; ++i) d = (d * d).eval();
  return sign * d;
}

BlockDecomposition block_state(double r, int l) {
  require_l(l);
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("block_state: r must be in [0, 1]");
  const double a = (1 + r) / 2, b = (1 - r) / 2;
  BlockDecomposition out;
  out.l = l;
  out.r = r;
  for (int two_j = l; two_j >= (l % 2); two_j -= 2) {
    Block blk;
    blk.multiplicity = multiplicity(l, two_j);
    const int w = (l - two_j) / 2;
    blk.log_scale = w == 0 ? 0.0 : w * std::log(a * b);
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(two_j + 1, two_j + 1);
    blk.log_spectrum = Eigen::VectorXd::Zero(two_j + 1);
    for (int k = 0; k <= two_j; ++k) {  // row k has m = j - k
      op(k, k) = std::pow(a, two_j - k) * std::pow(b, k);
      // k * log(0) would be NaN for k = 0 on a pure state
      blk.log_spectrum(k) =
          (two_j - k) * std::log(a) + (k == 0 ? 0.0 : k * std::log(b));
    }
    blk.op = op;
    blk.frame = Eigen::MatrixXd::Identity(two_j + 1, two_j + 1);
    out.blocks.emplace(two_j, std::move(blk));
  }
  return out;
}

BlockDecomposition rotated_block_state(double r, double theta, int l) {
  BlockDecomposition out = block_state(r, l);
  for (auto& [two_j, blk] : out.blocks) {
    Eigen::MatrixXd d = wigner_d(two_j, theta);
    Eigen::MatrixXd rot = d * blk.op.real() * d.transpose();
    blk.op = (0.5 * (rot + rot.transpose().eval())).cast<std::complex<double>>();
    blk.frame = d;  // log_spectrum is rotation invariant
  }
  return out;
}

CanonicalFrame canonical_frame(const qmath::DensityMatrix& rho,
                               const qmath::DensityMatrix& sigma) {
  if (rho.dim() != 2 || sigma.dim() != 2)
    throw std::invalid_argument("canonical_frame: qubit states required");
  auto bloch = [](const qmath::Matrix& m) {
    Eigen::Vector3d v;
    v(0) = 2 * m(0, 1).real();
    v(1) = -2 * m(0, 1).imag();
    v(2) = (m(0, 0) - m(1, 1)).real();
    return v;
  };
  Eigen::Vector3d v0 = bloch(rho.matrix()), v1 = bloch(sigma.matrix());
  CanonicalFrame f;
  f.r0 = v0.norm();
  f.r1 = v1.norm();
  if (f.r0 < 1e-14 || f.r1 < 1e-14) {
    f.theta = 0.0;  // a maximally mixed member fixes no direction
    return f;
  }
  double cosang = v0.dot(v1) / (f.r0 * f.r1);
  f.theta = std::acos(std::clamp(cosang, -1.0, 1.0));
  return f;
}

namespace {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

BlockDecomposition brute_force_decompose(const qmath::DensityMatrix& single, int l) {
  if (l < 1 || l > 6) throw std::invalid_argument("brute_force_decompose: l must be in [1, 6]");
  if (single.dim() != 2) throw std::invalid_argument("brute_force_decompose: qubit input required");
  const int n = 1 << l;

  CMat state = single.matrix();
  for (int i = 1; i < l; ++i) state = kron(state, single.matrix());

  // total J_+ in the computational basis; bit set means m = -1/2 on that site
  CMat jplus = CMat::Zero(n, n);
  for (int b = 0; b < n; ++b)
    for (int site = 0; site < l; ++site)
      if (b & (1 << site)) jplus(b & ~(1 << site), b) += 1.0;
  CMat jminus = jplus.adjoint();

  BlockDecomposition out;
  out.l = l;
  {
    auto f = canonical_frame(single, single);
    out.r = f.r0;
  }

  for (int two_j = l; two_j >= (l % 2); two_j -= 2) {
    const int k_weight = (l - two_j) / 2;  // popcount of the m = +j weight space
    std::vector<int> basis_states;
    for (int b = 0; b < n; ++b)
      if (__builtin_popcount(static_cast<unsigned>(b)) == k_weight) basis_states.push_back(b);
    const int dimw = static_cast<int>(basis_states.size());

    // highest-weight vectors: kernel of J_+ restricted to the m = +j weight space
    CMat jp_restricted(n, dimw);
    for (int c = 0; c < dimw; ++c) {
      CVec e = CVec::Zero(n);
      e(basis_states[c]) = 1.0;
      jp_restricted.col(c) = jplus * e;
    }
    Eigen::JacobiSVD<CMat> svd(jp_restricted, Eigen::ComputeFullV);
    int rank = 0;
    const double sv_tol = 1e-9 * std::max(1.0, svd.singularValues().size() > 0
                                                   ? svd.singularValues()(0)
                                                   : 1.0);
    while (rank < svd.singularValues().size() && svd.singularValues()(rank) > sv_tol) ++rank;
    const int nu = dimw - rank;

    Block blk;
    blk.multiplicity = static_cast<std::uint64_t>(nu);
    blk.log_scale = 0.0;

    const int bd = two_j + 1;
    Eigen::MatrixXcd rep = Eigen::MatrixXcd::Zero(bd, bd);
    if (nu > 0) {
      // lowering chain from the first highest-weight vector; the chain basis is
      // aligned across multiplicity copies because J_- acts only on the spin part
      CVec w = CVec::Zero(n);
      for (int c = 0; c < dimw; ++c) w(basis_states[c]) = svd.matrixV()(c, rank);
      w.normalize();
      std::vector<CVec> chain;
      chain.push_back(w);
      for (int step = 0; step < two_j; ++step) {
        const int two_m = two_j - 2 * step;
        // J_- |j,m> = c |j,m-1>, c^2 = j(j+1) - m(m-1)
        double c2 = (two_j * (two_j + 2) - two_m * (two_m - 2)) / 4.0;
        chain.push_back((jminus * chain.back()) / std::sqrt(c2));
      }
      for (int a = 0; a < bd; ++a)
        for (int b = 0; b < bd; ++b)
          rep(a, b) = (chain[a].adjoint() * state * chain[b])(0, 0);
      rep = 0.5 * (rep + rep.adjoint().eval());
    }
    blk.op = rep;
    out.blocks.emplace(two_j, std::move(blk));
  }
  return out;
}

std::string to_json(const BlockDecomposition& d) {
  nlohmann::json j;
  j["l"] = d.l;
  j["r"] = d.r;
  j["blocks"] = nlohmann::json::array();
  for (const auto& [two_j, blk] : d.blocks) {
    nlohmann::json jb;
    jb["two_j"] = two_j;
    jb["multiplicity"] = blk.multiplicity;
    jb["log_scale"] = blk.log_scale;
    jb["matrix"] = nlohmann::json::parse(qmath::to_json(qmath::HermitianOperator(blk.op)));
    j["blocks"].push_back(std::move(jb));
  }
  return j.dump();
}

BlockDecomposition block_decomposition_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  BlockDecomposition d;
  d.l = j.at("l").get<int>();
  d.r = j.value("r", 0.0);
  for (const auto& jb : j.at("blocks")) {
    Block blk;
    blk.multiplicity = jb.at("multiplicity").get<std::uint64_t>();
    blk.log_scale = jb.at("log_scale").get<double>();
    blk.op = qmath::operator_from_json(jb.at("matrix").dump()).matrix();
    d.blocks.emplace(jb.at("two_j").get<int>(), std::move(blk));
  }
  return d;
}

}  // namespace qusum::schur
