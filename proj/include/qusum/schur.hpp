#pragma once

#include "qusum/qmath.hpp"

#include <cstdint>
#include <map>

namespace qusum::schur {

// Angular momentum labels are carried as integers two_j = 2j, two_m = 2m so
// half-integer spins stay exact.
struct BlockLabel {
  int two_j;
  friend auto operator<=>(const BlockLabel&, const BlockLabel&) = default;
};

// One spin-j sector of an l-copy permutation-symmetric state. The physical
// block is exp(log_scale) * op; the scale is kept separate so the weight
// ((1-r^2)/4)^(l/2-j) never underflows at large l.
struct Block {
  Eigen::MatrixXcd op;       // (two_j+1) x (two_j+1), Hermitian
  double log_scale = 0.0;    // -inf allowed (pure states)
  std::uint64_t multiplicity = 1;
  // Factored form op = frame * diag(exp(log_spectrum)) * frame^T, frame real
  // orthogonal. Dense entries of a rotated long block only carry information
  // down to eps * ||op||, which starves log-domain consumers; the factors are
  // exact at construction and keep every scale addressable. Empty when only
  // the dense operator is known (brute-force and deserialized blocks).
  Eigen::MatrixXd frame;
  Eigen::VectorXd log_spectrum;  // ordered like the m = +j..-j diagonal at theta = 0
};

// rho^{(x)l} restricted to its spin sectors: one representative block per j,
// repeated `multiplicity` times. Basis within a block is m = +j .. -j.
struct BlockDecomposition {
  int l = 0;
  double r = 0.0;  // Bloch length of the generating single-copy state
  std::map<int, Block> blocks;  // key: two_j
};

// number of spin-j copies inside (C^2)^{(x)l}: C(l, l/2-j) (2j+1)/(l/2+j+1).
// Exact integer arithmetic, l <= 64.
std::uint64_t multiplicity(int l, int two_j);

// Real orthogonal spin-j rotation matrix (rows/cols ordered m = +j .. -j).
// d(0) = I exactly, d(a)d(b) = d(a+b), and for j = 1/2, theta = pi the rows
// are ((0,-1),(1,0)). Evaluated by the explicit log-gamma sum in its stable
// small-angle regime, extended by exact group squaring; accurate orthogonality
// up to two_j = 100.
Eigen::MatrixXd wigner_d(int two_j, double theta);

// Blocks of ((I + r sigma_z)/2)^{(x)l}: diagonal with entries
// ((1+r)/2)^(j+m) ((1-r)/2)^(j-m), weight ((1-r^2)/4)^(l/2-j) in log_scale.
BlockDecomposition block_state(double r, int l);

// Same single-copy spectrum, Bloch vector tilted by theta in the x-z plane:
// each block congruated by wigner_d(two_j, theta).
BlockDecomposition rotated_block_state(double r, double theta, int l);

// Bloch-frame reduction of an arbitrary qubit pair: rho diagonal (length r0),
// sigma of length r1 tilted by theta in [0, pi] in the x-z plane.
struct CanonicalFrame {
  double r0, r1, theta;
};
CanonicalFrame canonical_frame(const qmath::DensityMatrix& rho,
                               const qmath::DensityMatrix& sigma);

// Reference decomposition computed in the full 2^l-dimensional space by
// simultaneous block reduction of total spin (highest-weight vectors +
// lowering chains). Exponentially sized; l <= 6. log_scale is always 0 here.
BlockDecomposition brute_force_decompose(const qmath::DensityMatrix& single, int l);

std::string to_json(const BlockDecomposition& d);
BlockDecomposition block_decomposition_from_json(const std::string& text);

}  // namespace qusum::schur
