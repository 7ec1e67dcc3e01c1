#pragma once

#include "qusum/schur.hpp"

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace qusum::povm {

// Spin-sector measurement: read off (j, multiplicity index), then measure the
// block in the basis wigner_d(two_j, eta_j) |j,m>. All angles zero is the
// sigma-independent reference strategy.
struct BlockMeasurement {
  int l = 0;
  std::map<int, double> angles;  // two_j -> eta in [0, pi)
};

BlockMeasurement hayashi_measurement(int l);

// Joint outcome alphabet (two_j, two_m) with the induced pre/post outcome
// distributions. Probabilities are assembled in log-domain; log_p/log_q are
// the source of truth, probs are their exponentials.
struct OutcomePair {
  int l = 0;
  std::vector<std::pair<int, int>> outcomes;  // (two_j, two_m)
  qmath::ProbabilityVector p, q;
  std::vector<double> log_p, log_q;
  double per_copy_rate = 0.0;  // kl(q, p) / l in nats
};

OutcomePair outcome_distribution(const schur::BlockDecomposition& pre,
                                 const schur::BlockDecomposition& post,
                                 const BlockMeasurement& meas);

// Per-sector angle optimization. The j-marginal is angle-independent, so the
// sectors decouple: each eta_j maximizes the conditional KL inside its block
// (64-point grid on [0, pi), then golden-section to 1e-8; ties -> smallest).
BlockMeasurement optimize_angles(const schur::BlockDecomposition& pre,
                                 const schur::BlockDecomposition& post);

double measured_rate(const schur::BlockDecomposition& pre,
                     const schur::BlockDecomposition& post,
                     const BlockMeasurement& meas);

// Best single-copy projective measurement for a qubit pair, swept in the
// plane spanned by the two Bloch vectors (grid + golden-section refinement).
// Returns KL(q||p) in nats.
double grid_oracle_single_copy(const qmath::DensityMatrix& rho,
                               const qmath::DensityMatrix& sigma, int grid_size);

struct VariationalOptions {
  int max_iterations = 10000;    // across all blocks
  double grad_tol = 1e-8;        // per-block Frobenius norm
  bool random_init = false;      // default: omega = identity (X = 0)
  std::uint64_t init_seed = 0;
};

// sup_omega tr[sigma^(l) log omega] - tr[rho^(l) omega] + 1 over positive
// definite block-diagonal omega. Concave and separable per sector; solved in
// the log parametrization omega = exp(X) (positivity automatic, dynamic range
// handled) by damped Newton with Armijo backtracking.
struct VariationalResult {
  double value = 0.0;            // nats, for the full l-copy pair
  std::vector<int> block_two_j;  // sector order of the omega representatives
  std::vector<Eigen::MatrixXd> omega_blocks;
  int iterations = 0;
  // max over blocks of the Frobenius gradient norm of the unit-trace sector
  // problem at exit. Stiff coordinate pairs keep this on a rounding floor of
  // order eps * exp(lam_max), so converged can be true with grad_norm above
  // the tolerance: the solver also certifies convergence when successive
  // accepted steps stop gaining at double resolution.
  double grad_norm = 0.0;
  bool converged = false;
};

VariationalResult variational_measured_entropy(const schur::BlockDecomposition& pre,
                                               const schur::BlockDecomposition& post,
                                               const VariationalOptions& opts = {});

// Smallest l at which a measured-divergence rate of (1-eps) D(sigma||rho) is
// guaranteed by the finite-sample hypothesis-testing bound. Conservative and
// monotone in eps; evaluated in base-2 units, which the bound's constants
// assume. Throws if D(sigma||rho) is zero or infinite.
std::int64_t sufficient_block_length(const qmath::DensityMatrix& rho,
                                     const qmath::DensityMatrix& sigma, double eps);

}  // namespace qusum::povm
