#pragma once

#include <Eigen/Dense>

namespace aircomp {

// Consensus weights used by the state update z+ = (1-beta) z + beta r + g,
// which in matrix form is W = (1-beta) I + beta P with P the peer-averaging
// pattern implied by the aggregator.  lambda2 is the second-largest
// eigenvalue magnitude of P; it controls how fast disagreement decays and
// enters every bound below.
struct MixingSpec {
  Eigen::MatrixXd P;
  Eigen::MatrixXd W;
  double beta = 0.5;
  double lambda2 = 0.0;
  bool connected = true;  // false when lambda2 reaches 1
};

// Validates P (entrywise nonnegative, rows and columns summing to 1 within
// 1e-10) and beta in (0, 1), then assembles the spec.
MixingSpec build_mixing(const Eigen::MatrixXd& P, double beta);

// The pattern realized by simultaneous aggregation: uniform weight on every
// peer, none on self.
Eigen::MatrixXd peer_averaging_matrix(int K);

// Uniform averaging including self; lambda2 = 0.
Eigen::MatrixXd uniform_averaging_matrix(int K);

// Symmetric ring: 1/2 self, 1/4 each neighbor.
Eigen::MatrixXd ring_matrix(int K);

}  // namespace aircomp
