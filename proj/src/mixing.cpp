#include "aircomp/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace aircomp {
namespace {

constexpr double kStochasticTol = 1e-10;

// Second-largest eigenvalue magnitude.  A doubly stochastic P always has the
// eigenvalue 1 (vector of ones); we drop the copy closest to 1 and take the
// largest magnitude among the rest.
double slem(const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(P.rows());
  if (n == 1) return 0.0;
  std::vector<double> mags;
  mags.reserve(n);
  const bool symmetric = (P - P.transpose()).cwiseAbs().maxCoeff() <= 1e-12;
  if (symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
    for (int i = 0; i < n; ++i) mags.push_back(std::abs(es.eigenvalues()(i)));
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> es(P);
    for (int i = 0; i < n; ++i) mags.push_back(std::abs(es.eigenvalues()(i)));
  }
  // Remove one eigenvalue accounting for the Perron root.
  auto it = std::max_element(mags.begin(), mags.end());
  mags.erase(it);
  double second = *std::max_element(mags.begin(), mags.end());
  return std::min(second, 1.0);
}

}  // namespace

MixingSpec build_mixing(const Eigen::MatrixXd& P, double beta) {
  if (P.rows() != P.cols() || P.rows() < 1) {
    throw std::invalid_argument("mixing matrix must be square");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("beta must lie in (0, 1)");
  }
  const int n = static_cast<int>(P.rows());
  if (P.minCoeff() < -kStochasticTol) {
    throw std::invalid_argument("mixing matrix has negative entries");
  }
  for (int i = 0; i < n; ++i) {
    if (std::abs(P.row(i).sum() - 1.0) > kStochasticTol ||
        std::abs(P.col(i).sum() - 1.0) > kStochasticTol) {
      throw std::invalid_argument("mixing matrix is not doubly stochastic");
    }
  }
  MixingSpec spec;
  spec.P = P;
  spec.beta = beta;
  spec.W = (1.0 - beta) * Eigen::MatrixXd::Identity(n, n) + beta * P;
  spec.lambda2 = slem(P);
  spec.connected = spec.lambda2 < 1.0 - 1e-12;
  return spec;
}

Eigen::MatrixXd peer_averaging_matrix(int K) {
  if (K < 2) throw std::invalid_argument("peer averaging needs K >= 2");
  Eigen::MatrixXd P = Eigen::MatrixXd::Constant(K, K, 1.0 / (K - 1));
  P.diagonal().setZero();
  return P;
}

Eigen::MatrixXd uniform_averaging_matrix(int K) {
  if (K < 1) throw std::invalid_argument("K must be positive");
  return Eigen::MatrixXd::Constant(K, K, 1.0 / K);
}

Eigen::MatrixXd ring_matrix(int K) {
  if (K < 3) throw std::invalid_argument("ring needs K >= 3");
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(K, K);
  for (int i = 0; i < K; ++i) {
    P(i, i) = 0.5;
    P(i, (i + 1) % K) = 0.25;
    P(i, (i + K - 1) % K) = 0.25;
  }
  return P;
}

}  // namespace aircomp
