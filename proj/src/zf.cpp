#include "aircomp/zf.hpp"

#include <cmath>

namespace aircomp {

namespace {

// Gram matrix with a conditioning check; shared by the operations below.
Eigen::MatrixXcd checked_gram(const Eigen::MatrixXcd& Hk) {
  const Eigen::MatrixXcd G = Hk.adjoint() * Hk;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
  const auto& ev = es.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (!(lo > 0.0) || hi / lo > kCondLimit)
    throw SingularChannelError("channel Gram matrix is ill conditioned");
  return G;
}

}  // namespace

Eigen::VectorXcd zf_beamformer(const Eigen::MatrixXcd& Hk, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  const Eigen::MatrixXcd G = checked_gram(Hk);
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(Hk.cols());
  const Eigen::VectorXcd x = G.llt().solve(ones);
  return std::sqrt(eta) * (Hk * x);
}

Eigen::MatrixXcd zf_precoder(const Eigen::MatrixXcd& Hk) {
  const Eigen::MatrixXcd G = checked_gram(Hk);
  Eigen::MatrixXcd inv =
      G.llt().solve(Eigen::MatrixXcd::Identity(G.rows(), G.cols()));
  return Hk * inv;
}

double zf_alignment_factor(const ChannelSet& ch, double P0) {
  if (!(P0 > 0.0)) throw std::invalid_argument("P0 must be > 0");
  double eta = std::numeric_limits<double>::infinity();
  for (int k = 0; k < ch.K(); ++k) {
    const Eigen::MatrixXcd G = checked_gram(ch.device_matrix(k));
    const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(G.cols());
    // 1^T G^{-1} 1 is real positive for a Hermitian positive definite G.
    const double cost = ones.dot(G.llt().solve(ones)).real();
    eta = std::min(eta, P0 / cost);
  }
  return eta;
}

BeamformingSolution zf_design(const ChannelSet& ch, double P0) {
  const double eta = zf_alignment_factor(ch, P0);
  BeamformingSolution sol;
  sol.scheme = Scheme::ZF;
  sol.eta = eta;
  sol.p.reserve(ch.K());
  for (int k = 0; k < ch.K(); ++k)
    sol.p.push_back(zf_beamformer(ch.device_matrix(k), eta));
  return sol;
}

double zf_mse_upper_bound(const ChannelSet& ch, double P0, double sigma2,
                          double V, int D) {
  if (!(P0 > 0.0)) throw std::invalid_argument("P0 must be > 0");
  double min_ev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < ch.K(); ++k) {
    const Eigen::MatrixXcd& Hk = ch.device_matrix(k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Hk.adjoint() * Hk);
    min_ev = std::min(min_ev, es.eigenvalues().minCoeff());
  }
  if (!(min_ev > 0.0))
    throw SingularChannelError("rank-deficient channel in bound evaluation");
  const int K = ch.K();
  return K * D * V * V * sigma2 / ((K - 1) * P0 * min_ev);
}

}  // namespace aircomp
