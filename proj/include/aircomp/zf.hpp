#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "aircomp/channel.hpp"
#include "aircomp/signal_chain.hpp"

namespace aircomp {

// Thrown when a channel matrix is too close to rank deficient for the
// requested inversion; callers treat the draw as degenerate.
struct SingularChannelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Condition-number ceiling for the Gram inversions below.
constexpr double kCondLimit = 1e12;

// Minimum-norm beamformer aligning all outgoing gains of one device:
// p = sqrt(eta) * H (H^H H)^{-1} 1, so h_l^H p = sqrt(eta) for every column.
Eigen::VectorXcd zf_beamformer(const Eigen::MatrixXcd& Hk, double eta);

// Per-receiver zero-forcing precoder H (H^H H)^{-1}: column j reaches the
// j-th peer with unit gain and is invisible to the others.
Eigen::MatrixXcd zf_precoder(const Eigen::MatrixXcd& Hk);

// Largest common scaling that keeps every device inside its power budget:
// eta = min_k P0 / (1^T (H_k^H H_k)^{-1} 1).  The minimizing device then
// transmits at exactly P0.
double zf_alignment_factor(const ChannelSet& ch, double P0);

// Full zero-forcing design: per-device minimum-norm aligned beamformers at
// the binding common scale.
BeamformingSolution zf_design(const ChannelSet& ch, double P0);

// Closed-form ceiling on the aligned design's sum error:
//   K D V^2 sigma2 / ((K-1) P0 min_k lambda_min(H_k^H H_k)).
// Meets the exact value when every H_k has orthonormal columns.
double zf_mse_upper_bound(const ChannelSet& ch, double P0, double sigma2,
                          double V, int D);

}  // namespace aircomp
