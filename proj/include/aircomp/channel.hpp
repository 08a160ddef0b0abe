#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "aircomp/rng.hpp"
#include "aircomp/system_config.hpp"

namespace aircomp {

// One fading realization for every ordered device pair.
//
// h(k, l) is the vector channel used when device k transmits to device l;
// devices are 0-based.  device_matrix(k) stacks the K-1 outgoing channels of
// device k as columns, peers in ascending index order with k skipped, so for
// K = 3 device 1 gets columns [h(1,0), h(1,2)].
class ChannelSet {
 public:
  ChannelSet(int K, int Nt, int round);

  int K() const { return K_; }
  int Nt() const { return Nt_; }
  int round() const { return round_; }

  const Eigen::VectorXcd& h(int k, int l) const;
  Eigen::VectorXcd& h_mutable(int k, int l);

  // Nt x (K-1) outgoing-channel matrix of device k; built lazily and cached.
  const Eigen::MatrixXcd& device_matrix(int k) const;

 private:
  int K_;
  int Nt_;
  int round_;
  std::vector<Eigen::VectorXcd> links_;              // (k, l) -> k * K + l
  mutable std::vector<Eigen::MatrixXcd> matrices_;   // per device
  mutable std::vector<bool> matrix_ready_;
};

// Rician fading: entry = sqrt(r/(1+r)) * d + sqrt(1/(1+r)) * g, g ~ CN(0,1),
// with a fixed unit-modulus LoS phase d per (link, antenna).  Draws come from
// substreams keyed by (cfg.seed, round, k, l), so the set for a given round is
// independent of evaluation order.
ChannelSet sample_rician(const SystemConfig& cfg, int round);

// Free-function form mirroring the member; kept for call sites that work
// with a device index loop.
const Eigen::MatrixXcd& device_matrix(const ChannelSet& ch, int k);

}  // namespace aircomp
