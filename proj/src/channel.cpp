#include "aircomp/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace aircomp {

ChannelSet::ChannelSet(int K, int Nt, int round)
    : K_(K), Nt_(Nt), round_(round), links_(static_cast<std::size_t>(K) * K),
      matrices_(K), matrix_ready_(K, false) {
  for (int k = 0; k < K_; ++k)
    for (int l = 0; l < K_; ++l)
      if (k != l) links_[static_cast<std::size_t>(k) * K_ + l] = Eigen::VectorXcd::Zero(Nt_);
}

const Eigen::VectorXcd& ChannelSet::h(int k, int l) const {
  if (k == l || k < 0 || l < 0 || k >= K_ || l >= K_)
    throw std::out_of_range("ChannelSet::h: bad link index");
  return links_[static_cast<std::size_t>(k) * K_ + l];
}

Eigen::VectorXcd& ChannelSet::h_mutable(int k, int l) {
  if (k == l || k < 0 || l < 0 || k >= K_ || l >= K_)
    throw std::out_of_range("ChannelSet::h_mutable: bad link index");
  matrix_ready_.assign(K_, false);  // caches stale after mutation
  return links_[static_cast<std::size_t>(k) * K_ + l];
}

const Eigen::MatrixXcd& ChannelSet::device_matrix(int k) const {
  if (k < 0 || k >= K_) throw std::out_of_range("device_matrix: bad device index");
  if (!matrix_ready_[k]) {
    Eigen::MatrixXcd M(Nt_, K_ - 1);
    int col = 0;
    for (int l = 0; l < K_; ++l) {
      if (l == k) continue;
      M.col(col++) = h(k, l);
    }
    matrices_[k] = std::move(M);
    matrix_ready_[k] = true;
  }
  return matrices_[k];
}

ChannelSet sample_rician(const SystemConfig& cfg, int round) {
  cfg.validate();
  ChannelSet ch(cfg.K, cfg.Nt, round);
  const double r = cfg.rician_ratio;
  const double los_amp = std::sqrt(r / (1.0 + r));
  const double nlos_amp = std::sqrt(1.0 / (1.0 + r));
  for (int k = 0; k < cfg.K; ++k) {
    for (int l = 0; l < cfg.K; ++l) {
      if (k == l) continue;
      Rng rng(cfg.seed, StreamTag::channel,
              {static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(k),
               static_cast<std::uint64_t>(l)});
      Eigen::VectorXcd& hv = ch.h_mutable(k, l);
      for (int a = 0; a < cfg.Nt; ++a) {
        const double phase_turns = 0.1 * (k * 31 + l * 17 + a);
        const double frac = phase_turns - std::floor(phase_turns);
        const std::complex<double> d =
            std::polar(1.0, 2.0 * std::numbers::pi * frac);
        hv[a] = los_amp * d + nlos_amp * rng.complex_normal();
      }
    }
  }
  return ch;
}

const Eigen::MatrixXcd& device_matrix(const ChannelSet& ch, int k) {
  return ch.device_matrix(k);
}

}  // namespace aircomp
