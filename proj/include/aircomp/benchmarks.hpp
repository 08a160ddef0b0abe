#pragma once

#include <Eigen/Dense>
#include <vector>

#include "aircomp/channel.hpp"
#include "aircomp/rng.hpp"
#include "aircomp/signal_chain.hpp"
#include "aircomp/system_config.hpp"

namespace aircomp {

// One TDMA slot of the single-aggregation baseline: all peers of `receiver`
// transmit simultaneously toward it with channel-inverting beamformers, so
// every aligned gain equals sqrt(eta) and the receiver only sees noise error.
struct SlotDesign {
  int receiver = 0;
  std::vector<Eigen::VectorXcd> p;  // indexed by transmitter; receiver's slot unused
  double eta = 0.0;
};

// eta = min_{k != receiver} P0 * ||h_k,receiver||^2; the weakest-channel
// device transmits at full power, everyone else below it.
SlotDesign single_agg_design(const ChannelSet& ch, double P0, int receiver);

// Runs all K slots of one aggregation round on a common channel draw and
// returns each device's received state-unit vector.
std::vector<Eigen::VectorXd> single_agg_round(const ChannelSet& ch, double P0,
                                              const std::vector<Eigen::VectorXd>& s,
                                              const NormalizationStats& stats,
                                              double sigma2, Rng& rng);

// Expected sum error across all K receiving slots.
double single_agg_round_mse(const ChannelSet& ch, double P0, double sigma2,
                            double V, int D);

// Uniform scalar quantization of every coefficient over the joint observed
// range of all inputs; `bits` levels 2^bits.  A zero range returns the input
// unchanged.
std::vector<Eigen::VectorXd> quantize_uniform(
    const std::vector<Eigen::VectorXd>& z, int bits);

// Digital baseline: peers exchange quantized states over error-free links and
// average exactly.  Returns r_k = mean of quantized z_l over l != k.
std::vector<Eigen::VectorXd> digital_aggregate(
    const std::vector<Eigen::VectorXd>& z, int bits);

enum class TransportScheme { DISTRIBUTED_AIRCOMP, SINGLE_AGG, DIGITAL };

const char* transport_name(TransportScheme s);

struct LatencyModel {
  TransportScheme scheme = TransportScheme::DISTRIBUTED_AIRCOMP;
  int D = 1;
  double B = 1e6;
  int K = 2;
  int Q = 16;  // bits per coefficient, digital scheme only
  double P0 = 1.0;
  double sigma2 = 1.0;
};

LatencyModel latency_model(const SystemConfig& cfg, TransportScheme scheme,
                           int Q = 16);

// Seconds for one aggregation round.  Simultaneous analog rounds last D/B
// regardless of K; the single-aggregation baseline repeats that K times; the
// digital baseline serves every (transmitter, worst peer) pair at its
// capacity rate using normalized zero-forcing precoder columns, so it needs
// the channel realization.
double round_latency(const LatencyModel& model, const ChannelSet* ch = nullptr);

}  // namespace aircomp
