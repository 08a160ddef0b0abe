// Distributed dual averaging over a pluggable aggregation transport.
//
// Every device keeps a dual variable z_k and a primal iterate x_k.  Each
// round it computes a local subgradient, receives an estimate r_k of its
// peers' average dual variable through one of the transports below, folds
// both into z_k, and projects back into the domain.  The bound calculators
// mirror the convergence analysis the step-size rule comes from.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "aircomp/mixing.hpp"
#include "aircomp/signal_chain.hpp"
#include "aircomp/system_config.hpp"
#include "aircomp/tasks.hpp"

namespace aircomp {

enum class Aggregator { IDEAL, AIRCOMP_ZF, AIRCOMP_MMSE, SINGLE_AGG, DIGITAL };

const char* aggregator_name(Aggregator a);

// argmin_{x in X} <z, x> + ||x||^2 / (2 alpha): steepest point of the dual
// variable, pulled back into the ball of radius `domain_radius` (infinite
// radius leaves -alpha z untouched).
Eigen::VectorXd project(const Eigen::VectorXd& z, double alpha_step,
                        double domain_radius);

// z_k+ = (1-beta) z_k + beta r_k + g_k.
std::vector<Eigen::VectorXd> dual_update(const std::vector<Eigen::VectorXd>& z,
                                         const std::vector<Eigen::VectorXd>& r,
                                         const std::vector<Eigen::VectorXd>& g,
                                         double beta);

// Matrix form z+ = W z + g; identical to dual_update when r is the exact
// peer average under the pattern inside W.
std::vector<Eigen::VectorXd> dual_update_matrix(
    const Eigen::MatrixXd& W, const std::vector<Eigen::VectorXd>& z,
    const std::vector<Eigen::VectorXd>& g);

// alpha(n) = R sqrt(1 - lambda2) / (4 xi sqrt(n)).
double step_size(int n, double R, double lambda2, double xi_val);

// Second-moment scale of the channel-distorted subgradients:
// sqrt(Omega^2 + beta^2 max_mse / K).
double xi(double omega, double beta, double max_mse, int K);

// Ceiling on max_k E ||zbar - z_k|| after N rounds:
// 2 xi log(N sqrt(K)) / (beta (1 - lambda2)) + 3 xi.
double dual_deviation_bound(double xi_val, double beta, double lambda2, int N,
                            int K);

// Ceiling on the expected suboptimality gap of the running-average iterate.
// The aligned (ZF) transport is unbiased; the MMSE transport adds a bias
// floor of x_star_norm / N * sum_n sqrt(mse_n / K) that does not vanish
// with N.
double suboptimality_bound(Scheme scheme, double R, double lambda2, int N,
                           int K, double omega, double beta,
                           const std::vector<double>& mse_series,
                           double x_star_norm);

struct RunConfig {
  SystemConfig sys;          // channel side; sys.K must equal the task's K
  double sigma2 = -1.0;      // receiver noise override; negative uses sys.sigma2
  int rounds = 100;
  std::uint64_t seed = 1;    // round randomness (channels, noise, subgradients)
  bool stochastic_gradients = true;
  double xi_override = -1.0;  // negative: estimate from probe channel draws
  int probe_draws = 3;
  int digital_bits = 16;
  int record_every = 1;
  // Design tolerances inside the loop; looser than the standalone defaults.
  double mmse_eps_alpha = 1e-6;
  int mmse_max_outer = 60;
};

struct RoundRecord {
  int round = 0;
  Eigen::VectorXd gap;       // per device, running-average iterate
  double dual_dev = 0.0;     // max_k ||zbar - z_k||
  double mse = 0.0;          // this round's aggregation error (expected)
  double xi_val = 0.0;       // from the largest mse seen so far
  double latency_s = 0.0;    // cumulative
  double bound_zf = 0.0;
  double bound_mmse = 0.0;
};

struct OptTrace {
  Aggregator aggregator = Aggregator::IDEAL;
  double beta = 0.0;
  double lambda2 = 0.0;
  double omega = 0.0;
  double R = 0.0;
  double xi_step = 0.0;      // the value the step sizes were computed with
  double max_mse = 0.0;
  long long design_fallbacks = 0;  // rounds where the mmse solver fell back
  std::vector<RoundRecord> rows;
  std::vector<Eigen::VectorXd> x_avg;  // final running averages, one per device
  double final_gap_max = 0.0;
};

// Runs N rounds.  The mixing spec supplies beta and, for the IDEAL transport,
// the averaging pattern; the physical transports realize uniform peer
// averaging, so pass peer_averaging_matrix for consistency with them.
OptTrace run(const Task& task, const MixingSpec& mixing, Aggregator agg,
             const RunConfig& cfg);

}  // namespace aircomp
