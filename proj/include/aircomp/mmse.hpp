// Minimum-MSE multicast beamforming.
//
// The sum error of one aggregation round, with the receive scaling eta chosen
// optimally for given beamformers, is a strictly decreasing function of the
// aligned-sum fraction
//
//   alpha(p) = S(p) / (2 sqrt(K sigma2 + Q(p))),
//   S = sum_k sum_{l != k} 2 Re(h_kl^H p_k),   Q = sum |h_kl^H p_k|^2.
//
// The design therefore maximizes alpha subject to per-device power.  Since
// the minimum power needed to reach a fraction alpha is non-decreasing in
// alpha, the maximum is found by bisecting alpha, solving the power
// minimization of power_min.hpp at each probe.
#pragma once

#include <Eigen/Dense>

#include "aircomp/power_min.hpp"
#include "aircomp/signal_chain.hpp"

namespace aircomp {

struct BisectionConfig {
  double eps_alpha = 1e-6;  // bisection gap on alpha at termination
  double inner_tol = 1e-8;  // subproblem duality-gap target
  int max_outer = 100;      // bisection iteration ceiling
  int max_inner = 2000;     // Newton budget per subproblem solve
};

// Receive scaling minimizing the conditional sum error for fixed beamformers:
//   eta = ((2 K sigma2 + 2 Q) / S)^2.
// Requires S != 0.
double conditional_eta(const ChannelSet& ch,
                       const std::vector<Eigen::VectorXcd>& p, double sigma2);

// S and Q of a beamformer set (see header comment).
void aligned_sums(const ChannelSet& ch, const std::vector<Eigen::VectorXcd>& p,
                  double& S, double& Q);

// alpha(p) as defined above.
double aligned_fraction(const ChannelSet& ch,
                        const std::vector<Eigen::VectorXcd>& p, double sigma2);

// Sum error with eta already substituted by its optimizer; agrees with
// analytic_mse at conditional_eta whenever S > 0 and is invariant under a
// global sign flip of the beamformers.
double mse_at_optimal_eta(const ChannelSet& ch,
                          const std::vector<Eigen::VectorXcd>& p, double sigma2,
                          double V, int D);

// Full design: bisection on alpha over the power subproblem, final rescale to
// the power budget, and a closed-form aligned candidate as safety net.
BeamformingSolution mmse_design(const ChannelSet& ch, double P0, double sigma2,
                                const BisectionConfig& cfg = {});

enum class CentroidMode { PARTIAL_POWER, FULL_POWER };

// Direction every optimal beamformer points along, as a function of the
// device's power status: partial-power devices use the unregularized centroid
// (H_k^H)^{-1} 1 (square H_k), full-power devices the ridge-regularized
// (H_k H_k^H + mu I)^{-1} H_k 1.  Returned with unit norm.
Eigen::VectorXcd centroid_direction(const Eigen::MatrixXcd& Hk, CentroidMode mode,
                                    double mu = 0.0);

struct KktReport {
  // Per device: relative misfit of the stationarity system, recovered power
  // multiplier, recovered ridge parameter, and whether power binds.
  std::vector<double> stationarity;
  std::vector<double> power_dual;     // nu_k, normalized so they sum to 1
  std::vector<double> ridge;          // mu_k = nu_k / (lambda c0)
  std::vector<bool> full_power;
  double soc_dual = 0.0;              // lambda
  double complementary_slackness = 0.0;  // max_k |nu_k (||p_k||^2 - p_max)|
};

// Evaluates the first-order optimality system at a designed solution.  The
// multipliers are recovered from the solution itself (projection of the
// stationarity equations onto each beamformer), so the report is an
// independent check on the solver output.  The power budget is taken to be
// the largest per-device power in the solution.
KktReport kkt_residuals(const ChannelSet& ch, const BeamformingSolution& sol,
                        double sigma2);

// Exhaustive reference optimizer for tiny instances (K <= 3, Nt <= 2).
// Searches a real-parameterized beamformer grid, refined around the incumbent
// until the cell size reaches `resolution` (relative to the search box), with
// eta set to its conditional optimizer at every candidate.  Independent of
// the bisection/interior-point path.
BeamformingSolution brute_force_mmse(const ChannelSet& ch, double P0,
                                     double sigma2, double resolution = 1e-3);

}  // namespace aircomp
