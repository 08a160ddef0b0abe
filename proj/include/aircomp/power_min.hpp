// Power minimization for a fixed aligned-sum fraction.
//
// For a target fraction alpha the subproblem is
//
//   minimize    p_max
//   subject to  2 alpha sqrt(K sigma2 + sum |h_kl^H p_k|^2)
//                  <= sum (h_kl^H p_k + p_k^H h_kl),
//               ||p_k||^2 <= p_max  for every device k,
//
// a convex program in the stacked real and imaginary parts of the
// beamformers.  It is solved with a log-barrier interior-point scheme:
// damped Newton steps on the barrier objective, barrier parameter increased
// by a factor of 10 per stage until the duality-gap estimate is below
// tolerance.  The optimal value p*(alpha) is continuous and non-decreasing
// in alpha, which the outer bisection in mmse.cpp relies on.
#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "aircomp/channel.hpp"

namespace aircomp {

struct PowerMinResult {
  bool feasible = false;          // false: no finite-power p reaches alpha
  std::vector<Eigen::VectorXcd> p;
  double p_max = std::numeric_limits<double>::infinity();
  double alpha_achieved = 0.0;    // S / (2 sqrt(K sigma2 + Q)) at the solution
  double S = 0.0;                 // sum of aligned parts, 2 * sum Re(h^H p)
  double Q = 0.0;                 // sum of squared gain moduli
  double soc_dual = 0.0;          // multiplier estimate for the cone constraint
  std::vector<double> power_duals;  // one multiplier estimate per device
  long long newton_steps = 0;
  double grad_norm = 0.0;         // barrier gradient at exit
};

// Raised when the Newton iteration hits its step budget before reaching
// tolerance; carries the best iterate found so far.
struct SolverFailure : std::runtime_error {
  explicit SolverFailure(const std::string& what, PowerMinResult best_so_far)
      : std::runtime_error(what), best(std::move(best_so_far)) {}
  PowerMinResult best;
};

struct PowerMinOptions {
  double inner_tol = 1e-8;   // relative duality-gap target
  int max_newton = 2000;     // total Newton steps across all barrier stages
  // Optional warm start; scaled into strict feasibility before use.
  const std::vector<Eigen::VectorXcd>* warm = nullptr;
};

PowerMinResult solve_power_min(const ChannelSet& ch, double alpha, double sigma2,
                               const PowerMinOptions& opt = {});

}  // namespace aircomp
