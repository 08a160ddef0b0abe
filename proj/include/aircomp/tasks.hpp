#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>

#include "aircomp/rng.hpp"

namespace aircomp {

enum class TaskKind { QUADRATIC_CONSENSUS, RIDGE_REGRESSION, LOGISTIC_REGRESSION };

const char* task_kind_name(TaskKind kind);

// A distributed convex problem: K devices each hold a local objective f_k and
// the global objective is their average.  Gradient oracles come in an exact
// and a stochastic flavor; the stochastic one is unbiased and its norm obeys
// the calibrated second-moment bound omega (checked empirically in tests).
struct Task {
  TaskKind kind = TaskKind::QUADRATIC_CONSENSUS;
  int K = 0;
  int D = 0;

  // Feasible set: Euclidean ball around the origin.  Infinity means
  // unconstrained.
  double domain_radius = std::numeric_limits<double>::infinity();

  double L = 0.0;      // Lipschitz constant of the local objectives over the domain
  double omega = 0.0;  // second-moment bound on stochastic gradient norms
  double R = 0.0;      // bound with 0.5 * ||x*||^2 <= R^2

  Eigen::VectorXd x_star;
  double f_star = 0.0;

  std::function<double(int k, const Eigen::VectorXd& x)> local_value;
  std::function<Eigen::VectorXd(int k, const Eigen::VectorXd& x)> local_grad;
  std::function<Eigen::VectorXd(int k, const Eigen::VectorXd& x, Rng& rng)>
      stoch_grad;

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const;
  double gap(const Eigen::VectorXd& x) const { return value(x) - f_star; }
  bool in_domain(const Eigen::VectorXd& x, double tol = 1e-9) const;
};

struct TaskOptions {
  int samples_per_device = 40;
  double sample_noise = 0.25;  // label noise (regression) / gradient noise (quadratic)
  double spread = 2.0;         // device-to-device shift under heterogeneity
  double ridge_mu = 0.1;
  double logistic_mu = 0.05;
  int calibration_draws = 4000;
};

// Builds one of the synthetic problems.  All data is drawn from substreams of
// `seed`, so the task is a pure function of its arguments.  `heterogeneous`
// gives every device a visibly different local distribution (shifted centers
// for the quadratic task, target-sorted shards for the regressions), which
// makes local gradients at the global optimum nonzero.
Task make_task(TaskKind kind, int K, int D, std::uint64_t seed,
               bool heterogeneous, const TaskOptions& opt = {});

}  // namespace aircomp
