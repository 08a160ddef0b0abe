#include "aircomp/dual_averaging.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "aircomp/benchmarks.hpp"
#include "aircomp/mmse.hpp"
#include "aircomp/zf.hpp"

namespace aircomp {

namespace {

// Every bound and step size divides by 1 - lambda2; a chain without a
// spectral gap (disconnected, or periodic like 2-device peer averaging)
// never mixes.
void require_spectral_gap(double lambda2) {
  if (lambda2 >= 1.0) {
    throw std::invalid_argument(
        "mixing pattern has no spectral gap (disconnected or periodic)");
  }
}

}  // namespace

const char* aggregator_name(Aggregator a) {
  switch (a) {
    case Aggregator::IDEAL: return "ideal";
    case Aggregator::AIRCOMP_ZF: return "aircomp_zf";
    case Aggregator::AIRCOMP_MMSE: return "aircomp_mmse";
    case Aggregator::SINGLE_AGG: return "single_agg";
    case Aggregator::DIGITAL: return "digital";
  }
  return "unknown";
}

Eigen::VectorXd project(const Eigen::VectorXd& z, double alpha_step,
                        double domain_radius) {
  if (!(alpha_step > 0.0)) throw std::invalid_argument("step must be > 0");
  Eigen::VectorXd x = -alpha_step * z;
  if (std::isfinite(domain_radius)) {
    double n = x.norm();
    if (n > domain_radius) x *= domain_radius / n;
  }
  return x;
}

std::vector<Eigen::VectorXd> dual_update(const std::vector<Eigen::VectorXd>& z,
                                         const std::vector<Eigen::VectorXd>& r,
                                         const std::vector<Eigen::VectorXd>& g,
                                         double beta) {
  if (z.size() != r.size() || z.size() != g.size()) {
    throw std::invalid_argument("state, aggregate, and gradient counts differ");
  }
  std::vector<Eigen::VectorXd> out(z.size());
  for (size_t k = 0; k < z.size(); ++k) {
    if (r[k].size() != z[k].size() || g[k].size() != z[k].size()) {
      throw std::invalid_argument("dual update dimension mismatch");
    }
    out[k] = (1.0 - beta) * z[k] + beta * r[k] + g[k];
  }
  return out;
}

std::vector<Eigen::VectorXd> dual_update_matrix(
    const Eigen::MatrixXd& W, const std::vector<Eigen::VectorXd>& z,
    const std::vector<Eigen::VectorXd>& g) {
  const int K = static_cast<int>(z.size());
  if (W.rows() != K || W.cols() != K) {
    throw std::invalid_argument("weight matrix does not match device count");
  }
  std::vector<Eigen::VectorXd> out(z.size());
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(z[0].size());
    for (int l = 0; l < K; ++l) acc += W(k, l) * z[l];
    out[k] = acc + g[k];
  }
  return out;
}

double step_size(int n, double R, double lambda2, double xi_val) {
  if (n < 1) throw std::invalid_argument("round index starts at 1");
  if (!(xi_val > 0.0)) throw std::invalid_argument("xi must be > 0");
  require_spectral_gap(lambda2);
  return R * std::sqrt(1.0 - lambda2) / (4.0 * xi_val * std::sqrt(double(n)));
}

double xi(double omega, double beta, double max_mse, int K) {
  if (omega < 0.0 || max_mse < 0.0 || K < 1) {
    throw std::invalid_argument("xi inputs must be nonnegative");
  }
  return std::sqrt(omega * omega + beta * beta * max_mse / K);
}

double dual_deviation_bound(double xi_val, double beta, double lambda2, int N,
                            int K) {
  require_spectral_gap(lambda2);
  if (N < 2) throw std::invalid_argument("bound needs N >= 2");
  return 2.0 * xi_val * std::log(N * std::sqrt(double(K))) /
             (beta * (1.0 - lambda2)) +
         3.0 * xi_val;
}

double suboptimality_bound(Scheme scheme, double R, double lambda2, int N,
                           int K, double omega, double beta,
                           const std::vector<double>& mse_series,
                           double x_star_norm) {
  require_spectral_gap(lambda2);
  if (N < 1 || static_cast<int>(mse_series.size()) < N) {
    throw std::invalid_argument("mse series shorter than N");
  }
  double max_mse = 0.0;
  for (int n = 0; n < N; ++n) max_mse = std::max(max_mse, mse_series[n]);
  const double xi_val = xi(omega, beta, max_mse, K);
  double b = 20.0 * R * std::log(N * std::sqrt(double(K))) /
             (beta * std::sqrt(double(N)) * std::sqrt(1.0 - lambda2)) * xi_val;
  if (scheme == Scheme::MMSE) {
    double bias = 0.0;
    for (int n = 0; n < N; ++n) bias += std::sqrt(mse_series[n] / K);
    b += x_star_norm / N * bias;
  }
  return b;
}

namespace {

// Expected unit-variance aggregation error of one design on one channel draw;
// used to size the step sequence before any states exist.
double probe_mse(Aggregator agg, const ChannelSet& ch, const SystemConfig& sys,
                 double sigma2, const BisectionConfig& bis) {
  switch (agg) {
    case Aggregator::AIRCOMP_ZF:
      return analytic_mse(ch, zf_design(ch, sys.P0), sigma2, 1.0, sys.D);
    case Aggregator::AIRCOMP_MMSE:
      return analytic_mse(ch, mmse_design(ch, sys.P0, sigma2, bis), sigma2, 1.0,
                          sys.D);
    case Aggregator::SINGLE_AGG:
      return single_agg_round_mse(ch, sys.P0, sigma2, 1.0, sys.D);
    default:
      return 0.0;
  }
}

std::vector<Eigen::VectorXd> exact_peer_average(
    const Eigen::MatrixXd& P, const std::vector<Eigen::VectorXd>& z) {
  const int K = static_cast<int>(z.size());
  std::vector<Eigen::VectorXd> r(K);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(z[0].size());
    for (int l = 0; l < K; ++l)
      if (P(k, l) != 0.0) acc += P(k, l) * z[l];
    r[k] = acc;
  }
  return r;
}

}  // namespace

OptTrace run(const Task& task, const MixingSpec& mixing, Aggregator agg,
             const RunConfig& cfg) {
  const int K = task.K;
  const int D = task.D;
  if (cfg.sys.K != K) {
    throw std::invalid_argument("system config and task disagree on K");
  }
  if (cfg.sys.D != D) {
    throw std::invalid_argument("system config and task disagree on D");
  }
  if (mixing.P.rows() != K) {
    throw std::invalid_argument("mixing pattern does not match K");
  }
  if (!mixing.connected) {
    throw std::invalid_argument(
        "mixing pattern has no spectral gap (disconnected or periodic)");
  }
  if (cfg.rounds < 1) throw std::invalid_argument("need at least one round");

  SystemConfig sys = cfg.sys;
  sys.seed = cfg.seed;
  const double sigma2 = cfg.sigma2 >= 0.0 ? cfg.sigma2 : sys.sigma2;
  const double beta = mixing.beta;
  const double lambda2 = mixing.lambda2;

  BisectionConfig bis;
  bis.eps_alpha = cfg.mmse_eps_alpha;
  bis.max_outer = cfg.mmse_max_outer;

  OptTrace trace;
  trace.aggregator = agg;
  trace.beta = beta;
  trace.lambda2 = lambda2;
  trace.omega = task.omega;
  trace.R = task.R;

  double xi_step = cfg.xi_override;
  if (!(xi_step > 0.0)) {
    double est = 0.0;
    if (agg == Aggregator::AIRCOMP_ZF || agg == Aggregator::AIRCOMP_MMSE ||
        agg == Aggregator::SINGLE_AGG) {
      for (int j = 1; j <= cfg.probe_draws; ++j) {
        ChannelSet ch = sample_rician(sys, j);
        est = std::max(est, probe_mse(agg, ch, sys, sigma2, bis));
      }
    }
    xi_step = xi(task.omega, beta, est, K);
  }
  trace.xi_step = xi_step;

  std::vector<Eigen::VectorXd> z(K, Eigen::VectorXd::Zero(D));
  std::vector<Eigen::VectorXd> x(K, Eigen::VectorXd::Zero(D));
  std::vector<Eigen::VectorXd> xsum(K, Eigen::VectorXd::Zero(D));

  const double aircomp_latency = double(sys.D) / sys.B;
  double latency = 0.0;
  double max_mse = 0.0;
  double bias_sum = 0.0;  // sum over rounds of sqrt(mse / K)
  const double x_star_norm = task.x_star.norm();
  const double bound_coef =
      20.0 * task.R / (beta * std::sqrt(1.0 - lambda2));

  for (int n = 1; n <= cfg.rounds; ++n) {
    // Deviation of the states entering this round, so row n describes z(n).
    double dual_dev = 0.0;
    {
      Eigen::VectorXd zbar = Eigen::VectorXd::Zero(D);
      for (int k = 0; k < K; ++k) zbar += z[k];
      zbar /= K;
      for (int k = 0; k < K; ++k)
        dual_dev = std::max(dual_dev, (zbar - z[k]).norm());
    }

    std::vector<Eigen::VectorXd> g(K);
    for (int k = 0; k < K; ++k) {
      if (cfg.stochastic_gradients) {
        Rng rng(cfg.seed, StreamTag::subgradient,
                {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k)});
        g[k] = task.stoch_grad(k, x[k], rng);
      } else {
        g[k] = task.local_grad(k, x[k]);
      }
    }

    std::vector<Eigen::VectorXd> r;
    double round_mse = 0.0;
    try {
      switch (agg) {
        case Aggregator::IDEAL: {
          r = exact_peer_average(mixing.P, z);
          latency += aircomp_latency;
          break;
        }
        case Aggregator::DIGITAL: {
          r = digital_aggregate(z, cfg.digital_bits);
          std::vector<Eigen::VectorXd> exact =
              exact_peer_average(peer_averaging_matrix(K), z);
          for (int k = 0; k < K; ++k)
            round_mse += (r[k] - exact[k]).squaredNorm();
          ChannelSet ch = sample_rician(sys, n);
          latency += round_latency(
              latency_model(sys, TransportScheme::DIGITAL, cfg.digital_bits),
              &ch);
          break;
        }
        case Aggregator::SINGLE_AGG: {
          ChannelSet ch = sample_rician(sys, n);
          NormalizationStats stats = compute_stats(z);
          std::vector<Eigen::VectorXd> s = normalize(z, stats);
          Rng noise(cfg.seed, StreamTag::rx_noise,
                    {static_cast<std::uint64_t>(n)});
          r = single_agg_round(ch, sys.P0, s, stats, sigma2, noise);
          round_mse = single_agg_round_mse(ch, sys.P0, sigma2, stats.V, D);
          latency += K * aircomp_latency;
          break;
        }
        case Aggregator::AIRCOMP_ZF:
        case Aggregator::AIRCOMP_MMSE: {
          ChannelSet ch = sample_rician(sys, n);
          BeamformingSolution sol =
              agg == Aggregator::AIRCOMP_ZF
                  ? zf_design(ch, sys.P0)
                  : mmse_design(ch, sys.P0, sigma2, bis);
          if (sol.diagnostics.fallback_used) ++trace.design_fallbacks;
          NormalizationStats stats = compute_stats(z);
          std::vector<Eigen::VectorXd> s = normalize(z, stats);
          Rng noise(cfg.seed, StreamTag::rx_noise,
                    {static_cast<std::uint64_t>(n)});
          r = simulate_round(ch, sol, s, stats, sigma2, noise);
          round_mse = analytic_mse(ch, sol, sigma2, stats.V, D);
          latency += aircomp_latency;
          break;
        }
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("aggregation failed in round " +
                               std::to_string(n) + ": " + e.what());
    }

    z = dual_update(z, r, g, beta);
    const double alpha = step_size(n, task.R, lambda2, xi_step);
    for (int k = 0; k < K; ++k) {
      x[k] = project(z[k], alpha, task.domain_radius);
      xsum[k] += x[k];
    }

    max_mse = std::max(max_mse, round_mse);
    bias_sum += std::sqrt(round_mse / K);

    if (n % cfg.record_every == 0 || n == cfg.rounds) {
      RoundRecord rec;
      rec.round = n;
      rec.gap.resize(K);
      for (int k = 0; k < K; ++k) rec.gap(k) = task.gap(xsum[k] / n);
      rec.dual_dev = dual_dev;
      rec.mse = round_mse;
      rec.xi_val = xi(task.omega, beta, max_mse, K);
      rec.latency_s = latency;
      const double common = bound_coef * std::log(n * std::sqrt(double(K))) /
                            std::sqrt(double(n)) * rec.xi_val;
      rec.bound_zf = common;
      rec.bound_mmse = common + x_star_norm / n * bias_sum;
      trace.rows.push_back(std::move(rec));
    }
  }

  trace.max_mse = max_mse;
  trace.x_avg.resize(K);
  double worst = 0.0;
  for (int k = 0; k < K; ++k) {
    trace.x_avg[k] = xsum[k] / cfg.rounds;
    worst = std::max(worst, task.gap(trace.x_avg[k]));
  }
  trace.final_gap_max = worst;
  return trace;
}

}  // namespace aircomp
