#include "aircomp/signal_chain.hpp"

#include <cmath>
#include <stdexcept>

namespace aircomp {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::ZF: return "ZF";
    case Scheme::MMSE: return "MMSE";
    case Scheme::SINGLE_AGG: return "SINGLE_AGG";
  }
  return "?";
}

namespace {

void check_states(const std::vector<Eigen::VectorXd>& z) {
  if (z.empty()) throw std::invalid_argument("state list is empty");
  const auto d = z.front().size();
  for (const auto& v : z)
    if (v.size() != d) throw std::invalid_argument("state dimensions disagree");
}

void check_solution(const ChannelSet& ch, const BeamformingSolution& sol) {
  if (static_cast<int>(sol.p.size()) != ch.K())
    throw std::invalid_argument("beamformer count != K");
  for (const auto& pk : sol.p)
    if (pk.size() != ch.Nt())
      throw std::invalid_argument("beamformer dimension != Nt");
  if (!(sol.eta > 0.0)) throw std::invalid_argument("eta must be > 0");
}

}  // namespace

NormalizationStats compute_stats(const std::vector<Eigen::VectorXd>& z) {
  check_states(z);
  double sum = 0.0;
  double sumsq = 0.0;
  long long n = 0;
  for (const auto& v : z) {
    sum += v.sum();
    sumsq += v.squaredNorm();
    n += v.size();
  }
  NormalizationStats st;
  st.M = sum / static_cast<double>(n);
  const double var = sumsq / static_cast<double>(n) - st.M * st.M;
  st.V = std::sqrt(std::max(var, 0.0));
  if (st.V < NormalizationStats::kVFloor) st.V = NormalizationStats::kVFloor;
  return st;
}

std::vector<Eigen::VectorXd> normalize(const std::vector<Eigen::VectorXd>& z,
                                       const NormalizationStats& stats) {
  check_states(z);
  std::vector<Eigen::VectorXd> s;
  s.reserve(z.size());
  for (const auto& v : z) s.push_back((v.array() - stats.M) / stats.V);
  return s;
}

std::vector<Eigen::VectorXd> denormalize(const std::vector<Eigen::VectorXd>& s,
                                         const NormalizationStats& stats) {
  check_states(s);
  std::vector<Eigen::VectorXd> z;
  z.reserve(s.size());
  for (const auto& v : s) z.push_back(v.array() * stats.V + stats.M);
  return z;
}

void StatsTracker::update(const std::vector<Eigen::VectorXd>& z) {
  const NormalizationStats cur = compute_stats(z);
  if (!primed_) {
    mean_ = cur.M;
    var_ = cur.V * cur.V;
    primed_ = true;
    return;
  }
  mean_ = (1.0 - forget_) * mean_ + forget_ * cur.M;
  var_ = (1.0 - forget_) * var_ + forget_ * cur.V * cur.V;
}

NormalizationStats StatsTracker::stats() const {
  NormalizationStats st;
  st.M = mean_;
  st.V = std::max(std::sqrt(std::max(var_, 0.0)), NormalizationStats::kVFloor);
  return st;
}

std::vector<Eigen::VectorXcd> simulate_round_complex(
    const ChannelSet& ch, const BeamformingSolution& sol,
    const std::vector<Eigen::VectorXd>& s, const NormalizationStats& stats,
    double sigma2, Rng& rng) {
  check_states(s);
  check_solution(ch, sol);
  const int K = ch.K();
  if (static_cast<int>(s.size()) != K)
    throw std::invalid_argument("symbol count != K");
  const auto D = s.front().size();
  const double scale = stats.V / ((K - 1) * std::sqrt(sol.eta));
  const double noise_sd = std::sqrt(sigma2);  // per complex entry, CN(0, sigma2)

  std::vector<Eigen::VectorXcd> r(K);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(D);
    for (int l = 0; l < K; ++l) {
      if (l == k) continue;
      const std::complex<double> gain = ch.h(l, k).dot(sol.p[l]);  // h_lk^H p_l
      y += gain * s[l].cast<std::complex<double>>();
    }
    for (Eigen::Index d = 0; d < D; ++d) y[d] += noise_sd * rng.complex_normal();
    r[k] = scale * y;
    r[k].array() += stats.M;
  }
  return r;
}

std::vector<Eigen::VectorXd> simulate_round(
    const ChannelSet& ch, const BeamformingSolution& sol,
    const std::vector<Eigen::VectorXd>& s, const NormalizationStats& stats,
    double sigma2, Rng& rng) {
  const auto rc = simulate_round_complex(ch, sol, s, stats, sigma2, rng);
  std::vector<Eigen::VectorXd> r;
  r.reserve(rc.size());
  for (const auto& v : rc) r.push_back(v.real());
  return r;
}

double analytic_mse(const ChannelSet& ch, const BeamformingSolution& sol,
                    double sigma2, double V, int D) {
  check_solution(ch, sol);
  const int K = ch.K();
  const double inv_sqrt_eta = 1.0 / std::sqrt(sol.eta);
  double misalign = 0.0;
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      if (l == k) continue;
      const std::complex<double> g = ch.h(k, l).dot(sol.p[k]);  // h_kl^H p_k
      misalign += std::norm(g * inv_sqrt_eta - 1.0);
    }
  }
  const double km1 = static_cast<double>(K - 1);
  return V * V * D * misalign / (km1 * km1) +
         K * D * V * V * sigma2 / (km1 * km1 * sol.eta);
}

AggregationReport make_report(const ChannelSet& ch, const BeamformingSolution& sol,
                              double sigma2, double V, int D) {
  check_solution(ch, sol);
  const int K = ch.K();
  AggregationReport rep;
  rep.mse_analytic = analytic_mse(ch, sol, sigma2, V, D);
  rep.per_device_misalignment.resize(K, K - 1);
  const double inv_sqrt_eta = 1.0 / std::sqrt(sol.eta);
  for (int k = 0; k < K; ++k) {
    int col = 0;
    for (int l = 0; l < K; ++l) {
      if (l == k) continue;
      const std::complex<double> g = ch.h(k, l).dot(sol.p[k]);
      rep.per_device_misalignment(k, col++) = std::norm(g * inv_sqrt_eta - 1.0);
    }
  }
  return rep;
}

std::pair<double, double> empirical_mse(const ChannelSet& ch,
                                        const BeamformingSolution& sol,
                                        const NormalizationStats& stats,
                                        double sigma2, int D, int trials,
                                        Rng& rng) {
  check_solution(ch, sol);
  if (trials < 2) throw std::invalid_argument("need at least 2 trials");
  if (D < 1) throw std::invalid_argument("D must be >= 1");
  const int K = ch.K();
  const double km1 = static_cast<double>(K - 1);

  double sum = 0.0;
  double sumsq = 0.0;
  std::vector<Eigen::VectorXd> s(K);
  for (int t = 0; t < trials; ++t) {
    for (int k = 0; k < K; ++k) {
      s[k].resize(D);
      for (int d = 0; d < D; ++d) s[k][d] = rng.normal();
    }
    const auto z = denormalize(s, stats);
    const auto r = simulate_round_complex(ch, sol, s, stats, sigma2, rng);
    double err = 0.0;
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXd truth = Eigen::VectorXd::Zero(D);
      for (int l = 0; l < K; ++l) {
        if (l == k) continue;
        truth += z[l];
      }
      truth /= km1;
      err += (r[k] - truth.cast<std::complex<double>>()).squaredNorm();
    }
    sum += err;
    sumsq += err * err;
  }
  const double mean = sum / trials;
  const double var = std::max(sumsq / trials - mean * mean, 0.0);
  const double stderr_ = std::sqrt(var / trials);
  return {mean, stderr_};
}

std::vector<Eigen::VectorXcd> distortion(const ChannelSet& ch,
                                         const BeamformingSolution& sol,
                                         const std::vector<Eigen::VectorXd>& s,
                                         const std::vector<Eigen::VectorXcd>& w,
                                         const NormalizationStats& stats) {
  check_states(s);
  check_solution(ch, sol);
  const int K = ch.K();
  if (static_cast<int>(s.size()) != K || static_cast<int>(w.size()) != K)
    throw std::invalid_argument("symbol/noise count != K");
  const auto D = s.front().size();
  for (const auto& wk : w)
    if (wk.size() != D) throw std::invalid_argument("noise dimension mismatch");
  const double inv_sqrt_eta = 1.0 / std::sqrt(sol.eta);
  const double km1 = static_cast<double>(K - 1);

  std::vector<Eigen::VectorXcd> delta(K);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(D);
    for (int l = 0; l < K; ++l) {
      if (l == k) continue;
      const std::complex<double> m =
          ch.h(k, l).dot(sol.p[k]) * inv_sqrt_eta - 1.0;  // h_kl^H p_k
      acc += m * s[l].cast<std::complex<double>>();
    }
    delta[k] = (stats.V / km1) * acc + w[k];
  }
  return delta;
}

std::vector<Eigen::VectorXcd> draw_scaled_noise(const ChannelSet& ch,
                                                const BeamformingSolution& sol,
                                                const NormalizationStats& stats,
                                                double sigma2, int D, Rng& rng) {
  check_solution(ch, sol);
  if (D < 1) throw std::invalid_argument("D must be >= 1");
  const int K = ch.K();
  const double sd = stats.V * std::sqrt(sigma2) /
                    ((K - 1) * std::sqrt(sol.eta));  // per complex entry
  std::vector<Eigen::VectorXcd> w(K);
  for (int k = 0; k < K; ++k) {
    w[k].resize(D);
    for (int d = 0; d < D; ++d) w[k][d] = sd * rng.complex_normal();
  }
  return w;
}

std::vector<Eigen::VectorXd> distortion_bias(
    const ChannelSet& ch, const BeamformingSolution& sol,
    const std::vector<Eigen::VectorXd>& mean_s, double beta,
    const NormalizationStats& stats) {
  check_states(mean_s);
  check_solution(ch, sol);
  const int K = ch.K();
  if (static_cast<int>(mean_s.size()) != K)
    throw std::invalid_argument("mean symbol count != K");
  const auto D = mean_s.front().size();
  const double inv_sqrt_eta = 1.0 / std::sqrt(sol.eta);
  const double km1 = static_cast<double>(K - 1);

  std::vector<Eigen::VectorXd> bias(K);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(D);
    for (int l = 0; l < K; ++l) {
      if (l == k) continue;
      const std::complex<double> m = ch.h(k, l).dot(sol.p[k]) * inv_sqrt_eta - 1.0;
      acc += m * mean_s[l].cast<std::complex<double>>();
    }
    bias[k] = (beta * stats.V / km1) * acc.real();
  }
  return bias;
}

std::vector<Eigen::VectorXd> aggregate_via_distortion(
    const ChannelSet& ch, const BeamformingSolution& sol,
    const std::vector<Eigen::VectorXd>& z, const NormalizationStats& stats,
    const std::vector<Eigen::VectorXcd>& w) {
  check_states(z);
  const int K = ch.K();
  if (static_cast<int>(z.size()) != K)
    throw std::invalid_argument("state count != K");
  const auto s = normalize(z, stats);
  const auto delta = distortion(ch, sol, s, w, stats);
  const double km1 = static_cast<double>(K - 1);

  std::vector<Eigen::VectorXd> r(K);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(z.front().size());
    for (int l = 0; l < K; ++l) {
      if (l == k) continue;
      avg += z[l];
    }
    avg /= km1;
    r[k] = avg + delta[k].real();
  }
  return r;
}

}  // namespace aircomp
