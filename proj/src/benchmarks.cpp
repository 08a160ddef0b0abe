#include "aircomp/benchmarks.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "aircomp/zf.hpp"

namespace aircomp {

SlotDesign single_agg_design(const ChannelSet& ch, double P0, int receiver) {
  const int K = ch.K();
  if (receiver < 0 || receiver >= K) {
    throw std::invalid_argument("slot receiver out of range");
  }
  double eta = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    if (k == receiver) continue;
    double g2 = ch.h(k, receiver).squaredNorm();
    if (g2 < 1e-300) throw SingularChannelError("zero channel vector in slot");
    eta = std::min(eta, P0 * g2);
  }
  SlotDesign d;
  d.receiver = receiver;
  d.eta = eta;
  d.p.assign(K, Eigen::VectorXcd::Zero(ch.Nt()));
  const double amp = std::sqrt(eta);
  for (int k = 0; k < K; ++k) {
    if (k == receiver) continue;
    const Eigen::VectorXcd& h = ch.h(k, receiver);
    // h^H p = sqrt(eta) exactly; power eta/||h||^2 <= P0 by choice of eta.
    d.p[k] = (amp / h.squaredNorm()) * h;
  }
  return d;
}

std::vector<Eigen::VectorXd> single_agg_round(const ChannelSet& ch, double P0,
                                              const std::vector<Eigen::VectorXd>& s,
                                              const NormalizationStats& stats,
                                              double sigma2, Rng& rng) {
  const int K = ch.K();
  if (static_cast<int>(s.size()) != K) {
    throw std::invalid_argument("one symbol vector per device required");
  }
  const int D = static_cast<int>(s[0].size());
  const double noise_sd = std::sqrt(sigma2);
  std::vector<Eigen::VectorXd> r(K);
  for (int l = 0; l < K; ++l) {
    SlotDesign slot = single_agg_design(ch, P0, l);
    const double scale = stats.V / ((K - 1) * std::sqrt(slot.eta));
    Eigen::VectorXd out(D);
    for (int d = 0; d < D; ++d) {
      std::complex<double> y = noise_sd * rng.complex_normal();
      for (int k = 0; k < K; ++k) {
        if (k == l) continue;
        y += ch.h(k, l).dot(slot.p[k]) * s[k](d);
      }
      out(d) = scale * y.real() + stats.M;
    }
    r[l] = std::move(out);
  }
  return r;
}

double single_agg_round_mse(const ChannelSet& ch, double P0, double sigma2,
                            double V, int D) {
  const int K = ch.K();
  const double Km1 = K - 1;
  double total = 0.0;
  for (int l = 0; l < K; ++l) {
    SlotDesign slot = single_agg_design(ch, P0, l);
    const double inv_sqrt_eta = 1.0 / std::sqrt(slot.eta);
    double misalign = 0.0;
    for (int k = 0; k < K; ++k) {
      if (k == l) continue;
      std::complex<double> g = ch.h(k, l).dot(slot.p[k]) * inv_sqrt_eta;
      misalign += std::norm(g - 1.0);
    }
    total += V * V * D * misalign / (Km1 * Km1) +
             D * V * V * sigma2 / (Km1 * Km1 * slot.eta);
  }
  return total;
}

std::vector<Eigen::VectorXd> quantize_uniform(
    const std::vector<Eigen::VectorXd>& z, int bits) {
  if (bits < 1 || bits > 52) throw std::invalid_argument("bits in [1, 52]");
  if (z.empty()) return {};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& v : z) {
    if (v.size() == 0) continue;
    lo = std::min(lo, v.minCoeff());
    hi = std::max(hi, v.maxCoeff());
  }
  std::vector<Eigen::VectorXd> out = z;
  const double range = hi - lo;
  if (!(range > 0.0)) return out;
  const double levels = std::ldexp(1.0, bits) - 1.0;
  const double step = range / levels;
  for (auto& v : out) {
    for (int i = 0; i < v.size(); ++i) {
      double q = lo + std::round((v(i) - lo) / step) * step;
      v(i) = std::min(hi, std::max(lo, q));
    }
  }
  return out;
}

std::vector<Eigen::VectorXd> digital_aggregate(
    const std::vector<Eigen::VectorXd>& z, int bits) {
  const int K = static_cast<int>(z.size());
  if (K < 2) throw std::invalid_argument("digital aggregation needs K >= 2");
  std::vector<Eigen::VectorXd> q = quantize_uniform(z, bits);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(z[0].size());
  for (const auto& v : q) sum += v;
  std::vector<Eigen::VectorXd> r(K);
  for (int k = 0; k < K; ++k) r[k] = (sum - q[k]) / (K - 1);
  return r;
}

const char* transport_name(TransportScheme s) {
  switch (s) {
    case TransportScheme::DISTRIBUTED_AIRCOMP: return "distributed_aircomp";
    case TransportScheme::SINGLE_AGG: return "single_agg";
    case TransportScheme::DIGITAL: return "digital";
  }
  return "unknown";
}

LatencyModel latency_model(const SystemConfig& cfg, TransportScheme scheme,
                           int Q) {
  LatencyModel m;
  m.scheme = scheme;
  m.D = cfg.D;
  m.B = cfg.B;
  m.K = cfg.K;
  m.Q = Q;
  m.P0 = cfg.P0;
  m.sigma2 = cfg.sigma2;
  return m;
}

double round_latency(const LatencyModel& model, const ChannelSet* ch) {
  const double base = static_cast<double>(model.D) / model.B;
  switch (model.scheme) {
    case TransportScheme::DISTRIBUTED_AIRCOMP:
      return base;
    case TransportScheme::SINGLE_AGG:
      return model.K * base;
    case TransportScheme::DIGITAL:
      break;
  }
  if (ch == nullptr) {
    throw std::invalid_argument("digital latency needs a channel realization");
  }
  // Each transmitter zero-forces across its peers and must finish its payload
  // at every one of them; the slowest peer sets the slot length.  Slots run
  // back to back (TDMA).
  double total = 0.0;
  for (int k = 0; k < ch->K(); ++k) {
    Eigen::MatrixXcd W = zf_precoder(ch->device_matrix(k));
    double worst = 0.0;
    for (int j = 0; j < W.cols(); ++j) {
      // Unit-norm precoder column; the zero-forced gain is 1/||col||.
      double col2 = W.col(j).squaredNorm();
      double snr = model.P0 / (model.sigma2 * col2);
      double rate = model.B * std::log2(1.0 + snr);
      worst = std::max(worst, model.D * model.Q / rate);
    }
    total += worst;
  }
  return total;
}

}  // namespace aircomp
