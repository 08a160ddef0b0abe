// Analog aggregation signal path.
//
// Devices hold real state vectors z_k.  Each round they are normalized to
// zero-mean unit-variance symbols, transmitted simultaneously with multicast
// beamforming, and every receiver scales its superposed observation back into
// state units.  The functions here implement that chain together with its
// exact error statistics, which the beamforming designs optimize against.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "aircomp/channel.hpp"
#include "aircomp/rng.hpp"

namespace aircomp {

enum class Scheme { ZF, MMSE, SINGLE_AGG };

const char* scheme_name(Scheme s);

// Per-round normalization of the transmitted states: M is the scalar mean and
// V the scalar standard deviation over all K*D state entries.  V is floored
// so constant states stay finite.
struct NormalizationStats {
  double M = 0.0;
  double V = 1.0;
  static constexpr double kVFloor = 1e-12;
};

// Beamformers for one round.  `eta` is the common receive scaling; `alpha`
// is the aligned-sum fraction achieved by the design when the scheme tracks
// one (the MMSE design), otherwise unset.
struct SolverDiagnostics {
  int outer_iterations = 0;      // bisection steps
  long long inner_iterations = 0;  // Newton steps across all subproblem solves
  double residual = 0.0;         // final stationarity residual estimate
  bool bracket_failure = false;  // power never exceeded inside the bracket search
  bool fallback_used = false;    // closed-form candidate beat the iterative one
};

struct BeamformingSolution {
  Scheme scheme = Scheme::ZF;
  std::vector<Eigen::VectorXcd> p;  // one beamformer per device
  double eta = 1.0;
  std::optional<double> alpha;
  SolverDiagnostics diagnostics;
};

// Sum error of one aggregation round plus its per-link breakdown.
struct AggregationReport {
  double mse_analytic = 0.0;
  std::optional<double> mse_empirical;
  std::optional<double> mse_empirical_stderr;
  // Row k, column j: squared misalignment of transmitter k at its j-th peer
  // (peers in ascending index order, k skipped).
  Eigen::MatrixXd per_device_misalignment;
};

NormalizationStats compute_stats(const std::vector<Eigen::VectorXd>& z);

std::vector<Eigen::VectorXd> normalize(const std::vector<Eigen::VectorXd>& z,
                                       const NormalizationStats& stats);
std::vector<Eigen::VectorXd> denormalize(const std::vector<Eigen::VectorXd>& s,
                                         const NormalizationStats& stats);

// Exponentially weighted fallback for when the exact per-round stats are not
// available at the receivers.  update() folds one round of states in.
class StatsTracker {
 public:
  explicit StatsTracker(double forget = 0.1) : forget_(forget) {}
  void update(const std::vector<Eigen::VectorXd>& z);
  NormalizationStats stats() const;

 private:
  double forget_;
  bool primed_ = false;
  double mean_ = 0.0;
  double var_ = 1.0;
};

// One simultaneous multicast round.  Every device k receives the superposition
// of its peers' beamformed symbols plus CN(0, sigma2) noise, scales by
// V / ((K-1) sqrt(eta)), and adds back the mean M.  The complex variant keeps
// the full observation; simulate_round takes its real part, which is what the
// optimizer consumes.
std::vector<Eigen::VectorXcd> simulate_round_complex(
    const ChannelSet& ch, const BeamformingSolution& sol,
    const std::vector<Eigen::VectorXd>& s, const NormalizationStats& stats,
    double sigma2, Rng& rng);

std::vector<Eigen::VectorXd> simulate_round(
    const ChannelSet& ch, const BeamformingSolution& sol,
    const std::vector<Eigen::VectorXd>& s, const NormalizationStats& stats,
    double sigma2, Rng& rng);

// Exact expected sum error over all receivers for one round:
//   V^2 D / (K-1)^2 * sum_k sum_{l != k} |h_kl^H p_k / sqrt(eta) - 1|^2
//     + K D V^2 sigma2 / ((K-1)^2 eta).
double analytic_mse(const ChannelSet& ch, const BeamformingSolution& sol,
                    double sigma2, double V, int D);

AggregationReport make_report(const ChannelSet& ch, const BeamformingSolution& sol,
                              double sigma2, double V, int D);

// Monte Carlo estimate of the same quantity: draws unit-variance zero-mean
// symbols of dimension D, simulates rounds, and averages the squared complex
// deviation from the true peer averages.  Returns (mean, stderr).
std::pair<double, double> empirical_mse(const ChannelSet& ch,
                                        const BeamformingSolution& sol,
                                        const NormalizationStats& stats,
                                        double sigma2, int D, int trials,
                                        Rng& rng);

// Aggregation distortion at receiver k for given symbols and noise draws:
//   delta_k = V/(K-1) * sum_{l != k} (h_kl^H p_k / sqrt(eta) - 1) s_l + w_k,
// in state units; w_k is the receiver's noise after output scaling.
// Complex-valued; callers take the real part where the pipeline does.
std::vector<Eigen::VectorXcd> distortion(const ChannelSet& ch,
                                         const BeamformingSolution& sol,
                                         const std::vector<Eigen::VectorXd>& s,
                                         const std::vector<Eigen::VectorXcd>& w,
                                         const NormalizationStats& stats);

// Draws receiver noise with the post-scaling variance V^2 sigma2/((K-1)^2 eta)
// per complex entry, one D-dimensional vector per device.
std::vector<Eigen::VectorXcd> draw_scaled_noise(const ChannelSet& ch,
                                                const BeamformingSolution& sol,
                                                const NormalizationStats& stats,
                                                double sigma2, int D, Rng& rng);

// Expected real distortion per device under mean symbols mean_s, scaled by
// the state mixing weight beta:
//   Re[ beta V/(K-1) * sum_{l != k} (h_kl^H p_k / sqrt(eta) - 1) mean_s_l ].
std::vector<Eigen::VectorXd> distortion_bias(
    const ChannelSet& ch, const BeamformingSolution& sol,
    const std::vector<Eigen::VectorXd>& mean_s, double beta,
    const NormalizationStats& stats);

// Received vectors assembled as exact peer average plus distortion; the
// counterpart of simulate_round used by the bias diagnostics, where the
// decomposition must hold exactly rather than only in distribution.
std::vector<Eigen::VectorXd> aggregate_via_distortion(
    const ChannelSet& ch, const BeamformingSolution& sol,
    const std::vector<Eigen::VectorXd>& z, const NormalizationStats& stats,
    const std::vector<Eigen::VectorXcd>& w);

}  // namespace aircomp
