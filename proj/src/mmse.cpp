#include "aircomp/mmse.hpp"

#include <algorithm>
#include <cmath>

#include "aircomp/zf.hpp"

namespace aircomp {

void aligned_sums(const ChannelSet& ch, const std::vector<Eigen::VectorXcd>& p,
                  double& S, double& Q) {
  const int K = ch.K();
  if (static_cast<int>(p.size()) != K)
    throw std::invalid_argument("beamformer count != K");
  S = 0.0;
  Q = 0.0;
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      if (l == k) continue;
      const std::complex<double> g = ch.h(k, l).dot(p[k]);
      S += 2.0 * g.real();
      Q += std::norm(g);
    }
  }
}

double conditional_eta(const ChannelSet& ch,
                       const std::vector<Eigen::VectorXcd>& p, double sigma2) {
  double S, Q;
  aligned_sums(ch, p, S, Q);
  if (S == 0.0)
    throw std::invalid_argument("conditional_eta: aligned sum is zero");
  const double ratio = (2.0 * ch.K() * sigma2 + 2.0 * Q) / S;
  return ratio * ratio;
}

double aligned_fraction(const ChannelSet& ch,
                        const std::vector<Eigen::VectorXcd>& p, double sigma2) {
  double S, Q;
  aligned_sums(ch, p, S, Q);
  return S / (2.0 * std::sqrt(ch.K() * sigma2 + Q));
}

double mse_at_optimal_eta(const ChannelSet& ch,
                          const std::vector<Eigen::VectorXcd>& p, double sigma2,
                          double V, int D) {
  double S, Q;
  aligned_sums(ch, p, S, Q);
  const int K = ch.K();
  const double km1 = static_cast<double>(K - 1);
  const double alpha2 = S * S / (4.0 * (K * sigma2 + Q));
  return V * V * D * (K * km1 - alpha2) / (km1 * km1);
}

namespace {

// Power of the strongest device, and a uniform rescale that pins it to P0.
double peak_power(const std::vector<Eigen::VectorXcd>& p) {
  double peak = 0.0;
  for (const auto& pk : p) peak = std::max(peak, pk.squaredNorm());
  return peak;
}

void rescale_to_budget(std::vector<Eigen::VectorXcd>& p, double P0) {
  const double peak = peak_power(p);
  if (peak <= 0.0) return;
  const double c = std::sqrt(P0 / peak);
  for (auto& pk : p) pk *= c;
}

}  // namespace

BeamformingSolution mmse_design(const ChannelSet& ch, double P0, double sigma2,
                                const BisectionConfig& cfg) {
  if (!(P0 > 0.0)) throw std::invalid_argument("P0 must be > 0");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be > 0");

  PowerMinOptions popt;
  popt.inner_tol = cfg.inner_tol;
  popt.max_newton = cfg.max_inner;

  std::vector<Eigen::VectorXcd> warm;
  // Returns true when the subproblem at `a` is solvable within the budget.
  // Conservative on solver failures: only a certified p_max <= P0 counts.
  auto probe = [&](double a, PowerMinResult& out) -> bool {
    popt.warm = warm.empty() ? nullptr : &warm;
    try {
      out = solve_power_min(ch, a, sigma2, popt);
    } catch (const SolverFailure& f) {
      out = f.best;
      if (out.p.empty()) return false;
    }
    if (!out.feasible) return false;
    warm = out.p;
    return out.p_max <= P0;
  };

  SolverDiagnostics diag;
  double alpha_lo = 0.0;
  double alpha_hi = 1.0;
  PowerMinResult best;          // solution at the highest confirmed-feasible alpha
  bool have_best = false;
  long long newton_total = 0;

  // Bracket: double alpha until the required power exceeds the budget.
  bool bracketed = false;
  for (int d = 0; d < 60; ++d) {
    PowerMinResult res;
    const bool ok = probe(alpha_hi, res);
    newton_total += res.newton_steps;
    ++diag.outer_iterations;
    if (!ok) {
      bracketed = true;
      break;
    }
    alpha_lo = alpha_hi;
    best = std::move(res);
    have_best = true;
    alpha_hi *= 2.0;
  }
  diag.bracket_failure = !bracketed;

  if (bracketed) {
    while (alpha_hi - alpha_lo > cfg.eps_alpha &&
           diag.outer_iterations < cfg.max_outer) {
      const double mid = 0.5 * (alpha_lo + alpha_hi);
      PowerMinResult res;
      const bool ok = probe(mid, res);
      newton_total += res.newton_steps;
      ++diag.outer_iterations;
      if (ok) {
        alpha_lo = mid;
        best = std::move(res);
        have_best = true;
      } else {
        alpha_hi = mid;
      }
    }
  }

  BeamformingSolution sol;
  sol.scheme = Scheme::MMSE;

  std::vector<Eigen::VectorXcd> p_iter;
  if (have_best) {
    p_iter = best.p;
    rescale_to_budget(p_iter, P0);  // using slack can only raise the fraction
  }

  // Closed-form safety net: the exact-alignment design evaluated with the
  // conditionally optimal scaling is always feasible, so the returned design
  // is never worse than it.
  std::vector<Eigen::VectorXcd> p_zf;
  try {
    p_zf = zf_design(ch, P0).p;
  } catch (const SingularChannelError&) {
    // degenerate channel; iterative result stands on its own
  }

  const double mse_iter =
      have_best ? mse_at_optimal_eta(ch, p_iter, sigma2, 1.0, 1)
                : std::numeric_limits<double>::infinity();
  const double mse_zf = !p_zf.empty()
                            ? mse_at_optimal_eta(ch, p_zf, sigma2, 1.0, 1)
                            : std::numeric_limits<double>::infinity();
  if (!have_best && p_zf.empty())
    throw SingularChannelError("mmse_design: no usable design candidate");

  if (mse_zf < mse_iter) {
    sol.p = std::move(p_zf);
    diag.fallback_used = true;
  } else {
    sol.p = std::move(p_iter);
  }

  sol.eta = conditional_eta(ch, sol.p, sigma2);
  sol.alpha = aligned_fraction(ch, sol.p, sigma2);
  diag.inner_iterations = newton_total;
  diag.residual = have_best ? best.grad_norm : 0.0;
  sol.diagnostics = diag;
  return sol;
}

Eigen::VectorXcd centroid_direction(const Eigen::MatrixXcd& Hk, CentroidMode mode,
                                    double mu) {
  if (mu < 0.0) throw std::invalid_argument("mu must be >= 0");
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(Hk.cols());
  Eigen::VectorXcd dir;
  if (mode == CentroidMode::PARTIAL_POWER) {
    if (Hk.rows() != Hk.cols())
      throw std::invalid_argument(
          "partial-power centroid needs a square channel matrix");
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Hk, Eigen::ComputeThinU |
                                                   Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (!(sv.minCoeff() > 0.0) ||
        (sv.maxCoeff() / sv.minCoeff()) * (sv.maxCoeff() / sv.minCoeff()) >
            kCondLimit)
      throw SingularChannelError("centroid: channel matrix ill conditioned");
    dir = Hk.adjoint().partialPivLu().solve(ones);
  } else {
    Eigen::MatrixXcd A = Hk * Hk.adjoint();
    A.diagonal().array() += mu;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
    const auto& ev = es.eigenvalues();
    if (!(ev.minCoeff() > 0.0) || ev.maxCoeff() / ev.minCoeff() > kCondLimit)
      throw SingularChannelError("centroid: regularized Gram ill conditioned");
    dir = A.ldlt().solve(Hk * ones);
  }
  const double nrm = dir.norm();
  if (!(nrm > 0.0)) throw SingularChannelError("centroid: zero direction");
  return dir / nrm;
}

KktReport kkt_residuals(const ChannelSet& ch, const BeamformingSolution& sol,
                        double sigma2) {
  const int K = ch.K();
  if (static_cast<int>(sol.p.size()) != K)
    throw std::invalid_argument("beamformer count != K");
  double S, Q;
  aligned_sums(ch, sol.p, S, Q);
  const double alpha =
      sol.alpha ? *sol.alpha : S / (2.0 * std::sqrt(K * sigma2 + Q));
  const double c0 = alpha / std::sqrt(K * sigma2 + Q);
  const double p_budget = peak_power(sol.p);

  KktReport rep;
  rep.stationarity.resize(K);
  rep.power_dual.resize(K);
  rep.ridge.resize(K);
  rep.full_power.resize(K);

  // Stationarity per device: lambda (c0 Hk Hk^H p_k - Hk 1) + nu_k p_k = 0.
  // Project onto p_k to recover nu_k / lambda, then normalize by the
  // multiplier identity sum_k nu_k = 1.
  std::vector<Eigen::VectorXcd> q(K);
  std::vector<double> ratio(K);
  double ratio_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    const Eigen::MatrixXcd& Hk = ch.device_matrix(k);
    const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(Hk.cols());
    q[k] = Hk * ones - c0 * (Hk * (Hk.adjoint() * sol.p[k]));
    const double pk2 = sol.p[k].squaredNorm();
    ratio[k] = pk2 > 0.0 ? std::max(0.0, q[k].dot(sol.p[k]).real() / pk2) : 0.0;
    ratio_sum += ratio[k];
  }
  const double lambda = ratio_sum > 0.0 ? 1.0 / ratio_sum : 0.0;
  rep.soc_dual = lambda;

  double comp = 0.0;
  for (int k = 0; k < K; ++k) {
    const double nu = lambda * ratio[k];
    rep.power_dual[k] = nu;
    rep.ridge[k] = c0 > 0.0 ? ratio[k] / c0 : 0.0;
    const double pk2 = sol.p[k].squaredNorm();
    rep.full_power[k] = pk2 >= p_budget * (1.0 - 1e-4);
    const Eigen::MatrixXcd& Hk = ch.device_matrix(k);
    const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(Hk.cols());
    const Eigen::VectorXcd Hp = Hk * (Hk.adjoint() * sol.p[k]);
    const Eigen::VectorXcd resid = lambda * q[k] - nu * sol.p[k];
    // Scale by the magnitudes of the terms entering the stationarity
    // equation so the residual is meaningful for both binding and
    // non-binding devices.
    const double scale =
        lambda * ((Hk * ones).norm() + c0 * Hp.norm()) + nu * std::sqrt(pk2);
    rep.stationarity[k] = resid.norm() / std::max(scale, 1e-12);
    comp = std::max(comp, std::abs(nu * (pk2 - p_budget)));
  }
  rep.complementary_slackness = comp;
  return rep;
}

namespace {

// Shared by the reference optimizer: signed aligned fraction of aggregated
// sums; larger is better, and the conditional error is monotone in it.
double signed_fraction(double S, double Q, double Ksigma2) {
  return S / (2.0 * std::sqrt(Ksigma2 + Q));
}

}  // namespace

BeamformingSolution brute_force_mmse(const ChannelSet& ch, double P0,
                                     double sigma2, double resolution) {
  const int K = ch.K();
  const int Nt = ch.Nt();
  if (K > 3 || Nt > 2)
    throw std::invalid_argument("reference optimizer is limited to K <= 3, Nt <= 2");
  if (!(resolution > 0.0 && resolution < 0.5))
    throw std::invalid_argument("resolution must be in (0, 0.5)");
  const double Ksigma2 = K * sigma2;

  BeamformingSolution sol;
  sol.scheme = Scheme::MMSE;

  if (K == 2) {
    // Each device has a single receiver, so only the component of p along its
    // channel matters and its phase is free; the search space collapses to
    // two real gains in [0, ||h|| sqrt(P0)].
    const Eigen::VectorXcd h0 = ch.h(0, 1);
    const Eigen::VectorXcd h1 = ch.h(1, 0);
    const double r0 = h0.norm() * std::sqrt(P0);
    const double r1 = h1.norm() * std::sqrt(P0);
    const int npts = static_cast<int>(std::ceil(1.0 / resolution));
    double best_obj = -std::numeric_limits<double>::infinity();
    double best_t0 = 0.0, best_t1 = 0.0;
    for (int i = 0; i <= npts; ++i) {
      const double t0 = r0 * i / npts;
      for (int j = 0; j <= npts; ++j) {
        const double t1 = r1 * j / npts;
        const double S = 2.0 * (t0 + t1);
        const double Qg = t0 * t0 + t1 * t1;
        const double obj = signed_fraction(S, Qg, Ksigma2);
        if (obj > best_obj) {
          best_obj = obj;
          best_t0 = t0;
          best_t1 = t1;
        }
      }
    }
    sol.p = {best_t0 * h0 / h0.squaredNorm(), best_t1 * h1 / h1.squaredNorm()};
  } else {
    // K == 3, Nt == 2.  Each device is parameterized by its two receiver
    // gains after fixing the free beamformer phase: rotating a beamformer
    // rotates both its gains together and changes neither the realization
    // power nor the quadratic sum, so an optimum can always be rotated until
    // the gain sum is real non-negative.  The coordinates are therefore
    // u = c1 + c2 (real, >= 0) and the complex difference v = c1 - c2,
    // three reals per device.  Minimum-norm realization power is
    // c^H (H^H H)^{-1} c; candidates beyond the budget are projected back to
    // the power sphere so boundary optima stay reachable.
    struct DeviceBox {
      Eigen::MatrixXcd Ginv;   // (H^H H)^{-1}
      Eigen::MatrixXcd Hk;
      double r1, r2;           // gain magnitude bounds
    };
    std::vector<DeviceBox> dev(K);
    for (int k = 0; k < K; ++k) {
      const Eigen::MatrixXcd& Hk = ch.device_matrix(k);
      const Eigen::MatrixXcd G = Hk.adjoint() * Hk;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
      const auto& ev = es.eigenvalues();
      if (!(ev.minCoeff() > 0.0) || ev.maxCoeff() / ev.minCoeff() > kCondLimit)
        throw SingularChannelError("reference optimizer: degenerate channel");
      dev[k].Ginv = G.inverse();
      dev[k].Hk = Hk;
      dev[k].r1 = Hk.col(0).norm() * std::sqrt(P0);
      dev[k].r2 = Hk.col(1).norm() * std::sqrt(P0);
    }

    constexpr int kDims = 9;  // 3 devices x (u, Re v, Im v)
    struct Cell {
      double x[kDims];
      double obj;
    };

    // Evaluates a parameter point: projects per-device gains into the power
    // budget, returns the signed fraction and the projected gains.
    auto eval_point = [&](const double* x,
                          std::array<Eigen::Vector2cd, 3>& c_out) -> double {
      double S = 0.0, Qg = 0.0;
      for (int k = 0; k < K; ++k) {
        const double u = x[3 * k];
        const std::complex<double> v(x[3 * k + 1], x[3 * k + 2]);
        Eigen::Vector2cd c(0.5 * (u + v), 0.5 * (u - v));
        double pow_k = (c.adjoint() * (dev[k].Ginv * c))(0).real();
        if (pow_k > P0) {
          c *= std::sqrt(P0 / pow_k);
        }
        c_out[k] = c;
        S += 2.0 * (c(0).real() + c(1).real());
        Qg += c.squaredNorm();
      }
      return signed_fraction(S, Qg, Ksigma2);
    };

    // Level-0 grid: 5 points per dimension.
    std::vector<double> lo(kDims), hi(kDims);
    for (int k = 0; k < K; ++k) {
      const double span = dev[k].r1 + dev[k].r2;
      lo[3 * k] = 0.0;
      hi[3 * k] = span;
      lo[3 * k + 1] = -span;
      hi[3 * k + 1] = span;
      lo[3 * k + 2] = -span;
      hi[3 * k + 2] = span;
    }
    const int base = 5;
    std::vector<Cell> beam;
    {
      std::array<Eigen::Vector2cd, 3> scratch;
      std::vector<int> idx(kDims, 0);
      Cell cell{};
      for (;;) {
        for (int d = 0; d < kDims; ++d)
          cell.x[d] = lo[d] + (hi[d] - lo[d]) * idx[d] / (base - 1);
        cell.obj = eval_point(cell.x, scratch);
        beam.push_back(cell);
        int d = 0;
        while (d < kDims && ++idx[d] == base) idx[d++] = 0;
        if (d == kDims) break;
      }
    }

    const std::size_t beam_width = 2000;
    auto shrink = [&](std::vector<Cell>& cells) {
      if (cells.size() > beam_width) {
        std::nth_element(cells.begin(), cells.begin() + beam_width, cells.end(),
                         [](const Cell& a, const Cell& b) { return a.obj > b.obj; });
        cells.resize(beam_width);
      }
    };
    shrink(beam);

    // Half the spacing each level until it reaches the target resolution.
    double spacing = 1.0 / (base - 1);  // relative to box width
    std::array<Eigen::Vector2cd, 3> scratch;
    while (spacing > resolution) {
      spacing *= 0.5;
      std::vector<Cell> next;
      next.reserve(beam.size() * (1u << kDims));
      for (const Cell& cell : beam) {
        for (unsigned mask = 0; mask < (1u << kDims); ++mask) {
          Cell child{};
          for (int d = 0; d < kDims; ++d) {
            const double w = (hi[d] - lo[d]) * spacing * 0.5;
            child.x[d] = cell.x[d] + ((mask >> d) & 1u ? w : -w);
            child.x[d] = std::clamp(child.x[d], lo[d], hi[d]);
          }
          child.obj = eval_point(child.x, scratch);
          next.push_back(child);
        }
      }
      next.insert(next.end(), beam.begin(), beam.end());  // keep incumbents
      shrink(next);
      beam.swap(next);
    }

    const Cell* best = &beam.front();
    for (const Cell& cell : beam)
      if (cell.obj > best->obj) best = &cell;
    std::array<Eigen::Vector2cd, 3> c_best;
    eval_point(best->x, c_best);
    sol.p.resize(K);
    for (int k = 0; k < K; ++k)
      sol.p[k] = dev[k].Hk * (dev[k].Ginv * c_best[k]);
  }

  sol.eta = conditional_eta(ch, sol.p, sigma2);
  sol.alpha = aligned_fraction(ch, sol.p, sigma2);
  return sol;
}

}  // namespace aircomp
