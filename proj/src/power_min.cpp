#include "aircomp/power_min.hpp"

#include <cmath>

#include "aircomp/zf.hpp"

namespace aircomp {

namespace {

// Real-composite view of the problem.  Device k owns the slice
// [2 Nt k, 2 Nt (k+1)) of the stacked variable; the last entry is p_max.
struct Composite {
  int K;
  int Nt;
  int n;  // 2 K Nt, beamformer coordinates
  double two_alpha;
  double Ksigma2;
  std::vector<Eigen::MatrixXd> M;  // per device: sum of uu^T + ww^T
  std::vector<Eigen::VectorXd> s;  // per device: 2 sum u

  Composite(const ChannelSet& ch, double alpha, double sigma2)
      : K(ch.K()), Nt(ch.Nt()), n(2 * ch.K() * ch.Nt()), two_alpha(2.0 * alpha),
        Ksigma2(ch.K() * sigma2), M(ch.K()), s(ch.K()) {
    for (int k = 0; k < K; ++k) {
      Eigen::MatrixXd Mk = Eigen::MatrixXd::Zero(2 * Nt, 2 * Nt);
      Eigen::VectorXd sk = Eigen::VectorXd::Zero(2 * Nt);
      for (int l = 0; l < K; ++l) {
        if (l == k) continue;
        const Eigen::VectorXcd& h = ch.h(k, l);
        Eigen::VectorXd u(2 * Nt), w(2 * Nt);
        u << h.real(), h.imag();
        w << -h.imag(), h.real();
        Mk += u * u.transpose() + w * w.transpose();
        sk += 2.0 * u;
      }
      M[k] = std::move(Mk);
      s[k] = std::move(sk);
    }
  }

  Eigen::VectorXd pack(const std::vector<Eigen::VectorXcd>& p, double pmax) const {
    Eigen::VectorXd v(n + 1);
    for (int k = 0; k < K; ++k) {
      v.segment(2 * Nt * k, Nt) = p[k].real();
      v.segment(2 * Nt * k + Nt, Nt) = p[k].imag();
    }
    v[n] = pmax;
    return v;
  }

  std::vector<Eigen::VectorXcd> unpack(const Eigen::VectorXd& v) const {
    std::vector<Eigen::VectorXcd> p(K);
    for (int k = 0; k < K; ++k) {
      p[k].resize(Nt);
      p[k].real() = v.segment(2 * Nt * k, Nt);
      p[k].imag() = v.segment(2 * Nt * k + Nt, Nt);
    }
    return p;
  }

  // Aligned sum S and gain energy Q of a packed point.
  void gains(const Eigen::VectorXd& v, double& S, double& Q,
             std::vector<Eigen::VectorXd>* Mv = nullptr) const {
    S = 0.0;
    Q = 0.0;
    if (Mv) Mv->resize(K);
    for (int k = 0; k < K; ++k) {
      const auto vk = v.segment(2 * Nt * k, 2 * Nt);
      Eigen::VectorXd mk = M[k] * vk;
      S += s[k].dot(vk);
      Q += vk.dot(mk);
      if (Mv) (*Mv)[k] = std::move(mk);
    }
  }
};

struct BarrierEval {
  double F;                          // cone constraint value, feasible < 0
  std::vector<double> G;             // power constraints, feasible < 0
  double S, Q, r;                    // r = sqrt(K sigma2 + Q)
  std::vector<Eigen::VectorXd> Mv;   // per-device M_k v_k
};

bool evaluate(const Composite& cp, const Eigen::VectorXd& v, BarrierEval& ev) {
  cp.gains(v, ev.S, ev.Q, &ev.Mv);
  ev.r = std::sqrt(cp.Ksigma2 + ev.Q);
  ev.F = cp.two_alpha * ev.r - ev.S;
  ev.G.resize(cp.K);
  const double pmax = v[cp.n];
  bool strict = ev.F < 0.0;
  for (int k = 0; k < cp.K; ++k) {
    const auto vk = v.segment(2 * cp.Nt * k, 2 * cp.Nt);
    ev.G[k] = vk.squaredNorm() - pmax;
    strict = strict && ev.G[k] < 0.0;
  }
  return strict;
}

double barrier_value(const Composite& cp, double t, const Eigen::VectorXd& v,
                     const BarrierEval& ev) {
  double phi = t * v[cp.n] - std::log(-ev.F);
  for (double gk : ev.G) phi -= std::log(-gk);
  return phi;
}

// Tries candidate scalings of a direction until the cone constraint holds
// with strict margin; returns the packed start point or nullopt.
std::optional<Eigen::VectorXd> feasible_from_direction(
    const Composite& cp, const std::vector<Eigen::VectorXcd>& dir,
    bool allow_unit_scale) {
  Eigen::VectorXd v0 = cp.pack(dir, 0.0);
  double S, Q;
  cp.gains(v0, S, Q);
  if (!(S > 0.0)) return std::nullopt;
  const double a2 = cp.two_alpha * cp.two_alpha;  // (2 alpha)^2
  const double denom = S * S - a2 * Q;
  std::vector<double> scales;
  if (allow_unit_scale) scales.push_back(1.0);
  if (denom > 0.0) {
    const double c_min = std::sqrt(a2 * cp.Ksigma2 / denom);
    scales.push_back(1.05 * c_min);
    scales.push_back(1.5 * c_min);
    scales.push_back(3.0 * c_min);
  }
  for (double c : scales) {
    Eigen::VectorXd v = v0 * c;
    double Sc, Qc;
    cp.gains(v, Sc, Qc);
    const double r = std::sqrt(cp.Ksigma2 + Qc);
    const double F = cp.two_alpha * r - Sc;
    if (F < -1e-12 * std::max(1.0, cp.two_alpha * r)) {
      double peak = 0.0;
      for (int k = 0; k < cp.K; ++k)
        peak = std::max(peak, v.segment(2 * cp.Nt * k, 2 * cp.Nt).squaredNorm());
      v[cp.n] = 1.5 * peak + 1e-12;
      return v;
    }
  }
  return std::nullopt;
}

}  // namespace

PowerMinResult solve_power_min(const ChannelSet& ch, double alpha, double sigma2,
                               const PowerMinOptions& opt) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be > 0");

  const Composite cp(ch, alpha, sigma2);
  const int n = cp.n;

  // Feasible start: warm direction, else exact-alignment direction, else
  // matched-sum direction.  If no direction can reach the target fraction by
  // pure scaling the subproblem is infeasible (p*(alpha) = +inf): the
  // exact-alignment direction maximizes S / (2 sqrt(Q)) over all beamformer
  // sets, so failure there is conclusive, not an artifact of the start.
  std::optional<Eigen::VectorXd> start;
  if (opt.warm && static_cast<int>(opt.warm->size()) == cp.K)
    start = feasible_from_direction(cp, *opt.warm, true);
  if (!start) {
    try {
      std::vector<Eigen::VectorXcd> zf_dir(cp.K);
      for (int k = 0; k < cp.K; ++k)
        zf_dir[k] = zf_beamformer(ch.device_matrix(k), 1.0);
      start = feasible_from_direction(cp, zf_dir, false);
    } catch (const SingularChannelError&) {
      // fall through to the matched direction
    }
  }
  if (!start) {
    std::vector<Eigen::VectorXcd> matched(cp.K);
    for (int k = 0; k < cp.K; ++k)
      matched[k] = ch.device_matrix(k).rowwise().sum();
    start = feasible_from_direction(cp, matched, false);
  }

  PowerMinResult res;
  if (!start) {
    res.feasible = false;
    return res;
  }

  Eigen::VectorXd v = *start;
  BarrierEval ev;
  if (!evaluate(cp, v, ev))
    throw std::logic_error("power_min: start point not strictly feasible");

  const int m = cp.K + 1;  // constraint count
  double t = opt.warm ? 10.0 : 1.0;
  // Balance the initial stage so the objective term matches the barrier.
  t = std::max(t, 1.0 / std::max(v[n], 1e-9));

  long long newton_total = 0;
  Eigen::VectorXd grad(n + 1);
  Eigen::MatrixXd Hs(n + 1, n + 1);

  auto fill_derivatives = [&](const BarrierEval& e) {
    grad.setZero();
    Hs.setZero();
    const double invFm = 1.0 / (-e.F);      // 1 / (-F) > 0
    const double coef = cp.two_alpha / e.r;  // multiplies M_k v_k in dF
    // Cone term: gradient and curvature.
    Eigen::VectorXd gF = Eigen::VectorXd::Zero(n + 1);
    Eigen::VectorXd mstack = Eigen::VectorXd::Zero(n + 1);
    for (int k = 0; k < cp.K; ++k) {
      const int off = 2 * cp.Nt * k;
      const int len = 2 * cp.Nt;
      gF.segment(off, len) = coef * e.Mv[k] - cp.s[k];
      mstack.segment(off, len) = e.Mv[k];
      Hs.block(off, off, len, len) += invFm * coef * cp.M[k];
    }
    Hs.noalias() += -invFm * (cp.two_alpha / (e.r * e.r * e.r)) *
                    (mstack * mstack.transpose());
    Hs.noalias() += (invFm * invFm) * (gF * gF.transpose());
    grad += invFm * gF;
    // Power terms.
    for (int k = 0; k < cp.K; ++k) {
      const double invGm = 1.0 / (-e.G[k]);
      const int off = 2 * cp.Nt * k;
      const int len = 2 * cp.Nt;
      const Eigen::VectorXd vk = v.segment(off, len);
      grad.segment(off, len) += invGm * 2.0 * vk;
      grad[n] += -invGm;
      Hs.block(off, off, len, len).diagonal().array() += invGm * 2.0;
      const double ig2 = invGm * invGm;
      Hs.block(off, off, len, len).noalias() += ig2 * 4.0 * (vk * vk.transpose());
      Hs.col(n).segment(off, len) += ig2 * (-2.0) * vk;
      Hs.row(n).segment(off, len) += ig2 * (-2.0) * vk.transpose();
      Hs(n, n) += ig2;
    }
    grad[n] += t;
  };

  const double decrement_tol = 1e-10;
  // Ill-conditioned stages near a critical alpha can keep producing accepted
  // micro-steps whose decrement never reaches tolerance; capping the stage
  // hands such an iterate to the next barrier weight instead of looping.
  const int max_stage_steps = 50;
  while (true) {
    // Newton descent at the current barrier weight.
    int stage_steps = 0;
    for (;;) {
      if (stage_steps >= max_stage_steps) break;
      if (newton_total >= opt.max_newton) {
        res.feasible = true;
        res.p = cp.unpack(v);
        res.p_max = v[n];
        res.S = ev.S;
        res.Q = ev.Q;
        res.alpha_achieved = ev.S / (2.0 * ev.r);
        res.newton_steps = newton_total;
        res.grad_norm = grad.norm();
        throw SolverFailure("power_min: Newton budget exhausted", res);
      }
      fill_derivatives(ev);
      Eigen::LLT<Eigen::MatrixXd> llt(Hs);
      if (llt.info() != Eigen::Success) {
        double ridge = 1e-12 * (Hs.diagonal().maxCoeff() + 1.0);
        for (int tries = 0; tries < 8 && llt.info() != Eigen::Success; ++tries) {
          Hs.diagonal().array() += ridge;
          llt.compute(Hs);
          ridge *= 100.0;
        }
        if (llt.info() != Eigen::Success)
          throw SolverFailure("power_min: Hessian factorization failed", res);
      }
      const Eigen::VectorXd step = llt.solve(-grad);
      const double decrement = -grad.dot(step);  // lambda^2 of the Newton step
      if (decrement / 2.0 < decrement_tol) break;
      ++newton_total;
      ++stage_steps;

      // Backtrack into strict feasibility, then Armijo on the barrier value.
      // A step that shrinks below any useful size is a stall, not progress;
      // ending the stage keeps the outer loop's gap-based exit reachable
      // instead of burning the budget on sub-eps moves near a critical alpha.
      const double phi0 = barrier_value(cp, t, v, ev);
      double a = 1.0;
      BarrierEval trial;
      Eigen::VectorXd vt;
      bool accepted = false;
      for (int ls = 0; ls < 60 && a >= 1e-14; ++ls) {
        vt = v + a * step;
        if (evaluate(cp, vt, trial)) {
          const double phi = barrier_value(cp, t, vt, trial);
          if (phi <= phi0 - 0.25 * a * decrement) {
            accepted = true;
            break;
          }
        }
        a *= 0.5;
      }
      if (!accepted) break;  // stalled; stage is as converged as it gets
      v = vt;
      ev = trial;
    }
    const double gap = static_cast<double>(m) / t;
    if (gap <= opt.inner_tol * std::max(v[n], 1e-12)) break;
    t *= 10.0;
  }

  res.feasible = true;
  res.p = cp.unpack(v);
  res.p_max = v[n];
  res.S = ev.S;
  res.Q = ev.Q;
  res.alpha_achieved = ev.S / (2.0 * ev.r);
  res.newton_steps = newton_total;
  res.grad_norm = grad.norm();
  res.soc_dual = 1.0 / (t * (-ev.F));
  res.power_duals.resize(cp.K);
  for (int k = 0; k < cp.K; ++k) res.power_duals[k] = 1.0 / (t * (-ev.G[k]));
  return res;
}

}  // namespace aircomp
