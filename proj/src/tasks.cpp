#include "aircomp/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace aircomp {
namespace {

Eigen::VectorXd draw_normal_vec(Rng& rng, int d) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.normal();
  return v;
}

// Uniform draw from the ball of radius r (or from radius 3 when the domain is
// unconstrained, which only happens in hand-built tasks).
Eigen::VectorXd draw_in_ball(Rng& rng, int d, double r) {
  if (!std::isfinite(r)) r = 3.0;
  Eigen::VectorXd dir = draw_normal_vec(rng, d);
  double n = dir.norm();
  if (n < 1e-300) return Eigen::VectorXd::Zero(d);
  double u = rng.uniform();
  return dir * (r * std::pow(u, 1.0 / d) / n);
}

double percentile_999(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  size_t idx = static_cast<size_t>(
      std::ceil(0.999 * static_cast<double>(v.size())));
  if (idx > 0) --idx;
  if (idx >= v.size()) idx = v.size() - 1;
  return v[idx];
}

// log(1 + exp(-u)) without overflow for large |u|.
double softplus_neg(double u) {
  if (u > 0.0) return std::log1p(std::exp(-u));
  return -u + std::log1p(std::exp(u));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

struct QuadraticData {
  std::vector<Eigen::VectorXd> centers;
  double grad_noise = 0.0;
};

struct SampleSet {
  // One design matrix and target vector per device.
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::VectorXd> b;  // regression targets or +-1 labels
  double mu = 0.0;
};

// Pooled sample generation shared by both regression tasks.  Heterogeneity is
// produced the way sorted-label sharding does it: sort the pooled samples by
// target, then hand out consecutive chunks, so each device sees a narrow
// slice of the target distribution.
SampleSet make_samples(int K, int D, int m, double noise, double mu,
                       bool heterogeneous, bool classify, Rng& rng,
                       const Eigen::VectorXd& x_true) {
  const int total = K * m;
  Eigen::MatrixXd A(total, D);
  Eigen::VectorXd b(total);
  for (int i = 0; i < total; ++i) {
    Eigen::VectorXd a = draw_normal_vec(rng, D);
    double t = a.dot(x_true) + noise * rng.normal();
    A.row(i) = a.transpose();
    b(i) = classify ? (t >= 0.0 ? 1.0 : -1.0) : t;
  }
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  if (heterogeneous) {
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return b(i) < b(j); });
  }
  SampleSet out;
  out.mu = mu;
  out.A.resize(K);
  out.b.resize(K);
  for (int k = 0; k < K; ++k) {
    out.A[k].resize(m, D);
    out.b[k].resize(m);
    for (int i = 0; i < m; ++i) {
      int src = order[k * m + i];
      out.A[k].row(i) = A.row(src);
      out.b[k](i) = b(src);
    }
  }
  return out;
}

Eigen::VectorXd logistic_optimum(const SampleSet& data, int D) {
  const int K = static_cast<int>(data.A.size());
  const int m = static_cast<int>(data.A[0].rows());
  const double scale = 1.0 / (K * m);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(D);
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::VectorXd g = data.mu * x;
    Eigen::MatrixXd H = data.mu * Eigen::MatrixXd::Identity(D, D);
    for (int k = 0; k < K; ++k) {
      for (int i = 0; i < m; ++i) {
        Eigen::VectorXd a = data.A[k].row(i).transpose();
        double y = data.b[k](i);
        double s = sigmoid(-y * a.dot(x));
        g -= (scale * y * s) * a;
        H += (scale * s * (1.0 - s)) * (a * a.transpose());
      }
    }
    if (g.norm() <= 1e-12) break;
    Eigen::VectorXd step = H.llt().solve(g);
    // Plain damped Newton; the objective is smooth and strongly convex.
    double t = 1.0;
    auto val = [&](const Eigen::VectorXd& xx) {
      double v = 0.5 * data.mu * xx.squaredNorm();
      for (int k = 0; k < K; ++k)
        for (int i = 0; i < m; ++i)
          v += scale * softplus_neg(data.b[k](i) *
                                    data.A[k].row(i).dot(xx));
      return v;
    };
    double f0 = val(x);
    while (t > 1e-8 && val(x - t * step) > f0) t *= 0.5;
    x -= t * step;
  }
  return x;
}

}  // namespace

const char* task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::QUADRATIC_CONSENSUS: return "quadratic_consensus";
    case TaskKind::RIDGE_REGRESSION: return "ridge_regression";
    case TaskKind::LOGISTIC_REGRESSION: return "logistic_regression";
  }
  return "unknown";
}

double Task::value(const Eigen::VectorXd& x) const {
  double v = 0.0;
  for (int k = 0; k < K; ++k) v += local_value(k, x);
  return v / K;
}

Eigen::VectorXd Task::grad(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(D);
  for (int k = 0; k < K; ++k) g += local_grad(k, x);
  return g / K;
}

bool Task::in_domain(const Eigen::VectorXd& x, double tol) const {
  if (!std::isfinite(domain_radius)) return true;
  return x.norm() <= domain_radius * (1.0 + tol);
}

Task make_task(TaskKind kind, int K, int D, std::uint64_t seed,
               bool heterogeneous, const TaskOptions& opt) {
  if (K < 1 || D < 1) throw std::invalid_argument("task needs K, D >= 1");
  if (opt.samples_per_device < 1) {
    throw std::invalid_argument("samples_per_device must be positive");
  }
  Task task;
  task.kind = kind;
  task.K = K;
  task.D = D;

  const auto kind_idx = static_cast<std::uint64_t>(kind);
  Rng data_rng(seed, StreamTag::task_data, {kind_idx});
  const int m = opt.samples_per_device;

  if (kind == TaskKind::QUADRATIC_CONSENSUS) {
    auto data = std::make_shared<QuadraticData>();
    data->grad_noise = opt.sample_noise;
    Eigen::VectorXd c0 = draw_normal_vec(data_rng, D);
    data->centers.assign(K, c0);
    if (heterogeneous) {
      for (int k = 0; k < K; ++k) {
        data->centers[k] =
            c0 + (opt.spread / std::sqrt(static_cast<double>(D))) *
                     draw_normal_vec(data_rng, D);
      }
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(D);
    for (const auto& c : data->centers) mean += c;
    mean /= K;
    task.x_star = mean;
    task.local_value = [data](int k, const Eigen::VectorXd& x) {
      return 0.5 * (x - data->centers[k]).squaredNorm();
    };
    task.local_grad = [data](int k, const Eigen::VectorXd& x) {
      return Eigen::VectorXd(x - data->centers[k]);
    };
    task.stoch_grad = [data](int k, const Eigen::VectorXd& x, Rng& rng) {
      Eigen::VectorXd g = x - data->centers[k];
      for (int i = 0; i < g.size(); ++i) g(i) += data->grad_noise * rng.normal();
      return g;
    };
  } else {
    const bool classify = kind == TaskKind::LOGISTIC_REGRESSION;
    const double mu = classify ? opt.logistic_mu : opt.ridge_mu;
    Eigen::VectorXd x_true = draw_normal_vec(data_rng, D);
    auto data = std::make_shared<SampleSet>(
        make_samples(K, D, m, opt.sample_noise, mu, heterogeneous, classify,
                     data_rng, x_true));
    if (classify) {
      task.x_star = logistic_optimum(*data, D);
      task.local_value = [data, m](int k, const Eigen::VectorXd& x) {
        double v = 0.5 * data->mu * x.squaredNorm();
        for (int i = 0; i < m; ++i)
          v += softplus_neg(data->b[k](i) * data->A[k].row(i).dot(x)) / m;
        return v;
      };
      task.local_grad = [data, m](int k, const Eigen::VectorXd& x) {
        Eigen::VectorXd g = data->mu * x;
        for (int i = 0; i < m; ++i) {
          double y = data->b[k](i);
          double s = sigmoid(-y * data->A[k].row(i).dot(x));
          g -= (y * s / m) * data->A[k].row(i).transpose();
        }
        return g;
      };
      task.stoch_grad = [data, m](int k, const Eigen::VectorXd& x, Rng& rng) {
        int i = static_cast<int>(rng.uniform() * m);
        if (i >= m) i = m - 1;
        double y = data->b[k](i);
        double s = sigmoid(-y * data->A[k].row(i).dot(x));
        Eigen::VectorXd g = data->mu * x;
        g -= (y * s) * data->A[k].row(i).transpose();
        return g;
      };
    } else {
      // Pooled normal equations give the exact minimizer of the average
      // objective.
      Eigen::MatrixXd G = mu * Eigen::MatrixXd::Identity(D, D);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(D);
      const double scale = 1.0 / (K * m);
      for (int k = 0; k < K; ++k) {
        G += scale * data->A[k].transpose() * data->A[k];
        rhs += scale * data->A[k].transpose() * data->b[k];
      }
      task.x_star = G.llt().solve(rhs);
      task.local_value = [data, m](int k, const Eigen::VectorXd& x) {
        return (data->A[k] * x - data->b[k]).squaredNorm() / (2.0 * m) +
               0.5 * data->mu * x.squaredNorm();
      };
      task.local_grad = [data, m](int k, const Eigen::VectorXd& x) {
        Eigen::VectorXd g =
            data->A[k].transpose() * (data->A[k] * x - data->b[k]) / m;
        g += data->mu * x;
        return g;
      };
      task.stoch_grad = [data, m](int k, const Eigen::VectorXd& x, Rng& rng) {
        int i = static_cast<int>(rng.uniform() * m);
        if (i >= m) i = m - 1;
        Eigen::VectorXd a = data->A[k].row(i).transpose();
        Eigen::VectorXd g = (a.dot(x) - data->b[k](i)) * a;
        g += data->mu * x;
        return g;
      };
    }
  }

  task.domain_radius = std::max(1.0, 2.0 * task.x_star.norm());
  task.R = task.domain_radius / std::sqrt(2.0);
  task.f_star = task.value(task.x_star);

  // Empirical constants: sample gradients at uniform points of the domain.
  Rng cal_rng(seed, StreamTag::misc, {kind_idx, 777});
  std::vector<double> stoch_norms;
  stoch_norms.reserve(opt.calibration_draws);
  double max_exact = 0.0;
  for (int t = 0; t < opt.calibration_draws; ++t) {
    Eigen::VectorXd x = draw_in_ball(cal_rng, D, task.domain_radius);
    int k = static_cast<int>(cal_rng.uniform() * K);
    if (k >= K) k = K - 1;
    stoch_norms.push_back(task.stoch_grad(k, x, cal_rng).norm());
    if (t % 8 == 0) max_exact = std::max(max_exact, task.local_grad(k, x).norm());
  }
  task.omega = 1.5 * percentile_999(stoch_norms);
  if (kind == TaskKind::QUADRATIC_CONSENSUS) {
    double max_center = 0.0;
    for (int k = 0; k < K; ++k) {
      max_center = std::max(max_center, task.local_grad(k, Eigen::VectorXd::Zero(D)).norm());
    }
    task.L = task.domain_radius + max_center;
  } else {
    task.L = 1.2 * max_exact;
  }
  return task;
}

}  // namespace aircomp
