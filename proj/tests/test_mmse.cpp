#include <cmath>
#include <complex>
#include <vector>

#include "aircomp/channel.hpp"
#include "aircomp/mmse.hpp"
#include "aircomp/power_min.hpp"
#include "aircomp/signal_chain.hpp"
#include "aircomp/zf.hpp"
#include "doctest.h"

using namespace aircomp;

namespace {

ChannelSet unit_pair_channel() {
  ChannelSet ch(2, 1, 1);
  ch.h_mutable(0, 1)(0) = 1.0;
  ch.h_mutable(1, 0)(0) = 1.0;
  return ch;
}

ChannelSet random_channel(int K, int Nt, std::uint64_t seed, int round = 1) {
  SystemConfig cfg;
  cfg.K = K;
  cfg.Nt = Nt;
  cfg.seed = seed;
  return sample_rician(cfg, round);
}

std::vector<Eigen::VectorXcd> scalar_pair(double p) {
  return {Eigen::VectorXcd::Constant(1, p), Eigen::VectorXcd::Constant(1, p)};
}

}  // namespace

TEST_CASE("conditional receive scaling, scalar reductions") {
  const ChannelSet ch = unit_pair_channel();
  // Both gains equal p: eta = ((sigma2 + p^2) / p)^2.
  CHECK(conditional_eta(ch, scalar_pair(1.0), 1.0) == doctest::Approx(4.0));
  const double p = 0.7;
  const double expected = std::pow((1.0 + p * p) / p, 2.0);
  CHECK(conditional_eta(ch, scalar_pair(p), 1.0) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("conditional scaling minimizes the error over eta") {
  const ChannelSet ch = random_channel(3, 2, 41);
  const BeamformingSolution sol = mmse_design(ch, 1.0, 0.5);
  const double eta_star = conditional_eta(ch, sol.p, 0.5);
  CHECK(eta_star == doctest::Approx(sol.eta).epsilon(1e-9));

  const double base = analytic_mse(ch, sol, 0.5, 1.0, 1);
  BeamformingSolution probe = sol;
  // Local probe, then a wide 1000-point sweep of the scaling.
  for (const double f : {1.0 - 1e-3, 1.0 + 1e-3}) {
    probe.eta = eta_star * f;
    CHECK(analytic_mse(ch, probe, 0.5, 1.0, 1) >= base * (1.0 - 1e-12));
  }
  for (int i = 0; i <= 1000; ++i) {
    probe.eta = eta_star * std::pow(100.0, i / 1000.0) / 10.0;
    CHECK(analytic_mse(ch, probe, 0.5, 1.0, 1) >= base * (1.0 - 1e-8));
  }
}

TEST_CASE("substituted error form matches and ignores a global sign flip") {
  const ChannelSet ch = random_channel(3, 2, 42);
  const BeamformingSolution sol = mmse_design(ch, 1.0, 0.8);
  const double direct = analytic_mse(ch, sol, 0.8, 1.3, 2);
  const double substituted = mse_at_optimal_eta(ch, sol.p, 0.8, 1.3, 2);
  CHECK(substituted == doctest::Approx(direct).epsilon(1e-9));

  std::vector<Eigen::VectorXcd> flipped;
  for (const auto& p : sol.p) flipped.push_back(-p);
  CHECK(mse_at_optimal_eta(ch, flipped, 0.8, 1.3, 2) ==
        doctest::Approx(substituted).epsilon(1e-12));
}

TEST_CASE("vanishing target fraction needs vanishing power") {
  const ChannelSet ch = random_channel(3, 2, 43);
  const PowerMinResult res = solve_power_min(ch, 1e-9, 1.0);
  REQUIRE(res.feasible);
  CHECK(res.p_max <= 1e-6);
}

TEST_CASE("power subproblem hand value on the unit pair") {
  // alpha = 2p / sqrt(2 + 2p^2) = 1 at p = 1, so the minimum budget is 1.
  const ChannelSet ch = unit_pair_channel();
  const PowerMinResult res = solve_power_min(ch, 1.0, 1.0);
  REQUIRE(res.feasible);
  CHECK(res.p_max == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(res.p[0](0) - 1.0) <= 1e-2);
  CHECK(std::abs(res.p[1](0) - 1.0) <= 1e-2);
}

TEST_CASE("minimum power grows with the target fraction") {
  // Targets are taken relative to the design fraction at the unit budget,
  // which is feasible by construction; absolute targets can overshoot the
  // fraction's finite supremum on a given draw.
  const ChannelSet ch = random_channel(3, 2, 44);
  const BeamformingSolution sol = mmse_design(ch, 1.0, 1.0);
  REQUIRE(sol.alpha.has_value());
  double prev = 0.0;
  for (const double f : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    const PowerMinResult res = solve_power_min(ch, f * *sol.alpha, 1.0);
    REQUIRE(res.feasible);
    CHECK(res.p_max >= prev * (1.0 - 1e-7));
    CHECK(res.p_max > prev * 1.01);  // strictly more power, not a plateau
    prev = res.p_max;
  }
  CHECK(prev <= 1.0 * (1.0 + 1e-3));  // the full target fits the budget
}

TEST_CASE("design on the unit pair reaches the known optimum") {
  const ChannelSet ch = unit_pair_channel();
  const BeamformingSolution sol = mmse_design(ch, 1.0, 1.0);
  REQUIRE(sol.alpha.has_value());
  CHECK(*sol.alpha == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(sol.eta == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(analytic_mse(ch, sol, 1.0, 1.0, 1) == doctest::Approx(1.0).epsilon(1e-4));
  // Halves the aligned design's error on this instance.
  const BeamformingSolution zf = zf_design(ch, 1.0);
  CHECK(analytic_mse(ch, zf, 1.0, 1.0, 1) == doctest::Approx(2.0));
}

TEST_CASE("optimized design never loses to the aligned one") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ChannelSet ch = random_channel(3, 3, seed);
    const double zf_mse = analytic_mse(ch, zf_design(ch, 1.0), 1.0, 1.0, 1);
    const double mmse_mse =
        analytic_mse(ch, mmse_design(ch, 1.0, 1.0), 1.0, 1.0, 1);
    CHECK(mmse_mse <= zf_mse + 1e-6);
  }
}

TEST_CASE("designs coincide in the noiseless limit") {
  const ChannelSet ch = random_channel(3, 3, 45);
  const double sigma2 = 1e-10;
  const double zf_mse = analytic_mse(ch, zf_design(ch, 1.0), sigma2, 1.0, 1);
  const double mmse_mse =
      analytic_mse(ch, mmse_design(ch, 1.0, sigma2), sigma2, 1.0, 1);
  CHECK(std::abs(zf_mse - mmse_mse) <= 1e-4 * zf_mse);
}

TEST_CASE("at least one device is at full power") {
  const double P0 = 1.3;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ChannelSet ch = random_channel(3, 2, seed + 100);
    const BeamformingSolution sol = mmse_design(ch, P0, 1.0);
    double max_pow = 0.0;
    for (const auto& p : sol.p) max_pow = std::max(max_pow, p.squaredNorm());
    CHECK(max_pow >= P0 * (1.0 - 1e-4));
    CHECK(max_pow <= P0 * (1.0 + 1e-8));
  }
}

TEST_CASE("bisection certificate around the returned fraction") {
  const ChannelSet ch = random_channel(3, 2, 46);
  const double P0 = 1.0;
  BisectionConfig cfg;
  const BeamformingSolution sol = mmse_design(ch, P0, 1.0, cfg);
  REQUIRE(sol.alpha.has_value());
  REQUIRE_FALSE(sol.diagnostics.bracket_failure);
  const double eps = 10.0 * cfg.eps_alpha;
  const PowerMinResult below = solve_power_min(ch, *sol.alpha - eps, 1.0);
  const PowerMinResult above = solve_power_min(ch, *sol.alpha + eps, 1.0);
  REQUIRE(below.feasible);
  REQUIRE(above.feasible);
  CHECK(below.p_max <= P0 * (1.0 + 1e-5));
  CHECK(above.p_max > P0 * (1.0 - 1e-5));
}

TEST_CASE("centroid directions") {
  const int Km1 = 3;
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(Km1, Km1);
  const Eigen::VectorXcd partial = centroid_direction(I, CentroidMode::PARTIAL_POWER);
  const Eigen::VectorXcd full = centroid_direction(I, CentroidMode::FULL_POWER, 0.0);
  const Eigen::VectorXcd expected =
      Eigen::VectorXcd::Constant(Km1, 1.0 / std::sqrt(double(Km1)));
  CHECK((partial - expected).norm() <= 1e-12);
  CHECK((full - expected).norm() <= 1e-12);

  // Square invertible channel: the ridge-free full-power direction collapses
  // to the unregularized one.
  Rng rng(4, StreamTag::misc, {9});
  Eigen::MatrixXcd H(Km1, Km1);
  for (int j = 0; j < Km1; ++j)
    for (int i = 0; i < Km1; ++i) H(i, j) = rng.complex_normal();
  const Eigen::VectorXcd a = centroid_direction(H, CentroidMode::PARTIAL_POWER);
  const Eigen::VectorXcd b = centroid_direction(H, CentroidMode::FULL_POWER, 0.0);
  CHECK(std::abs(std::abs(a.dot(b)) - 1.0) <= 1e-10);
}

TEST_CASE("partial-power devices point along the centroid") {
  // Square channels (Nt = K-1) so the unregularized centroid form applies.
  // Device 0's outgoing links are boosted so it reaches its target gains
  // well below the power cap and the partial-power branch is exercised.
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    ChannelSet ch = random_channel(3, 2, seed + 200);
    ch.h_mutable(0, 1) *= 10.0;
    ch.h_mutable(0, 2) *= 10.0;
    const BeamformingSolution sol = mmse_design(ch, 1.0, 1.0);
    for (int k = 0; k < 3; ++k) {
      const double pw = sol.p[k].squaredNorm();
      if (pw >= 1.0 - 1e-4) continue;  // full power: ridge direction instead
      const Eigen::VectorXcd dir =
          centroid_direction(ch.device_matrix(k), CentroidMode::PARTIAL_POWER);
      const double cosine = std::abs(sol.p[k].normalized().dot(dir));
      CHECK(cosine >= 1.0 - 1e-4);
      ++checked;
    }
  }
  CHECK(checked >= 8);  // the draw set must actually exercise the branch
}

TEST_CASE("stationarity residuals vanish at the optimum and not nearby") {
  const ChannelSet ch = random_channel(3, 2, 47);
  const BeamformingSolution sol = mmse_design(ch, 1.0, 1.0);
  const KktReport rep = kkt_residuals(ch, sol, 1.0);
  for (const double r : rep.stationarity) CHECK(r <= 1e-4);
  CHECK(rep.complementary_slackness <= 1e-6);

  BeamformingSolution off = sol;
  for (auto& p : off.p) p *= 0.9;
  off.eta = conditional_eta(ch, off.p, 1.0);
  const KktReport bad = kkt_residuals(ch, off, 1.0);
  double worst = 0.0;
  for (const double r : bad.stationarity) worst = std::max(worst, r);
  CHECK(worst > 1e-3);
}

TEST_CASE("reference search matches the designed optimum") {
  const ChannelSet ch = unit_pair_channel();
  const BeamformingSolution grid = brute_force_mmse(ch, 1.0, 1.0, 1e-3);
  CHECK(mse_at_optimal_eta(ch, grid.p, 1.0, 1.0, 1) ==
        doctest::Approx(1.0).epsilon(1e-2));

  const ChannelSet rnd = random_channel(2, 2, 48);
  const double designed =
      mse_at_optimal_eta(rnd, mmse_design(rnd, 1.0, 1.0).p, 1.0, 1.0, 1);
  const double searched =
      mse_at_optimal_eta(rnd, brute_force_mmse(rnd, 1.0, 1.0, 1e-3).p, 1.0, 1.0, 1);
  CHECK(std::abs(designed - searched) <= 0.01 * searched);
}

TEST_CASE("grid refinement never increases the reference error") {
  // Resolutions 1/64 and 1/128 produce nested grids, so the finer search
  // space contains the coarser one.
  const ChannelSet ch = random_channel(2, 1, 49);
  const double coarse =
      mse_at_optimal_eta(ch, brute_force_mmse(ch, 1.0, 1.0, 1.0 / 64).p, 1.0, 1.0, 1);
  const double fine =
      mse_at_optimal_eta(ch, brute_force_mmse(ch, 1.0, 1.0, 1.0 / 128).p, 1.0, 1.0, 1);
  CHECK(fine <= coarse * (1.0 + 1e-12));
}

TEST_CASE("aligned design cannot beat the reference search") {
  const ChannelSet ch = random_channel(2, 2, 50);
  const double zf_mse = analytic_mse(ch, zf_design(ch, 1.0), 1.0, 1.0, 1);
  const double searched =
      mse_at_optimal_eta(ch, brute_force_mmse(ch, 1.0, 1.0, 2e-3).p, 1.0, 1.0, 1);
  CHECK(zf_mse >= searched - 0.01 * searched);
}

TEST_CASE("reference search rejects oversized instances") {
  const ChannelSet big = random_channel(4, 3, 51);
  CHECK_THROWS_AS(brute_force_mmse(big, 1.0, 1.0, 1e-2), std::invalid_argument);
}

TEST_CASE("solver diagnostics stay within configured budgets") {
  BisectionConfig cfg;
  cfg.max_outer = 40;
  const ChannelSet ch = random_channel(3, 2, 52);
  const BeamformingSolution sol = mmse_design(ch, 1.0, 1.0, cfg);
  CHECK(sol.diagnostics.outer_iterations <= cfg.max_outer);
  CHECK(sol.diagnostics.inner_iterations >= 1);
}
