#include <cmath>

#include "doctest.h"
#include "msheston/calibration.hpp"
#include "msheston/error.hpp"
#include "support.hpp"

using namespace msh;

namespace {

const std::vector<double> kExpiries{0.25, 0.75, 1.5};
const std::vector<double> kStrikes{80.0, 90.0, 95.0, 100.0, 105.0, 110.0, 120.0};

CalibProblem heston_problem() {
  CalibProblem prob;
  prob.market = test::synthetic_market(test::synthetic_theta(), {}, kExpiries, kStrikes);
  for (auto& s : prob.market.slices) s.rate = test::synthetic_theta().r;
  return prob;
}

HestonParams offset_start() { return {1.5, 0.05, 0.4, -0.4, 0.04, 0.05}; }

double sum_sq(const std::vector<double>& r) {
  double s = 0.0;
  for (double x : r) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("model point array round trip") {
  ModelPoint mp;
  mp.theta = test::synthetic_theta();
  mp.v = test::synthetic_v();
  const auto a = mp.to_array();
  CHECK(a[0] == mp.theta.kappa);
  CHECK(a[1] == mp.theta.rho);
  CHECK(a[2] == mp.theta.sigma);
  CHECK(a[3] == mp.theta.theta);
  CHECK(a[4] == mp.theta.z);
  CHECK(a[7] == mp.v.v3e);
  const auto back = ModelPoint::from_array(a, mp.theta.r);
  CHECK(back.to_array() == a);
  CHECK(back.theta.r == mp.theta.r);
}

TEST_CASE("objective vanishes at the generating parameters") {
  const auto prob = heston_problem();
  const auto t = test::synthetic_theta();
  const auto r = objective_heston({t.kappa, t.rho, t.sigma, t.theta, t.z}, prob);
  CHECK(r.size() == prob.market.size());
  CHECK(sum_sq(r) < 1e-14);
  const auto rm = objective_multiscale({t.kappa, t.rho, t.sigma, t.theta, t.z, 0.0, 0.0, 0.0, 0.0}, prob);
  CHECK(sum_sq(rm) < 1e-14);
}

TEST_CASE("weights scale residuals by their square root") {
  auto prob = heston_problem();
  const std::array<double, kHestonDim> off{1.7, -0.5, 0.35, 0.05, 0.04};
  const auto plain = objective_heston(off, prob);
  prob.weights.assign(prob.market.size(), 4.0);
  const auto weighted = objective_heston(off, prob);
  for (std::size_t j = 0; j < plain.size(); ++j) CHECK(weighted[j] == doctest::Approx(2.0 * plain[j]).epsilon(1e-14));
}

TEST_CASE("quotes without a model implied vol get the fixed penalty") {
  CalibProblem prob;
  prob.market.spot = 100.0;
  ExpirySlice s;
  s.expiry = 0.1;
  s.points = {{0.1, 100.0, 0.2, VolSource::market}, {0.1, 400.0, 0.2, VolSource::market}};
  prob.market.slices.push_back(s);
  const auto r = objective_heston({1.0, 0.0, 0.01, 0.04, 0.04}, prob);
  REQUIRE(r.size() == 2);
  CHECK(r[1] == kOutOfBandPenalty);
  CHECK(std::fabs(r[0]) < 1.0);
}

TEST_CASE("Heston calibration recovers the generating parameters") {
  const auto prob = heston_problem();
  const auto res = calibrate_heston(prob, offset_start());
  const auto t = test::synthetic_theta();
  CHECK(res.converged);
  CHECK_FALSE(res.multiscale);
  CHECK(res.objective < 1e-16);
  CHECK(res.params.theta.kappa == doctest::Approx(t.kappa).epsilon(1e-4));
  CHECK(res.params.theta.rho == doctest::Approx(t.rho).epsilon(1e-4));
  CHECK(res.params.theta.sigma == doctest::Approx(t.sigma).epsilon(1e-4));
  CHECK(res.params.theta.theta == doctest::Approx(t.theta).epsilon(1e-4));
  CHECK(res.params.theta.z == doctest::Approx(t.z).epsilon(1e-4));
  CHECK(res.params.v.is_zero());
  CHECK(res.start_point.theta.kappa == offset_start().kappa);
  CHECK(res.out_of_band == 0);
  CHECK(res.per_expiry_rss.size() == kExpiries.size());
  CHECK(res.evaluations >= res.iterations);
}

TEST_CASE("progress callback sees a nonincreasing cost") {
  auto opts = CalibOptions{};
  std::vector<double> costs;
  opts.progress = [&](int, double c) { costs.push_back(c); };
  calibrate_heston(heston_problem(), offset_start(), opts);
  REQUIRE_FALSE(costs.empty());
  for (std::size_t j = 1; j < costs.size(); ++j) CHECK(costs[j] <= costs[j - 1]);
}

TEST_CASE("iteration limit is reported as not converged") {
  CalibOptions opts;
  opts.max_iterations = 1;
  const auto res = calibrate_heston(heston_problem(), offset_start(), opts);
  CHECK_FALSE(res.converged);
  CHECK(res.stop_reason == "iteration_limit");
  SUBCASE("the multi-scale stage refuses an unconverged start") {
    CHECK_THROWS_AS(calibrate_multiscale(heston_problem(), res), Error);
  }
}

TEST_CASE("Feller enforcement keeps iterates admissible") {
  auto truth = test::synthetic_theta();
  truth.sigma = 0.6;
  truth.theta = 0.05;
  CalibProblem prob;
  prob.market = test::synthetic_market(truth, {}, kExpiries, kStrikes);
  prob.feller_mode = FellerMode::enforce;
  std::vector<bool> admissible;
  const auto res = calibrate_heston(prob, offset_start());
  CHECK(res.feller_satisfied);
  const auto& t = res.params.theta;
  CHECK(t.sigma * t.sigma <= 2.0 * t.kappa * t.theta * (1.0 + 1e-12));
  SUBCASE("penalized mode reports the pure fit") {
    prob.feller_mode = FellerMode::penalize;
    const auto pen = calibrate_heston(prob, offset_start());
    CHECK(pen.objective == doctest::Approx(sum_sq(pen.residuals)).epsilon(1e-12));
  }
}

TEST_CASE("bounds are respected") {
  auto prob = heston_problem();
  prob.bounds.upper[0] = 1.8;
  const auto res = calibrate_heston(prob, offset_start());
  CHECK(res.params.theta.kappa <= 1.8);
  CHECK(res.params.theta.kappa >= prob.bounds.lower[0]);
}

TEST_CASE("multi-start is deterministic") {
  CalibOptions opts;
  opts.multi_start = 3;
  const auto a = calibrate_heston(heston_problem(), {3.0, 0.09, 0.2, -0.2, 0.08, 0.05}, opts);
  const auto b = calibrate_heston(heston_problem(), {3.0, 0.09, 0.2, -0.2, 0.08, 0.05}, opts);
  CHECK(a.params.to_array() == b.params.to_array());
  CHECK(a.objective == b.objective);
  opts.threads = 2;
  const auto c = calibrate_heston(heston_problem(), {3.0, 0.09, 0.2, -0.2, 0.08, 0.05}, opts);
  CHECK(c.params.to_array() == a.params.to_array());
}

TEST_CASE("residual report and comparison") {
  const auto prob = heston_problem();
  CalibResult res;
  res.residuals.assign(prob.market.size(), 0.0);
  for (std::size_t j = 0; j < kStrikes.size(); ++j) res.residuals[j] = 0.01;
  const auto rep = residual_report(res, prob);
  REQUIRE(rep.size() == 3);
  CHECK(rep[0].expiry == kExpiries[0]);
  CHECK(rep[0].n_quotes == kStrikes.size());
  CHECK(rep[0].mean_sq == doctest::Approx(1e-4));
  CHECK(rep[1].mean_sq == 0.0);

  auto ms = rep;
  ms[0].mean_sq = 2.5e-5;
  const auto cmp = compare_residuals(rep, ms);
  REQUIRE(cmp.size() == 3);
  CHECK(cmp[0].ratio == doctest::Approx(4.0));
  CHECK(std::isinf(cmp[1].ratio) == false);
  std::vector<ExpiryResidual> short_list(rep.begin(), rep.begin() + 1);
  CHECK_THROWS_AS(compare_residuals(rep, short_list), Error);
}

TEST_CASE("problem validation") {
  auto prob = heston_problem();
  CHECK_NOTHROW(prob.validate(kHestonDim));
  prob.weights = {1.0, 2.0};
  CHECK_THROWS_AS(prob.validate(kHestonDim), Error);
  prob.weights.assign(prob.market.size(), 1.0);
  prob.weights[3] = -1.0;
  CHECK_THROWS_AS(prob.validate(kHestonDim), Error);
  prob = heston_problem();
  CHECK_THROWS_AS(prob.validate(1000), Error);
  prob.bounds.lower[2] = 10.0;
  CHECK_THROWS_AS(prob.validate(kHestonDim), Error);
}
