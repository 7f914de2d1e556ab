#include "msheston/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>

#include <Eigen/Dense>

#include "msheston/detail/parallel.hpp"
#include "msheston/error.hpp"
#include "msheston/pricer.hpp"

namespace msh {

namespace {

enum class Transform { log, atanh, identity };

constexpr std::array<Transform, kMultiscaleDim> kTransforms{
    Transform::log,      Transform::atanh,    Transform::log,      Transform::log,     Transform::log,
    Transform::identity, Transform::identity, Transform::identity, Transform::identity};

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

double to_free(double x, Transform t) {
  switch (t) {
    case Transform::log:
      return std::log(x);
    case Transform::atanh:
      return std::atanh(x);
    case Transform::identity:
      return x;
  }
  return x;
}

double from_free(double u, Transform t) {
  switch (t) {
    case Transform::log:
      return std::exp(u);
    case Transform::atanh:
      return std::tanh(u);
    case Transform::identity:
      return u;
  }
  return u;
}

double sum_sq(const std::vector<double>& r) {
  return std::accumulate(r.begin(), r.end(), 0.0, [](double acc, double x) { return acc + x * x; });
}

std::vector<double> point_weights(const CalibProblem& prob) {
  if (prob.weights.empty()) return std::vector<double>(prob.market.size(), 1.0);
  return prob.weights;
}

double to_free_value(double x, std::size_t index) { return to_free(x, kTransforms.at(index)); }
double from_free_value(double u, std::size_t index) { return from_free(u, kTransforms.at(index)); }

std::vector<double> model_residuals(const ModelPoint& mp, const CalibProblem& prob, std::size_t* out_of_band) {
  const auto weights = point_weights(prob);
  std::vector<double> res;
  res.reserve(weights.size());
  std::size_t bad = 0;
  const double spot = prob.market.spot;
  for (const auto& slice : prob.market.slices) {
    HestonParams p = mp.theta;
    p.r = slice.rate;
    std::vector<double> strikes;
    for (const auto& pt : slice.points) strikes.push_back(pt.strike);
    const double carry_spot = spot * std::exp(-slice.dividend * slice.expiry);
    std::vector<std::optional<double>> prices(strikes.size());
    try {
      const auto slice_prices =
          price_expiry_slice(carry_spot, slice.expiry, strikes, PayoffKind::call, p, mp.v, prob.quadrature);
      for (std::size_t j = 0; j < strikes.size(); ++j) prices[j] = slice_prices[j].total();
    } catch (const Error&) {
      // One bad strike should not cost the rest of the slice.
      for (std::size_t j = 0; j < strikes.size(); ++j) {
        try {
          prices[j] = price_expiry_slice(carry_spot, slice.expiry, std::span<const double>(&strikes[j], 1),
                                         PayoffKind::call, p, mp.v, prob.quadrature)
                          .front()
                          .total();
        } catch (const Error&) {
        }
      }
    }
    for (std::size_t j = 0; j < slice.points.size(); ++j) {
      const double w = std::sqrt(weights[res.size()]);
      double r = kOutOfBandPenalty;
      if (prices[j]) {
        try {
          const double model_vol = implied_vol(*prices[j], spot, strikes[j], slice.expiry, slice.rate, slice.dividend);
          r = slice.points[j].implied_vol - model_vol;
        } catch (const Error&) {
          r = kOutOfBandPenalty;
        }
      }
      if (r == kOutOfBandPenalty) ++bad;
      res.push_back(w * r);
    }
  }
  if (out_of_band) *out_of_band = bad;
  return res;
}

/// Maps the free LM coordinates to parameters and builds the residual vector.
class Problem {
 public:
  Problem(const CalibProblem& prob, std::size_t dim, const ModelPoint& fixed)
      : prob_(prob), dim_(dim), fixed_(fixed) {}

  std::size_t dim() const noexcept { return dim_; }

  Vec to_free(const ModelPoint& mp) const {
    const auto a = mp.to_array();
    Vec u(static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < dim_; ++i) u[static_cast<Eigen::Index>(i)] = to_free_value(a[i], i);
    return u;
  }

  ModelPoint from_free(const Vec& u) const {
    auto a = fixed_.to_array();
    for (std::size_t i = 0; i < dim_; ++i) {
      const double x = from_free_value(u[static_cast<Eigen::Index>(i)], i);
      a[i] = std::clamp(x, prob_.bounds.lower[i], prob_.bounds.upper[i]);
    }
    ModelPoint mp = ModelPoint::from_array(a, fixed_.theta.r);
    if (prob_.feller_mode == FellerMode::enforce) {
      mp.theta.sigma = std::min(mp.theta.sigma, std::sqrt(2.0 * mp.theta.kappa * mp.theta.theta));
    }
    return mp;
  }

  /// Residuals followed by the Feller penalty term when penalizing.
  std::vector<double> residuals(const Vec& u) const {
    const ModelPoint mp = from_free(u);
    auto r = model_residuals(mp, prob_, nullptr);
    if (prob_.feller_mode == FellerMode::penalize) {
      const auto& t = mp.theta;
      r.push_back(std::sqrt(prob_.feller_penalty) * std::max(0.0, t.sigma * t.sigma - 2.0 * t.kappa * t.theta));
    }
    return r;
  }

 private:
  const CalibProblem& prob_;
  std::size_t dim_;
  ModelPoint fixed_;
};

struct LmOutcome {
  Vec u;
  double cost = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string stop_reason;
};

Vec as_vec(const std::vector<double>& r) { return Eigen::Map<const Vec>(r.data(), static_cast<Eigen::Index>(r.size())); }

bool all_finite(const std::vector<double>& r) {
  return std::all_of(r.begin(), r.end(), [](double x) { return std::isfinite(x); });
}

LmOutcome levenberg_marquardt(const Problem& problem, Vec u, const CalibOptions& opts) {
  LmOutcome out;
  auto r_vec = problem.residuals(u);
  ++out.evaluations;
  if (!all_finite(r_vec)) throw Error(ErrorCode::NonFinite, "calibration objective is not finite at the start point");
  Vec r = as_vec(r_vec);
  double cost = 0.5 * r.squaredNorm();
  const auto n = static_cast<Eigen::Index>(problem.dim());
  double mu = -1.0;
  double growth = 2.0;

  for (out.iterations = 0; out.iterations < opts.max_iterations;) {
    if (cost == 0.0) {
      out.converged = true;
      out.stop_reason = "zero_residual";
      break;
    }
    Mat jac(r.size(), n);
    detail::parallel_for(static_cast<std::size_t>(n), opts.threads, [&](std::size_t j) {
      const auto col = static_cast<Eigen::Index>(j);
      Vec shifted = u;
      const double h = opts.jacobian_step * std::max(std::fabs(u[col]), 1.0);
      shifted[col] += h;
      const Vec rj = as_vec(problem.residuals(shifted));
      jac.col(col) = (rj - r) / h;
    });
    out.evaluations += static_cast<int>(n);
    ++out.iterations;

    const Vec grad = jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() < opts.gradient_tol) {
      out.converged = true;
      out.stop_reason = "gradient";
      break;
    }
    const Mat normal = jac.transpose() * jac;
    Vec scale = normal.diagonal().cwiseMax(1e-12);
    if (mu < 0.0) mu = 1e-3;

    bool accepted = false;
    bool small_step = false;
    double new_cost = cost;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      Mat damped = normal;
      damped.diagonal() += mu * scale;
      const Vec step = damped.ldlt().solve(-grad);
      if (!step.allFinite()) {
        mu *= growth;
        growth *= 2.0;
        continue;
      }
      const Vec trial = u + step;
      const auto trial_r = problem.residuals(trial);
      ++out.evaluations;
      const double trial_cost = all_finite(trial_r) ? 0.5 * sum_sq(trial_r) : std::numeric_limits<double>::infinity();
      const double predicted = -(step.dot(grad) + 0.5 * step.dot(normal * step));
      if (trial_cost < cost) {
        const double gain = predicted > 0.0 ? (cost - trial_cost) / predicted : 1.0;
        mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * gain - 1.0, 3));
        growth = 2.0;
        small_step = step.norm() <= opts.step_tol * (u.norm() + opts.step_tol);
        u = trial;
        r = as_vec(trial_r);
        new_cost = trial_cost;
        accepted = true;
      } else {
        mu *= growth;
        growth *= 2.0;
      }
    }
    if (!accepted) {
      out.converged = true;
      out.stop_reason = "no_further_decrease";
      break;
    }
    const double drop = cost - new_cost;
    cost = new_cost;
    if (opts.progress) opts.progress(out.iterations, cost);
    if (small_step) {
      out.converged = true;
      out.stop_reason = "step";
      break;
    }
    if (drop <= opts.cost_tol * cost) {
      out.converged = true;
      out.stop_reason = "cost";
      break;
    }
  }
  if (out.stop_reason.empty()) out.stop_reason = "iteration_limit";
  out.u = u;
  out.cost = cost;
  return out;
}

std::vector<Vec> latin_hypercube(const Vec& center, int count, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto dim = center.size();
  std::vector<Vec> pts(static_cast<std::size_t>(count), center);
  for (Eigen::Index d = 0; d < dim; ++d) {
    std::vector<int> strata(static_cast<std::size_t>(count));
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    for (int i = 0; i < count; ++i) {
      const double x = (strata[static_cast<std::size_t>(i)] + unit(rng)) / count;
      pts[static_cast<std::size_t>(i)][d] += spread * (2.0 * x - 1.0);
    }
  }
  return pts;
}

void check_within_bounds(const ModelPoint& mp, std::size_t dim, const ParamBounds& b) {
  const auto a = mp.to_array();
  for (std::size_t i = 0; i < dim; ++i) {
    if (!(a[i] >= b.lower[i] && a[i] <= b.upper[i])) {
      std::ostringstream os;
      os << "start parameter " << i << " = " << a[i] << " lies outside [" << b.lower[i] << ", " << b.upper[i] << "]";
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
  }
}

CalibResult run(const CalibProblem& prob, const ModelPoint& start, std::size_t dim, const CalibOptions& opts) {
  prob.validate(dim);
  check_within_bounds(start, dim, prob.bounds);
  const Problem problem(prob, dim, start);
  const Vec u0 = problem.to_free(start);

  LmOutcome best = levenberg_marquardt(problem, u0, opts);
  if (opts.multi_start > 0) {
    for (const auto& u : latin_hypercube(u0, opts.multi_start, opts.multi_start_spread, opts.multi_start_seed)) {
      LmOutcome trial;
      try {
        trial = levenberg_marquardt(problem, u, opts);
      } catch (const Error&) {
        continue;
      }
      best.evaluations += trial.evaluations;
      if (trial.cost < best.cost) {
        trial.evaluations = best.evaluations;
        best = trial;
      }
    }
  }

  CalibResult out;
  out.multiscale = dim == kMultiscaleDim;
  out.start_point = start;
  out.params = problem.from_free(best.u);
  out.residuals = model_residuals(out.params, prob, &out.out_of_band);
  out.objective = sum_sq(out.residuals);
  out.iterations = best.iterations;
  out.evaluations = best.evaluations;
  out.converged = best.converged;
  out.stop_reason = best.stop_reason;
  out.feller_satisfied = out.params.theta.satisfies_feller();
  out.per_expiry_rss = residual_report(out, prob);
  return out;
}

}  // namespace

void ParamBounds::validate() const {
  for (std::size_t i = 0; i < kMultiscaleDim; ++i) {
    if (!(lower[i] <= upper[i])) throw Error(ErrorCode::InvalidArgument, "bounds: lower exceeds upper");
  }
  for (std::size_t i : {0, 2, 3, 4}) {
    if (!(lower[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "bounds: kappa, sigma, theta, z need positive lower bounds");
  }
  if (!(lower[1] > -1.0 && upper[1] < 1.0)) throw Error(ErrorCode::InvalidArgument, "bounds: rho must lie inside (-1, 1)");
}

void CalibProblem::validate(std::size_t free_params) const {
  market.validate();
  bounds.validate();
  const std::size_t n = market.size();
  if (n < free_params) {
    std::ostringstream os;
    os << "calibration needs at least " << free_params << " quotes, got " << n;
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  if (!weights.empty()) {
    if (weights.size() != n) throw Error(ErrorCode::InvalidArgument, "one weight per quote is required");
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "weights must be nonnegative");
    }
  }
  if (!(market.spot > 0.0)) throw Error(ErrorCode::InvalidArgument, "market spot must be positive");
  if (!(feller_penalty >= 0.0)) throw Error(ErrorCode::InvalidArgument, "feller_penalty must be nonnegative");
  quadrature.validate();
}

std::array<double, kMultiscaleDim> ModelPoint::to_array() const noexcept {
  return {theta.kappa, theta.rho, theta.sigma, theta.theta, theta.z, v.v1e, v.v2e, v.v3e, v.v4e};
}

ModelPoint ModelPoint::from_array(const std::array<double, kMultiscaleDim>& a, double rate) noexcept {
  ModelPoint mp;
  mp.theta = {a[0], a[3], a[2], a[1], a[4], rate};
  mp.v = {a[5], a[6], a[7], a[8]};
  return mp;
}

std::vector<double> objective_heston(const std::array<double, kHestonDim>& theta, const CalibProblem& prob) {
  std::array<double, kMultiscaleDim> a{};
  std::copy(theta.begin(), theta.end(), a.begin());
  return model_residuals(ModelPoint::from_array(a), prob, nullptr);
}

std::vector<double> objective_multiscale(const std::array<double, kMultiscaleDim>& phi, const CalibProblem& prob) {
  return model_residuals(ModelPoint::from_array(phi), prob, nullptr);
}

CalibResult calibrate_heston(const CalibProblem& prob, const HestonParams& start, const CalibOptions& opts) {
  return run(prob, ModelPoint{start, {}}, kHestonDim, opts);
}

CalibResult calibrate_multiscale(const CalibProblem& prob, const CalibResult& heston_result, const CalibOptions& opts) {
  if (!heston_result.converged) {
    throw Error(ErrorCode::InvalidArgument, "calibrate_multiscale needs a converged Heston fit");
  }
  return run(prob, ModelPoint{heston_result.params.theta, {}}, kMultiscaleDim, opts);
}

std::vector<ExpiryResidual> residual_report(const CalibResult& result, const CalibProblem& prob) {
  std::vector<ExpiryResidual> out;
  std::size_t offset = 0;
  for (const auto& slice : prob.market.slices) {
    ExpiryResidual row{slice.expiry, slice.points.size(), 0.0};
    for (std::size_t j = 0; j < slice.points.size() && offset + j < result.residuals.size(); ++j) {
      row.mean_sq += result.residuals[offset + j] * result.residuals[offset + j];
    }
    if (row.n_quotes > 0) row.mean_sq /= static_cast<double>(row.n_quotes);
    offset += slice.points.size();
    out.push_back(row);
  }
  return out;
}

std::vector<ResidualComparisonRow> compare_residuals(const std::vector<ExpiryResidual>& heston,
                                                     const std::vector<ExpiryResidual>& multiscale) {
  if (heston.size() != multiscale.size()) {
    throw Error(ErrorCode::InvalidArgument, "residual reports cover different expiries");
  }
  std::vector<ResidualComparisonRow> out;
  for (std::size_t i = 0; i < heston.size(); ++i) {
    if (heston[i].expiry != multiscale[i].expiry) {
      throw Error(ErrorCode::InvalidArgument, "residual reports cover different expiries");
    }
    const double h = heston[i].mean_sq;
    const double m = multiscale[i].mean_sq;
    const double ratio = m > 0.0 ? h / m : (h > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    out.push_back({heston[i].expiry, h, m, ratio});
  }
  return out;
}

}  // namespace msh
