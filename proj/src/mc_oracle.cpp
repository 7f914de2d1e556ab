#include "msheston/mc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <boost/random/normal_distribution.hpp>

#include "msheston/detail/parallel.hpp"
#include "msheston/error.hpp"

namespace msh {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index) { return splitmix64(splitmix64(seed) ^ index); }

struct PathState {
  double log_x;
  double y;
  double z;
};

struct GroupOutcome {
  double x_plus;
  double x_minus;
  std::size_t truncated;
};

/// One path, or one antithetic pair, of the full model.
class PathStepper {
 public:
  PathStepper(const FullModelParams& fm, double spot, double horizon, const SimConfig& cfg)
      : fm_(fm), cfg_(cfg), corr_(fm.rho_xy, fm.rho_xz(), fm.rho_yz), log_spot_(std::log(spot)) {
    n_steps_ = static_cast<std::size_t>(std::ceil(horizon / cfg.dt - 1e-9));
    n_steps_ = std::max<std::size_t>(n_steps_, 1);
    h_ = horizon / static_cast<double>(n_steps_);
    sqrt_h_ = std::sqrt(h_);
  }

  std::size_t n_steps() const noexcept { return n_steps_; }

  GroupOutcome run(std::size_t group, bool antithetic) const {
    std::mt19937_64 engine(stream_key(cfg_.seed, group));
    boost::random::normal_distribution<double> normal;
    PathState plus{log_spot_, fm_.y0, fm_.heston.z};
    PathState minus = plus;
    std::size_t truncated = 0;
    for (std::size_t step = 0; step < n_steps_; ++step) {
      const std::array<double, 4> n{normal(engine), normal(engine), normal(engine), normal(engine)};
      truncated += advance(plus, n, 1.0, group, step);
      if (antithetic) truncated += advance(minus, n, -1.0, group, step);
    }
    return {std::exp(plus.log_x), antithetic ? std::exp(minus.log_x) : 0.0, truncated};
  }

 private:
  std::size_t advance(PathState& s, const std::array<double, 4>& n, double sign, std::size_t group,
                      std::size_t step) const {
    const auto& hp = fm_.heston;
    const auto w = corr_({sign * n[0], sign * n[1], sign * n[2]});
    const double dwx = sqrt_h_ * w[0];
    const double dwy = sqrt_h_ * w[1];
    const double dwz = sqrt_h_ * w[2];
    const double z_plus = std::max(s.z, 0.0);
    const double vol = std::sqrt(z_plus) * fm_.f(s.y);

    s.log_x += (hp.r - 0.5 * vol * vol) * h_ + vol * dwx;
    s.y = next_fast(s.y, z_plus, dwy, sign * n[3]);
    s.z += hp.kappa * (hp.theta - z_plus) * h_ + hp.sigma * std::sqrt(z_plus) * dwz;

    if (!std::isfinite(s.log_x) || !std::isfinite(s.y) || !std::isfinite(s.z)) {
      std::ostringstream os;
      os << "non-finite state on path group " << group << " at step " << step;
      throw Error(ErrorCode::StepExplosion, os.str());
    }
    return s.z < 0.0 ? 1 : 0;
  }

  double next_fast(double y, double z_plus, double dwy, double extra_normal) const {
    const double rate = z_plus / fm_.epsilon;
    const double diffusion = fm_.nu * std::sqrt(2.0 * rate);
    const double lh = rate * h_;
    if (cfg_.fast_factor_step == FastFactorStep::euler || lh < 1e-8) {
      return y + rate * (fm_.m - y) * h_ + diffusion * dwy;
    }
    // I = ∫ e^{−λ(h−s)} dW_s, jointly Gaussian with ΔW.
    const double em1 = std::expm1(-lh);
    const double var = -em1 * (em1 + 2.0) / (2.0 * rate);
    const double cov = -em1 / rate;
    const double resid = std::max(var - cov * cov / h_, 0.0);
    const double integral = cov / h_ * dwy + std::sqrt(resid) * extra_normal;
    return fm_.m + (y - fm_.m) * (1.0 + em1) + diffusion * integral;
  }

  const FullModelParams& fm_;
  const SimConfig& cfg_;
  BrownianCorrelator corr_;
  double log_spot_;
  std::size_t n_steps_ = 1;
  double h_ = 0.0;
  double sqrt_h_ = 0.0;
};

struct RawSample {
  TerminalSample sample;
  std::size_t truncated = 0;
};

RawSample run_paths(const FullModelParams& fm, double spot, double horizon, const SimConfig& cfg) {
  fm.validate(FellerCheck::skip);
  cfg.validate(fm);
  if (!(spot > 0.0) || !(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "spot and horizon must be positive");
  const PathStepper stepper(fm, spot, horizon, cfg);
  const std::size_t per_group = cfg.antithetic ? 2 : 1;
  const std::size_t n_groups = cfg.n_paths / per_group;
  RawSample out;
  out.sample.x_terminal.assign(cfg.n_paths, 0.0);
  out.sample.n_steps = stepper.n_steps();
  std::vector<std::size_t> truncated(n_groups, 0);
  detail::parallel_for(n_groups, cfg.threads, [&](std::size_t g) {
    const auto r = stepper.run(g, cfg.antithetic);
    out.sample.x_terminal[g * per_group] = r.x_plus;
    if (cfg.antithetic) out.sample.x_terminal[g * per_group + 1] = r.x_minus;
    truncated[g] = r.truncated;
  });
  for (auto t : truncated) out.truncated += t;
  out.sample.truncation_fraction =
      static_cast<double>(out.truncated) / (static_cast<double>(cfg.n_paths) * static_cast<double>(stepper.n_steps()));
  return out;
}

}  // namespace

void SimConfig::validate(const FullModelParams& fm) const {
  if (n_paths < 1) throw Error(ErrorCode::InvalidArgument, "n_paths must be at least 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (antithetic && n_paths % 2 != 0) throw Error(ErrorCode::InvalidArgument, "antithetic sampling needs an even n_paths");
  if (fast_factor_step == FastFactorStep::euler && dt > fm.epsilon / 50.0) {
    throw Error(ErrorCode::InvalidArgument, "euler fast-factor step needs dt <= epsilon/50");
  }
  if (!(max_truncation_fraction >= 0.0)) throw Error(ErrorCode::InvalidArgument, "max_truncation_fraction must be >= 0");
}

BrownianCorrelator::BrownianCorrelator(double rho_xy, double rho_xz, double rho_yz) {
  for (double r : {rho_xy, rho_xz, rho_yz}) {
    if (!(r * r < 1.0)) throw Error(ErrorCode::NotPositiveDefinite, "each correlation must satisfy rho^2 < 1");
  }
  yz_ = rho_yz;
  y_perp_ = std::sqrt(1.0 - rho_yz * rho_yz);
  xz_ = rho_xz;
  xy_ = (rho_xy - rho_xz * rho_yz) / y_perp_;
  const double rest = 1.0 - xz_ * xz_ - xy_ * xy_;
  if (!(rest > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "Brownian correlation matrix is not positive definite");
  x_perp_ = std::sqrt(rest);
}

std::array<double, 3> BrownianCorrelator::operator()(const std::array<double, 3>& n) const noexcept {
  return {xz_ * n[2] + xy_ * n[1] + x_perp_ * n[0], yz_ * n[2] + y_perp_ * n[1], n[2]};
}

TerminalSample simulate_paths(const FullModelParams& fm, double spot, double horizon, const SimConfig& cfg) {
  return run_paths(fm, spot, horizon, cfg).sample;
}

double pairwise_sum(const double* values, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

McEstimate mc_price_call(const FullModelParams& fm, double spot, double strike, double expiry, const SimConfig& cfg) {
  if (!(strike > 0.0)) throw Error(ErrorCode::InvalidArgument, "strike must be positive");
  const auto raw = run_paths(fm, spot, expiry, cfg);
  const auto& xs = raw.sample.x_terminal;
  const double discount = std::exp(-fm.heston.r * expiry);

  // Antithetic partners are averaged first; the pair means are the iid draws.
  const std::size_t per_group = cfg.antithetic ? 2 : 1;
  const std::size_t n = xs.size() / per_group;
  std::vector<double> draws(n);
  for (std::size_t g = 0; g < n; ++g) {
    double s = 0.0;
    for (std::size_t j = 0; j < per_group; ++j) s += std::max(xs[g * per_group + j] - strike, 0.0);
    draws[g] = discount * s / static_cast<double>(per_group);
  }
  McEstimate est;
  est.n_paths = cfg.n_paths;
  est.n_steps = raw.sample.n_steps;
  est.truncation_fraction = raw.sample.truncation_fraction;
  est.truncation_exceeded = est.truncation_fraction > cfg.max_truncation_fraction;
  est.price = pairwise_sum(draws.data(), n) / static_cast<double>(n);
  if (n >= 2) {
    std::vector<double> sq(n);
    for (std::size_t g = 0; g < n; ++g) sq[g] = (draws[g] - est.price) * (draws[g] - est.price);
    const double var = pairwise_sum(sq.data(), n) / static_cast<double>(n - 1);
    est.std_error = std::sqrt(var / static_cast<double>(n));
    est.std_error_defined = true;
  }
  return est;
}

}  // namespace msh
