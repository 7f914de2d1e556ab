#include "msheston/group_params.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "msheston/error.hpp"
#include "msheston/quadrature.hpp"

namespace msh {

namespace {

constexpr double kInitialHalfWidth = 8.0;
constexpr double kWidthStep = 4.0;
constexpr double kMaxHalfWidth = 40.0;
constexpr double kTailLength = 12.0;

double standard_density(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

void require_correlation(double rho, const char* name) {
  if (!(rho * rho < 1.0)) {
    std::ostringstream os;
    os << name << " must satisfy " << name << "^2 < 1, got " << rho;
    throw Error(ErrorCode::NotPositiveDefinite, os.str());
  }
}

}  // namespace

double FullModelParams::f(double y) const noexcept {
  switch (f_kind) {
    case FKind::exp_ou:
      return std::exp(y - m - nu * nu);
    case FKind::unit:
      return 1.0;
  }
  return 1.0;
}

void FullModelParams::validate(FellerCheck feller) const {
  heston.validate(feller);
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw Error(ErrorCode::InvalidArgument, "nu must be positive");
  if (!std::isfinite(m) || !std::isfinite(y0)) throw Error(ErrorCode::InvalidArgument, "m and y0 must be finite");
  require_correlation(rho_xy, "rho_xy");
  require_correlation(rho_xz(), "rho_xz");
  require_correlation(rho_yz, "rho_yz");
  const double det_gap = rho_xy * rho_xy + rho_xz() * rho_xz() + rho_yz * rho_yz - 2.0 * rho_xy * rho_xz() * rho_yz;
  if (!(det_gap < 1.0)) throw Error(ErrorCode::NotPositiveDefinite, "Brownian correlation matrix is not positive definite");
}

double gaussian_average(const std::function<double(double)>& g, double m, double nu, double tol) {
  if (!(nu > 0.0)) throw Error(ErrorCode::InvalidArgument, "gaussian_average: nu must be positive");
  auto weighted = [&](double x) { return g(m + nu * x) * standard_density(x); };
  for (double half = kInitialHalfWidth; half <= kMaxHalfWidth; half += kWidthStep) {
    const auto r = integrate_adaptive<double>(weighted, -half, half, tol, 1e-13, 400);
    if (!r.converged || !std::isfinite(r.value)) {
      throw NonConvergenceError("gaussian_average: quadrature did not converge", r.value, r.error);
    }
    const double edge = std::max(std::fabs(weighted(-half)), std::fabs(weighted(half)));
    if (edge <= tol * std::max(1.0, std::fabs(r.value))) return r.value;
  }
  throw NonConvergenceError("gaussian_average: integrand does not decay within 40 standard deviations", 0.0, 0.0);
}

std::function<double(double)> poisson_solve_derivative(std::function<double(double)> source, double m, double nu,
                                                       double centering_tol) {
  if (!(nu > 0.0)) throw Error(ErrorCode::InvalidArgument, "poisson_solve_derivative: nu must be positive");
  const double mean = gaussian_average(source, m, nu);
  if (std::fabs(mean) > centering_tol) {
    std::ostringstream os;
    os << "poisson source has mean " << mean << ", tolerance " << centering_tol;
    throw Error(ErrorCode::NotCentered, os.str());
  }
  return [source = std::move(source), m, nu](double y) {
    // Φ(y ∓ t)/Φ(y) = exp(−t²/(2ν²) ± t(y − m)/ν²), bounded by the Gaussian factor on the chosen side.
    const double nu2 = nu * nu;
    const double shift = y - m;
    const double length = kTailLength * nu;
    if (shift < 0.0) {
      auto lower = [&](double t) { return source(y - t) * std::exp(-t * t / (2.0 * nu2) + t * shift / nu2); };
      const auto r = integrate_adaptive<double>(lower, 0.0, length, 1e-14, 1e-12, 400);
      return r.value / nu2;
    }
    auto upper = [&](double t) { return source(y + t) * std::exp(-t * t / (2.0 * nu2) - t * shift / nu2); };
    const auto r = integrate_adaptive<double>(upper, 0.0, length, 1e-14, 1e-12, 400);
    return -r.value / nu2;
  };
}

GroupParamsResult compute_group_params(const FullModelParams& fm) {
  fm.validate(FellerCheck::skip);
  GroupParamsResult out;
  auto f = [&fm](double y) { return fm.f(y); };
  out.mean_f = gaussian_average(f, fm.m, fm.nu);
  out.mean_f2 = gaussian_average([&](double y) { return f(y) * f(y); }, fm.m, fm.nu);
  out.rho_effective = fm.rho_xz() * out.mean_f;
  if (fm.f_kind == FKind::exp_ou && std::fabs(out.mean_f2 - 1.0) > 1e-10) {
    throw NonConvergenceError("<f^2> deviates from 1 under exp_ou", out.mean_f2, std::fabs(out.mean_f2 - 1.0));
  }

  const double mean_f = out.mean_f;
  const double mean_f2 = out.mean_f2;
  const auto phi_prime = poisson_solve_derivative([=, &fm](double y) { return 0.5 * (fm.f(y) * fm.f(y) - mean_f2); },
                                                  fm.m, fm.nu);
  const auto psi_prime = poisson_solve_derivative([=, &fm](double y) { return fm.f(y) - mean_f; }, fm.m, fm.nu);

  const double avg_phi = gaussian_average(phi_prime, fm.m, fm.nu);
  const double avg_psi = gaussian_average(psi_prime, fm.m, fm.nu);
  const double avg_f_phi = gaussian_average([&](double y) { return f(y) * phi_prime(y); }, fm.m, fm.nu);
  const double avg_f_psi = gaussian_average([&](double y) { return f(y) * psi_prime(y); }, fm.m, fm.nu);

  const double sigma = fm.heston.sigma;
  const double scale = fm.nu * std::numbers::sqrt2;
  out.unscaled = {
      fm.rho_yz * sigma * scale * avg_phi,
      fm.rho_xz() * fm.rho_yz * sigma * sigma * scale * avg_psi,
      fm.rho_xy * scale * avg_f_phi,
      fm.rho_xy * fm.rho_xz() * sigma * scale * avg_f_psi,
  };
  const double root_eps = std::sqrt(fm.epsilon);
  out.v = {root_eps * out.unscaled[0], root_eps * out.unscaled[1], root_eps * out.unscaled[2],
           root_eps * out.unscaled[3]};
  return out;
}

HestonParams effective_heston(const FullModelParams& fm, const GroupParamsResult& gp) {
  HestonParams p = fm.heston;
  p.rho = gp.rho_effective;
  return p;
}

}  // namespace msh
