#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "msheston/complex_kernel.hpp"
#include "msheston/group_params.hpp"

namespace msh::test {

/// ⟨f⟩ for f(y) = e^{y − m − ν²} with ν = 1.
inline const double kMeanF = std::exp(-0.5);

/// Table-1 Heston parameters as printed (θ = 1).
inline HestonParams table1_printed() { return {1.0, 1.0, 0.39, -0.35 * kMeanF, 0.24, 0.05}; }

/// Table-1 Heston parameters with θ = 0.24, which reproduces the printed prices.
inline HestonParams table1() { return {1.0, 0.24, 0.39, -0.35 * kMeanF, 0.24, 0.05}; }

/// Figure-1 Heston parameters (ρ_xz = −0.64 scaled by ⟨f⟩).
inline HestonParams figure1() { return {3.4, 0.024, 0.39, -0.64 * kMeanF, 0.04, 0.0}; }

inline FullModelParams table1_full(double epsilon) {
  FullModelParams fm;
  fm.heston = table1();
  fm.heston.rho = -0.35;
  fm.epsilon = epsilon;
  fm.m = 0.06;
  fm.nu = 1.0;
  fm.rho_xy = -0.35;
  fm.rho_yz = 0.35;
  fm.y0 = 0.06;
  return fm;
}

/// Central difference of a complex function of one real variable.
inline std::complex<double> central_diff(const std::function<std::complex<double>(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Largest ratio of a step |F(i+1) − F(i)| to the larger neighbouring step,
/// i.e. how much bigger one increment is than its local slope suggests.
inline double max_jump_ratio(const std::vector<std::complex<double>>& values, double floor = 1e-12) {
  double worst = 0.0;
  for (std::size_t i = 1; i + 2 < values.size(); ++i) {
    const double step = std::abs(values[i + 1] - values[i]);
    const double local = std::max(std::abs(values[i] - values[i - 1]), std::abs(values[i + 2] - values[i + 1]));
    worst = std::max(worst, step / (local + floor));
  }
  return worst;
}

inline double rel_err(std::complex<double> got, std::complex<double> want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace msh::test

namespace msh::test {

/// Heston call price by Gil-Pelaez inversion of the little-trap
/// characteristic function, composite Simpson on [0, 200].
inline double heston_call_reference(double spot, double strike, double tau, const HestonParams& p) {
  using C = std::complex<double>;
  const C i{0.0, 1.0};
  const double x = std::log(spot);
  auto phi = [&](C u) {
    const C b = p.kappa - p.rho * p.sigma * i * u;
    const C d = std::sqrt(b * b + p.sigma * p.sigma * (i * u + u * u));
    const C g = (b - d) / (b + d);
    const C e = std::exp(-d * tau);
    const C cc = p.kappa * p.theta / (p.sigma * p.sigma) * ((b - d) * tau - 2.0 * std::log((1.0 - g * e) / (1.0 - g)));
    const C dd = (b - d) / (p.sigma * p.sigma) * (1.0 - e) / (1.0 - g * e);
    return std::exp(i * u * (x + p.r * tau) + cc + dd * p.z);
  };
  const C phi_minus_i = phi(-i);
  auto integrand = [&](double u, int which) {
    const C uu{u, 0.0};
    const C num = which == 1 ? phi(uu - i) / phi_minus_i : phi(uu);
    return (std::exp(-i * u * std::log(strike)) * num / (i * u)).real();
  };
  auto prob = [&](int which) {
    const int n = 20000;
    const double a = 1e-10, b = 200.0, h = (b - a) / n;
    double s = integrand(a, which) + integrand(b, which);
    for (int j = 1; j < n; ++j) s += (j % 2 ? 4.0 : 2.0) * integrand(a + j * h, which);
    return 0.5 + s * h / 3.0 / std::numbers::pi;
  };
  return spot * prob(1) - strike * std::exp(-p.r * tau) * prob(2);
}

}  // namespace msh::test

#include "msheston/calibration.hpp"
#include "msheston/vol_surface.hpp"

namespace msh::test {

/// Θ* used for synthetic calibration data.
inline HestonParams synthetic_theta() { return {2.0, 0.04, 0.3, -0.6, 0.05, 0.05}; }
inline GroupParams synthetic_v() { return {-0.004, 0.001, 0.006, -0.002}; }

/// Model implied vols on a rectangular grid, every slice at rate p.r.
inline VolSurface synthetic_market(const HestonParams& p, const GroupParams& v, const std::vector<double>& expiries,
                                   const std::vector<double>& strikes, double spot = 100.0) {
  std::vector<std::vector<double>> grid(expiries.size(), strikes);
  auto res = model_surface(spot, expiries, grid, p, v);
  if (!res.ok()) throw Error(ErrorCode::InvalidArgument, "synthetic surface has failing points");
  for (auto& slice : res.surface.slices) {
    for (auto& pt : slice.points) pt.source = VolSource::market;
  }
  return res.surface;
}

}  // namespace msh::test
