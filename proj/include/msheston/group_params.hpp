#pragma once

#include <array>
#include <functional>

#include "msheston/complex_kernel.hpp"

namespace msh {

/// Shape of the volatility-level function f(y) of the fast factor.
enum class FKind {
  /// f(y) = e^{y − m − ν²}, normalized so that ⟨f²⟩ = 1.
  exp_ou,
  /// f ≡ 1; the full model collapses to Heston with ρ = ρ_xz.
  unit,
};

/// Parameters of the full model with both volatility factors.
/// `heston.rho` holds the raw spot/slow-factor correlation ρ_xz.
struct FullModelParams {
  HestonParams heston;
  double epsilon = 1e-2;
  double m = 0.0;
  double nu = 1.0;
  double rho_xy = 0.0;
  double rho_yz = 0.0;
  double y0 = 0.0;
  FKind f_kind = FKind::exp_ou;

  double rho_xz() const noexcept { return heston.rho; }
  double f(double y) const noexcept;

  /// Throws InvalidArgument, or NotPositiveDefinite for an inadmissible
  /// correlation triple.
  void validate(FellerCheck feller = FellerCheck::enforce) const;
};

/// Expectation of g under N(m, ν²).
///
/// Integrates on m ± 8ν first; when the weighted integrand has not decayed
/// below `tol` at the ends the window widens in steps of 4ν. Throws
/// NonConvergenceError if the window reaches ±40ν or the quadrature fails.
double gaussian_average(const std::function<double(double)>& g, double m, double nu, double tol = 1e-13);

/// Derivative χ′ of the polynomial-growth solution of ν²χ″ + (m − y)χ′ = source.
///
/// χ′(y) = (1/(ν²Φ(y)))·∫_{−∞}^{y} source(u)Φ(u) du, evaluated from the lower
/// tail for y < m and from the upper tail for y ≥ m so the ratio never
/// divides by a vanishing density. Throws NotCentered if |⟨source⟩| exceeds
/// `centering_tol`.
std::function<double(double)> poisson_solve_derivative(std::function<double(double)> source, double m, double nu,
                                                       double centering_tol = 1e-9);

struct GroupParamsResult {
  /// ρ_xz⟨f⟩
  double rho_effective = 0.0;
  /// V₁ᵉ..V₄ᵉ = √ε·V₁..V₄
  GroupParams v;
  /// V₁..V₄ without the √ε factor.
  std::array<double, 4> unscaled{};
  double mean_f = 0.0;
  double mean_f2 = 0.0;
};

GroupParamsResult compute_group_params(const FullModelParams& fm);

/// The Heston parameters of the limiting model: ρ replaced by ρ_xz⟨f⟩.
HestonParams effective_heston(const FullModelParams& fm, const GroupParamsResult& gp);

}  // namespace msh
