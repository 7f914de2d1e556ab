#pragma once

#include <complex>

namespace msh {

using cplx = std::complex<double>;

/// Relative floor below which a denominator is treated as vanishing.
inline constexpr double kNearSingularFloor = 1e-12;

enum class FellerCheck { enforce, skip };

/// Heston parameters of the limiting (ε → 0) model. `rho` is the effective
/// spot/variance correlation, `z` the current instantaneous variance.
struct HestonParams {
  double kappa = 1.0;
  double theta = 0.04;
  double sigma = 0.3;
  double rho = 0.0;
  double z = 0.04;
  double r = 0.0;

  bool satisfies_feller() const noexcept { return 2.0 * kappa * theta >= sigma * sigma; }

  /// Throws Error(InvalidArgument) on a violated invariant.
  void validate(FellerCheck feller = FellerCheck::enforce) const;
};

/// First-order correction coefficients V₁ᵉ..V₄ᵉ (already carrying the √ε factor).
struct GroupParams {
  double v1e = 0.0;
  double v2e = 0.0;
  double v3e = 0.0;
  double v4e = 0.0;

  bool is_zero() const noexcept { return v1e == 0.0 && v2e == 0.0 && v3e == 0.0 && v4e == 0.0; }
};

/// Point k = k_r + i k_i on a horizontal integration contour.
struct Wavenumber {
  double k_r = 0.0;
  double k_i = 0.0;

  cplx value() const noexcept { return {k_r, k_i}; }
};

/// The k-dependent part of the transformed Heston Green's function and of the
/// correction kernel. Everything that does not depend on τ or s is computed
/// once at construction, so one instance can be reused across the inner time
/// integrals of a price evaluation.
///
/// Time-dependent pieces use the e^{-τd} representation: C goes through
/// log ζ(τ,k) with ζ = (e^{-τd}/g − 1)/(1/g − 1), which keeps the principal
/// logarithm continuous along the contour, and A is built from the
/// difference log ζ(τ) − log ζ(s) rather than the log of their ratio.
class HestonKernel {
 public:
  HestonKernel(Wavenumber k, const HestonParams& p);

  cplx k() const noexcept { return k_; }
  /// κ + ρ i k σ
  cplx drift() const noexcept { return beta_; }
  /// Principal square root of σ²(k² − ik) + (κ + ρikσ)², Re ≥ 0.
  cplx sqrt_discriminant() const noexcept { return d_; }
  /// g(k) as written; throws NearSingular when κ + ρikσ − d vanishes.
  cplx root_ratio() const;
  /// 1/g(k); finite wherever κ + ρikσ + d does not vanish.
  cplx inverse_root_ratio() const;

  cplx zeta(double tau) const;
  cplx log_zeta(double tau) const;
  /// D(τ,k)
  cplx variance_coefficient(double tau) const;
  /// C(τ,k)
  cplx level_coefficient(double tau) const;
  /// Ĝ(τ,k,z) = exp(C + zD)
  cplx transformed_green(double tau, double z) const;
  /// A(τ,k,s), 0 ≤ s ≤ τ
  cplx correction_exponent(double tau, double s) const;
  /// Same as correction_exponent() with log ζ(τ) supplied by the caller.
  cplx correction_exponent(double tau, cplx log_zeta_tau, double s) const;
  /// b(τ,k); linear in v.
  cplx correction_source(double tau, const GroupParams& v) const;
  /// b(τ,k) given a precomputed D(τ,k).
  cplx correction_source_from(cplx big_d, const GroupParams& v) const;

  /// b(s,k)·e^{A(τ,k,s)}, the f̂₁ integrand, given ζ(τ,k). Exponentiating the
  /// difference-of-logs form of A gives e^{-d(τ-s)}·(ζ(s)/ζ(τ))², because the
  /// prefactor (κ+ρikσ+d)(1−g)/(d g) is identically −2; no logarithm is taken.
  cplx correction_integrand(double tau, cplx zeta_tau, double s, const GroupParams& v) const;

 private:
  cplx k_;
  cplx beta_;
  cplx d_;
  cplx g_inv_;
  double sigma2_;
  double kappa_theta_;
  bool g_inv_singular_ = false;
};

// Free-function forms of the kernel; each builds a HestonKernel on the fly.
cplx sqrt_discriminant(Wavenumber k, const HestonParams& p);
cplx root_ratio(Wavenumber k, const HestonParams& p);
cplx variance_coefficient(double tau, Wavenumber k, const HestonParams& p);
cplx level_coefficient(double tau, Wavenumber k, const HestonParams& p);
cplx transformed_green(double tau, Wavenumber k, const HestonParams& p);
cplx correction_exponent(double tau, Wavenumber k, double s, const HestonParams& p);
cplx correction_source(double tau, Wavenumber k, const HestonParams& p, const GroupParams& v);

}  // namespace msh
