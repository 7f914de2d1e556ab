#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msheston/complex_kernel.hpp"
#include "msheston/error.hpp"
#include "msheston/quadrature.hpp"

namespace msh {

enum class PayoffKind { call, put };

struct OptionSpec {
  double strike = 100.0;
  double expiry = 1.0;
  PayoffKind payoff = PayoffKind::call;
  double spot = 100.0;
  double valuation_time = 0.0;

  double tau() const noexcept { return expiry - valuation_time; }
  void validate() const;
};

enum PriceWarning : unsigned {
  kPriceWarningNone = 0,
  /// The corrected price came out negative; the first-order term is outside
  /// the region where it is a small correction.
  kPriceWarningNegative = 1u << 0,
};

/// Price split into the Heston term and the first-order correction.
/// p00/p10/p11 are the folded full-line contour integrals, so
/// p_heston = e^{-rτ}/(2π)·p00 and p_correction = e^{-rτ}/(2π)·(κθ·p10 + z·p11).
struct PriceBreakdown {
  double p_heston = 0.0;
  double p_correction = 0.0;
  double p00 = 0.0;
  double p10 = 0.0;
  double p11 = 0.0;
  double quadrature_error = 0.0;
  unsigned warnings = kPriceWarningNone;

  double total() const noexcept { return p_heston + p_correction; }
};

/// Fourier transform of the call payoff in log-forward space, K^{1+ik}/(ik − k²).
/// Throws ContourViolation unless k_i > 1.
cplx payoff_transform_call(Wavenumber k, double strike);

/// Same closed form for the put payoff, valid on k_i < 0.
cplx payoff_transform_put(Wavenumber k, double strike);

/// C∞ = √(1−ρ²)/σ · (z + κθτ), the decay rate of the integrand in k_r.
double decay_scale(const HestonParams& p, double tau);

/// E[∫₀^τ V dt] = zτ̃ + θ(τ − τ̃) with τ̃ = (1 − e^{−κτ})/κ.
double expected_integrated_variance(const HestonParams& p, double tau);

/// Scale actually used in k_r = −log(u)/c: decay_scale(), capped at 4√w with
/// w the expected integrated variance. Below k_r ≈ 1/σ the integrand decays
/// like e^{−wk_r²/2}, which for small σ is much slower than C∞ predicts.
double contour_scale(const HestonParams& p, double tau);

/// f̂₁(τ,k) = ∫₀^τ b(s,k) e^{A(τ,k,s)} ds. Throws NonConvergenceError.
cplx f1_hat(double tau, Wavenumber k, const HestonParams& p, const GroupParams& v, const QuadratureSpec& spec = {});

/// f̂₀(τ,k) = ∫₀^τ f̂₁(t,k) dt, evaluated as the triangle integral
/// ∫₀^τ∫₀^t b(s,k) e^{A(t,k,s)} ds dt mapped onto the unit rectangle.
cplx f0_hat(double tau, Wavenumber k, const HestonParams& p, const GroupParams& v, const QuadratureSpec& spec = {});

PriceBreakdown price_heston(const OptionSpec& opt, const HestonParams& p, const QuadratureSpec& spec = {});

PriceBreakdown price_corrected(const OptionSpec& opt, const HestonParams& p, const GroupParams& v,
                               const QuadratureSpec& spec = {});

/// Prices every strike of one expiry together. The contour integrals are
/// integrated as one vector-valued integrand, so the k-dependent kernel
/// (including the f̂₀/f̂₁ time integrals) is evaluated once per contour node
/// for all strikes. Values agree with price_corrected() to quadrature
/// tolerance.
std::vector<PriceBreakdown> price_expiry_slice(double spot, double tau, std::span<const double> strikes,
                                               PayoffKind payoff, const HestonParams& p, const GroupParams& v,
                                               const QuadratureSpec& spec = {});

struct PriceOutcome {
  std::optional<PriceBreakdown> price;
  std::optional<ErrorCode> error_code;
  std::string error_message;

  bool ok() const noexcept { return price.has_value(); }
};

/// Element-wise price_corrected(); a failing element does not stop the rest.
/// All options must share spot and valuation time.
std::vector<PriceOutcome> price_grid(std::span<const OptionSpec> opts, const HestonParams& p, const GroupParams& v,
                                     const QuadratureSpec& spec = {});

}  // namespace msh
