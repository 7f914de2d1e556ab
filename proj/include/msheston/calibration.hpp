#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "msheston/complex_kernel.hpp"
#include "msheston/quadrature.hpp"
#include "msheston/vol_surface.hpp"

namespace msh {

/// Residual assigned to a quote whose model price has no implied vol.
inline constexpr double kOutOfBandPenalty = 1.0;

inline constexpr std::size_t kHestonDim = 5;
inline constexpr std::size_t kMultiscaleDim = 9;

enum class FellerMode {
  /// σ is projected onto σ² ≤ 2κθ at every iterate.
  enforce,
  /// Quadratic penalty on max(0, σ² − 2κθ) during the search.
  penalize,
};

/// Box constraints. Parameter order is Θ = (κ, ρ, σ, θ, z) followed by v₁ᵉ..v₄ᵉ.
struct ParamBounds {
  std::array<double, kMultiscaleDim> lower{1e-3, -0.999, 1e-3, 1e-4, 1e-4, -0.5, -0.5, -0.5, -0.5};
  std::array<double, kMultiscaleDim> upper{50.0, 0.999, 5.0, 4.0, 4.0, 0.5, 0.5, 0.5, 0.5};

  /// Throws InvalidArgument.
  void validate() const;
};

struct CalibProblem {
  VolSurface market;
  /// One nonnegative weight per quote in VolSurface::points() order; empty means uniform.
  std::vector<double> weights;
  ParamBounds bounds;
  FellerMode feller_mode = FellerMode::penalize;
  double feller_penalty = 10.0;
  QuadratureSpec quadrature;

  /// Throws InvalidArgument.
  void validate(std::size_t free_params) const;
};

struct CalibOptions {
  int max_iterations = 100;
  /// Stop when ‖Jᵀr‖∞ falls below this.
  double gradient_tol = 1e-14;
  /// Stop when the step is this small relative to the (transformed) iterate.
  double step_tol = 1e-10;
  /// Stop when an accepted step lowers the cost by less than this fraction.
  double cost_tol = 1e-12;
  /// Forward-difference step, relative to max(|u|, 1) in transformed coordinates.
  double jacobian_step = 1e-6;
  /// Extra starts from a Latin hypercube around the given start; 0 disables.
  int multi_start = 0;
  /// Half-width of the hypercube in transformed coordinates.
  double multi_start_spread = 0.3;
  std::uint64_t multi_start_seed = 7;
  unsigned threads = 1;
  /// Called after every accepted step with the iteration count and ½‖r‖².
  std::function<void(int, double)> progress;
};

/// Parameters of the multi-scale model; Heston when v is zero.
struct ModelPoint {
  HestonParams theta;
  GroupParams v;

  std::array<double, kMultiscaleDim> to_array() const noexcept;
  /// `r` is not part of the calibrated vector and is taken from `rate`.
  static ModelPoint from_array(const std::array<double, kMultiscaleDim>& a, double rate = 0.0) noexcept;
};

struct ExpiryResidual {
  double expiry = 0.0;
  std::size_t n_quotes = 0;
  /// Mean squared implied-vol residual Δ̄²(T).
  double mean_sq = 0.0;
};

struct CalibResult {
  ModelPoint params;
  ModelPoint start_point;
  bool multiscale = false;
  /// Σ w(σ_mkt − σ_model)², penalties for the Feller condition excluded.
  double objective = 0.0;
  std::vector<double> residuals;
  std::vector<ExpiryResidual> per_expiry_rss;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string stop_reason;
  bool feller_satisfied = true;
  std::size_t out_of_band = 0;
};

/// Weighted residuals √w(σ_mkt − σ_model) in VolSurface::points() order.
/// The model's rate for each slice is that slice's rate. A quote whose model
/// price cannot be inverted contributes √w·kOutOfBandPenalty.
std::vector<double> objective_heston(const std::array<double, kHestonDim>& theta, const CalibProblem& prob);
std::vector<double> objective_multiscale(const std::array<double, kMultiscaleDim>& phi, const CalibProblem& prob);

/// Levenberg–Marquardt on the transformed parameters. Throws NonFinite if the
/// objective is not finite at the start.
CalibResult calibrate_heston(const CalibProblem& prob, const HestonParams& start, const CalibOptions& opts = {});

/// Second stage: starts from the fitted Θ* of `heston_result` with v = 0.
CalibResult calibrate_multiscale(const CalibProblem& prob, const CalibResult& heston_result,
                                 const CalibOptions& opts = {});

/// Δ̄²(Tᵢ) for each expiry of the problem, from the stored residuals.
std::vector<ExpiryResidual> residual_report(const CalibResult& result, const CalibProblem& prob);

struct ResidualComparisonRow {
  double expiry = 0.0;
  double heston = 0.0;
  double multiscale = 0.0;
  /// heston / multiscale; infinite when the multi-scale residual is zero.
  double ratio = 0.0;
};

std::vector<ResidualComparisonRow> compare_residuals(const std::vector<ExpiryResidual>& heston,
                                                     const std::vector<ExpiryResidual>& multiscale);

}  // namespace msh
