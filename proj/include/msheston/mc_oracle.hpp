#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "msheston/group_params.hpp"

namespace msh {

enum class VarianceScheme { euler_full_truncation };

/// Update rule for the fast factor Y within one time step.
enum class FastFactorStep {
  /// Exact Ornstein–Uhlenbeck transition with Z frozen at the start of the
  /// step, sampled jointly with the Brownian increment of Y.
  exact_ou,
  /// Plain Euler; requires dt ≤ ε/50.
  euler,
};

struct SimConfig {
  std::size_t n_paths = 100000;
  double dt = 1e-4;
  std::uint64_t seed = 20060517;
  bool antithetic = true;
  VarianceScheme scheme = VarianceScheme::euler_full_truncation;
  FastFactorStep fast_factor_step = FastFactorStep::exact_ou;
  /// Threshold on the fraction of steps whose variance proposal went negative.
  double max_truncation_fraction = 1e-3;
  unsigned threads = 1;

  /// Throws InvalidArgument. Antithetic runs need an even path count.
  void validate(const FullModelParams& fm) const;
};

struct McEstimate {
  double price = 0.0;
  double std_error = 0.0;
  /// False when the sample is too small for a standard error.
  bool std_error_defined = false;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  double truncation_fraction = 0.0;
  bool truncation_exceeded = false;
};

/// Maps independent standard normals (n_x, n_y, n_z) to increments with the
/// target correlations via the Cholesky factor taken in the order z, y, x:
///   W^z = n_z,  W^y = ρ_yz n_z + √(1−ρ_yz²) n_y,  W^x = ρ_xz n_z + a n_y + b n_x.
class BrownianCorrelator {
 public:
  /// Throws NotPositiveDefinite.
  BrownianCorrelator(double rho_xy, double rho_xz, double rho_yz);

  /// Input and output are both ordered (x, y, z).
  std::array<double, 3> operator()(const std::array<double, 3>& n) const noexcept;

 private:
  double yz_, y_perp_, xz_, xy_, x_perp_;
};

/// Terminal spot sample. Antithetic partners sit next to each other.
struct TerminalSample {
  std::vector<double> x_terminal;
  std::size_t n_steps = 0;
  double truncation_fraction = 0.0;
};

/// Throws StepExplosion naming the path and step if a state turns non-finite.
TerminalSample simulate_paths(const FullModelParams& fm, double spot, double horizon, const SimConfig& cfg);

McEstimate mc_price_call(const FullModelParams& fm, double spot, double strike, double expiry, const SimConfig& cfg);

/// Pairwise (cascade) summation.
double pairwise_sum(const double* values, std::size_t n);

}  // namespace msh
