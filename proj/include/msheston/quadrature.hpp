#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <valarray>
#include <vector>

namespace msh {

/// Tolerances and the decay scale used by the half-line transform
/// k_r = −log(u)/C∞.
struct QuadratureSpec {
  double abs_tol = 1e-9;
  double rel_tol = 1e-8;
  int max_subdivisions = 200;
  double c_infinity = 1.0;
  /// Imaginary part of the pricing contour for calls (must exceed 1).
  double contour_k_i = 1.5;
  /// Imaginary part of the pricing contour for puts (must be negative).
  double put_contour_k_i = -0.5;

  void validate() const;
  /// The tolerances used for an integral nested inside this one.
  QuadratureSpec nested() const;
};

template <class T>
struct QuadResult {
  T value{};
  T error{};
  std::size_t evaluations = 0;
  int subdivisions = 0;
  bool converged = false;
};

/// Scalar, complex and componentwise (valarray) arithmetic used by the
/// adaptive integrator.
template <class T>
struct QuadTraits;

template <>
struct QuadTraits<double> {
  static double zero_like(const double&) { return 0.0; }
  static double abs(const double& x) { return std::fabs(x); }
  static double worst_ratio(const double& err, const double& value, double abs_tol, double rel_tol) {
    return err / std::max(abs_tol, rel_tol * std::fabs(value));
  }
  static double magnitude(const double& x) { return std::fabs(x); }
};

template <>
struct QuadTraits<std::complex<double>> {
  using C = std::complex<double>;
  static C zero_like(const C&) { return {}; }
  // Error of a complex integral is tracked per component.
  static C abs(const C& x) { return {std::fabs(x.real()), std::fabs(x.imag())}; }
  static double worst_ratio(const C& err, const C& value, double abs_tol, double rel_tol) {
    return std::hypot(err.real(), err.imag()) / std::max(abs_tol, rel_tol * std::abs(value));
  }
  static double magnitude(const C& x) { return std::abs(x); }
};

template <>
struct QuadTraits<std::valarray<double>> {
  using V = std::valarray<double>;
  static V zero_like(const V& x) { return V(0.0, x.size()); }
  static V abs(const V& x) { return std::abs(x); }
  static double worst_ratio(const V& err, const V& value, double abs_tol, double rel_tol) {
    double worst = 0.0;
    for (std::size_t j = 0; j < err.size(); ++j) {
      worst = std::max(worst, err[j] / std::max(abs_tol, rel_tol * std::fabs(value[j])));
    }
    return worst;
  }
  static double magnitude(const V& x) { return x.size() == 0 ? 0.0 : std::abs(x).max(); }
};

namespace detail {

// 21-point Gauss–Kronrod rule with its embedded 10-point Gauss rule.
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452, 0.930157491355708226001207180059508,
    0.865063366688984510732096688423493, 0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784, 0.294392862701460198131126603103866,
    0.148874338981631210884826001129720, 0.0};
inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390, 0.054755896574351996031381300244580,
    0.075039674810919952767043140916190, 0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208306146680, 0.134709217311473325928054001771707, 0.142775938577060080797094273138717,
    0.147739104901338491374841515972068, 0.149445554002916905664936468389821};
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7, 9.
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697, 0.219086362515982043995534934228163,
    0.269266719309996355091226921569469, 0.295524224714752870173892994651338};

template <class T>
struct Panel {
  double a;
  double b;
  T value;
  T error;
};

template <class T, class F>
Panel<T> gauss_kronrod_panel(F& f, double a, double b) {
  using Tr = QuadTraits<T>;
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  T f_center = f(center);
  T kronrod = f_center * kKronrodWeights[10];
  T gauss = Tr::zero_like(f_center);
  for (std::size_t j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    T f_sum = f(center - dx) + f(center + dx);
    kronrod += f_sum * kKronrodWeights[j];
    if (j % 2 == 1) gauss += f_sum * kGaussWeights[j / 2];
  }
  kronrod *= half;
  gauss *= half;
  T error = Tr::abs(kronrod - gauss);
  return Panel<T>{a, b, kronrod, error};
}

}  // namespace detail

/// Globally adaptive Gauss–Kronrod (G10/K21) integration of f over [a, b].
///
/// The error estimate is |K21 − G10| summed over panels. The rule is open,
/// so f is never evaluated at a or b. The returned result is the snapshot
/// with the smallest error seen, so the reported error never grows with
/// max_subdivisions. Does not throw on non-convergence; see `converged`.
///
/// `breaks` (increasing, at least two points) gives the initial panels;
/// refinement starts from there.
template <class T, class F>
QuadResult<T> integrate_adaptive(F&& f, const std::vector<double>& breaks, double abs_tol, double rel_tol,
                                 int max_subdivisions) {
  using Tr = QuadTraits<T>;
  const std::size_t n0 = breaks.size() - 1;
  std::vector<detail::Panel<T>> panels;
  panels.reserve(std::max(n0, static_cast<std::size_t>(std::max(1, max_subdivisions))));
  for (std::size_t j = 0; j < n0; ++j) panels.push_back(detail::gauss_kronrod_panel<T>(f, breaks[j], breaks[j + 1]));

  QuadResult<T> best;
  best.value = panels.front().value;
  best.error = panels.front().error;
  best.evaluations = 21 * n0;
  best.subdivisions = static_cast<int>(n0);
  double best_error = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 21 * n0;

  while (true) {
    T total = Tr::zero_like(panels.front().value);
    T total_err = Tr::zero_like(panels.front().error);
    for (const auto& p : panels) {
      total += p.value;
      total_err += p.error;
    }
    const double ratio = Tr::worst_ratio(total_err, total, abs_tol, rel_tol);
    const double error_size = Tr::magnitude(total_err);
    if (error_size <= best_error) {
      best_error = error_size;
      best.value = total;
      best.error = total_err;
      best.subdivisions = static_cast<int>(panels.size());
    }
    best.evaluations = evaluations;
    if (ratio <= 1.0) {
      best.converged = true;
      return best;
    }
    if (static_cast<int>(panels.size()) >= max_subdivisions) return best;

    // Split the panel that contributes most relative to the current tolerance.
    std::size_t worst = 0;
    double worst_score = -1.0;
    for (std::size_t j = 0; j < panels.size(); ++j) {
      const double score = Tr::worst_ratio(panels[j].error, total, abs_tol, rel_tol);
      if (score > worst_score) {
        worst_score = score;
        worst = j;
      }
    }
    const auto parent = panels[worst];
    const double mid = 0.5 * (parent.a + parent.b);
    if (!(mid > parent.a && mid < parent.b)) return best;  // interval exhausted
    panels[worst] = detail::gauss_kronrod_panel<T>(f, parent.a, mid);
    panels.push_back(detail::gauss_kronrod_panel<T>(f, mid, parent.b));
    evaluations += 42;
  }
}

template <class T, class F>
QuadResult<T> integrate_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol, int max_subdivisions) {
  return integrate_adaptive<T>(std::forward<F>(f), std::vector<double>{a, b}, abs_tol, rel_tol, max_subdivisions);
}

template <class T, class F>
QuadResult<T> integrate_adaptive(F&& f, double a, double b, const QuadratureSpec& spec) {
  return integrate_adaptive<T>(std::forward<F>(f), a, b, spec.abs_tol, spec.rel_tol, spec.max_subdivisions);
}

/// Breakpoints for ∫₀¹ after the half-line map: geometric towards u = 0,
/// where the mapped integrand varies on the scale of log u.
std::vector<double> halfline_breaks();

/// ∫₀¹ f(u) du. Throws NonConvergenceError with the best estimate when the
/// tolerance is not met within spec.max_subdivisions panels.
QuadResult<double> integrate_unit(const std::function<double(double)>& f, const QuadratureSpec& spec);

/// ∫₀^∞ f(k_r) dk_r through k_r = −log(u)/C∞, so no cutoff is introduced.
QuadResult<double> halfline_via_u(const std::function<double(double)>& f, const QuadratureSpec& spec);

/// Maps u ∈ (0,1) to k_r = −log(u)/C∞ and returns the Jacobian 1/(u C∞).
struct HalflinePoint {
  double k_r;
  double jacobian;
};
inline HalflinePoint halfline_point(double u, double c_infinity) {
  return {-std::log(u) / c_infinity, 1.0 / (u * c_infinity)};
}

/// Rewrites an integrand over the triangle {0 ≤ s ≤ t ≤ τ} as an integrand
/// over the rectangle (t, v) ∈ (0,τ)×(0,1) via s = t v, ds = t dv.
/// f is called as f(t, s).
template <class F>
auto triangle_to_rect(F f) {
  return [f = std::move(f)](double t, double v) { return f(t, t * v) * t; };
}

/// ∫₀^τ ∫₀¹ g(t, v) dv dt with inner tolerances a tenth of the outer ones.
template <class T, class G>
QuadResult<T> integrate_rect(G&& g, double tau, const QuadratureSpec& spec) {
  const QuadratureSpec inner = spec.nested();
  bool inner_ok = true;
  std::size_t inner_evals = 0;
  auto outer = [&](double t) {
    auto slice = [&](double v) { return g(t, v); };
    QuadResult<T> r = integrate_adaptive<T>(slice, 0.0, 1.0, inner);
    inner_ok = inner_ok && r.converged;
    inner_evals += r.evaluations;
    return r.value;
  };
  QuadResult<T> result = integrate_adaptive<T>(outer, 0.0, tau, spec);
  result.converged = result.converged && inner_ok;
  result.evaluations = inner_evals;
  return result;
}

/// Real-valued convenience wrapper: throws NonConvergenceError on failure.
double integrate_triangle(const std::function<double(double, double)>& f, double tau, const QuadratureSpec& spec,
                          double* error_bound = nullptr);

}  // namespace msh
