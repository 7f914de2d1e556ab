#include "msheston/pricer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <valarray>

namespace msh {

void OptionSpec::validate() const {
  auto fail = [](const char* msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (!(strike > 0.0) || !std::isfinite(strike)) fail("strike must be positive");
  if (!(spot > 0.0) || !std::isfinite(spot)) fail("spot must be positive");
  if (!(expiry > valuation_time) || !std::isfinite(expiry)) fail("expiry must be after valuation_time");
}

namespace {

cplx payoff_transform_unchecked(cplx k, double strike) {
  const cplx i{0.0, 1.0};
  return std::exp((1.0 + i * k) * std::log(strike)) / (i * k - k * k);
}

[[noreturn]] void contour_violation(const char* what, double k_i) {
  std::ostringstream os;
  os << what << " (k_i = " << k_i << ")";
  throw Error(ErrorCode::ContourViolation, os.str());
}

}  // namespace

cplx payoff_transform_call(Wavenumber k, double strike) {
  if (!(k.k_i > 1.0)) contour_violation("call payoff transform requires k_i > 1", k.k_i);
  return payoff_transform_unchecked(k.value(), strike);
}

cplx payoff_transform_put(Wavenumber k, double strike) {
  if (!(k.k_i < 0.0)) contour_violation("put payoff transform requires k_i < 0", k.k_i);
  return payoff_transform_unchecked(k.value(), strike);
}

double decay_scale(const HestonParams& p, double tau) {
  // Floor the √(1−ρ²) factor so the transform stays defined as |ρ| → 1.
  const double shear = std::max(std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho)), 0.05);
  return shear / p.sigma * (p.z + p.kappa * p.theta * tau);
}

double expected_integrated_variance(const HestonParams& p, double tau) {
  const double kt = p.kappa * tau;
  const double mean_reversion = kt > 1e-8 ? -std::expm1(-kt) / p.kappa : tau * (1.0 - 0.5 * kt);
  return p.z * mean_reversion + p.theta * (tau - mean_reversion);
}

double contour_scale(const HestonParams& p, double tau) {
  const double w = expected_integrated_variance(p, tau);
  return std::min(decay_scale(p, tau), 4.0 * std::sqrt(w));
}

namespace {


template <class F>
QuadResult<std::valarray<double>> contour_integral(F&& f, const QuadratureSpec& spec) {
  return integrate_adaptive<std::valarray<double>>(std::forward<F>(f), halfline_breaks(), spec.abs_tol, spec.rel_tol,
                                                   spec.max_subdivisions);
}

// b(s,k) e^{A(τ,k,s)} with ζ(τ) fixed by the caller.
struct CorrectionIntegrand {
  const HestonKernel* kernel;
  const GroupParams* v;
  double tau;
  cplx zeta_tau;

  cplx operator()(double s) const { return kernel->correction_integrand(tau, zeta_tau, s, *v); }
};

// b(s,k) e^{A(t,k,s)} over the triangle 0 ≤ s ≤ t ≤ τ. The inner integral runs
// at fixed t, so ζ(t) is cached for the last t seen.
class TriangleIntegrand {
 public:
  TriangleIntegrand(const HestonKernel& kernel, const GroupParams& v) : kernel_(&kernel), v_(&v) {}

  cplx operator()(double t, double s) const {
    if (t != last_t_) {
      last_t_ = t;
      last_zeta_ = kernel_->zeta(t);
    }
    return CorrectionIntegrand{kernel_, v_, t, last_zeta_}(s);
  }

 private:
  const HestonKernel* kernel_;
  const GroupParams* v_;
  mutable double last_t_ = std::numeric_limits<double>::quiet_NaN();
  mutable cplx last_zeta_;
};

QuadResult<cplx> integrate_f1(const HestonKernel& kernel, double tau, const GroupParams& v, double abs_tol,
                              double rel_tol, int max_subdivisions) {
  if (tau == 0.0) return QuadResult<cplx>{{}, {}, 0, 0, true};
  CorrectionIntegrand integrand{&kernel, &v, tau, kernel.zeta(tau)};
  return integrate_adaptive<cplx>(integrand, 0.0, tau, abs_tol, rel_tol, max_subdivisions);
}

QuadResult<cplx> integrate_f0(const HestonKernel& kernel, double tau, const GroupParams& v, double abs_tol,
                              double rel_tol, int max_subdivisions) {
  if (tau == 0.0) return QuadResult<cplx>{{}, {}, 0, 0, true};
  QuadratureSpec spec;
  spec.abs_tol = abs_tol;
  spec.rel_tol = rel_tol;
  spec.max_subdivisions = max_subdivisions;
  auto rect = triangle_to_rect(TriangleIntegrand(kernel, v));
  return integrate_rect<cplx>(rect, tau, spec);
}

cplx require(const QuadResult<cplx>& r, const char* what) {
  if (!r.converged) {
    std::ostringstream os;
    os << what << " did not converge (error bound " << std::abs(r.error) << ")";
    throw NonConvergenceError(os.str(), std::abs(r.value), std::abs(r.error));
  }
  return r.value;
}

void check_tau(double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::InvalidArgument, "tau must be non-negative");
}

// Everything the contour integrands need at one node u ∈ (0,1).
struct ContourNode {
  HestonKernel kernel;
  std::vector<cplx> weights;  // Ĝ ĥ_j e^{-ikq} / (u C∞), one per strike
  double max_weight = 0.0;
  std::optional<cplx> f1;
  std::optional<cplx> f0;
};

class SliceEvaluator {
 public:
  SliceEvaluator(double spot, double tau, std::span<const double> strikes, PayoffKind payoff, const HestonParams& p,
                 const GroupParams& v, const QuadratureSpec& spec)
      : tau_(tau), log_forward_(p.r * tau + std::log(spot)), p_(p), v_(v), spec_(spec) {
    spec_.c_infinity = contour_scale(p, tau);
    k_i_ = payoff == PayoffKind::call ? spec.contour_k_i : spec.put_contour_k_i;
    if (payoff == PayoffKind::call && !(k_i_ > 1.0)) contour_violation("call contour requires k_i > 1", k_i_);
    if (payoff == PayoffKind::put && !(k_i_ < 0.0)) contour_violation("put contour requires k_i < 0", k_i_);
    log_strikes_.reserve(strikes.size());
    for (double strike : strikes) log_strikes_.push_back(std::log(strike));
  }

  const QuadratureSpec& spec() const { return spec_; }
  std::size_t size() const { return log_strikes_.size(); }

  /// Absolute accuracy the outer integrals need; inner f̂ tolerances derive from it.
  void set_price_scale(double scale) { outer_tol_ = std::max(spec_.abs_tol, spec_.rel_tol * scale); }

  std::valarray<double> heston(double u) {
    const ContourNode& n = node(u);
    std::valarray<double> out(size());
    for (std::size_t j = 0; j < size(); ++j) out[j] = 2.0 * n.weights[j].real();
    return out;
  }

  std::valarray<double> correction_f1(double u) {
    ContourNode& n = node(u);
    if (!n.f1) {
      n.f1 = cplx{};
      if (n.max_weight > 0.0) {
        const auto r =
            integrate_f1(n.kernel, tau_, v_, inner_abs_tol(n), spec_.rel_tol / 10.0, spec_.max_subdivisions);
        inner_ok_ = inner_ok_ && r.converged;
        n.f1 = r.value;
      }
    }
    return weighted(n, *n.f1);
  }

  std::valarray<double> correction_f0(double u) {
    ContourNode& n = node(u);
    if (!n.f0) {
      n.f0 = cplx{};
      if (n.max_weight > 0.0) {
        const auto r =
            integrate_f0(n.kernel, tau_, v_, inner_abs_tol(n), spec_.rel_tol / 10.0, spec_.max_subdivisions);
        inner_ok_ = inner_ok_ && r.converged;
        n.f0 = r.value;
      }
    }
    return weighted(n, *n.f0);
  }

  bool take_inner_ok() {
    const bool ok = inner_ok_;
    inner_ok_ = true;
    return ok;
  }

 private:
  double inner_abs_tol(const ContourNode& n) const { return outer_tol_ / (20.0 * n.max_weight); }

  std::valarray<double> weighted(const ContourNode& n, cplx factor) const {
    std::valarray<double> out(size());
    for (std::size_t j = 0; j < size(); ++j) out[j] = 2.0 * (n.weights[j] * factor).real();
    return out;
  }

  ContourNode& node(double u) {
    auto it = cache_.find(u);
    if (it != cache_.end()) return *it->second;
    auto built = build_with_nudge(u);
    return *cache_.emplace(u, std::move(built)).first->second;
  }

  std::unique_ptr<ContourNode> build_with_nudge(double u) const {
    // An isolated removable singularity on the contour is stepped around
    // rather than failing the whole integral.
    double shifted = u;
    for (int attempt = 0;; ++attempt) {
      try {
        return build(shifted);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NearSingular || attempt >= 4) throw;
        shifted = u * (1.0 - 1e-7 * (attempt + 1));
      }
    }
  }

  std::unique_ptr<ContourNode> build(double u) const {
    const HalflinePoint pt = halfline_point(u, spec_.c_infinity);
    const Wavenumber k{pt.k_r, k_i_};
    HestonKernel kernel(k, p_);
    const cplx kc = k.value();
    const cplx i{0.0, 1.0};
    const cplx big_c = kernel.level_coefficient(tau_);
    const cplx big_d = kernel.variance_coefficient(tau_);
    const cplx common = big_c + p_.z * big_d - i * kc * log_forward_;
    const cplx denom = i * kc - kc * kc;

    auto n = std::unique_ptr<ContourNode>(new ContourNode{kernel, {}, 0.0, std::nullopt, std::nullopt});
    n->weights.reserve(log_strikes_.size());
    for (double log_k : log_strikes_) {
      const cplx w = std::exp(common + (1.0 + i * kc) * log_k) / denom * pt.jacobian;
      n->weights.push_back(std::isfinite(w.real()) && std::isfinite(w.imag()) ? w : cplx{});
      n->max_weight = std::max(n->max_weight, std::abs(n->weights.back()));
    }
    return n;
  }

  double tau_;
  double log_forward_;
  double k_i_ = 1.5;
  HestonParams p_;
  GroupParams v_;
  QuadratureSpec spec_;
  std::vector<double> log_strikes_;
  double outer_tol_ = 1e-9;
  bool inner_ok_ = true;
  std::unordered_map<double, std::unique_ptr<ContourNode>> cache_;
};

[[noreturn]] void slice_nonconvergence(const char* component, double estimate, double bound) {
  std::ostringstream os;
  os << "contour integral " << component << " did not converge (estimate " << estimate << ", error bound " << bound
     << ")";
  throw NonConvergenceError(os.str(), estimate, bound);
}

}  // namespace

cplx f1_hat(double tau, Wavenumber k, const HestonParams& p, const GroupParams& v, const QuadratureSpec& spec) {
  check_tau(tau);
  spec.validate();
  if (tau == 0.0 || v.is_zero()) return {};
  HestonKernel kernel(k, p);
  return require(integrate_f1(kernel, tau, v, spec.abs_tol, spec.rel_tol, spec.max_subdivisions), "f1_hat");
}

cplx f0_hat(double tau, Wavenumber k, const HestonParams& p, const GroupParams& v, const QuadratureSpec& spec) {
  check_tau(tau);
  spec.validate();
  if (tau == 0.0 || v.is_zero()) return {};
  HestonKernel kernel(k, p);
  return require(integrate_f0(kernel, tau, v, spec.abs_tol, spec.rel_tol, spec.max_subdivisions), "f0_hat");
}

std::vector<PriceBreakdown> price_expiry_slice(double spot, double tau, std::span<const double> strikes,
                                               PayoffKind payoff, const HestonParams& p, const GroupParams& v,
                                               const QuadratureSpec& spec) {
  p.validate(FellerCheck::skip);
  spec.validate();
  if (!(spot > 0.0)) throw Error(ErrorCode::InvalidArgument, "spot must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::InvalidArgument, "time to expiry must be positive");
  if (strikes.empty()) throw Error(ErrorCode::InvalidArgument, "no strikes given");
  for (double strike : strikes) {
    if (!(strike > 0.0) || !std::isfinite(strike)) throw Error(ErrorCode::InvalidArgument, "strike must be positive");
  }

  SliceEvaluator eval(spot, tau, strikes, payoff, p, v, spec);
  const double discount = std::exp(-p.r * tau) / (2.0 * std::numbers::pi);
  const std::size_t n = strikes.size();
  std::vector<PriceBreakdown> out(n);

  const auto heston = contour_integral([&](double u) { return eval.heston(u); }, eval.spec());
  if (!heston.converged) slice_nonconvergence("p00", discount * heston.value[0], discount * heston.error.max());
  for (std::size_t j = 0; j < n; ++j) {
    out[j].p00 = heston.value[j];
    out[j].p_heston = discount * heston.value[j];
    out[j].quadrature_error = discount * heston.error[j];
  }
  if (v.is_zero()) return out;

  eval.set_price_scale(std::abs(heston.value).max());
  const auto p11 = contour_integral([&](double u) { return eval.correction_f1(u); }, eval.spec());
  if (!p11.converged || !eval.take_inner_ok()) {
    slice_nonconvergence("p11", discount * p.z * p11.value[0], discount * p.z * p11.error.max());
  }
  const auto p10 = contour_integral([&](double u) { return eval.correction_f0(u); }, eval.spec());
  const double kappa_theta = p.kappa * p.theta;
  if (!p10.converged || !eval.take_inner_ok()) {
    slice_nonconvergence("p10", discount * kappa_theta * p10.value[0], discount * kappa_theta * p10.error.max());
  }

  for (std::size_t j = 0; j < n; ++j) {
    auto& b = out[j];
    b.p10 = p10.value[j];
    b.p11 = p11.value[j];
    b.p_correction = discount * (kappa_theta * b.p10 + p.z * b.p11);
    b.quadrature_error += discount * (kappa_theta * p10.error[j] + p.z * p11.error[j]);
    if (b.total() < 0.0) b.warnings |= kPriceWarningNegative;
  }
  return out;
}

PriceBreakdown price_heston(const OptionSpec& opt, const HestonParams& p, const QuadratureSpec& spec) {
  return price_corrected(opt, p, GroupParams{}, spec);
}

PriceBreakdown price_corrected(const OptionSpec& opt, const HestonParams& p, const GroupParams& v,
                               const QuadratureSpec& spec) {
  opt.validate();
  const double strike = opt.strike;
  return price_expiry_slice(opt.spot, opt.tau(), std::span<const double>(&strike, 1), opt.payoff, p, v, spec).front();
}

std::vector<PriceOutcome> price_grid(std::span<const OptionSpec> opts, const HestonParams& p, const GroupParams& v,
                                     const QuadratureSpec& spec) {
  if (opts.empty()) throw Error(ErrorCode::InvalidArgument, "price_grid needs at least one option");
  for (const auto& o : opts) {
    if (o.spot != opts.front().spot || o.valuation_time != opts.front().valuation_time) {
      throw Error(ErrorCode::InvalidArgument, "price_grid options must share spot and valuation time");
    }
  }
  std::vector<PriceOutcome> out(opts.size());
  for (std::size_t j = 0; j < opts.size(); ++j) {
    try {
      out[j].price = price_corrected(opts[j], p, v, spec);
    } catch (const Error& e) {
      out[j].error_code = e.code();
      out[j].error_message = e.what();
    }
  }
  return out;
}

}  // namespace msh
