#include "msheston/complex_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "msheston/error.hpp"

namespace msh {

namespace {

bool near_zero(cplx value, double scale) { return std::abs(value) < kNearSingularFloor * scale; }

[[noreturn]] void throw_near_singular(const char* what, cplx k) {
  std::ostringstream os;
  os << what << " vanishes at k = (" << k.real() << ", " << k.imag() << ")";
  throw Error(ErrorCode::NearSingular, os.str());
}

}  // namespace

void HestonParams::validate(FellerCheck feller) const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (!(kappa > 0.0) || !std::isfinite(kappa)) fail("kappa must be positive and finite");
  if (!(theta > 0.0) || !std::isfinite(theta)) fail("theta must be positive and finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail("sigma must be positive and finite");
  if (!(z > 0.0) || !std::isfinite(z)) fail("z must be positive and finite");
  if (!(rho * rho <= 1.0)) fail("rho must lie in [-1, 1]");
  if (!std::isfinite(r)) fail("r must be finite");
  if (feller == FellerCheck::enforce && !satisfies_feller()) {
    std::ostringstream os;
    os << "Feller condition 2*kappa*theta >= sigma^2 violated (" << 2.0 * kappa * theta << " < "
       << sigma * sigma << ")";
    fail(os.str());
  }
}

HestonKernel::HestonKernel(Wavenumber k, const HestonParams& p)
    : k_(k.value()), sigma2_(p.sigma * p.sigma), kappa_theta_(p.kappa * p.theta) {
  const cplx i{0.0, 1.0};
  beta_ = p.kappa + p.rho * i * k_ * p.sigma;
  d_ = std::sqrt(sigma2_ * (k_ * k_ - i * k_) + beta_ * beta_);
  if (d_.real() < 0.0 || (d_.real() == 0.0 && d_.imag() < 0.0)) d_ = -d_;

  const cplx plus = beta_ + d_;
  if (near_zero(plus, std::abs(beta_) + std::abs(d_))) {
    g_inv_singular_ = true;
  } else {
    g_inv_ = (beta_ - d_) / plus;
  }
}

cplx HestonKernel::root_ratio() const {
  const cplx minus = beta_ - d_;
  if (near_zero(minus, std::abs(beta_) + std::abs(d_))) throw_near_singular("kappa + rho*i*k*sigma - d", k_);
  return (beta_ + d_) / minus;
}

cplx HestonKernel::inverse_root_ratio() const {
  if (g_inv_singular_) throw_near_singular("kappa + rho*i*k*sigma + d", k_);
  return g_inv_;
}

cplx HestonKernel::zeta(double tau) const {
  const cplx g_inv = inverse_root_ratio();
  const cplx denom = g_inv - 1.0;
  if (near_zero(denom, 1.0)) throw_near_singular("1/g - 1", k_);
  return (g_inv * std::exp(-tau * d_) - 1.0) / denom;
}

cplx HestonKernel::log_zeta(double tau) const {
  const cplx zeta_value = zeta(tau);
  if (zeta_value.imag() == 0.0 && zeta_value.real() < 0.0) {
    std::ostringstream os;
    os << "zeta lies on the negative real axis at tau = " << tau << ", k = (" << k_.real() << ", " << k_.imag()
       << ")";
    throw Error(ErrorCode::BranchCrossing, os.str());
  }
  return std::log(zeta_value);
}

cplx HestonKernel::variance_coefficient(double tau) const {
  if (tau == 0.0) return {0.0, 0.0};
  const cplx g_inv = inverse_root_ratio();
  const cplx decay = std::exp(-tau * d_);
  return (beta_ - d_) / sigma2_ * (1.0 - decay) / (1.0 - g_inv * decay);
}

cplx HestonKernel::level_coefficient(double tau) const {
  if (tau == 0.0) return {0.0, 0.0};
  return kappa_theta_ / sigma2_ * ((beta_ - d_) * tau - 2.0 * log_zeta(tau));
}

cplx HestonKernel::transformed_green(double tau, double z) const {
  if (tau == 0.0) return {1.0, 0.0};
  return std::exp(level_coefficient(tau) + z * variance_coefficient(tau));
}

cplx HestonKernel::correction_exponent(double tau, double s) const {
  return correction_exponent(tau, log_zeta(tau), s);
}

cplx HestonKernel::correction_exponent(double tau, cplx log_zeta_tau, double s) const {
  if (s == tau) return {0.0, 0.0};
  if (near_zero(d_, std::max(1.0, std::abs(beta_)))) throw_near_singular("d", k_);
  // (κ + ρikσ + d)(1 − g)/(d g) written with 1/g.
  const cplx prefactor = (beta_ + d_) * (inverse_root_ratio() - 1.0) / d_;
  const cplx elapsed = d_ * (tau - s);
  return prefactor * (elapsed + log_zeta_tau - log_zeta(s)) + elapsed;
}

cplx HestonKernel::correction_source(double tau, const GroupParams& v) const {
  return correction_source_from(variance_coefficient(tau), v);
}

cplx HestonKernel::correction_source_from(cplx big_d, const GroupParams& v) const {
  const cplx i{0.0, 1.0};
  const cplx k2 = k_ * k_;
  return -(v.v1e * big_d * (-k2 + i * k_) + v.v2e * big_d * big_d * (-i * k_) + v.v3e * (i * k2 * k_ + k2) +
           v.v4e * big_d * (-k2));
}

cplx HestonKernel::correction_integrand(double tau, cplx zeta_tau, double s, const GroupParams& v) const {
  const cplx g_inv = inverse_root_ratio();
  const cplx decay_s = std::exp(-s * d_);
  const cplx zeta_s = (g_inv * decay_s - 1.0) / (g_inv - 1.0);
  // 1 − e^{-sd}/g = ζ(s)(1 − 1/g)
  const cplx big_d = (beta_ - d_) / sigma2_ * (1.0 - decay_s) / (zeta_s * (1.0 - g_inv));
  const cplx ratio = zeta_s / zeta_tau;
  return correction_source_from(big_d, v) * std::exp(-(tau - s) * d_) * ratio * ratio;
}

cplx sqrt_discriminant(Wavenumber k, const HestonParams& p) { return HestonKernel(k, p).sqrt_discriminant(); }

cplx root_ratio(Wavenumber k, const HestonParams& p) { return HestonKernel(k, p).root_ratio(); }

cplx variance_coefficient(double tau, Wavenumber k, const HestonParams& p) {
  return HestonKernel(k, p).variance_coefficient(tau);
}

cplx level_coefficient(double tau, Wavenumber k, const HestonParams& p) {
  return HestonKernel(k, p).level_coefficient(tau);
}

cplx transformed_green(double tau, Wavenumber k, const HestonParams& p) {
  return HestonKernel(k, p).transformed_green(tau, p.z);
}

cplx correction_exponent(double tau, Wavenumber k, double s, const HestonParams& p) {
  return HestonKernel(k, p).correction_exponent(tau, s);
}

cplx correction_source(double tau, Wavenumber k, const HestonParams& p, const GroupParams& v) {
  return HestonKernel(k, p).correction_source(tau, v);
}

}  // namespace msh
