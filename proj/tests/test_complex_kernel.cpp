#include <random>

#include "doctest.h"
#include "msheston/complex_kernel.hpp"
#include "msheston/error.hpp"
#include "support.hpp"

using namespace msh;
using msh::test::rel_err;

namespace {

// Reference values: 40-digit mpmath evaluation of the formulas as printed,
// at κ=1, θ=1, σ=0.39, ρ=−0.35e^{−1/2}, z=0.24.
const cplx kD_1p2i{1.1017742899520586869, 0.11948883062012708314};
const cplx kG_2i{15.801057964632387326, 0.0};
const cplx kBigD_1_1p2i{0.30818863938868307289, -0.88865487834990830222};
const cplx kBigC_1_1p2i{0.18236534842273009308, -0.5270135757844771995};
const cplx kA_1_07p15i_03{-0.78031371386495869138, 0.0070625217692376758796};
const cplx kB_05_07p15i{0.42537847281759353959, 0.92991066328632300633};

// Textbook forms that take the log of a ratio; valid until that ratio winds
// around the origin.
cplx naive_c(double tau, Wavenumber k, const HestonParams& p) {
  const HestonKernel ker(k, p);
  const cplx b = ker.drift(), d = ker.sqrt_discriminant(), g = ker.root_ratio();
  const cplx e = std::exp(tau * d);
  return p.kappa * p.theta / (p.sigma * p.sigma) * ((b + d) * tau - 2.0 * std::log((1.0 - g * e) / (1.0 - g)));
}

cplx naive_a(double tau, Wavenumber k, double s, const HestonParams& p) {
  const HestonKernel ker(k, p);
  const cplx b = ker.drift(), d = ker.sqrt_discriminant(), g = ker.root_ratio();
  const cplx pref = (b + d) * (1.0 - g) / (d * g);
  return pref * (d * (tau - s) + std::log(ker.zeta(tau) / ker.zeta(s))) + d * (tau - s);
}

}  // namespace

TEST_CASE("sqrt_discriminant degenerate wavenumbers") {
  const auto p = test::table1_printed();
  SUBCASE("k = i collapses to kappa - rho*sigma") {
    const cplx d = sqrt_discriminant({0.0, 1.0}, p);
    CHECK(d.real() == doctest::Approx(p.kappa - p.rho * p.sigma).epsilon(1e-14));
    CHECK(std::fabs(d.imag()) < 1e-14);
  }
  SUBCASE("k = 0 gives kappa") {
    const cplx d = sqrt_discriminant({0.0, 0.0}, p);
    CHECK(d.real() == doctest::Approx(p.kappa).epsilon(1e-15));
    CHECK(d.imag() == 0.0);
  }
}

TEST_CASE("sqrt_discriminant at 1+2i matches high precision") {
  CHECK(rel_err(sqrt_discriminant({1.0, 2.0}, test::table1_printed()), kD_1p2i) < 1e-14);
}

TEST_CASE("sqrt_discriminant takes the principal branch") {
  const auto p = test::table1_printed();
  for (double kr = -60.0; kr <= 60.0; kr += 0.37) {
    const cplx d = sqrt_discriminant({kr, 1.5}, p);
    CHECK(d.real() >= 0.0);
  }
}

TEST_CASE("root_ratio") {
  const auto p = test::table1_printed();
  SUBCASE("pole at k = i") { CHECK_THROWS_AS(root_ratio({0.0, 1.0}, p), Error); }
  SUBCASE("pole reports NearSingular") {
    try {
      root_ratio({0.0, 1.0}, p);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NearSingular);
    }
  }
  SUBCASE("k = 2i matches high precision") { CHECK(rel_err(root_ratio({0.0, 2.0}, p), kG_2i) < 1e-13); }
  SUBCASE("conjugate symmetry along the contour") {
    for (double kr : {0.1, 0.7, 3.0, 12.5, 80.0}) {
      const cplx left = root_ratio({-kr, 1.5}, p);
      const cplx right = root_ratio({kr, 1.5}, p);
      CHECK(rel_err(left, std::conj(right)) < 1e-12);
    }
  }
}

TEST_CASE("variance_coefficient") {
  const auto p = test::table1_printed();
  SUBCASE("vanishes at tau = 0") {
    CHECK(variance_coefficient(0.0, {0.5, 1.5}, p) == cplx{});
    CHECK(variance_coefficient(0.0, {40.0, 1.5}, p) == cplx{});
  }
  SUBCASE("tau = 1, k = 1+2i matches high precision") {
    CHECK(rel_err(variance_coefficient(1.0, {1.0, 2.0}, p), kBigD_1_1p2i) < 1e-13);
  }
  SUBCASE("Riccati residual") {
    const Wavenumber k{0.5, 1.5};
    const HestonKernel ker(k, p);
    const cplx kk = k.value();
    const cplx i{0.0, 1.0};
    const double tau = 1.0;
    const cplx lhs = test::central_diff([&](double t) { return ker.variance_coefficient(t); }, tau, 1e-4);
    const cplx dd = ker.variance_coefficient(tau);
    const cplx rhs = 0.5 * p.sigma * p.sigma * dd * dd - ker.drift() * dd + 0.5 * (-kk * kk + i * kk);
    CHECK(rel_err(lhs, rhs) < 1e-6);
  }
  SUBCASE("grows at most linearly in |k|") {
    auto worst_ratio = [&](double step) {
      double worst = 0.0;
      for (double kr = -50.0; kr <= 50.0; kr += step) {
        for (double tau = 0.05; tau <= 1.0; tau += 0.05) {
          const Wavenumber k{kr, 1.5};
          worst = std::max(worst, std::abs(variance_coefficient(tau, k, p)) / (1.0 + std::abs(k.value())));
        }
      }
      return worst;
    };
    const double coarse = worst_ratio(0.5);
    const double fine = worst_ratio(0.125);
    CHECK(std::isfinite(coarse));
    CHECK(coarse < 10.0);
    CHECK(fine == doctest::Approx(coarse).epsilon(0.02));
  }
}

TEST_CASE("level_coefficient") {
  const auto p = test::table1_printed();
  SUBCASE("vanishes at tau = 0") { CHECK(level_coefficient(0.0, {3.0, 1.5}, p) == cplx{}); }
  SUBCASE("tau = 1, k = 1+2i matches high precision") {
    CHECK(rel_err(level_coefficient(1.0, {1.0, 2.0}, p), kBigC_1_1p2i) < 1e-13);
  }
  SUBCASE("agrees with the log-of-ratio form at small tau") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> kr(-30.0, 30.0);
    for (int n = 0; n < 20; ++n) {
      const Wavenumber k{kr(rng), 1.5};
      const cplx ours = level_coefficient(0.25, k, p);
      CHECK(std::abs(ours - naive_c(0.25, k, p)) < 1e-10 * std::max(1.0, std::abs(ours)));
    }
  }
  SUBCASE("dC/dtau = kappa*theta*D") {
    for (double kr : {0.0, 0.5, 4.0, 25.0}) {
      const HestonKernel ker({kr, 1.5}, p);
      for (double tau : {0.3, 1.0, 2.5}) {
        const cplx lhs = test::central_diff([&](double t) { return ker.level_coefficient(t); }, tau, 1e-4);
        CHECK(rel_err(lhs, p.kappa * p.theta * ker.variance_coefficient(tau)) < 1e-6);
      }
    }
  }
}

TEST_CASE("transformed_green") {
  const auto p = test::table1_printed();
  SUBCASE("equals one at tau = 0") { CHECK(transformed_green(0.0, {7.0, 1.5}, p) == cplx{1.0, 0.0}); }
  SUBCASE("bounded by one for real k") {
    for (double kr : {-10.0, -3.0, 0.5, 3.0, 25.0}) {
      CHECK(std::abs(transformed_green(1.0, {kr, 0.0}, p)) <= 1.0 + 1e-15);
    }
  }
  SUBCASE("identically one at k = 0") {
    for (double tau : {0.01, 0.5, 1.0, 5.0, 20.0}) {
      for (double z : {0.01, 0.24, 2.0}) {
        const HestonKernel ker({0.0, 0.0}, p);
        CHECK(std::abs(ker.transformed_green(tau, z) - 1.0) < 1e-14);
      }
    }
  }
}

TEST_CASE("correction_exponent") {
  const auto p = test::table1_printed();
  SUBCASE("vanishes at s = tau") {
    for (double kr : {0.0, 2.0, 50.0}) CHECK(correction_exponent(0.8, {kr, 1.5}, 0.8, p) == cplx{});
  }
  SUBCASE("tau = 1, s = 0.3, k = 0.7+1.5i matches high precision") {
    CHECK(rel_err(correction_exponent(1.0, {0.7, 1.5}, 0.3, p), kA_1_07p15i_03) < 1e-12);
  }
  SUBCASE("agrees with the log-of-ratio form at small tau - s") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> kr(-20.0, 20.0);
    for (int n = 0; n < 20; ++n) {
      const Wavenumber k{kr(rng), 1.5};
      const cplx ours = correction_exponent(1.0, k, 0.95, p);
      CHECK(std::abs(ours - naive_a(1.0, k, 0.95, p)) < 1e-10 * std::max(1.0, std::abs(ours)));
    }
  }
  SUBCASE("integrand form equals b * exp(A)") {
    const GroupParams v{0.1, -0.2, 0.3, 0.05};
    for (double kr : {0.0, 1.3, 9.0, 60.0}) {
      const HestonKernel ker({kr, 1.5}, p);
      for (double s : {0.0, 0.2, 0.7, 1.0}) {
        const cplx want = ker.correction_source(s, v) * std::exp(ker.correction_exponent(1.0, s));
        const cplx got = ker.correction_integrand(1.0, ker.zeta(1.0), s, v);
        CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
      }
    }
  }
}

TEST_CASE("correction_source") {
  const auto p = test::table1_printed();
  const Wavenumber k{0.7, 1.5};
  SUBCASE("zero group parameters give zero") {
    for (double tau : {0.0, 0.5, 3.0}) CHECK(correction_source(tau, k, p, {}) == cplx{});
  }
  SUBCASE("only V3 survives at tau = 0") {
    const cplx kk = k.value();
    const cplx i{0.0, 1.0};
    const cplx got = correction_source(0.0, k, p, {0.4, -0.3, 0.2, 0.1});
    CHECK(rel_err(got, -0.2 * (i * kk * kk * kk + kk * kk)) < 1e-15);
  }
  SUBCASE("additive in V") {
    const cplx a = correction_source(0.5, k, p, {1.0, 0.0, 0.0, 0.0});
    const cplx b = correction_source(0.5, k, p, {0.0, 1.0, 0.0, 0.0});
    const cplx ab = correction_source(0.5, k, p, {1.0, 1.0, 0.0, 0.0});
    CHECK(std::abs(a + b - ab) < 1e-14 * std::abs(ab));
  }
  SUBCASE("tau = 0.5, k = 0.7+1.5i, V = (0.1, 0.2, 0.3, 0.4) matches high precision") {
    CHECK(rel_err(correction_source(0.5, k, p, {0.1, 0.2, 0.3, 0.4}), kB_05_07p15i) < 1e-13);
  }
}

TEST_CASE("C and A are continuous along the contour") {
  const auto p = test::table1_printed();
  for (double tau : {0.1, 1.0, 3.0}) {
    CAPTURE(tau);
    std::vector<cplx> c_vals, a_vals;
    for (int n = 0; n <= 20000; ++n) {
      const HestonKernel ker({0.01 * n, 1.5}, p);
      c_vals.push_back(ker.level_coefficient(tau));
      a_vals.push_back(ker.correction_exponent(tau, 0.5 * tau));
    }
    CHECK(test::max_jump_ratio(c_vals) < 10.0);
    CHECK(test::max_jump_ratio(a_vals) < 10.0);
  }
}

TEST_CASE("parameter validation") {
  auto p = test::table1();
  CHECK_NOTHROW(p.validate());
  p.sigma = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = test::table1();
  p.sigma = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  CHECK_NOTHROW(p.validate(FellerCheck::skip));
  p = test::table1();
  p.rho = 1.01;
  CHECK_THROWS_AS(p.validate(FellerCheck::skip), Error);
}
