#include <cmath>
#include <numbers>

#include "doctest.h"
#include "msheston/error.hpp"
#include "msheston/quadrature.hpp"

using namespace msh;

TEST_CASE("adaptive Gauss-Kronrod on smooth integrands") {
  const auto r = integrate_adaptive<double>([](double x) { return std::cos(x); }, 0.0, 2.0, 1e-13, 1e-13, 100);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(std::sin(2.0)).epsilon(1e-13));
  CHECK(r.error <= 1e-12);
}

TEST_CASE("open rule survives an integrable endpoint singularity") {
  QuadratureSpec spec;
  spec.abs_tol = 1e-10;
  spec.rel_tol = 1e-10;
  spec.max_subdivisions = 400;
  const auto r = integrate_unit([](double x) { return 1.0 / std::sqrt(x); }, spec);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("complex and vector integrands") {
  using C = std::complex<double>;
  const auto rc = integrate_adaptive<C>([](double x) { return std::exp(C{0.0, x}); }, 0.0, std::numbers::pi, 1e-12,
                                        1e-12, 100);
  CHECK(std::abs(rc.value - C{0.0, 2.0}) < 1e-12);

  using V = std::valarray<double>;
  const auto rv = integrate_adaptive<V>([](double x) { return V{x, x * x, std::exp(x)}; }, 0.0, 1.0, 1e-13, 1e-13, 50);
  CHECK(rv.converged);
  CHECK(rv.value[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(rv.value[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(rv.value[2] == doctest::Approx(std::expm1(1.0)).epsilon(1e-14));
}

TEST_CASE("half-line transform covers the whole tail") {
  QuadratureSpec spec;
  spec.abs_tol = 1e-12;
  spec.rel_tol = 1e-11;
  for (double c : {0.3, 1.0, 4.0}) {
    spec.c_infinity = c;
    CAPTURE(c);
    CHECK(halfline_via_u([](double k) { return std::exp(-k); }, spec).value == doctest::Approx(1.0).epsilon(1e-10));
    if (c <= 1.0) {
      CHECK(halfline_via_u([](double k) { return std::exp(-0.5 * k) * std::cos(k); }, spec).value ==
            doctest::Approx(0.4).epsilon(1e-10));
    }
  }
}

TEST_CASE("halfline_point maps the unit interval onto the half line") {
  const auto a = halfline_point(1.0, 2.0);
  CHECK(a.k_r == 0.0);
  CHECK(a.jacobian == doctest::Approx(0.5));
  const auto b = halfline_point(std::exp(-6.0), 2.0);
  CHECK(b.k_r == doctest::Approx(3.0));
}

TEST_CASE("triangle integrals") {
  QuadratureSpec spec;
  spec.abs_tol = 1e-12;
  spec.rel_tol = 1e-12;
  const double tau = 1.7;
  SUBCASE("area") {
    CHECK(integrate_triangle([](double, double) { return 1.0; }, tau, spec) ==
          doctest::Approx(tau * tau / 2.0).epsilon(1e-12));
  }
  SUBCASE("moment in s") {
    CHECK(integrate_triangle([](double, double s) { return s; }, tau, spec) ==
          doctest::Approx(tau * tau * tau / 6.0).epsilon(1e-12));
  }
  SUBCASE("agrees with the iterated integral in the other order") {
    // ∫₀^τ∫_s^τ e^{-(t-s)} cos s dt ds = ∫₀^τ (1 − e^{−(τ−s)}) cos s ds
    auto f = [](double t, double s) { return std::exp(-(t - s)) * std::cos(s); };
    const auto other = integrate_adaptive<double>(
        [tau](double s) { return -std::expm1(-(tau - s)) * std::cos(s); }, 0.0, tau, 1e-13, 1e-13, 100);
    CHECK(integrate_triangle(f, tau, spec) == doctest::Approx(other.value).epsilon(1e-11));
  }
}

TEST_CASE("non-convergence is reported with the best estimate") {
  QuadratureSpec spec;
  spec.abs_tol = 1e-14;
  spec.rel_tol = 1e-14;
  spec.max_subdivisions = 2;
  auto wild = [](double x) { return std::sin(400.0 * x) / (x + 1e-3); };
  const auto r = integrate_adaptive<double>(wild, 0.0, 1.0, spec);
  CHECK_FALSE(r.converged);
  CHECK(std::isfinite(r.value));
  CHECK_THROWS_AS(integrate_unit(wild, spec), NonConvergenceError);
  try {
    integrate_unit(wild, spec);
  } catch (const NonConvergenceError& e) {
    CHECK(e.code() == ErrorCode::NonConvergence);
    CHECK(std::isfinite(e.estimate()));
    CHECK(e.error_bound() > 0.0);
  }
}

TEST_CASE("best snapshot error does not grow with the panel budget") {
  auto f = [](double x) { return std::sqrt(x) * std::log(x + 1e-300); };
  double previous = INFINITY;
  for (int n : {1, 2, 4, 8, 16, 32}) {
    const auto r = integrate_adaptive<double>(f, 0.0, 1.0, 1e-16, 1e-16, n);
    CHECK(r.error <= previous);
    previous = r.error;
  }
}

TEST_CASE("spec validation") {
  QuadratureSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.abs_tol = -1.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = {};
  spec.max_subdivisions = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = {};
  spec.c_infinity = INFINITY;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("half-line examples") {
  QuadratureSpec spec;
  spec.c_infinity = 0.7;
  SUBCASE("matched exponential decay maps to a constant") {
    const auto r = halfline_via_u([&](double k) { return std::exp(-k * spec.c_infinity); }, spec);
    CHECK(r.value == doctest::Approx(1.0 / spec.c_infinity).epsilon(1e-12));
  }
  SUBCASE("Gaussian tail") {
    const auto r = halfline_via_u([](double k) { return std::exp(-k * k); }, spec);
    CHECK(r.value == doctest::Approx(std::sqrt(std::numbers::pi) / 2.0).epsilon(1e-8));
  }
}

TEST_CASE("breakpoints") {
  const auto b = halfline_breaks();
  REQUIRE(b.size() >= 2);
  CHECK(b.front() == 0.0);
  CHECK(b.back() == 1.0);
  for (std::size_t j = 1; j < b.size(); ++j) CHECK(b[j] > b[j - 1]);
  const auto r = integrate_adaptive<double>([](double x) { return std::cos(x); }, std::vector<double>{0.0, 0.5, 2.0},
                                            1e-13, 1e-13, 50);
  CHECK(r.subdivisions >= 2);
  CHECK(r.value == doctest::Approx(std::sin(2.0)).epsilon(1e-13));
}

TEST_CASE("log-oscillating endpoint is resolved") {
  // Bounded but log-periodic at u = 0, like a contour integrand after the map.
  auto f = [](double u) { return std::cos(5.0 * std::log(u)) + 1.0; };
  // ∫₀¹ cos(a log u) du = 1/(1 + a²)
  const auto r = integrate_adaptive<double>(f, halfline_breaks(), 1e-10, 1e-10, 400);
  CHECK(r.value == doctest::Approx(1.0 + 1.0 / 26.0).epsilon(1e-9));
}
