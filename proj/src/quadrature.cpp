#include "msheston/quadrature.hpp"

#include <sstream>

#include "msheston/error.hpp"

namespace msh {

void QuadratureSpec::validate() const {
  auto fail = [](const char* msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (!(abs_tol > 0.0)) fail("abs_tol must be positive");
  if (!(rel_tol > 0.0)) fail("rel_tol must be positive");
  if (max_subdivisions < 1) fail("max_subdivisions must be at least 1");
  if (!(c_infinity > 0.0) || !std::isfinite(c_infinity)) fail("c_infinity must be positive and finite");
}

QuadratureSpec QuadratureSpec::nested() const {
  QuadratureSpec inner = *this;
  inner.abs_tol = abs_tol / 10.0;
  inner.rel_tol = rel_tol / 10.0;
  return inner;
}

namespace {

QuadResult<double> checked(QuadResult<double> r, const char* what) {
  if (!r.converged) {
    std::ostringstream os;
    os << what << " did not converge: estimate " << r.value << ", error bound " << r.error;
    throw NonConvergenceError(os.str(), r.value, r.error);
  }
  return r;
}

}  // namespace

QuadResult<double> integrate_unit(const std::function<double(double)>& f, const QuadratureSpec& spec) {
  spec.validate();
  return checked(integrate_adaptive<double>(f, 0.0, 1.0, spec), "integrate_unit");
}

QuadResult<double> halfline_via_u(const std::function<double(double)>& f, const QuadratureSpec& spec) {
  spec.validate();
  auto transformed = [&](double u) {
    const HalflinePoint pt = halfline_point(u, spec.c_infinity);
    return f(pt.k_r) * pt.jacobian;
  };
  return checked(
      integrate_adaptive<double>(transformed, halfline_breaks(), spec.abs_tol, spec.rel_tol, spec.max_subdivisions),
      "halfline_via_u");
}

std::vector<double> halfline_breaks() {
  std::vector<double> breaks{0.0};
  for (int e : {-40, -32, -24, -16, -12, -8, -4, -2}) breaks.push_back(std::ldexp(1.0, e));
  breaks.push_back(1.0);
  return breaks;
}

double integrate_triangle(const std::function<double(double, double)>& f, double tau, const QuadratureSpec& spec,
                          double* error_bound) {
  spec.validate();
  if (!(tau >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be non-negative");
  if (tau == 0.0) {
    if (error_bound) *error_bound = 0.0;
    return 0.0;
  }
  const auto r = checked(integrate_rect<double>(triangle_to_rect(f), tau, spec), "integrate_triangle");
  if (error_bound) *error_bound = r.error;
  return r.value;
}

}  // namespace msh
