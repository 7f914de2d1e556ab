#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "msheston/complex_kernel.hpp"
#include "msheston/error.hpp"
#include "msheston/pricer.hpp"
#include "msheston/quadrature.hpp"

namespace msh {

inline constexpr double kMinImpliedVol = 1e-4;
inline constexpr double kMaxImpliedVol = 5.0;

/// Black–Scholes call on a spot paying a continuous yield `dividend`.
double bs_call(double spot, double strike, double expiry, double vol, double rate, double dividend = 0.0);

/// ∂bs_call/∂vol
double bs_vega(double spot, double strike, double expiry, double vol, double rate, double dividend = 0.0);

enum class Bound { lower, upper };

/// The price is outside the no-arbitrage band, or outside what vols in
/// [kMinImpliedVol, kMaxImpliedVol] can produce.
class OutOfBandError : public Error {
 public:
  OutOfBandError(Bound bound, const std::string& what) : Error(ErrorCode::OutOfBand, what), bound_(bound) {}
  Bound bound() const noexcept { return bound_; }

 private:
  Bound bound_;
};

/// Bisection on [kMinImpliedVol, kMaxImpliedVol] with Newton steps accepted
/// whenever they stay inside the current bracket. Throws OutOfBandError.
double implied_vol(double price, double spot, double strike, double expiry, double rate, double dividend = 0.0);

enum class VolSource { market, heston_model, multiscale_model };

const char* to_string(VolSource s) noexcept;
/// Throws ParseError on an unknown name.
VolSource parse_vol_source(const std::string& s);

struct VolPoint {
  double expiry = 0.0;
  double strike = 0.0;
  double implied_vol = 0.0;
  VolSource source = VolSource::market;
};

/// All points of one expiry, strikes strictly increasing.
struct ExpirySlice {
  double expiry = 0.0;
  double rate = 0.0;
  double dividend = 0.0;
  std::vector<VolPoint> points;
};

struct VolSurface {
  double spot = 0.0;
  std::vector<ExpirySlice> slices;

  std::size_t size() const noexcept;
  /// Points in slice order.
  std::vector<VolPoint> points() const;
  /// Throws InvalidArgument.
  void validate() const;
};

struct SurfacePointError {
  double expiry = 0.0;
  double strike = 0.0;
  ErrorCode code = ErrorCode::InvalidArgument;
  std::string message;
};

struct SurfaceResult {
  VolSurface surface;
  std::vector<SurfacePointError> errors;

  bool ok() const noexcept { return errors.empty(); }
};

/// Implied vols of price_corrected() on a grid; `strikes[i]` belongs to
/// `expiries[i]`. The rate is p.r for every expiry. Failing points are
/// collected in `errors` and left out of the surface.
SurfaceResult model_surface(double spot, const std::vector<double>& expiries,
                            const std::vector<std::vector<double>>& strikes, const HestonParams& p,
                            const GroupParams& v, const QuadratureSpec& spec = {}, double dividend = 0.0);

struct ArbitrageWarning {
  double expiry = 0.0;
  double strike = 0.0;
  std::string message;
};

/// Call prices rebuilt from the surface must decrease and be convex in strike.
std::vector<ArbitrageWarning> check_no_arbitrage(const VolSurface& surface, double tol = 1e-10);

/// Columns expiry_years, strike, implied_vol, source; values written with
/// 17 significant digits so a reload reproduces them exactly.
void write_surface_csv(std::ostream& os, const VolSurface& surface);
void write_surface_csv(const std::string& path, const VolSurface& surface);
/// Rebuilds slices from the rows; spot, rates and dividends are not stored and
/// come back as zero. Throws ParseError with the line number.
VolSurface read_surface_csv(std::istream& is);
VolSurface read_surface_csv(const std::string& path);

}  // namespace msh
