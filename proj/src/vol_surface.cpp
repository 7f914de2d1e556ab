#include "msheston/vol_surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "msheston/csv.hpp"

namespace msh {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

void require_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
}

std::string format_bound(const char* which, double price, double limit) {
  std::ostringstream os;
  os.precision(12);
  os << "price " << price << " violates the " << which << " bound " << limit;
  return os.str();
}

}  // namespace

double bs_call(double spot, double strike, double expiry, double vol, double rate, double dividend) {
  const double fwd_spot = spot * std::exp(-dividend * expiry);
  const double disc_strike = strike * std::exp(-rate * expiry);
  const double sd = vol * std::sqrt(expiry);
  if (!(sd > 0.0)) return std::max(fwd_spot - disc_strike, 0.0);
  const double d1 = std::log(fwd_spot / disc_strike) / sd + 0.5 * sd;
  return fwd_spot * norm_cdf(d1) - disc_strike * norm_cdf(d1 - sd);
}

double bs_vega(double spot, double strike, double expiry, double vol, double rate, double dividend) {
  const double fwd_spot = spot * std::exp(-dividend * expiry);
  const double sd = vol * std::sqrt(expiry);
  if (!(sd > 0.0)) return 0.0;
  const double d1 = std::log(fwd_spot / (strike * std::exp(-rate * expiry))) / sd + 0.5 * sd;
  return fwd_spot * norm_pdf(d1) * std::sqrt(expiry);
}

double implied_vol(double price, double spot, double strike, double expiry, double rate, double dividend) {
  require_positive(spot, "spot");
  require_positive(strike, "strike");
  require_positive(expiry, "expiry");
  if (!std::isfinite(price)) throw Error(ErrorCode::NonFinite, "implied_vol: price is not finite");
  const double fwd_spot = spot * std::exp(-dividend * expiry);
  const double intrinsic = std::max(fwd_spot - strike * std::exp(-rate * expiry), 0.0);
  if (!(price > intrinsic)) throw OutOfBandError(Bound::lower, format_bound("lower", price, intrinsic));
  if (!(price < fwd_spot)) throw OutOfBandError(Bound::upper, format_bound("upper", price, fwd_spot));

  auto excess = [&](double vol) { return bs_call(spot, strike, expiry, vol, rate, dividend) - price; };
  double lo = kMinImpliedVol;
  double hi = kMaxImpliedVol;
  const double f_lo = excess(lo);
  const double f_hi = excess(hi);
  if (f_lo > 0.0) throw OutOfBandError(Bound::lower, format_bound("lower", price, f_lo + price));
  if (f_hi < 0.0) throw OutOfBandError(Bound::upper, format_bound("upper", price, f_hi + price));
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;

  double vol = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = excess(vol);
    if (f == 0.0) return vol;
    if (f < 0.0) {
      lo = vol;
    } else {
      hi = vol;
    }
    if (std::fabs(f) <= 1e-13 * std::max(1.0, price) || hi - lo <= 1e-15 * hi) return vol;
    const double vega = bs_vega(spot, strike, expiry, vol, rate, dividend);
    const double newton = vega > 0.0 ? vol - f / vega : lo - 1.0;
    vol = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
  }
  return vol;
}

const char* to_string(VolSource s) noexcept {
  switch (s) {
    case VolSource::market:
      return "market";
    case VolSource::heston_model:
      return "heston_model";
    case VolSource::multiscale_model:
      return "multiscale_model";
  }
  return "market";
}

VolSource parse_vol_source(const std::string& s) {
  for (auto v : {VolSource::market, VolSource::heston_model, VolSource::multiscale_model}) {
    if (s == to_string(v)) return v;
  }
  throw Error(ErrorCode::ParseError, "unknown surface source '" + s + "'");
}

std::size_t VolSurface::size() const noexcept {
  std::size_t n = 0;
  for (const auto& s : slices) n += s.points.size();
  return n;
}

std::vector<VolPoint> VolSurface::points() const {
  std::vector<VolPoint> out;
  out.reserve(size());
  for (const auto& s : slices) out.insert(out.end(), s.points.begin(), s.points.end());
  return out;
}

void VolSurface::validate() const {
  for (const auto& s : slices) {
    require_positive(s.expiry, "expiry");
    for (std::size_t j = 0; j < s.points.size(); ++j) {
      const auto& pt = s.points[j];
      if (pt.expiry != s.expiry) throw Error(ErrorCode::InvalidArgument, "point expiry differs from its slice");
      require_positive(pt.strike, "strike");
      require_positive(pt.implied_vol, "implied_vol");
      if (j > 0 && !(pt.strike > s.points[j - 1].strike)) {
        throw Error(ErrorCode::InvalidArgument, "strikes within an expiry must be strictly increasing");
      }
    }
  }
}

SurfaceResult model_surface(double spot, const std::vector<double>& expiries,
                            const std::vector<std::vector<double>>& strikes, const HestonParams& p,
                            const GroupParams& v, const QuadratureSpec& spec, double dividend) {
  require_positive(spot, "spot");
  if (expiries.size() != strikes.size()) {
    throw Error(ErrorCode::InvalidArgument, "model_surface: one strike list per expiry is required");
  }
  SurfaceResult out;
  out.surface.spot = spot;
  const VolSource source = v.is_zero() ? VolSource::heston_model : VolSource::multiscale_model;
  for (std::size_t i = 0; i < expiries.size(); ++i) {
    const double tau = expiries[i];
    require_positive(tau, "expiry");
    ExpirySlice slice{tau, p.r, dividend, {}};
    const double carry_spot = spot * std::exp(-dividend * tau);
    std::vector<PriceBreakdown> prices;
    try {
      prices = price_expiry_slice(carry_spot, tau, strikes[i], PayoffKind::call, p, v, spec);
    } catch (const Error& e) {
      for (double k : strikes[i]) out.errors.push_back({tau, k, e.code(), e.what()});
      continue;
    }
    for (std::size_t j = 0; j < prices.size(); ++j) {
      const double k = strikes[i][j];
      try {
        slice.points.push_back({tau, k, implied_vol(prices[j].total(), spot, k, tau, p.r, dividend), source});
      } catch (const Error& e) {
        out.errors.push_back({tau, k, e.code(), e.what()});
      }
    }
    out.surface.slices.push_back(std::move(slice));
  }
  return out;
}

std::vector<ArbitrageWarning> check_no_arbitrage(const VolSurface& surface, double tol) {
  std::vector<ArbitrageWarning> out;
  for (const auto& s : surface.slices) {
    std::vector<double> calls;
    for (const auto& pt : s.points) {
      calls.push_back(bs_call(surface.spot, pt.strike, s.expiry, pt.implied_vol, s.rate, s.dividend));
    }
    for (std::size_t j = 1; j < calls.size(); ++j) {
      if (calls[j] > calls[j - 1] + tol) {
        out.push_back({s.expiry, s.points[j].strike, "call price increases with strike"});
      }
    }
    for (std::size_t j = 1; j + 1 < calls.size(); ++j) {
      const double k0 = s.points[j - 1].strike, k1 = s.points[j].strike, k2 = s.points[j + 1].strike;
      const double chord = calls[j - 1] + (calls[j + 1] - calls[j - 1]) * (k1 - k0) / (k2 - k0);
      if (calls[j] > chord + tol) out.push_back({s.expiry, k1, "call price is not convex in strike"});
    }
  }
  return out;
}

void write_surface_csv(std::ostream& os, const VolSurface& surface) {
  os << "expiry_years,strike,implied_vol,source\n";
  char buf[96];
  for (const auto& pt : surface.points()) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,", pt.expiry, pt.strike, pt.implied_vol);
    os << buf << to_string(pt.source) << '\n';
  }
}

void write_surface_csv(const std::string& path, const VolSurface& surface) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  write_surface_csv(os, surface);
  if (!os) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

VolSurface read_surface_csv(std::istream& is) {
  CsvReader reader(is, {"expiry_years", "strike", "implied_vol", "source"});
  std::map<double, ExpirySlice> by_expiry;
  CsvRow row;
  while (reader.next(row)) {
    VolPoint pt{row.number(0), row.number(1), row.number(2), {}};
    try {
      pt.source = parse_vol_source(row.field(3));
    } catch (const Error& e) {
      throw row.error(e.what());
    }
    auto& slice = by_expiry[pt.expiry];
    slice.expiry = pt.expiry;
    slice.points.push_back(pt);
  }
  VolSurface out;
  for (auto& [_, slice] : by_expiry) {
    std::stable_sort(slice.points.begin(), slice.points.end(),
                     [](const VolPoint& a, const VolPoint& b) { return a.strike < b.strike; });
    out.slices.push_back(std::move(slice));
  }
  return out;
}

VolSurface read_surface_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return read_surface_csv(is);
}

}  // namespace msh
