#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>

#include "msheston/vol_surface.hpp"

namespace msh {

/// Header of the option-chain CSV, in order.
inline constexpr const char* kChainColumns[] = {"quote_date", "expiry_date", "strike",           "option_type",
                                               "bid",        "ask",         "open_interest",    "underlying_price",
                                               "rate",       "dividend_yield"};

struct ChainFilter {
  /// Rows need strictly more calendar days to expiry than this.
  int min_days = 45;
  /// Rows need strictly more open interest than this.
  long long min_open_interest = 100;
  std::optional<double> rate_override;
  std::optional<double> dividend_override;
};

/// Every row is counted exactly once: total_rows = passed + the rejections.
struct ChainLoadReport {
  std::size_t total_rows = 0;
  std::size_t passed = 0;
  std::size_t rejected_option_type = 0;
  std::size_t rejected_maturity = 0;
  std::size_t rejected_open_interest = 0;
  std::size_t rejected_duplicate = 0;
  std::size_t rejected_no_implied_vol = 0;

  std::size_t rejected() const noexcept {
    return rejected_option_type + rejected_maturity + rejected_open_interest + rejected_duplicate +
           rejected_no_implied_vol;
  }
};

struct ChainLoadResult {
  VolSurface surface;
  ChainLoadReport report;
};

/// Reads call quotes into a market surface of mid-price implied vols.
/// Expiries are calendar days / 365 from the quote date. Puts are rejected
/// by option type, a repeated (expiry, strike) keeps its first row.
/// Throws ParseError (with the line number) for malformed rows and for files
/// mixing quote dates or spots, and EmptyAfterFilter when nothing passes.
ChainLoadResult load_chain(std::istream& is, const ChainFilter& filter = {});
ChainLoadResult load_chain(const std::string& path, const ChainFilter& filter = {});

/// Days since 1970-01-01 of an ISO date (YYYY-MM-DD); nullopt if malformed.
std::optional<long> parse_iso_date(const std::string& s);

}  // namespace msh
