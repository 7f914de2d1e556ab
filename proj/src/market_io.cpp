#include "msheston/market_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include "msheston/csv.hpp"

namespace msh {

namespace {

enum class OptionType { call, put };

std::optional<OptionType> parse_option_type(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "c" || s == "call") return OptionType::call;
  if (s == "p" || s == "put") return OptionType::put;
  return std::nullopt;
}

struct SliceBuilder {
  double rate = 0.0;
  double dividend = 0.0;
  std::size_t first_line = 0;
  std::vector<VolPoint> points;
};

}  // namespace

std::optional<long> parse_iso_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return static_cast<long>(std::chrono::sys_days(ymd).time_since_epoch().count());
}

ChainLoadResult load_chain(std::istream& is, const ChainFilter& filter) {
  CsvReader reader(is, std::vector<std::string>(std::begin(kChainColumns), std::end(kChainColumns)));
  ChainLoadResult out;
  auto& rep = out.report;
  std::optional<long> quote_day;
  std::optional<double> spot;
  std::map<long, SliceBuilder> slices;
  std::set<std::pair<long, double>> seen;

  CsvRow row;
  while (reader.next(row)) {
    ++rep.total_rows;
    const auto qd = parse_iso_date(row.field(0));
    const auto ed = parse_iso_date(row.field(1));
    if (!qd) throw row.error("quote_date is not an ISO date: '" + row.field(0) + "'");
    if (!ed) throw row.error("expiry_date is not an ISO date: '" + row.field(1) + "'");
    const double strike = row.number(2);
    const auto type = parse_option_type(row.field(3));
    if (!type) throw row.error("option_type must be C, P, call or put: '" + row.field(3) + "'");
    const double bid = row.number(4);
    const double ask = row.number(5);
    const long long open_interest = row.integer(6);
    const double underlying = row.number(7);
    double rate = row.number(8);
    double dividend = row.number(9);

    if (!(strike > 0.0)) throw row.error("strike must be positive");
    if (!(bid >= 0.0) || !(bid <= ask)) throw row.error("need 0 <= bid <= ask");
    if (!(*ed > *qd)) throw row.error("expiry_date must follow quote_date");
    if (!(underlying > 0.0)) throw row.error("underlying_price must be positive");
    if (open_interest < 0) throw row.error("open_interest must be nonnegative");
    if (quote_day && *quote_day != *qd) throw row.error("all rows must share one quote_date");
    if (spot && *spot != underlying) throw row.error("all rows must share one underlying_price");
    quote_day = qd;
    spot = underlying;
    if (filter.rate_override) rate = *filter.rate_override;
    if (filter.dividend_override) dividend = *filter.dividend_override;

    const long days = *ed - *qd;
    if (*type != OptionType::call) {
      ++rep.rejected_option_type;
      continue;
    }
    if (!(days > filter.min_days)) {
      ++rep.rejected_maturity;
      continue;
    }
    if (!(open_interest > filter.min_open_interest)) {
      ++rep.rejected_open_interest;
      continue;
    }
    if (!seen.insert({days, strike}).second) {
      ++rep.rejected_duplicate;
      continue;
    }
    const double expiry = static_cast<double>(days) / 365.0;
    auto [it, fresh] = slices.try_emplace(days);
    auto& slice = it->second;
    if (fresh) {
      slice.rate = rate;
      slice.dividend = dividend;
      slice.first_line = row.line();
    } else if (slice.rate != rate || slice.dividend != dividend) {
      std::ostringstream os;
      os << "rate/dividend_yield differ from line " << slice.first_line << " for the same expiry";
      throw row.error(os.str());
    }
    double vol = 0.0;
    try {
      vol = implied_vol(0.5 * (bid + ask), underlying, strike, expiry, rate, dividend);
    } catch (const Error&) {
      seen.erase({days, strike});
      ++rep.rejected_no_implied_vol;
      continue;
    }
    slice.points.push_back({expiry, strike, vol, VolSource::market});
    ++rep.passed;
  }

  if (rep.passed == 0) {
    std::ostringstream os;
    os << "no quotes left after filtering " << rep.total_rows << " rows";
    throw Error(ErrorCode::EmptyAfterFilter, os.str());
  }
  out.surface.spot = *spot;
  for (auto& [days, b] : slices) {
    if (b.points.empty()) continue;
    std::sort(b.points.begin(), b.points.end(), [](const VolPoint& a, const VolPoint& c) { return a.strike < c.strike; });
    out.surface.slices.push_back({b.points.front().expiry, b.rate, b.dividend, std::move(b.points)});
  }
  return out;
}

ChainLoadResult load_chain(const std::string& path, const ChainFilter& filter) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return load_chain(is, filter);
}

}  // namespace msh
