#include "msheston/msheston.h"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "msheston/calibration.hpp"
#include "msheston/config.hpp"
#include "msheston/error.hpp"
#include "msheston/group_params.hpp"
#include "msheston/market_io.hpp"
#include "msheston/mc_oracle.hpp"
#include "msheston/pricer.hpp"
#include "msheston/vol_surface.hpp"

struct msh_config {
  msh::Config cfg;
  std::string json;
};

struct msh_surface {
  msh::VolSurface surface;
  std::vector<msh::SurfacePointError> errors;
  std::vector<std::string> error_text;
};

struct msh_calibration {
  msh::CalibResult heston;
  msh::CalibResult multiscale;
  std::string json;
};

namespace {

thread_local std::string g_last_error;

msh_status status_of(msh::ErrorCode code) {
  switch (code) {
    case msh::ErrorCode::InvalidArgument:
      return MSH_INVALID_ARGUMENT;
    case msh::ErrorCode::NearSingular:
      return MSH_NEAR_SINGULAR;
    case msh::ErrorCode::BranchCrossing:
      return MSH_BRANCH_CROSSING;
    case msh::ErrorCode::ContourViolation:
      return MSH_CONTOUR_VIOLATION;
    case msh::ErrorCode::NonConvergence:
      return MSH_NON_CONVERGENCE;
    case msh::ErrorCode::NotCentered:
      return MSH_NOT_CENTERED;
    case msh::ErrorCode::NotPositiveDefinite:
      return MSH_NOT_POSITIVE_DEFINITE;
    case msh::ErrorCode::StepExplosion:
      return MSH_STEP_EXPLOSION;
    case msh::ErrorCode::OutOfBand:
      return MSH_OUT_OF_BAND;
    case msh::ErrorCode::NonFinite:
      return MSH_NON_FINITE;
    case msh::ErrorCode::ParseError:
      return MSH_PARSE_ERROR;
    case msh::ErrorCode::EmptyAfterFilter:
      return MSH_EMPTY_AFTER_FILTER;
    case msh::ErrorCode::IoError:
      return MSH_IO_ERROR;
  }
  return MSH_INTERNAL_ERROR;
}

template <class F>
msh_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return MSH_OK;
  } catch (const msh::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MSH_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "unknown failure";
    return MSH_INTERNAL_ERROR;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw msh::Error(msh::ErrorCode::InvalidArgument, what);
}

msh::HestonParams to_cpp(const msh_heston_params& p) { return {p.kappa, p.theta, p.sigma, p.rho, p.z, p.r}; }
msh_heston_params to_c(const msh::HestonParams& p) { return {p.kappa, p.theta, p.sigma, p.rho, p.z, p.r}; }
msh::GroupParams to_cpp(const msh_group_params* v) {
  return v ? msh::GroupParams{v->v1e, v->v2e, v->v3e, v->v4e} : msh::GroupParams{};
}
msh_group_params to_c(const msh::GroupParams& v) { return {v.v1e, v.v2e, v.v3e, v.v4e}; }

msh::QuadratureSpec to_cpp(const msh_quadrature_spec* s) {
  msh::QuadratureSpec q;
  if (!s) return q;
  q.abs_tol = s->abs_tol;
  q.rel_tol = s->rel_tol;
  q.max_subdivisions = s->max_subdivisions;
  q.contour_k_i = s->contour_k_i;
  q.put_contour_k_i = s->put_contour_k_i;
  return q;
}

msh_quadrature_spec to_c(const msh::QuadratureSpec& q) {
  return {q.abs_tol, q.rel_tol, q.max_subdivisions, q.contour_k_i, q.put_contour_k_i};
}

msh::FullModelParams to_cpp(const msh_full_model& f) {
  msh::FullModelParams fm;
  fm.heston = to_cpp(f.heston);
  fm.epsilon = f.epsilon;
  fm.m = f.m;
  fm.nu = f.nu;
  fm.rho_xy = f.rho_xy;
  fm.rho_yz = f.rho_yz;
  fm.y0 = f.y0;
  require(f.f_kind == MSH_F_EXP_OU || f.f_kind == MSH_F_UNIT, "f_kind must be MSH_F_EXP_OU or MSH_F_UNIT");
  fm.f_kind = f.f_kind == MSH_F_UNIT ? msh::FKind::unit : msh::FKind::exp_ou;
  return fm;
}

msh_full_model to_c(const msh::FullModelParams& fm) {
  return {to_c(fm.heston), fm.epsilon, fm.m,  fm.nu, fm.rho_xy, fm.rho_yz, fm.y0,
          fm.f_kind == msh::FKind::unit ? MSH_F_UNIT : MSH_F_EXP_OU};
}

msh::SimConfig to_cpp(const msh_sim_config& c) {
  msh::SimConfig s;
  s.n_paths = static_cast<std::size_t>(c.n_paths);
  s.dt = c.dt;
  s.seed = c.seed;
  s.antithetic = c.antithetic != 0;
  require(c.fast_factor_step == MSH_FAST_EXACT_OU || c.fast_factor_step == MSH_FAST_EULER,
          "fast_factor_step must be MSH_FAST_EXACT_OU or MSH_FAST_EULER");
  s.fast_factor_step = c.fast_factor_step == MSH_FAST_EULER ? msh::FastFactorStep::euler : msh::FastFactorStep::exact_ou;
  s.max_truncation_fraction = c.max_truncation_fraction;
  s.threads = c.threads;
  return s;
}

msh_sim_config to_c(const msh::SimConfig& s) {
  return {s.n_paths,
          s.dt,
          s.seed,
          s.antithetic ? 1 : 0,
          s.fast_factor_step == msh::FastFactorStep::euler ? MSH_FAST_EULER : MSH_FAST_EXACT_OU,
          s.max_truncation_fraction,
          s.threads};
}

msh_price to_c(const msh::PriceBreakdown& b) {
  return {b.total(), b.p_heston, b.p_correction, b.p00, b.p10, b.p11, b.quadrature_error, b.warnings};
}

msh::PayoffKind payoff_of(int payoff) {
  require(payoff == MSH_CALL || payoff == MSH_PUT, "payoff must be MSH_CALL or MSH_PUT");
  return payoff == MSH_PUT ? msh::PayoffKind::put : msh::PayoffKind::call;
}

int source_of(msh::VolSource s) {
  switch (s) {
    case msh::VolSource::market:
      return MSH_SOURCE_MARKET;
    case msh::VolSource::heston_model:
      return MSH_SOURCE_HESTON;
    case msh::VolSource::multiscale_model:
      return MSH_SOURCE_MULTISCALE;
  }
  return MSH_SOURCE_MARKET;
}

nlohmann::json params_json(const msh::CalibResult& r) {
  const auto& t = r.params.theta;
  nlohmann::json j = {{"kappa", t.kappa}, {"theta", t.theta}, {"sigma", t.sigma}, {"rho", t.rho}, {"z", t.z}};
  if (r.multiscale) {
    j["v1e"] = r.params.v.v1e;
    j["v2e"] = r.params.v.v2e;
    j["v3e"] = r.params.v.v3e;
    j["v4e"] = r.params.v.v4e;
  }
  return j;
}

nlohmann::json result_json(const msh::CalibResult& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& e : r.per_expiry_rss) {
    per.push_back({{"expiry_years", e.expiry}, {"n_quotes", e.n_quotes}, {"mean_sq_residual", e.mean_sq}});
  }
  return {{"params", params_json(r)},
          {"objective", r.objective},
          {"per_expiry", per},
          {"iterations", r.iterations},
          {"evaluations", r.evaluations},
          {"converged", r.converged},
          {"stop_reason", r.stop_reason},
          {"feller_satisfied", r.feller_satisfied},
          {"out_of_band_quotes", r.out_of_band}};
}

}  // namespace

extern "C" {

const char* msh_last_error(void) { return g_last_error.c_str(); }

const char* msh_status_name(msh_status status) {
  switch (status) {
    case MSH_OK:
      return "Ok";
    case MSH_INTERNAL_ERROR:
      return "InternalError";
    default:
      break;
  }
  const int i = static_cast<int>(status) - 1;
  if (i < 0 || i > static_cast<int>(msh::ErrorCode::IoError)) return "unknown";
  return msh::to_string(static_cast<msh::ErrorCode>(i));
}

const char* msh_version(void) { return "1.0.0"; }

void msh_quadrature_spec_default(msh_quadrature_spec* out) {
  if (out) *out = to_c(msh::QuadratureSpec{});
}

msh_status msh_price_option(double spot, double strike, double tau, int payoff, const msh_heston_params* p,
                            const msh_group_params* v, const msh_quadrature_spec* spec, msh_price* out) {
  return guarded([&] {
    require(p && out, "msh_price_option: null argument");
    msh::OptionSpec opt{strike, tau, payoff_of(payoff), spot, 0.0};
    *out = to_c(msh::price_corrected(opt, to_cpp(*p), to_cpp(v), to_cpp(spec)));
  });
}

msh_status msh_price_slice(double spot, double tau, const double* strikes, size_t n, int payoff,
                           const msh_heston_params* p, const msh_group_params* v, const msh_quadrature_spec* spec,
                           msh_price* out) {
  return guarded([&] {
    require(p && out && (strikes || n == 0), "msh_price_slice: null argument");
    const auto prices = msh::price_expiry_slice(spot, tau, std::span<const double>(strikes, n), payoff_of(payoff),
                                                to_cpp(*p), to_cpp(v), to_cpp(spec));
    for (std::size_t i = 0; i < n; ++i) out[i] = to_c(prices[i]);
  });
}

double msh_bs_call(double spot, double strike, double expiry, double vol, double rate, double dividend) {
  return msh::bs_call(spot, strike, expiry, vol, rate, dividend);
}

msh_status msh_implied_vol(double price, double spot, double strike, double expiry, double rate, double dividend,
                           double* out) {
  return guarded([&] {
    require(out, "msh_implied_vol: null argument");
    *out = msh::implied_vol(price, spot, strike, expiry, rate, dividend);
  });
}

msh_status msh_group_params_compute(const msh_full_model* fm, msh_group_result* out) {
  return guarded([&] {
    require(fm && out, "msh_group_params_compute: null argument");
    const auto r = msh::compute_group_params(to_cpp(*fm));
    *out = {r.rho_effective, to_c(r.v), {r.unscaled[0], r.unscaled[1], r.unscaled[2], r.unscaled[3]}, r.mean_f,
            r.mean_f2};
  });
}

void msh_sim_config_default(msh_sim_config* out) {
  if (out) *out = to_c(msh::SimConfig{});
}

msh_status msh_mc_price_call(const msh_full_model* fm, double spot, double strike, double expiry,
                             const msh_sim_config* cfg, msh_mc_estimate* out) {
  return guarded([&] {
    require(fm && cfg && out, "msh_mc_price_call: null argument");
    const auto e = msh::mc_price_call(to_cpp(*fm), spot, strike, expiry, to_cpp(*cfg));
    *out = {e.price, e.std_error, e.std_error_defined ? 1 : 0, e.n_paths, e.n_steps, e.truncation_fraction,
            e.truncation_exceeded ? 1 : 0};
  });
}

msh_status msh_config_parse(const char* json_text, msh_config** out) {
  return guarded([&] {
    require(out, "msh_config_parse: null argument");
    *out = nullptr;
    auto cfg = std::make_unique<msh_config>();
    cfg->cfg = json_text ? msh::parse_config(json_text) : msh::default_config();
    *out = cfg.release();
  });
}

msh_status msh_config_load(const char* path, msh_config** out) {
  return guarded([&] {
    require(path && out, "msh_config_load: null argument");
    *out = nullptr;
    auto cfg = std::make_unique<msh_config>();
    cfg->cfg = msh::load_config(path);
    *out = cfg.release();
  });
}

void msh_config_free(msh_config* cfg) { delete cfg; }
void msh_config_heston(const msh_config* cfg, msh_heston_params* out) { *out = to_c(cfg->cfg.heston); }
void msh_config_group(const msh_config* cfg, msh_group_params* out) { *out = to_c(cfg->cfg.group); }
void msh_config_quadrature(const msh_config* cfg, msh_quadrature_spec* out) { *out = to_c(cfg->cfg.quadrature); }
void msh_config_full_model(const msh_config* cfg, msh_full_model* out) { *out = to_c(cfg->cfg.full_model); }
void msh_config_simulation(const msh_config* cfg, msh_sim_config* out) { *out = to_c(cfg->cfg.simulation); }
void msh_config_set_heston(msh_config* cfg, const msh_heston_params* p) { cfg->cfg.heston = to_cpp(*p); }
void msh_config_set_group(msh_config* cfg, const msh_group_params* v) { cfg->cfg.group = to_cpp(v); }

void msh_config_set_full_model(msh_config* cfg, const msh_full_model* fm) {
  cfg->cfg.full_model = to_cpp(*fm);
}

void msh_config_set_simulation(msh_config* cfg, const msh_sim_config* sim) { cfg->cfg.simulation = to_cpp(*sim); }
void msh_config_set_rate_override(msh_config* cfg, double rate) { cfg->cfg.filters.rate_override = rate; }
void msh_config_set_dividend_override(msh_config* cfg, double q) { cfg->cfg.filters.dividend_override = q; }

void msh_config_set_calibration_start(msh_config* cfg, const msh_heston_params* start) {
  cfg->cfg.calibration.start = to_cpp(*start);
}

void msh_config_set_multi_start(msh_config* cfg, int count) { cfg->cfg.calibration.options.multi_start = count; }

const char* msh_config_json(msh_config* cfg) {
  cfg->json = msh::config_to_json(cfg->cfg);
  return cfg->json.c_str();
}

msh_status msh_surface_model(double spot, const double* expiries, size_t n_expiries, const size_t* strike_counts,
                             const double* strikes, const msh_heston_params* p, const msh_group_params* v,
                             const msh_quadrature_spec* spec, double dividend, msh_surface** out) {
  return guarded([&] {
    require(out && p && (n_expiries == 0 || (expiries && strike_counts && strikes)), "msh_surface_model: null argument");
    *out = nullptr;
    std::vector<double> taus(expiries, expiries + n_expiries);
    std::vector<std::vector<double>> grid;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < n_expiries; ++i) {
      grid.emplace_back(strikes + offset, strikes + offset + strike_counts[i]);
      offset += strike_counts[i];
    }
    auto res = msh::model_surface(spot, taus, grid, to_cpp(*p), to_cpp(v), to_cpp(spec), dividend);
    auto s = std::make_unique<msh_surface>();
    s->surface = std::move(res.surface);
    s->errors = std::move(res.errors);
    for (const auto& e : s->errors) {
      std::ostringstream os;
      os << "expiry " << e.expiry << " strike " << e.strike << ": " << msh::to_string(e.code) << ": " << e.message;
      s->error_text.push_back(os.str());
    }
    *out = s.release();
  });
}

msh_status msh_surface_read_csv(const char* path, msh_surface** out) {
  return guarded([&] {
    require(path && out, "msh_surface_read_csv: null argument");
    *out = nullptr;
    auto s = std::make_unique<msh_surface>();
    s->surface = msh::read_surface_csv(std::string(path));
    *out = s.release();
  });
}

msh_status msh_surface_write_csv(const msh_surface* s, const char* path) {
  return guarded([&] {
    require(s && path, "msh_surface_write_csv: null argument");
    if (std::string(path) == "-") {
      msh::write_surface_csv(std::cout, s->surface);
      std::cout.flush();
    } else {
      msh::write_surface_csv(std::string(path), s->surface);
    }
  });
}

size_t msh_surface_size(const msh_surface* s) { return s ? s->surface.size() : 0; }

msh_status msh_surface_point(const msh_surface* s, size_t index, msh_vol_point* out) {
  return guarded([&] {
    require(s && out, "msh_surface_point: null argument");
    std::size_t i = index;
    for (const auto& slice : s->surface.slices) {
      if (i < slice.points.size()) {
        const auto& pt = slice.points[i];
        *out = {pt.expiry, pt.strike, pt.implied_vol, source_of(pt.source)};
        return;
      }
      i -= slice.points.size();
    }
    throw msh::Error(msh::ErrorCode::InvalidArgument, "msh_surface_point: index out of range");
  });
}

size_t msh_surface_error_count(const msh_surface* s) { return s ? s->errors.size() : 0; }

const char* msh_surface_error(const msh_surface* s, size_t index) {
  return s && index < s->error_text.size() ? s->error_text[index].c_str() : nullptr;
}

size_t msh_surface_arbitrage_warnings(const msh_surface* s) {
  return s ? msh::check_no_arbitrage(s->surface).size() : 0;
}

void msh_surface_free(msh_surface* s) { delete s; }

msh_status msh_chain_load(const char* path, const msh_config* cfg, msh_surface** out, msh_chain_report* report) {
  return guarded([&] {
    require(path && out, "msh_chain_load: null argument");
    *out = nullptr;
    const msh::ChainFilter filter = cfg ? cfg->cfg.filters : msh::ChainFilter{};
    auto res = msh::load_chain(std::string(path), filter);
    if (report) {
      const auto& r = res.report;
      *report = {r.total_rows,        r.passed,           r.rejected_option_type,   r.rejected_maturity,
                 r.rejected_open_interest, r.rejected_duplicate, r.rejected_no_implied_vol};
    }
    auto s = std::make_unique<msh_surface>();
    s->surface = std::move(res.surface);
    *out = s.release();
  });
}

msh_status msh_calibrate(const msh_surface* market, const msh_config* cfg, msh_calibration** out) {
  return guarded([&] {
    require(market && out, "msh_calibrate: null argument");
    *out = nullptr;
    const msh::Config config = cfg ? cfg->cfg : msh::default_config();
    const auto& cs = config.calibration;
    msh::CalibProblem prob;
    prob.market = market->surface;
    prob.bounds = cs.bounds;
    prob.feller_mode = cs.feller_mode;
    prob.feller_penalty = cs.feller_penalty;
    prob.quadrature = config.quadrature;

    auto c = std::make_unique<msh_calibration>();
    c->heston = msh::calibrate_heston(prob, cs.start, cs.options);
    c->multiscale = msh::calibrate_multiscale(prob, c->heston, cs.options);

    std::ostringstream data;
    msh::write_surface_csv(data, prob.market);
    nlohmann::json table = nlohmann::json::array();
    for (const auto& row : msh::compare_residuals(c->heston.per_expiry_rss, c->multiscale.per_expiry_rss)) {
      table.push_back({{"expiry_years", row.expiry},
                       {"days", std::lround(row.expiry * 365.0)},
                       {"heston", row.heston},
                       {"multiscale", row.multiscale},
                       {"ratio", std::isfinite(row.ratio) ? nlohmann::json(row.ratio) : nlohmann::json(nullptr)}});
    }
    const nlohmann::json j = {{"heston", result_json(c->heston)},
                              {"multiscale", result_json(c->multiscale)},
                              {"residual_table", table},
                              {"n_quotes", prob.market.size()},
                              {"spot", prob.market.spot},
                              {"provenance",
                               {{"data_hash", msh::fnv1a_hex(data.str())},
                                {"config_hash", msh::fnv1a_hex(msh::config_to_json(config))}}}};
    c->json = j.dump(2);
    *out = c.release();
  });
}

void msh_calibration_heston(const msh_calibration* c, msh_heston_params* out, double* objective) {
  if (out) *out = to_c(c->heston.params.theta);
  if (objective) *objective = c->heston.objective;
}

void msh_calibration_multiscale(const msh_calibration* c, msh_heston_params* theta, msh_group_params* v,
                                double* objective) {
  if (theta) *theta = to_c(c->multiscale.params.theta);
  if (v) *v = to_c(c->multiscale.params.v);
  if (objective) *objective = c->multiscale.objective;
}

const char* msh_calibration_json(const msh_calibration* c) { return c->json.c_str(); }

void msh_calibration_free(msh_calibration* c) { delete c; }

}  // extern "C"
