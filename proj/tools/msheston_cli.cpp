#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "msheston/msheston.h"

namespace {

using nlohmann::json;

constexpr int kExitParse = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitNonConvergence = 4;
constexpr int kExitInternal = 1;

int exit_code(msh_status s) {
  switch (s) {
    case MSH_OK:
      return 0;
    case MSH_INVALID_ARGUMENT:
    case MSH_PARSE_ERROR:
    case MSH_EMPTY_AFTER_FILTER:
    case MSH_IO_ERROR:
      return kExitParse;
    case MSH_NON_CONVERGENCE:
      return kExitNonConvergence;
    case MSH_INTERNAL_ERROR:
      return kExitInternal;
    default:
      return kExitNumeric;
  }
}

/// Thrown to leave a subcommand with the exit code of a failed library call.
struct Failure {
  msh_status status;
};

void check(msh_status s) {
  if (s != MSH_OK) throw Failure{s};
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Config = Handle<msh_config, msh_config_free>;
using Surface = Handle<msh_surface, msh_surface_free>;
using Calibration = Handle<msh_calibration, msh_calibration_free>;

struct ModelFlags {
  std::optional<double> kappa, theta, sigma, rho, z, r;
  std::optional<double> v1e, v2e, v3e, v4e;

  void add(CLI::App* app, bool with_group) {
    app->add_option("--kappa", kappa, "mean-reversion rate of the variance");
    app->add_option("--theta", theta, "long-run variance");
    app->add_option("--sigma", sigma, "vol of variance");
    app->add_option("--rho", rho, "effective spot/variance correlation");
    app->add_option("--z", z, "current variance");
    app->add_option("--r", r, "interest rate");
    if (!with_group) return;
    app->add_option("--v1e", v1e, "group parameter V1 (with sqrt(eps))");
    app->add_option("--v2e", v2e, "group parameter V2 (with sqrt(eps))");
    app->add_option("--v3e", v3e, "group parameter V3 (with sqrt(eps))");
    app->add_option("--v4e", v4e, "group parameter V4 (with sqrt(eps))");
  }

  void apply(msh_heston_params& p) const {
    if (kappa) p.kappa = *kappa;
    if (theta) p.theta = *theta;
    if (sigma) p.sigma = *sigma;
    if (rho) p.rho = *rho;
    if (z) p.z = *z;
    if (r) p.r = *r;
  }

  void apply(msh_group_params& v) const {
    if (v1e) v.v1e = *v1e;
    if (v2e) v.v2e = *v2e;
    if (v3e) v.v3e = *v3e;
    if (v4e) v.v4e = *v4e;
  }
};

struct FullModelFlags {
  std::optional<double> epsilon, m, nu, rho_xy, rho_xz, rho_yz, y0;

  void add(CLI::App* app) {
    app->add_option("--epsilon", epsilon, "fast time-scale ratio");
    app->add_option("--m", m, "fast factor mean");
    app->add_option("--nu", nu, "fast factor standard deviation");
    app->add_option("--rho-xy", rho_xy, "spot/fast-factor correlation");
    app->add_option("--rho-xz", rho_xz, "spot/variance correlation");
    app->add_option("--rho-yz", rho_yz, "fast-factor/variance correlation");
    app->add_option("--y0", y0, "initial fast factor");
  }

  void apply(msh_full_model& fm) const {
    if (epsilon) fm.epsilon = *epsilon;
    if (m) fm.m = *m;
    if (nu) fm.nu = *nu;
    if (rho_xy) fm.rho_xy = *rho_xy;
    if (rho_xz) fm.heston.rho = *rho_xz;
    if (rho_yz) fm.rho_yz = *rho_yz;
    if (y0) fm.y0 = *y0;
  }
};

json heston_json(const msh_heston_params& p) {
  return {{"kappa", p.kappa}, {"theta", p.theta}, {"sigma", p.sigma}, {"rho", p.rho}, {"z", p.z}, {"r", p.r}};
}

json group_json(const msh_group_params& v) {
  return {{"v1e", v.v1e}, {"v2e", v.v2e}, {"v3e", v.v3e}, {"v4e", v.v4e}};
}

json price_json(const msh_price& p) {
  return {{"total", p.total},
          {"heston", p.heston},
          {"correction", p.correction},
          {"p00", p.p00},
          {"p10", p.p10},
          {"p11", p.p11},
          {"quadrature_error", p.quadrature_error},
          {"negative_price_warning", (p.warnings & MSH_WARNING_NEGATIVE_PRICE) != 0}};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream os(path);
  os << text << '\n';
  if (!os) {
    std::cerr << "error: cannot write '" << path << "'\n";
    throw Failure{MSH_IO_ERROR};
  }
}

std::vector<double> value_range(double from, double to, int count) {
  std::vector<double> out;
  if (count == 1) return {from};
  for (int i = 0; i < count; ++i) out.push_back(from + (to - from) * i / (count - 1));
  return out;
}

msh_surface* model_surface(double spot, const std::vector<double>& expiries, const std::vector<double>& strikes,
                           const msh_heston_params& p, const msh_group_params& v, const msh_quadrature_spec& spec,
                           double dividend) {
  std::vector<size_t> counts(expiries.size(), strikes.size());
  std::vector<double> flat;
  for (std::size_t i = 0; i < expiries.size(); ++i) flat.insert(flat.end(), strikes.begin(), strikes.end());
  msh_surface* s = nullptr;
  check(msh_surface_model(spot, expiries.data(), expiries.size(), counts.data(), flat.data(), &p, &v, &spec, dividend,
                          &s));
  return s;
}

void report_surface_errors(const msh_surface* s) {
  for (std::size_t i = 0; i < msh_surface_error_count(s); ++i) std::cerr << "warning: " << msh_surface_error(s, i) << '\n';
  if (const auto n = msh_surface_arbitrage_warnings(s)) std::cerr << "warning: " << n << " no-arbitrage violations\n";
}

std::string format_fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scale Heston pricing, calibration and Monte Carlo validation"};
  app.require_subcommand(1);

  std::string config_path;
  if (const char* env = std::getenv("MSHESTON_CONFIG")) config_path = env;
  app.add_option("--config", config_path, "JSON configuration (default: $MSHESTON_CONFIG)");

  // price
  auto* price = app.add_subcommand("price", "price one European option");
  double spot = 100.0, strike = 100.0, expiry = 1.0;
  bool put = false, table = false;
  ModelFlags price_model;
  price->add_option("--spot", spot, "spot price")->capture_default_str();
  price->add_option("--strike", strike, "strike")->capture_default_str();
  price->add_option("--expiry", expiry, "time to expiry in years")->capture_default_str();
  price->add_flag("--put", put, "price a put instead of a call");
  price->add_flag("--table", table, "plain-text output instead of JSON");
  price_model.add(price, true);

  // surface
  auto* surface = app.add_subcommand("surface", "implied-vol surface of the model as CSV");
  std::vector<double> expiries{0.25, 0.5, 1.0, 2.0};
  std::vector<double> strikes{80, 85, 90, 95, 100, 105, 110, 115, 120};
  double dividend = 0.0;
  std::string out_path = "-";
  ModelFlags surface_model;
  surface->add_option("--spot", spot, "spot price")->capture_default_str();
  surface->add_option("--expiries", expiries, "expiries in years")->delimiter(',');
  surface->add_option("--strikes", strikes, "strikes shared by all expiries")->delimiter(',');
  surface->add_option("--dividend", dividend, "continuous dividend yield")->capture_default_str();
  surface->add_option("--out", out_path, "output CSV ('-' for stdout)")->capture_default_str();
  surface_model.add(surface, true);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "vary one group parameter and write one smile CSV per value");
  std::string sweep_param = "v3e";
  double sweep_from = -0.05, sweep_to = 0.05;
  int sweep_count = 5;
  std::vector<double> sweep_values;
  std::string out_dir = "sweep";
  ModelFlags sweep_model;
  sweep->add_option("--param", sweep_param, "v1e, v2e, v3e or v4e")
      ->check(CLI::IsMember({"v1e", "v2e", "v3e", "v4e"}))
      ->capture_default_str();
  sweep->add_option("--from", sweep_from, "first value")->capture_default_str();
  sweep->add_option("--to", sweep_to, "last value")->capture_default_str();
  sweep->add_option("--count", sweep_count, "number of values")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--values", sweep_values, "explicit values (overrides --from/--to/--count)")->delimiter(',');
  sweep->add_option("--spot", spot, "spot price")->capture_default_str();
  sweep->add_option("--expiries", expiries, "expiries in years")->delimiter(',');
  sweep->add_option("--strikes", strikes, "strikes")->delimiter(',');
  sweep->add_option("--out-dir", out_dir, "directory for the CSV files")->capture_default_str();
  sweep_model.add(sweep, true);

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "fit Heston, then the multi-scale model, to an option chain");
  std::string chain_path;
  std::string result_path = "-";
  std::optional<double> rate_override, dividend_override;
  std::optional<int> multi_start;
  ModelFlags start_flags;
  calibrate->add_option("--chain", chain_path, "option-chain CSV")->required();
  calibrate->add_option("--out", result_path, "result JSON ('-' for stdout)")->capture_default_str();
  calibrate->add_option("--rate", rate_override, "override the rate of every row");
  calibrate->add_option("--dividend", dividend_override, "override the dividend yield of every row");
  calibrate->add_option("--multi-start", multi_start, "number of Latin-hypercube restarts");
  start_flags.add(calibrate, false);

  // validate-mc
  auto* validate = app.add_subcommand("validate-mc", "compare the corrected price with Monte Carlo");
  FullModelFlags validate_model;
  std::optional<std::uint64_t> seed, paths;
  std::optional<double> dt;
  validate->add_option("--spot", spot, "spot price")->capture_default_str();
  validate->add_option("--strike", strike, "strike")->capture_default_str();
  validate->add_option("--expiry", expiry, "time to expiry in years")->capture_default_str();
  validate->add_option("--seed", seed, "Monte Carlo seed");
  validate->add_option("--paths", paths, "number of paths");
  validate->add_option("--dt", dt, "time step in years");
  validate_model.add(validate);

  // group-params
  auto* group = app.add_subcommand("group-params", "effective correlation and group parameters of the full model");
  FullModelFlags group_model;
  group_model.add(group);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitParse;
  }

  try {
    Config cfg;
    check(config_path.empty() ? msh_config_parse(nullptr, cfg.out()) : msh_config_load(config_path.c_str(), cfg.out()));
    msh_heston_params p;
    msh_group_params v;
    msh_quadrature_spec spec;
    msh_full_model fm;
    msh_sim_config sim;
    msh_config_heston(cfg.get(), &p);
    msh_config_group(cfg.get(), &v);
    msh_config_quadrature(cfg.get(), &spec);
    msh_config_full_model(cfg.get(), &fm);
    msh_config_simulation(cfg.get(), &sim);

    if (*price) {
      price_model.apply(p);
      price_model.apply(v);
      msh_price out;
      check(msh_price_option(spot, strike, expiry, put ? MSH_PUT : MSH_CALL, &p, &v, &spec, &out));
      if (table) {
        std::cout << "total       " << format_fixed(out.total, 10) << '\n'
                  << "heston      " << format_fixed(out.heston, 10) << '\n'
                  << "correction  " << format_fixed(out.correction, 10) << '\n'
                  << "quad_error  " << out.quadrature_error << '\n';
      } else {
        json j = {{"option",
                   {{"spot", spot}, {"strike", strike}, {"expiry", expiry}, {"payoff", put ? "put" : "call"}}},
                  {"model", heston_json(p)},
                  {"group", group_json(v)},
                  {"price", price_json(out)}};
        std::cout << j.dump(2) << '\n';
      }
    } else if (*surface) {
      surface_model.apply(p);
      surface_model.apply(v);
      Surface s;
      s.ptr = model_surface(spot, expiries, strikes, p, v, spec, dividend);
      report_surface_errors(s.get());
      check(msh_surface_write_csv(s.get(), out_path.c_str()));
    } else if (*sweep) {
      sweep_model.apply(p);
      sweep_model.apply(v);
      if (sweep_values.empty()) sweep_values = value_range(sweep_from, sweep_to, sweep_count);
      std::filesystem::create_directories(out_dir);
      json index = json::array();
      for (std::size_t i = 0; i < sweep_values.size(); ++i) {
        msh_group_params vi = v;
        double* slot = sweep_param == "v1e" ? &vi.v1e : sweep_param == "v2e" ? &vi.v2e : sweep_param == "v3e" ? &vi.v3e : &vi.v4e;
        *slot = sweep_values[i];
        Surface s;
        s.ptr = model_surface(spot, expiries, strikes, p, vi, spec, 0.0);
        report_surface_errors(s.get());
        char name[64];
        std::snprintf(name, sizeof name, "smile_%s_%03zu.csv", sweep_param.c_str(), i);
        const std::string path = (std::filesystem::path(out_dir) / name).string();
        check(msh_surface_write_csv(s.get(), path.c_str()));
        index.push_back({{"file", name}, {"param", sweep_param}, {"value", sweep_values[i]}});
      }
      write_text((std::filesystem::path(out_dir) / "index.json").string(), index.dump(2));
    } else if (*calibrate) {
      if (rate_override) msh_config_set_rate_override(cfg.get(), *rate_override);
      if (dividend_override) msh_config_set_dividend_override(cfg.get(), *dividend_override);
      if (multi_start) msh_config_set_multi_start(cfg.get(), *multi_start);
      json cfg_json = json::parse(msh_config_json(cfg.get()));
      const auto& st = cfg_json["calibration"]["start"];
      msh_heston_params start = {st["kappa"], st["theta"], st["sigma"], st["rho"], st["z"], st["r"]};
      start_flags.apply(start);
      msh_config_set_calibration_start(cfg.get(), &start);

      Surface market;
      msh_chain_report rep;
      check(msh_chain_load(chain_path.c_str(), cfg.get(), market.out(), &rep));
      std::cerr << "chain: " << rep.total_rows << " rows, " << rep.passed << " passed; rejected: option_type "
                << rep.rejected_option_type << ", maturity " << rep.rejected_maturity << ", open_interest "
                << rep.rejected_open_interest << ", duplicate " << rep.rejected_duplicate << ", no_implied_vol "
                << rep.rejected_no_implied_vol << '\n';
      Calibration cal;
      check(msh_calibrate(market.get(), cfg.get(), cal.out()));
      json result = json::parse(msh_calibration_json(cal.get()));
      result["chain"] = {{"total_rows", rep.total_rows},
                         {"passed", rep.passed},
                         {"rejected_option_type", rep.rejected_option_type},
                         {"rejected_maturity", rep.rejected_maturity},
                         {"rejected_open_interest", rep.rejected_open_interest},
                         {"rejected_duplicate", rep.rejected_duplicate},
                         {"rejected_no_implied_vol", rep.rejected_no_implied_vol}};
      write_text(result_path, result.dump(2));
      std::cerr << "days  heston        multiscale    ratio\n";
      for (const auto& row : result["residual_table"]) {
        char line[128];
        std::snprintf(line, sizeof line, "%4ld  %.6e  %.6e  %s\n", row["days"].get<long>(), row["heston"].get<double>(),
                      row["multiscale"].get<double>(),
                      row["ratio"].is_null() ? "inf" : format_fixed(row["ratio"].get<double>(), 2).c_str());
        std::cerr << line;
      }
    } else if (*validate) {
      validate_model.apply(fm);
      if (seed) sim.seed = *seed;
      if (paths) sim.n_paths = *paths;
      if (dt) sim.dt = *dt;
      msh_group_result g;
      check(msh_group_params_compute(&fm, &g));
      msh_heston_params eff = fm.heston;
      eff.rho = g.rho_effective;
      msh_price analytic;
      check(msh_price_option(spot, strike, expiry, MSH_CALL, &eff, &g.v, &spec, &analytic));
      msh_mc_estimate mc;
      check(msh_mc_price_call(&fm, spot, strike, expiry, &sim, &mc));
      const double gap = std::fabs(analytic.total - mc.price);
      json row = {{"epsilon", fm.epsilon},
                  {"sqrt_eps_v3", g.v.v3e},
                  {"analytic", analytic.total},
                  {"heston", analytic.heston},
                  {"mc_price", mc.price},
                  {"mc_std_error", mc.std_error_defined ? json(mc.std_error) : json(nullptr)},
                  {"abs_gap", gap},
                  {"gap_in_std_errors", mc.std_error_defined && mc.std_error > 0 ? json(gap / mc.std_error) : json(nullptr)},
                  {"n_paths", mc.n_paths},
                  {"n_steps", mc.n_steps},
                  {"dt", sim.dt},
                  {"seed", sim.seed},
                  {"truncation_fraction", mc.truncation_fraction},
                  {"truncation_exceeded", mc.truncation_exceeded != 0}};
      std::cout << row.dump(2) << '\n';
    } else if (*group) {
      group_model.apply(fm);
      msh_group_result g;
      check(msh_group_params_compute(&fm, &g));
      json j = {{"rho_effective", g.rho_effective},
                {"group", group_json(g.v)},
                {"unscaled", {{"V1", g.unscaled[0]}, {"V2", g.unscaled[1]}, {"V3", g.unscaled[2]}, {"V4", g.unscaled[3]}}},
                {"mean_f", g.mean_f},
                {"mean_f2", g.mean_f2},
                {"epsilon", fm.epsilon}};
      std::cout << j.dump(2) << '\n';
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << msh_status_name(f.status) << ": " << msh_last_error() << '\n';
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return 0;
}
