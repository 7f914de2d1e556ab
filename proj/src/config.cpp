#include "msheston/config.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "msheston/error.hpp"

namespace msh {

namespace {

using nlohmann::json;

/// Reads known keys of one JSON object; anything left over is an error.
class Section {
 public:
  Section(const json& root, const char* name) : name_(name) {
    if (!root.contains(name)) return;
    const json& j = root.at(name);
    if (!j.is_object()) throw Error(ErrorCode::ParseError, std::string("config: '") + name + "' must be an object");
    obj_ = &j;
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!obj_) return;
    used_.push_back(key);
    const auto it = obj_->find(key);
    if (it == obj_->end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::ParseError, "config: " + name_ + "." + key + " has the wrong type");
    }
  }

  template <class T>
  void get_optional(const char* key, std::optional<T>& out) {
    if (!obj_) return;
    used_.push_back(key);
    const auto it = obj_->find(key);
    if (it == obj_->end() || it->is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }

  const json* sub(const char* key) {
    if (!obj_) return nullptr;
    used_.push_back(key);
    const auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [k, _] : obj_->items()) {
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) {
        throw Error(ErrorCode::ParseError, "config: unknown key " + name_ + "." + k);
      }
    }
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::vector<std::string> used_;
};

void read_heston(Section& s, HestonParams& p) {
  s.get("kappa", p.kappa);
  s.get("theta", p.theta);
  s.get("sigma", p.sigma);
  s.get("rho", p.rho);
  s.get("z", p.z);
  s.get("r", p.r);
}

json heston_json(const HestonParams& p) {
  return {{"kappa", p.kappa}, {"theta", p.theta}, {"sigma", p.sigma}, {"rho", p.rho}, {"z", p.z}, {"r", p.r}};
}

template <class E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, E>> names, const char* what) {
  for (const auto& [n, v] : names) {
    if (s == n) return v;
  }
  throw Error(ErrorCode::ParseError, std::string("config: unknown ") + what + " '" + s + "'");
}

const char* fkind_name(FKind k) { return k == FKind::exp_ou ? "exp_ou" : "unit"; }
const char* step_name(FastFactorStep s) { return s == FastFactorStep::exact_ou ? "exact_ou" : "euler"; }
const char* feller_name(FellerMode m) { return m == FellerMode::enforce ? "enforce" : "penalize"; }

}  // namespace

Config default_config() {
  Config c;
  c.heston = {1.0, 0.24, 0.39, -0.35 * std::exp(-0.5), 0.24, 0.05};
  c.full_model.heston = {1.0, 0.24, 0.39, -0.35, 0.24, 0.05};
  c.full_model.epsilon = 1e-4;
  c.full_model.m = 0.06;
  c.full_model.nu = 1.0;
  c.full_model.rho_xy = -0.35;
  c.full_model.rho_yz = 0.35;
  c.full_model.y0 = 0.06;
  c.calibration.start = c.heston;
  return c;
}

Config parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw Error(ErrorCode::ParseError, "config: top level must be an object");
  for (const auto& [k, _] : root.items()) {
    static const char* known[] = {"model", "group", "quadrature", "full_model", "simulation", "filters", "calibration"};
    if (std::find_if(std::begin(known), std::end(known), [&](const char* n) { return k == n; }) == std::end(known)) {
      throw Error(ErrorCode::ParseError, "config: unknown section '" + k + "'");
    }
  }
  Config c = default_config();

  Section model(root, "model");
  read_heston(model, c.heston);
  model.finish();

  Section group(root, "group");
  group.get("v1e", c.group.v1e);
  group.get("v2e", c.group.v2e);
  group.get("v3e", c.group.v3e);
  group.get("v4e", c.group.v4e);
  group.finish();

  Section quad(root, "quadrature");
  quad.get("abs_tol", c.quadrature.abs_tol);
  quad.get("rel_tol", c.quadrature.rel_tol);
  quad.get("max_subdivisions", c.quadrature.max_subdivisions);
  quad.get("contour_k_i", c.quadrature.contour_k_i);
  quad.get("put_contour_k_i", c.quadrature.put_contour_k_i);
  quad.finish();

  Section full(root, "full_model");
  double rho_xz = c.full_model.heston.rho;
  read_heston(full, c.full_model.heston);
  full.get("rho_xz", rho_xz);
  if (c.full_model.heston.rho != rho_xz && root.at("full_model").contains("rho")) {
    throw Error(ErrorCode::ParseError, "config: give full_model.rho_xz, not full_model.rho");
  }
  c.full_model.heston.rho = rho_xz;
  full.get("epsilon", c.full_model.epsilon);
  full.get("m", c.full_model.m);
  full.get("nu", c.full_model.nu);
  full.get("rho_xy", c.full_model.rho_xy);
  full.get("rho_yz", c.full_model.rho_yz);
  full.get("y0", c.full_model.y0);
  std::string f_kind = fkind_name(c.full_model.f_kind);
  full.get("f_kind", f_kind);
  c.full_model.f_kind = parse_enum<FKind>(f_kind, {{"exp_ou", FKind::exp_ou}, {"unit", FKind::unit}}, "f_kind");
  full.finish();

  Section sim(root, "simulation");
  sim.get("n_paths", c.simulation.n_paths);
  sim.get("dt", c.simulation.dt);
  sim.get("seed", c.simulation.seed);
  sim.get("antithetic", c.simulation.antithetic);
  sim.get("max_truncation_fraction", c.simulation.max_truncation_fraction);
  sim.get("threads", c.simulation.threads);
  std::string step = step_name(c.simulation.fast_factor_step);
  sim.get("fast_factor_step", step);
  c.simulation.fast_factor_step = parse_enum<FastFactorStep>(
      step, {{"exact_ou", FastFactorStep::exact_ou}, {"euler", FastFactorStep::euler}}, "fast_factor_step");
  sim.finish();

  Section filt(root, "filters");
  filt.get("min_days", c.filters.min_days);
  filt.get("min_open_interest", c.filters.min_open_interest);
  filt.get_optional("rate_override", c.filters.rate_override);
  filt.get_optional("dividend_override", c.filters.dividend_override);
  filt.finish();

  Section cal(root, "calibration");
  auto& cs = c.calibration;
  if (const json* start = cal.sub("start")) {
    json wrapper = {{"start", *start}};
    Section st(wrapper, "start");
    read_heston(st, cs.start);
    st.finish();
  }
  cal.get("max_iterations", cs.options.max_iterations);
  cal.get("gradient_tol", cs.options.gradient_tol);
  cal.get("step_tol", cs.options.step_tol);
  cal.get("cost_tol", cs.options.cost_tol);
  cal.get("jacobian_step", cs.options.jacobian_step);
  cal.get("multi_start", cs.options.multi_start);
  cal.get("multi_start_spread", cs.options.multi_start_spread);
  cal.get("multi_start_seed", cs.options.multi_start_seed);
  cal.get("threads", cs.options.threads);
  cal.get("feller_penalty", cs.feller_penalty);
  std::string feller = feller_name(cs.feller_mode);
  cal.get("feller_mode", feller);
  cs.feller_mode =
      parse_enum<FellerMode>(feller, {{"enforce", FellerMode::enforce}, {"penalize", FellerMode::penalize}}, "feller_mode");
  if (const json* b = cal.sub("bounds")) {
    try {
      if (b->contains("lower")) cs.bounds.lower = b->at("lower").get<std::array<double, kMultiscaleDim>>();
      if (b->contains("upper")) cs.bounds.upper = b->at("upper").get<std::array<double, kMultiscaleDim>>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::ParseError, "config: calibration.bounds.lower/upper must hold 9 numbers");
    }
  }
  cal.finish();
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const Config& c) {
  json full = heston_json(c.full_model.heston);
  full.erase("rho");
  full["rho_xz"] = c.full_model.heston.rho;
  full["epsilon"] = c.full_model.epsilon;
  full["m"] = c.full_model.m;
  full["nu"] = c.full_model.nu;
  full["rho_xy"] = c.full_model.rho_xy;
  full["rho_yz"] = c.full_model.rho_yz;
  full["y0"] = c.full_model.y0;
  full["f_kind"] = fkind_name(c.full_model.f_kind);

  const auto& cs = c.calibration;
  json filters = {{"min_days", c.filters.min_days}, {"min_open_interest", c.filters.min_open_interest}};
  filters["rate_override"] = c.filters.rate_override ? json(*c.filters.rate_override) : json(nullptr);
  filters["dividend_override"] = c.filters.dividend_override ? json(*c.filters.dividend_override) : json(nullptr);

  const json root = {
      {"model", heston_json(c.heston)},
      {"group", {{"v1e", c.group.v1e}, {"v2e", c.group.v2e}, {"v3e", c.group.v3e}, {"v4e", c.group.v4e}}},
      {"quadrature",
       {{"abs_tol", c.quadrature.abs_tol},
        {"rel_tol", c.quadrature.rel_tol},
        {"max_subdivisions", c.quadrature.max_subdivisions},
        {"contour_k_i", c.quadrature.contour_k_i},
        {"put_contour_k_i", c.quadrature.put_contour_k_i}}},
      {"full_model", full},
      {"simulation",
       {{"n_paths", c.simulation.n_paths},
        {"dt", c.simulation.dt},
        {"seed", c.simulation.seed},
        {"antithetic", c.simulation.antithetic},
        {"fast_factor_step", step_name(c.simulation.fast_factor_step)},
        {"max_truncation_fraction", c.simulation.max_truncation_fraction},
        {"threads", c.simulation.threads}}},
      {"filters", filters},
      {"calibration",
       {{"start", heston_json(cs.start)},
        {"max_iterations", cs.options.max_iterations},
        {"gradient_tol", cs.options.gradient_tol},
        {"step_tol", cs.options.step_tol},
        {"cost_tol", cs.options.cost_tol},
        {"jacobian_step", cs.options.jacobian_step},
        {"multi_start", cs.options.multi_start},
        {"multi_start_spread", cs.options.multi_start_spread},
        {"multi_start_seed", cs.options.multi_start_seed},
        {"threads", cs.options.threads},
        {"feller_mode", feller_name(cs.feller_mode)},
        {"feller_penalty", cs.feller_penalty},
        {"bounds", {{"lower", cs.bounds.lower}, {"upper", cs.bounds.upper}}}}},
  };
  return root.dump(2);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace msh
