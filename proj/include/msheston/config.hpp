#pragma once

#include <string>

#include "msheston/calibration.hpp"
#include "msheston/group_params.hpp"
#include "msheston/market_io.hpp"
#include "msheston/mc_oracle.hpp"
#include "msheston/quadrature.hpp"

namespace msh {

struct CalibrationSettings {
  HestonParams start;
  CalibOptions options;
  ParamBounds bounds;
  FellerMode feller_mode = FellerMode::penalize;
  double feller_penalty = 10.0;
};

/// Everything a run can be configured with. Defaults are the Table-1 model
/// (θ = 0.24, ρ = −0.35·e^{−1/2}) and ε = 1e-4.
struct Config {
  HestonParams heston;
  GroupParams group;
  QuadratureSpec quadrature;
  FullModelParams full_model;
  SimConfig simulation;
  ChainFilter filters;
  CalibrationSettings calibration;
};

Config default_config();

/// Overlays a JSON document on default_config(). Sections: model, group,
/// quadrature, full_model, simulation, filters, calibration. Unknown keys are
/// rejected. Throws ParseError.
Config parse_config(const std::string& json_text);
Config load_config(const std::string& path);

/// Canonical JSON (sorted keys, fixed precision) of a configuration.
std::string config_to_json(const Config& cfg);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace msh
