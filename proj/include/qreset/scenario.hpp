#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qreset/reset.hpp"

namespace qreset::cli {

/// Invalid configuration; the message names the offending field or line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Numerics {
  std::size_t grid_points = 4001;
  double refine_tol_GHz = 1e-6;
  double step_bound = 0.05;
  double rate_cap = kDefaultRateCap;
  std::size_t step_limit = 10'000'000;
  double time_limit_T1 = 1e4;
  std::string argmax_mode = "global";  // global | continuation
};

/// A fully specified reset run as read from a config file.
struct Scenario {
  std::string name;
  std::string spectrum;  // lz | prot | mix | jqf | tabulated:<path>
  std::map<std::string, double> spectrum_params;
  double temperature_K = 0.0;
  double f_cp_GHz = 5.0;
  double delta_f_GHz = 3.0;
  double tau_sw_us = 0.010;
  double epsilon = 1e-5;
  std::string control = "time_local";  // time_local | constant | schedule:<path>
  bool switch_decay = false;
  Numerics numerics;
  std::filesystem::path base_dir;  // resolves relative paths; not serialised
};

/// "lz-default", "prot-default", "mix-default", "jqf-default".
const std::vector<std::string>& builtin_names();
bool is_builtin(std::string_view name);
Scenario builtin_scenario(std::string_view name);

Scenario parse_scenario(std::string_view json_text,
                        const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);
/// Builtin name or path to a JSON config.
Scenario load_scenario_or_builtin(const std::string& ref);

nlohmann::ordered_json to_json(const Scenario& scenario);

/// 16 hex digits of FNV-1a over the canonical JSON.
std::string content_hash(const Scenario& scenario);

/// Numeric fields addressable by sweeps ("temperature_K", "numerics.rate_cap", ...).
const std::vector<std::string>& sweepable_fields();
void set_field(Scenario& scenario, std::string_view field, double value);

SpectrumModel resolve_spectrum_model(const Scenario& scenario);
ResetProblem resolve(const Scenario& scenario);

/// Field names of the serialised ResetReport, in output order.
const std::vector<std::string>& report_fields();
nlohmann::ordered_json report_to_json(const ResetReport& report);
std::vector<double> report_values(const ResetReport& report);

}  // namespace qreset::cli
