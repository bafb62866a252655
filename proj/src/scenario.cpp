#include "qreset/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qreset/io.hpp"

namespace qreset::cli {
namespace {

using json = nlohmann::json;

constexpr std::string_view kTabulatedPrefix = "tabulated:";
constexpr std::string_view kSchedulePrefix = "schedule:";

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

double number_field(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError("field '" + field + "': expected a number");
  return j.get<double>();
}

std::size_t count_field(const json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() < 1) {
    throw ConfigError("field '" + field + "': expected a positive integer");
  }
  return j.get<std::size_t>();
}

std::string string_field(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError("field '" + field + "': expected a string");
  return j.get<std::string>();
}

const std::map<std::string, std::vector<std::string>>& parameter_names() {
  static const std::map<std::string, std::vector<std::string>> names{
      {"lz", {"g", "kappa", "f_r"}},
      {"prot", {"kappa", "g", "f_F", "f_R"}},
      {"mix", {"C_phi", "C_Q", "C_purcell", "f_r", "kappa", "C_other"}},
      {"jqf", {"tau0", "tau", "four_kappa_j", "f_0"}},
  };
  return names;
}

void parse_numerics(const json& j, Numerics& n) {
  if (!j.is_object()) throw ConfigError("field 'numerics': expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string field = "numerics." + key;
    if (key == "grid_points") {
      n.grid_points = count_field(value, field);
      if (n.grid_points < 2) throw ConfigError("field '" + field + "': must be >= 2");
    } else if (key == "refine_tol_GHz") {
      n.refine_tol_GHz = number_field(value, field);
    } else if (key == "step_bound") {
      n.step_bound = number_field(value, field);
    } else if (key == "rate_cap") {
      n.rate_cap = number_field(value, field);
    } else if (key == "step_limit") {
      n.step_limit = count_field(value, field);
    } else if (key == "time_limit_T1") {
      n.time_limit_T1 = number_field(value, field);
    } else if (key == "argmax_mode") {
      n.argmax_mode = string_field(value, field);
      if (n.argmax_mode != "global" && n.argmax_mode != "continuation") {
        throw ConfigError("field '" + field + "': expected \"global\" or \"continuation\"");
      }
    } else {
      throw ConfigError("unknown key '" + field + "'");
    }
  }
}

void check_scenario(const Scenario& s) {
  if (s.spectrum.empty()) throw ConfigError("field 'spectrum' is required");
  if (!(s.temperature_K > 0.0)) throw ConfigError("field 'temperature_K': must be > 0");
  const bool tabulated = starts_with(s.spectrum, kTabulatedPrefix);
  if (!tabulated && !parameter_names().count(s.spectrum)) {
    throw ConfigError("field 'spectrum': unknown spectrum '" + s.spectrum + "'");
  }
  if (!s.spectrum_params.empty()) {
    if (tabulated) throw ConfigError("field 'spectrum_params': not allowed for tabulated spectra");
    const auto& allowed = parameter_names().at(s.spectrum);
    for (const auto& [key, value] : s.spectrum_params) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw ConfigError("unknown key 'spectrum_params." + key + "' for spectrum '" +
                          s.spectrum + "'");
      }
    }
  }
  if (s.control != "time_local" && s.control != "constant" &&
      !starts_with(s.control, kSchedulePrefix)) {
    throw ConfigError("field 'control': expected time_local, constant or schedule:<path>");
  }
  if (!(s.numerics.step_bound > 0.0)) throw ConfigError("field 'numerics.step_bound': must be > 0");
  if (!(s.numerics.rate_cap > 0.0)) throw ConfigError("field 'numerics.rate_cap': must be > 0");
  if (!(s.numerics.refine_tol_GHz > 0.0)) {
    throw ConfigError("field 'numerics.refine_tol_GHz': must be > 0");
  }
  if (!(s.numerics.time_limit_T1 > 0.0)) {
    throw ConfigError("field 'numerics.time_limit_T1': must be > 0");
  }
}

std::filesystem::path relative_to(const Scenario& s, std::string_view path) {
  std::filesystem::path p{std::string(path)};
  return p.is_absolute() ? p : s.base_dir / p;
}

void apply_param(double& slot, const std::map<std::string, double>& params, const char* key) {
  if (const auto it = params.find(key); it != params.end()) slot = it->second;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"lz-default", "prot-default", "mix-default",
                                              "jqf-default"};
  return names;
}

bool is_builtin(std::string_view name) {
  const auto& names = builtin_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

Scenario builtin_scenario(std::string_view name) {
  if (!is_builtin(name)) throw ConfigError("unknown builtin scenario '" + std::string(name) + "'");
  Scenario s;
  s.name = std::string(name);
  s.spectrum = std::string(name.substr(0, name.find('-')));
  s.temperature_K = 0.010;
  return s;
}

Scenario parse_scenario(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  Scenario s;
  s.base_dir = base_dir;
  bool have_temperature = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "name") {
      s.name = string_field(value, key);
    } else if (key == "spectrum") {
      s.spectrum = string_field(value, key);
    } else if (key == "spectrum_params") {
      if (!value.is_object()) throw ConfigError("field 'spectrum_params': expected an object");
      for (const auto& [pk, pv] : value.items()) {
        s.spectrum_params[pk] = number_field(pv, "spectrum_params." + pk);
      }
    } else if (key == "temperature_K") {
      s.temperature_K = number_field(value, key);
      have_temperature = true;
    } else if (key == "f_cp_GHz") {
      s.f_cp_GHz = number_field(value, key);
    } else if (key == "delta_f_GHz") {
      s.delta_f_GHz = number_field(value, key);
    } else if (key == "tau_sw_us") {
      s.tau_sw_us = number_field(value, key);
    } else if (key == "epsilon") {
      s.epsilon = number_field(value, key);
    } else if (key == "control") {
      s.control = string_field(value, key);
    } else if (key == "switch_decay") {
      if (!value.is_boolean()) throw ConfigError("field 'switch_decay': expected a boolean");
      s.switch_decay = value.get<bool>();
    } else if (key == "numerics") {
      parse_numerics(value, s.numerics);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  if (!have_temperature) throw ConfigError("field 'temperature_K' is required");
  if (s.name.empty()) s.name = "scenario";
  check_scenario(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Scenario load_scenario_or_builtin(const std::string& ref) {
  if (is_builtin(ref) && !std::filesystem::exists(ref)) return builtin_scenario(ref);
  return load_scenario(ref);
}

nlohmann::ordered_json to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["name"] = s.name;
  j["spectrum"] = s.spectrum;
  j["spectrum_params"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s.spectrum_params) j["spectrum_params"][k] = v;
  j["temperature_K"] = s.temperature_K;
  j["f_cp_GHz"] = s.f_cp_GHz;
  j["delta_f_GHz"] = s.delta_f_GHz;
  j["tau_sw_us"] = s.tau_sw_us;
  j["epsilon"] = s.epsilon;
  j["control"] = s.control;
  j["switch_decay"] = s.switch_decay;
  auto& n = j["numerics"];
  n["grid_points"] = s.numerics.grid_points;
  n["refine_tol_GHz"] = s.numerics.refine_tol_GHz;
  n["step_bound"] = s.numerics.step_bound;
  n["rate_cap"] = s.numerics.rate_cap;
  n["step_limit"] = s.numerics.step_limit;
  n["time_limit_T1"] = s.numerics.time_limit_T1;
  n["argmax_mode"] = s.numerics.argmax_mode;
  return j;
}

std::string content_hash(const Scenario& scenario) {
  const std::string text = to_json(scenario).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<std::string>& sweepable_fields() {
  static const std::vector<std::string> fields{
      "temperature_K",         "f_cp_GHz",           "delta_f_GHz",
      "tau_sw_us",             "epsilon",            "numerics.grid_points",
      "numerics.refine_tol_GHz", "numerics.step_bound", "numerics.rate_cap",
      "numerics.time_limit_T1"};
  return fields;
}

void set_field(Scenario& s, std::string_view field, double value) {
  if (field == "temperature_K") {
    s.temperature_K = value;
  } else if (field == "f_cp_GHz") {
    s.f_cp_GHz = value;
  } else if (field == "delta_f_GHz") {
    s.delta_f_GHz = value;
  } else if (field == "tau_sw_us") {
    s.tau_sw_us = value;
  } else if (field == "epsilon") {
    s.epsilon = value;
  } else if (field == "numerics.grid_points") {
    if (!(value >= 2.0)) throw ConfigError("numerics.grid_points must be >= 2");
    s.numerics.grid_points = static_cast<std::size_t>(value + 0.5);
  } else if (field == "numerics.refine_tol_GHz") {
    s.numerics.refine_tol_GHz = value;
  } else if (field == "numerics.step_bound") {
    s.numerics.step_bound = value;
  } else if (field == "numerics.rate_cap") {
    s.numerics.rate_cap = value;
  } else if (field == "numerics.time_limit_T1") {
    s.numerics.time_limit_T1 = value;
  } else {
    throw ConfigError("unknown sweep field '" + std::string(field) + "'");
  }
}

SpectrumModel resolve_spectrum_model(const Scenario& s) {
  if (starts_with(s.spectrum, kTabulatedPrefix)) {
    const auto path = relative_to(s, std::string_view(s.spectrum).substr(kTabulatedPrefix.size()));
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read tabulated spectrum '" + path.string() + "'");
    try {
      return load_tabulated(in);
    } catch (const ParseError& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  const auto& p = s.spectrum_params;
  if (s.spectrum == "lz") {
    Lorentzian m;
    apply_param(m.g, p, "g");
    apply_param(m.kappa, p, "kappa");
    apply_param(m.f_r, p, "f_r");
    return m;
  }
  if (s.spectrum == "prot") {
    Protected m;
    apply_param(m.kappa, p, "kappa");
    apply_param(m.g, p, "g");
    apply_param(m.f_F, p, "f_F");
    apply_param(m.f_R, p, "f_R");
    return m;
  }
  if (s.spectrum == "mix") {
    Mixed m;
    apply_param(m.c_phi, p, "C_phi");
    apply_param(m.c_q, p, "C_Q");
    apply_param(m.c_purcell, p, "C_purcell");
    apply_param(m.f_r, p, "f_r");
    apply_param(m.kappa, p, "kappa");
    apply_param(m.c_other, p, "C_other");
    return m;
  }
  if (s.spectrum == "jqf") {
    Jqf m;
    apply_param(m.tau0, p, "tau0");
    apply_param(m.tau, p, "tau");
    apply_param(m.four_kappa_j, p, "four_kappa_j");
    apply_param(m.f_0, p, "f_0");
    return m;
  }
  throw ConfigError("field 'spectrum': unknown spectrum '" + s.spectrum + "'");
}

ResetProblem resolve(const Scenario& s) {
  check_scenario(s);
  try {
    Spectrum spectrum(resolve_spectrum_model(s), s.numerics.rate_cap);
    ControlBounds bounds(s.f_cp_GHz, s.delta_f_GHz, s.tau_sw_us, s.epsilon);
    ControlLaw law;
    if (s.control == "time_local") {
      law = TimeLocalOptimal{s.numerics.grid_points, s.numerics.refine_tol_GHz,
                             s.numerics.argmax_mode == "continuation" ? ArgmaxMode::kContinuation
                                                                      : ArgmaxMode::kGlobal};
    } else if (s.control == "constant") {
      law = ConstantAtPeak{ScanOptions{s.numerics.grid_points, s.numerics.refine_tol_GHz}};
    } else {
      const auto path = relative_to(s, std::string_view(s.control).substr(kSchedulePrefix.size()));
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot read schedule '" + path.string() + "'");
      law = load_schedule_csv(in);
    }
    validate(law, bounds);
    ResetProblem problem{std::move(spectrum), Environment(s.temperature_K), bounds, law};
    problem.log_step_bound = s.numerics.step_bound;
    problem.step_limit = s.numerics.step_limit;
    problem.time_limit_t1 = s.numerics.time_limit_T1;
    problem.switch_decay = s.switch_decay;
    return problem;
  } catch (const ConfigError&) {
    throw;
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

const std::vector<std::string>& report_fields() {
  static const std::vector<std::string> fields{
      "tau_st", "T1",  "tau_st_over_T1", "T_reset", "W_sw1",     "W_st",      "W_sw2",
      "W",      "dU",  "dS",             "dF",      "W_ex",      "W_ex_norm", "W_TL_norm",
      "epsilon_min"};
  return fields;
}

std::vector<double> report_values(const ResetReport& r) {
  const auto& w = r.work;
  return {r.tau_st, r.T1,   r.tau_st_over_T1, r.T_reset, w.W_sw1,     w.W_st,      w.W_sw2,
          w.W,      w.dU,   w.dS,             w.dF,      w.W_ex,      r.W_ex_norm, r.W_TL_norm,
          r.epsilon_min};
}

nlohmann::ordered_json report_to_json(const ResetReport& report) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  const auto& names = report_fields();
  const auto values = report_values(report);
  for (std::size_t i = 0; i < names.size(); ++i) {
    // JSON has no infinity; an unbounded T1 (or bound) is written as null.
    if (std::isfinite(values[i])) {
      j[names[i]] = values[i];
    } else {
      j[names[i]] = nullptr;
    }
  }
  return j;
}

}  // namespace qreset::cli
