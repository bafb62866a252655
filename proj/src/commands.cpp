#include "qreset/commands.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "qreset/io.hpp"
#include "qreset/robustness.hpp"
#include "qreset/search.hpp"

namespace qreset::cli {
namespace {

namespace fs = std::filesystem;
using io::format_double;

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

/// Evaluates f(0..n-1) on worker threads; results keep index order.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F&& f) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), n));
  auto work = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::ofstream open_output(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

std::string kind_of(const Scenario& s) {
  const auto colon = s.spectrum.find(':');
  return colon == std::string::npos ? s.spectrum : s.spectrum.substr(0, colon);
}

std::vector<Scenario> figure_scenarios(const std::optional<fs::path>& config_dir,
                                       const CommonOptions& opts) {
  std::vector<Scenario> out;
  for (const auto& name : builtin_names()) {
    Scenario s = builtin_scenario(name);
    if (config_dir) {
      const fs::path candidate = *config_dir / (name + ".json");
      if (fs::exists(candidate)) s = load_scenario(candidate);
    }
    apply_overrides(s, opts);
    out.push_back(std::move(s));
  }
  return out;
}

double over_t1(double t, double t1) { return std::isfinite(t1) ? t / t1 : 0.0; }

void write_fig2(const std::vector<Scenario>& scenarios, const fs::path& dir,
                std::vector<fs::path>& written) {
  for (const auto& s : scenarios) {
    const ResetProblem problem = resolve(s);
    const ResetOutcome run = run_reset(problem);
    const fs::path control = dir / ("fig2_control_" + kind_of(s) + ".csv");
    auto out = open_output(control);
    out << "t_us,t_over_T1,p_e,f_GHz\n";
    for (const auto& smp : run.trajectory.samples) {
      out << format_double(smp.t_us) << ',' << format_double(over_t1(smp.t_us, run.report.T1))
          << ',' << format_double(smp.p_e) << ',' << format_double(smp.f_ghz) << '\n';
    }
    written.push_back(control);

    const fs::path shape = dir / ("fig2_lineshape_" + kind_of(s) + ".csv");
    auto line = open_output(shape);
    line << "f_GHz,rate_per_us\n";
    for (const double f : search::linspace(problem.bounds.f_min(), problem.bounds.f_max(), 1201)) {
      line << format_double(f) << ',' << format_double(problem.spectrum.rate(f)) << '\n';
    }
    written.push_back(shape);
  }
}

void write_fig3(const std::vector<Scenario>& scenarios, const fs::path& dir, bool panel_a,
                bool panel_b, std::vector<fs::path>& written) {
  std::ostringstream terminal;
  terminal << "spectrum,tau_st_us,tau_st_over_T1,p_e\n";
  std::ostringstream points;
  points << "spectrum,T_reset_us,T_reset_over_T1,W_ex_norm,W_TL_norm\n";
  for (const auto& s : scenarios) {
    const ResetOutcome run = run_reset(resolve(s));
    const auto& r = run.report;
    if (panel_a) {
      const fs::path path = dir / ("fig3a_" + kind_of(s) + ".csv");
      auto out = open_output(path);
      out << "t_us,t_over_T1,p_e\n";
      for (const auto& smp : run.trajectory.samples) {
        out << format_double(smp.t_us) << ',' << format_double(over_t1(smp.t_us, r.T1)) << ','
            << format_double(smp.p_e) << '\n';
      }
      written.push_back(path);
      terminal << kind_of(s) << ',' << format_double(r.tau_st) << ','
               << format_double(r.tau_st_over_T1) << ','
               << format_double(run.trajectory.back().p_e) << '\n';
    }
    points << kind_of(s) << ',' << format_double(r.T_reset) << ','
           << format_double(over_t1(r.T_reset, r.T1)) << ',' << format_double(r.W_ex_norm) << ','
           << format_double(r.W_TL_norm) << '\n';
  }
  if (panel_a) {
    const fs::path path = dir / "fig3a_terminal.csv";
    open_output(path) << terminal.str();
    written.push_back(path);
  }
  if (panel_b) {
    const fs::path path = dir / "fig3b_points.csv";
    open_output(path) << points.str();
    written.push_back(path);
    const fs::path bound = dir / "fig3b_bound.csv";
    auto out = open_output(bound);
    out << "T_reset_over_T1,W_TL_norm\n";
    for (const double e : search::linspace(-4.0, 2.0, 241)) {
      const double x = std::pow(10.0, e);
      out << format_double(x) << ','
          << format_double(thermodynamic_length_bound(x) / std::log(2.0)) << '\n';
    }
    written.push_back(bound);
  }
}

void write_fig4(const std::vector<Scenario>& scenarios, const fs::path& dir,
                std::vector<fs::path>& written) {
  const std::pair<DeviationAxis, const char*> axes[] = {
      {DeviationAxis::kPopulation, "population"},
      {DeviationAxis::kCoherence, "coherence"},
      {DeviationAxis::kControlTime, "control_time"}};
  for (const auto& s : scenarios) {
    const Baseline baseline = make_baseline(resolve(s));
    for (const auto& [axis, label] : axes) {
      const fs::path path = dir / ("fig4_" + kind_of(s) + "_" + label + ".csv");
      auto out = open_output(path);
      out << "deviation_value,fidelity,final_p_e,final_coh_abs\n";
      for (const auto& p : fidelity_sweep(baseline, axis, 101)) {
        out << format_double(p.deviation) << ',' << format_double(p.fidelity) << ','
            << format_double(p.final_p_e) << ',' << format_double(p.final_coh_abs) << '\n';
      }
      written.push_back(path);
    }
  }
}

std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

}  // namespace

void apply_overrides(Scenario& scenario, const CommonOptions& opts) {
  if (opts.grid) scenario.numerics.grid_points = *opts.grid;
  if (opts.cap) scenario.numerics.rate_cap = *opts.cap;
}

int cmd_run(const std::string& config, const CommonOptions& opts, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    Scenario s = load_scenario_or_builtin(config);
    apply_overrides(s, opts);
    const ResetOutcome run = run_reset(resolve(s));
    const fs::path dir = opts.out_dir / (s.name + "-" + content_hash(s));
    open_output(dir / "scenario.json") << to_json(s).dump(2) << '\n';
    open_output(dir / "report.json") << report_to_json(run.report).dump(2) << '\n';
    auto trajectory = open_output(dir / "trajectory.csv");
    write_trajectory_csv(trajectory, run.trajectory);
    auto schedule = open_output(dir / "schedule.csv");
    write_schedule_csv(schedule, schedule_from_trajectory(run.trajectory));
    if (opts.format == "json") {
      out << report_to_json(run.report).dump(2) << '\n';
    } else {
      out << s.name << " tau_st_us=" << format_double(run.report.tau_st)
          << " tau_st_over_T1=" << format_double(run.report.tau_st_over_T1)
          << " W_ex_norm=" << format_double(run.report.W_ex_norm) << " -> " << dir.string()
          << '\n';
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_figure(const std::string& which, const std::optional<fs::path>& config_dir,
               const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const bool all = which == "all";
    if (!all && which != "fig2" && which != "fig3a" && which != "fig3b" && which != "fig4") {
      throw ConfigError("unknown figure '" + which + "' (fig2, fig3a, fig3b, fig4, all)");
    }
    const auto scenarios = figure_scenarios(config_dir, opts);
    std::vector<fs::path> written;
    if (all || which == "fig2") write_fig2(scenarios, opts.out_dir, written);
    if (all || which == "fig3a" || which == "fig3b") {
      write_fig3(scenarios, opts.out_dir, all || which == "fig3a", all || which == "fig3b",
                 written);
    }
    if (all || which == "fig4") write_fig4(scenarios, opts.out_dir, written);
    for (const auto& p : written) out << p.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

SweepAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("axis must look like field=start:stop:n");
  SweepAxis axis;
  axis.field = spec.substr(0, eq);
  const auto& fields = sweepable_fields();
  if (std::find(fields.begin(), fields.end(), axis.field) == fields.end()) {
    throw ConfigError("unknown sweep field '" + axis.field + "'");
  }
  const std::string range = spec.substr(eq + 1);
  const auto c1 = range.find(':');
  const auto c2 = c1 == std::string::npos ? c1 : range.find(':', c1 + 1);
  if (c2 == std::string::npos) throw ConfigError("axis range must be start:stop:n");
  const auto start = io::parse_double(std::string_view(range).substr(0, c1));
  const auto stop = io::parse_double(std::string_view(range).substr(c1 + 1, c2 - c1 - 1));
  const auto n = io::parse_double(std::string_view(range).substr(c2 + 1));
  if (!start || !stop || !n || *n < 1.0 || std::floor(*n) != *n) {
    throw ConfigError("malformed axis range '" + range + "'");
  }
  axis.start = *start;
  axis.stop = *stop;
  axis.n = static_cast<std::size_t>(*n);
  return axis;
}

int cmd_sweep(const std::string& config, const std::string& axis_spec, const CommonOptions& opts,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario base = load_scenario_or_builtin(config);
    apply_overrides(base, opts);
    const SweepAxis axis = parse_axis(axis_spec);
    const auto values = search::linspace(axis.start, axis.stop, axis.n);

    struct Row {
      std::vector<double> values;
      std::string status;
    };
    const auto rows = parallel_map<Row>(values.size(), [&](std::size_t i) {
      Scenario s = base;
      set_field(s, axis.field, values[i]);
      try {
        return Row{report_values(run_reset(resolve(s)).report), "ok"};
      } catch (const NumericalFailure& e) {
        return Row{std::vector<double>(report_fields().size(), std::nan("")),
                   csv_safe(e.what())};
      }
    });

    std::ostringstream csv;
    csv << axis.field;
    for (const auto& f : report_fields()) csv << ',' << f;
    csv << ",status\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      csv << format_double(values[i]);
      for (const double v : rows[i].values) csv << ',' << format_double(v);
      csv << ',' << rows[i].status << '\n';
    }
    const fs::path path = opts.out_dir / ("sweep-" + base.name + "-" + axis.field + ".csv");
    open_output(path) << csv.str();
    out << csv.str();
    return static_cast<int>(kExitOk);
  });
}

std::map<std::string, double> default_work_targets() {
  return {{"lz", 18.53}, {"prot", 22.51}, {"mix", 6.24}, {"jqf", 6.37}};
}

std::map<std::string, double> parse_targets(const std::string& spec) {
  std::map<std::string, double> targets;
  if (io::trim(spec).empty()) return default_work_targets();
  static const char* const kOrder[] = {"lz", "prot", "mix", "jqf"};
  std::size_t position = 0;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string key;
    std::string_view value = item;
    if (const auto eq = item.find('='); eq != std::string::npos) {
      key = std::string(io::trim(std::string_view(item).substr(0, eq)));
      value = std::string_view(item).substr(eq + 1);
    } else {
      if (position >= 4) throw ConfigError("at most four positional targets");
      key = kOrder[position];
    }
    ++position;
    const auto v = io::parse_double(value);
    if (!v || !(*v > 0.0)) throw ConfigError("target '" + item + "' must be a positive number");
    if (key != "lz" && key != "prot" && key != "mix" && key != "jqf") {
      throw ConfigError("unknown target spectrum '" + key + "'");
    }
    targets[key] = *v;
  }
  if (targets.empty()) throw ConfigError("no targets given");
  return targets;
}

CalibrationResult calibrate_temperature(const std::map<std::string, double>& targets,
                                        const CalibrationOptions& options) {
  for (const auto& [kind, target] : targets) {
    if (!(target > 0.0)) throw ConfigError("targets must be positive");
  }
  auto computed_at = [&](double temperature) {
    std::map<std::string, double> w;
    for (const auto& [kind, target] : targets) {
      Scenario s = builtin_scenario(kind + "-default");
      s.temperature_K = temperature;
      if (options.grid) s.numerics.grid_points = *options.grid;
      if (options.cap) s.numerics.rate_cap = *options.cap;
      if (options.argmax_mode) s.numerics.argmax_mode = *options.argmax_mode;
      try {
        w[kind] = run_reset(resolve(s)).report.W_ex_norm;
      } catch (const NumericalFailure&) {
        w[kind] = std::numeric_limits<double>::infinity();
      }
    }
    return w;
  };
  auto objective_of = [&](const std::map<std::string, double>& w) {
    double sum = 0.0;
    for (const auto& [kind, target] : targets) {
      const double rel = (w.at(kind) - target) / target;
      sum += rel * rel;
    }
    return sum;
  };

  const auto temps = search::linspace(options.t_lo_K, options.t_hi_K, options.scan_points);
  const auto scores = parallel_map<double>(
      temps.size(), [&](std::size_t i) { return objective_of(computed_at(temps[i])); });
  // Minimising the objective = maximising its negation.
  std::vector<double> negated(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) negated[i] = -scores[i];
  const auto best = search::grid_refined_maximum(
      [&](double t) { return -objective_of(computed_at(t)); }, temps, negated, options.tol_K);

  CalibrationResult result;
  result.temperature_K = best.x;
  result.computed = computed_at(best.x);
  result.objective = objective_of(result.computed);
  for (const auto& [kind, target] : targets) {
    result.residuals[kind] = (result.computed.at(kind) - target) / target;
  }
  return result;
}

int cmd_calibrate_temperature(const std::string& targets_spec, const CalibrationOptions& options,
                              const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    CalibrationOptions o = options;
    if (opts.grid) o.grid = opts.grid;
    if (opts.cap) o.cap = opts.cap;
    const auto targets = parse_targets(targets_spec);
    const CalibrationResult r = calibrate_temperature(targets, o);
    if (opts.format == "json") {
      nlohmann::ordered_json j;
      j["temperature_K"] = r.temperature_K;
      j["objective"] = r.objective;
      for (const auto& [kind, target] : targets) {
        j["spectra"][kind] = {{"target", target},
                              {"W_ex_norm", r.computed.at(kind)},
                              {"residual", r.residuals.at(kind)}};
      }
      out << j.dump(2) << '\n';
    } else {
      out << "spectrum,target,W_ex_norm,residual\n";
      for (const auto& [kind, target] : targets) {
        out << kind << ',' << format_double(target) << ',' << format_double(r.computed.at(kind))
            << ',' << format_double(r.residuals.at(kind)) << '\n';
      }
      out << "temperature_K," << format_double(r.temperature_K) << ",objective,"
          << format_double(r.objective) << '\n';
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_spectra(const std::optional<std::string>& config, std::size_t n,
                const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (n < 2) throw ConfigError("need at least 2 points");
    std::vector<Scenario> scenarios;
    if (config) {
      scenarios.push_back(load_scenario_or_builtin(*config));
    } else {
      for (const auto& name : builtin_names()) scenarios.push_back(builtin_scenario(name));
    }
    std::vector<ResetProblem> problems;
    for (auto& s : scenarios) {
      apply_overrides(s, opts);
      problems.push_back(resolve(s));
    }
    if (opts.format == "json") {
      nlohmann::ordered_json j = nlohmann::ordered_json::object();
      for (std::size_t k = 0; k < problems.size(); ++k) {
        const auto& p = problems[k];
        const GuidelineReport g = guideline_report(p.spectrum, p.bounds);
        auto& entry = j[kind_of(scenarios[k])];
        entry["f_GHz"] = nlohmann::ordered_json::array();
        entry["rate_per_us"] = nlohmann::ordered_json::array();
        for (const double f : search::linspace(p.bounds.f_min(), p.bounds.f_max(), n)) {
          entry["f_GHz"].push_back(f);
          entry["rate_per_us"].push_back(p.spectrum.rate(f));
        }
        entry["guidelines"] = {{"f_st_GHz", g.f_st},
                               {"contrast", g.contrast},
                               {"trend_slope", g.trend_slope},
                               {"increasing_trend", g.increasing_trend}};
        if (std::holds_alternative<Mixed>(p.spectrum.model())) {
          entry["note"] = "mixed spectrum evaluated on raw numbers (omega in 2pi*GHz, rates in 1/us)";
        }
      }
      out << j.dump(2) << '\n';
      return static_cast<int>(kExitOk);
    }
    for (std::size_t k = 0; k < problems.size(); ++k) {
      const auto& p = problems[k];
      const GuidelineReport g = guideline_report(p.spectrum, p.bounds);
      out << "# " << kind_of(scenarios[k]) << " f_st_GHz=" << format_double(g.f_st)
          << " contrast=" << format_double(g.contrast)
          << " trend_slope=" << format_double(g.trend_slope)
          << " increasing_trend=" << (g.increasing_trend ? "yes" : "no");
      if (std::holds_alternative<Mixed>(p.spectrum.model())) out << " units=raw";
      out << '\n' << "f_GHz,rate_per_us\n";
      for (const double f : search::linspace(p.bounds.f_min(), p.bounds.f_max(), n)) {
        out << format_double(f) << ',' << format_double(p.spectrum.rate(f)) << '\n';
      }
    }
    return static_cast<int>(kExitOk);
  });
}

}  // namespace qreset::cli
