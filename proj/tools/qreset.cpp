#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qreset/commands.hpp"

using namespace qreset::cli;

namespace {

void add_common(CLI::App* app, CommonOptions& opts) {
  app->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
  app->add_option("--grid", opts.grid, "Frequency grid points (overrides numerics)");
  app->add_option("--cap", opts.cap, "Rate cap in 1/us (overrides numerics)");
  app->add_option("--format", opts.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal qubit reset: protocols, work ledger and robustness"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string run_config;
  auto* run = app.add_subcommand("run", "Run one reset scenario");
  run->add_option("--config", run_config, "Scenario JSON or builtin name")->required();
  add_common(run, run_opts);

  CommonOptions fig_opts;
  std::string which = "all";
  std::optional<std::string> fig_dir;
  auto* figure = app.add_subcommand("figure", "Write figure data as CSV");
  figure->add_option("which", which, "fig2 | fig3a | fig3b | fig4 | all")->capture_default_str();
  figure->add_option("--config", fig_dir, "Directory holding <builtin-name>.json overrides");
  add_common(figure, fig_opts);

  CommonOptions sweep_opts;
  std::string sweep_config;
  std::string axis;
  auto* sweep = app.add_subcommand("sweep", "Sweep one scenario field");
  sweep->add_option("--config", sweep_config, "Scenario JSON or builtin name")->required();
  sweep->add_option("--axis", axis, "field=start:stop:n")->required();
  add_common(sweep, sweep_opts);

  CommonOptions cal_opts;
  CalibrationOptions cal;
  std::string targets;
  std::optional<std::string> mode;
  auto* calibrate =
      app.add_subcommand("calibrate-temperature", "Fit T to published extra-work values");
  calibrate->add_option("--targets", targets, "lz=..,prot=..,mix=..,jqf=.. (default: published)");
  calibrate->add_option("--t-lo", cal.t_lo_K, "Lower temperature bound [K]")->capture_default_str();
  calibrate->add_option("--t-hi", cal.t_hi_K, "Upper temperature bound [K]")->capture_default_str();
  calibrate->add_option("--scan", cal.scan_points, "Coarse scan points")->capture_default_str();
  calibrate->add_option("--argmax-mode", mode, "global | continuation")
      ->check(CLI::IsMember({"global", "continuation"}));
  add_common(calibrate, cal_opts);

  CommonOptions spec_opts;
  std::optional<std::string> spec_config;
  std::size_t points = 301;
  auto* spectra = app.add_subcommand("spectra", "Print rate tables and guideline summaries");
  spectra->add_option("--config", spec_config, "Scenario JSON or builtin name (default: all)");
  spectra->add_option("-n,--points", points, "Samples per spectrum")->capture_default_str();
  add_common(spectra, spec_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*run) return cmd_run(run_config, run_opts, std::cout, std::cerr);
  if (*figure) {
    std::optional<std::filesystem::path> dir;
    if (fig_dir) dir = *fig_dir;
    return cmd_figure(which, dir, fig_opts, std::cout, std::cerr);
  }
  if (*sweep) return cmd_sweep(sweep_config, axis, sweep_opts, std::cout, std::cerr);
  if (*calibrate) {
    cal.argmax_mode = mode;
    return cmd_calibrate_temperature(targets, cal, cal_opts, std::cout, std::cerr);
  }
  return cmd_spectra(spec_config, points, spec_opts, std::cout, std::cerr);
}
