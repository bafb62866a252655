#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qreset/scenario.hpp"

namespace qreset::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2 };

/// Flags shared by every command.
struct CommonOptions {
  std::filesystem::path out_dir = "out";
  std::optional<std::size_t> grid;
  std::optional<double> cap;
  std::string format = "csv";  // csv | json
};

void apply_overrides(Scenario& scenario, const CommonOptions& opts);

/// Runs one scenario (builtin name or config path); writes report.json,
/// trajectory.csv, schedule.csv and scenario.json to
/// <out>/<name>-<hash>/ and prints a one-line summary.
int cmd_run(const std::string& config, const CommonOptions& opts, std::ostream& out,
            std::ostream& err);

/// which: fig2 | fig3a | fig3b | fig4 | all. Uses the four builtin scenarios,
/// or <config_dir>/<name>.json when such a file exists.
int cmd_figure(const std::string& which, const std::optional<std::filesystem::path>& config_dir,
               const CommonOptions& opts, std::ostream& out, std::ostream& err);

struct SweepAxis {
  std::string field;
  double start;
  double stop;
  std::size_t n;
};

/// Parses "field=start:stop:n". Throws ConfigError.
SweepAxis parse_axis(const std::string& spec);

/// One CSV row per axis value (axis column first, then every report field),
/// in axis order; written to <out>/sweep-<name>-<field>.csv and echoed.
int cmd_sweep(const std::string& config, const std::string& axis, const CommonOptions& opts,
              std::ostream& out, std::ostream& err);

struct CalibrationOptions {
  double t_lo_K = 0.005;
  double t_hi_K = 0.020;
  std::size_t scan_points = 64;
  double tol_K = 1e-7;
  std::optional<std::size_t> grid;
  std::optional<double> cap;
  std::optional<std::string> argmax_mode;
};

struct CalibrationResult {
  double temperature_K;
  double objective;  // Σ relative error²
  std::map<std::string, double> computed;   // spectrum kind → W_ex_norm
  std::map<std::string, double> residuals;  // (computed − target)/target
};

/// Default targets: the published normalised extra work for each spectrum.
std::map<std::string, double> default_work_targets();

/// Fits T so the builtin scenarios' W_ex_norm match the targets (keys are
/// spectrum kinds: lz, prot, mix, jqf).
CalibrationResult calibrate_temperature(const std::map<std::string, double>& targets,
                                        const CalibrationOptions& options = {});

/// Parses "lz=18.53,prot=22.51" or four bare values in lz,prot,mix,jqf order.
std::map<std::string, double> parse_targets(const std::string& spec);

int cmd_calibrate_temperature(const std::string& targets, const CalibrationOptions& options,
                              const CommonOptions& opts, std::ostream& out, std::ostream& err);

/// Prints Γ(f) on n points over each scenario's control interval.
int cmd_spectra(const std::optional<std::string>& config, std::size_t n,
                const CommonOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace qreset::cli
