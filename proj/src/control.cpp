#include "qreset/control.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <string>

#include "qreset/io.hpp"
#include "qreset/search.hpp"

namespace qreset {

OptimalController::OptimalController(Spectrum spectrum, const Environment& env,
                                     const ControlBounds& bounds, const TimeLocalOptimal& options)
    : spectrum_(std::move(spectrum)), env_(env), options_(options), f_cp_(bounds.f_cp()) {
  if (options_.grid_points < 2) throw std::invalid_argument("grid needs at least 2 points");
  grid_ = search::linspace(bounds.f_min(), bounds.f_max(), options_.grid_points);
  rate_.resize(grid_.size());
  p_eq_.resize(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    rate_[i] = spectrum_.rate(grid_[i]);
    p_eq_[i] = equilibrium_population(thermal_ratio(grid_[i], env_));
  }
}

double OptimalController::objective(double f_ghz, double p_e) const {
  return spectrum_.rate(f_ghz) *
         (p_e - equilibrium_population(thermal_ratio(f_ghz, env_)));
}

double OptimalController::grid_resolution() const { return grid_[1] - grid_[0]; }

namespace {

// J_a − J_b written so that p_eq differences far below ulp(p_e) still count:
// (Γ_a − Γ_b)·p_e − (Γ_a·p_eq,a − Γ_b·p_eq,b).
double objective_gap(double rate_a, double peq_a, double rate_b, double peq_b, double p_e) {
  return (rate_a - rate_b) * p_e - (rate_a * peq_a - rate_b * peq_b);
}

}  // namespace

double OptimalController::gap(std::size_t a, std::size_t b, double p_e) const {
  return objective_gap(rate_[a], p_eq_[a], rate_[b], p_eq_[b], p_e);
}

double OptimalController::refine(std::size_t i, double p_e) const {
  const double here = rate_[i] * (p_e - p_eq_[i]);
  if (here <= 0.0) {
    throw NoDescentError("no admissible frequency lowers p_e = " + io::format_double(p_e));
  }
  const double lo = grid_[i == 0 ? 0 : i - 1];
  const double hi = grid_[i + 1 < grid_.size() ? i + 1 : i];
  // Maximise J(f) − J(f_i) rather than J itself: same argmax, no absorption.
  const auto refined = search::golden_section_maximize(
      [&](double f) {
        return objective_gap(spectrum_.rate(f), equilibrium_population(thermal_ratio(f, env_)),
                             rate_[i], p_eq_[i], p_e);
      },
      lo, hi, options_.refine_tol_ghz);
  return refined.value > 0.0 ? refined.x : grid_[i];
}

double OptimalController::frequency(double p_e) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    if (gap(i, best, p_e) > 0.0) best = i;
  }
  return refine(best, p_e);
}

std::size_t OptimalController::nearest_index(double f) const {
  const auto it = std::lower_bound(grid_.begin(), grid_.end(), f);
  std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - grid_.begin()),
                                        grid_.size() - 1);
  if (i > 0 && f - grid_[i - 1] < grid_[i] - f) --i;
  return i;
}

double OptimalController::frequency_continuing(double p_e, double f_prev) const {
  auto climb_up = [&](std::size_t k) {
    while (k + 1 < grid_.size() && gap(k + 1, k, p_e) > 0.0) ++k;
    return k;
  };
  auto climb_down = [&](std::size_t k) {
    while (k > 0 && gap(k - 1, k, p_e) > 0.0) --k;
    return k;
  };
  std::size_t i;
  if (std::isnan(f_prev)) {
    // Start from the parking frequency; if both neighbours ascend, keep the
    // better of the two local maxima.
    const std::size_t start = nearest_index(f_cp_);
    const std::size_t up = climb_up(start);
    const std::size_t down = climb_down(start);
    i = gap(up, down, p_e) > 0.0 ? up : down;
    if (i == start) i = climb_down(climb_up(start));
  } else {
    i = climb_down(climb_up(nearest_index(f_prev)));
  }
  return refine(i, p_e);
}

double optimal_frequency(double p_e, const Spectrum& spectrum, const Environment& env,
                         const ControlBounds& bounds, const TimeLocalOptimal& options) {
  return OptimalController(spectrum, env, bounds, options).frequency(p_e);
}

double constant_restore_frequency(const Spectrum& spectrum, const ControlBounds& bounds,
                                  const ScanOptions& scan) {
  return argmax_rate(spectrum, bounds, scan).f_ghz;
}

void validate(const ControlLaw& law, const ControlBounds& bounds) {
  if (const auto* opt = std::get_if<TimeLocalOptimal>(&law)) {
    if (opt->grid_points < 2) throw std::invalid_argument("grid needs at least 2 points");
    return;
  }
  if (const auto* sched = std::get_if<FixedSchedule>(&law)) {
    if (sched->points.empty()) throw std::invalid_argument("schedule is empty");
    if (sched->points.front().t_us != 0.0) {
      throw std::invalid_argument("schedule must start at t = 0");
    }
    for (std::size_t k = 0; k < sched->points.size(); ++k) {
      const auto& p = sched->points[k];
      if (k > 0 && !(p.t_us > sched->points[k - 1].t_us)) {
        throw std::invalid_argument("schedule times must be strictly increasing");
      }
      if (p.f_ghz < bounds.f_min() || p.f_ghz > bounds.f_max()) {
        throw std::invalid_argument("schedule frequency " + io::format_double(p.f_ghz) +
                                    " GHz outside [f_min, f_max]");
      }
    }
  }
}

FrequencyPolicy make_policy(const ControlLaw& law, const Spectrum& spectrum,
                            const Environment& env, const ControlBounds& bounds) {
  validate(law, bounds);
  if (const auto* opt = std::get_if<TimeLocalOptimal>(&law)) {
    auto controller = std::make_shared<const OptimalController>(spectrum, env, bounds, *opt);
    if (opt->mode == ArgmaxMode::kContinuation) {
      return [controller](double, const QubitState& s, double f_prev) {
        return ControlDecision{controller->frequency_continuing(s.p_e, f_prev)};
      };
    }
    return [controller](double, const QubitState& s, double) {
      return ControlDecision{controller->frequency(s.p_e)};
    };
  }
  if (const auto* peak = std::get_if<ConstantAtPeak>(&law)) {
    const double f = constant_restore_frequency(spectrum, bounds, peak->scan);
    return [f](double, const QubitState&, double) { return ControlDecision{f}; };
  }
  auto points = std::get<FixedSchedule>(law).points;
  return [points = std::move(points)](double t, const QubitState&, double) {
    const auto it = std::upper_bound(
        points.begin(), points.end(), t,
        [](double v, const ScheduleBreakpoint& p) { return v < p.t_us; });
    const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - points.begin(), 1)) - 1;
    const double until = k + 1 < points.size() ? points[k + 1].t_us
                                               : std::numeric_limits<double>::infinity();
    return ControlDecision{points[k].f_ghz, until};
  };
}

FixedSchedule schedule_from_trajectory(const Trajectory& trajectory) {
  FixedSchedule schedule;
  for (const auto& s : trajectory.samples) {
    if (!schedule.points.empty()) {
      if (!(s.t_us > schedule.points.back().t_us)) continue;
      if (s.f_ghz == schedule.points.back().f_ghz) continue;
    }
    schedule.points.push_back({s.t_us, s.f_ghz});
  }
  return schedule;
}

void write_schedule_csv(std::ostream& out, const FixedSchedule& schedule) {
  out << "t_us,f_GHz\n";
  for (const auto& p : schedule.points) {
    out << io::format_double(p.t_us) << ',' << io::format_double(p.f_ghz) << '\n';
  }
}

FixedSchedule load_schedule_csv(std::istream& in) {
  FixedSchedule schedule;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = io::trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos) throw ParseError(line_no, "expected t_us,f_GHz");
    const auto t = io::parse_double(row.substr(0, comma));
    const auto f = io::parse_double(row.substr(comma + 1));
    if (!t || !f) {
      if (line_no == 1 && schedule.points.empty()) continue;  // header row
      throw ParseError(line_no, "malformed number");
    }
    if (!schedule.points.empty() && !(*t > schedule.points.back().t_us)) {
      throw ParseError(line_no, "times must be strictly increasing");
    }
    schedule.points.push_back({*t, *f});
  }
  if (schedule.points.empty()) throw ParseError(line_no, "schedule has no rows");
  return schedule;
}

CostateTrajectory costate_along(const Trajectory& trajectory) {
  if (trajectory.cause != Termination::kPrecisionReached || trajectory.samples.empty()) {
    throw std::invalid_argument("costate requires a trajectory that reached the precision");
  }
  const auto& smp = trajectory.samples;
  const auto& last = smp.back();
  const double drive = last.rate_per_us * (last.p_e - last.p_eq);
  if (!(drive != 0.0) || !std::isfinite(drive)) {
    throw DegenerateTransversalityError("Γ(τ)(p_e(τ) − p_eq(τ)) vanishes at the terminal time");
  }
  const double lambda_end = 1.0 / drive;
  const DecoherenceFactor eta(trajectory);
  const double total = eta.integrated_rate(last.t_us);

  CostateTrajectory out;
  out.samples.reserve(smp.size());
  for (std::size_t k = 0; k < smp.size(); ++k) {
    const auto& s = smp[k];
    if (k + 1 == smp.size()) {
      out.samples.push_back({s.t_us, lambda_end, 0.0});  // transversality
      break;
    }
    const double lambda = lambda_end * std::exp(-(total - eta.integrated_rate(s.t_us)));
    out.samples.push_back({s.t_us, lambda, 1.0 - lambda * s.rate_per_us * (s.p_e - s.p_eq)});
  }
  return out;
}

PmpReport verify_pmp(const Trajectory& trajectory, const CostateTrajectory& costate,
                     const Spectrum& spectrum, const Environment& env,
                     const ControlBounds& bounds, const PmpOptions& options) {
  if (trajectory.samples.size() != costate.samples.size() || trajectory.samples.empty()) {
    throw std::invalid_argument("trajectory and costate do not match");
  }
  PmpReport report{0.0, std::numeric_limits<double>::infinity(), 0.0, 0.0, true, true, true};
  for (const auto& c : costate.samples) {
    report.max_abs_hamiltonian = std::max(report.max_abs_hamiltonian, std::abs(c.hamiltonian));
    report.min_lambda = std::min(report.min_lambda, c.lambda);
  }
  report.lambda_positive = report.min_lambda > 0.0;
  report.hamiltonian_vanishes = report.max_abs_hamiltonian < options.hamiltonian_tol;

  const auto alternatives =
      search::linspace(bounds.f_min(), bounds.f_max(), options.alternatives);
  std::vector<double> alt_rate(alternatives.size());
  std::vector<double> alt_p_eq(alternatives.size());
  for (std::size_t j = 0; j < alternatives.size(); ++j) {
    alt_rate[j] = spectrum.rate(alternatives[j]);
    alt_p_eq[j] = equilibrium_population(thermal_ratio(alternatives[j], env));
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, trajectory.samples.size() - 1);
  // Random probes plus both endpoints, where bang/interior transitions occur.
  const std::size_t n = trajectory.samples.size();
  for (std::size_t probe = 0; probe < options.probes + 2; ++probe) {
    const std::size_t k = probe < options.probes ? pick(rng) : (probe == options.probes ? 0 : n - 1);
    const auto& s = trajectory.samples[k];
    const double lambda = costate.samples[k].lambda;
    const double chosen = costate.samples[k].hamiltonian;
    for (std::size_t j = 0; j < alternatives.size(); ++j) {
      const double alt = 1.0 - lambda * alt_rate[j] * (s.p_e - alt_p_eq[j]);
      const double gap = alt - chosen;
      if (gap < report.worst_minimality_gap) {
        report.worst_minimality_gap = gap;
        report.worst_gap_time_us = s.t_us;
      }
    }
  }
  report.pointwise_minimal = report.worst_minimality_gap >= -options.minimality_tol;
  return report;
}

}  // namespace qreset
