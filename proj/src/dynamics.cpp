#include "qreset/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qreset/io.hpp"

namespace qreset {

double QubitState::coherence_abs() const { return std::hypot(p_r, p_i); }

double QubitState::determinant() const {
  return p_e * (1.0 - p_e) - (p_r * p_r + p_i * p_i);
}

bool is_physical(const QubitState& s, double tol) {
  return s.p_e >= 0.0 && s.p_e <= 1.0 &&
         s.p_r * s.p_r + s.p_i * s.p_i <= s.p_e * (1.0 - s.p_e) + tol;
}

std::string to_string(Termination cause) {
  switch (cause) {
    case Termination::kPrecisionReached: return "precision_reached";
    case Termination::kStepLimit: return "step_limit";
    case Termination::kTimeLimit: return "time_limit";
    case Termination::kFinalTime: return "final_time";
  }
  return "unknown";
}

QubitState step_constant(const QubitState& s, double f_ghz, double rate_per_us, double p_eq,
                         double dt_us) {
  const double decay = std::exp(-rate_per_us * dt_us);
  const double amplitude = std::exp(-0.5 * rate_per_us * dt_us);
  const double theta = units::kAngularPerGHz * f_ghz * dt_us;
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  return {p_eq + (s.p_e - p_eq) * decay, amplitude * (s.p_r * c + s.p_i * sn),
          amplitude * (s.p_i * c - s.p_r * sn)};
}

QubitState step_constant(const QubitState& s, double f_ghz, double dt_us,
                         const Spectrum& spectrum, const Environment& env) {
  return step_constant(s, f_ghz, spectrum.rate(f_ghz),
                       equilibrium_population(thermal_ratio(f_ghz, env)), dt_us);
}

namespace {

struct Segment {
  ControlDecision decision;
  double rate;
  double p_eq;
};

Segment resolve(const ControlDecision& d, const Spectrum& spectrum, const Environment& env) {
  return {d, spectrum.rate(d.f_ghz), equilibrium_population(thermal_ratio(d.f_ghz, env))};
}

TrajectorySample make_sample(double t, const QubitState& s, const Segment& seg) {
  return {t, seg.decision.f_ghz, s.p_e, s.p_r, s.p_i, seg.rate, seg.p_eq};
}

// Shared driver. A finite epsilon enables the precision event; t_stop bounds
// the run either as a time limit or as the requested final time.
Trajectory drive(const QubitState& initial, const FrequencyPolicy& policy,
                 const Spectrum& spectrum, const Environment& env, double epsilon,
                 double t_stop, Termination stop_cause, const IntegratorOptions& opt) {
  const bool watch_precision = std::isfinite(epsilon);
  Trajectory traj;
  double t = 0.0;
  QubitState s = initial;
  Segment seg = resolve(policy(0.0, s, std::nan("")), spectrum, env);
  traj.samples.push_back(make_sample(t, s, seg));

  std::size_t steps = 0;
  for (;;) {
    if (t >= t_stop) {
      traj.cause = stop_cause;
      break;
    }
    if (steps >= opt.step_limit) {
      traj.cause = Termination::kStepLimit;
      break;
    }
    double dt = seg.rate > 0.0 ? opt.log_step_bound / seg.rate
                               : std::numeric_limits<double>::infinity();
    const double to_breakpoint = seg.decision.hold_until_us - t;
    bool at_breakpoint = false;
    double t_breakpoint = 0.0;
    if (to_breakpoint <= dt) {
      dt = to_breakpoint;
      t_breakpoint = seg.decision.hold_until_us;
      at_breakpoint = true;
    }
    if (t_stop - t <= dt) {
      dt = t_stop - t;
      t_breakpoint = t_stop;
      at_breakpoint = true;
    }
    if (!std::isfinite(dt) || dt <= 0.0) {
      // Nothing changes the population any more and no limit is finite.
      traj.cause = Termination::kTimeLimit;
      break;
    }
    const double dt_floor = dt * 0x1p-30;

    for (;;) {
      QubitState trial = step_constant(s, seg.decision.f_ghz, seg.rate, seg.p_eq, dt);
      if (watch_precision && trial.p_e <= epsilon) {
        double lo = 0.0;
        double hi = dt;
        for (int i = 0; i < 200 && hi - lo > opt.crossing_rel_tol * (t + hi); ++i) {
          const double mid = 0.5 * (lo + hi);
          const double p = step_constant(s, seg.decision.f_ghz, seg.rate, seg.p_eq, mid).p_e;
          (p <= epsilon ? hi : lo) = mid;
        }
        s = step_constant(s, seg.decision.f_ghz, seg.rate, seg.p_eq, hi);
        t += hi;
        traj.samples.push_back(make_sample(t, s, seg));
        traj.tau_st = t;
        traj.cause = Termination::kPrecisionReached;
        return traj;
      }
      // Land exactly on breakpoints so schedule lookups stay consistent.
      const double t_new = at_breakpoint ? t_breakpoint : t + dt;
      const Segment next = resolve(policy(t_new, trial, seg.decision.f_ghz), spectrum, env);
      const bool drifted =
          std::abs(next.decision.f_ghz - seg.decision.f_ghz) > opt.max_drift_ghz;
      if (drifted && !at_breakpoint && dt > dt_floor) {
        dt *= 0.5;
        continue;
      }
      s = trial;
      t = t_new;
      seg = next;
      break;
    }
    ++steps;
    traj.samples.push_back(make_sample(t, s, seg));
  }
  traj.tau_st = t;
  return traj;
}

}  // namespace

Trajectory integrate_restore(const QubitState& initial, const FrequencyPolicy& policy,
                             const Spectrum& spectrum, const Environment& env,
                             const ControlBounds& bounds, const IntegratorOptions& options) {
  if (!(initial.p_e > bounds.epsilon())) {
    throw std::invalid_argument("initial p_e must exceed the reset precision");
  }
  return drive(initial, policy, spectrum, env, bounds.epsilon(), options.time_limit_us,
               Termination::kTimeLimit, options);
}

Trajectory propagate_for(const QubitState& initial, const FrequencyPolicy& policy,
                         const Spectrum& spectrum, const Environment& env, double t_final_us,
                         const IntegratorOptions& options) {
  if (!(t_final_us >= 0.0)) throw std::invalid_argument("final time must be >= 0");
  return drive(initial, policy, spectrum, env, std::numeric_limits<double>::quiet_NaN(),
               t_final_us, Termination::kFinalTime, options);
}

DecoherenceFactor::DecoherenceFactor(const Trajectory& trajectory) {
  if (trajectory.samples.empty()) throw std::invalid_argument("empty trajectory");
  const auto& smp = trajectory.samples;
  t_.reserve(smp.size());
  cumulative_.reserve(smp.size());
  rate_.reserve(smp.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < smp.size(); ++k) {
    if (k > 0) acc += smp[k - 1].rate_per_us * (smp[k].t_us - smp[k - 1].t_us);
    t_.push_back(smp[k].t_us);
    cumulative_.push_back(acc);
    rate_.push_back(smp[k].rate_per_us);
  }
}

double DecoherenceFactor::integrated_rate(double t_us) const {
  if (t_us <= t_.front()) return 0.0;
  const auto it = std::upper_bound(t_.begin(), t_.end(), t_us);
  const auto k = static_cast<std::size_t>(it - t_.begin()) - 1;
  return cumulative_[k] + rate_[k] * (t_us - t_[k]);
}

double DecoherenceFactor::operator()(double t_us) const {
  return std::exp(-integrated_rate(t_us));
}

DecoherenceFactor decoherence_factor(const Trajectory& trajectory) {
  return DecoherenceFactor(trajectory);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t_us,f_GHz,p_e,p_r,p_i,rate_per_us,p_eq\n";
  for (const auto& s : trajectory.samples) {
    out << io::format_double(s.t_us) << ',' << io::format_double(s.f_ghz) << ','
        << io::format_double(s.p_e) << ',' << io::format_double(s.p_r) << ','
        << io::format_double(s.p_i) << ',' << io::format_double(s.rate_per_us) << ','
        << io::format_double(s.p_eq) << '\n';
  }
}

}  // namespace qreset
