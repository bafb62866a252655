#include "qreset/reset.hpp"

#include <cmath>
#include <limits>

#include "qreset/io.hpp"

namespace qreset {

double epsilon_min(const ControlBounds& bounds, const Environment& env) {
  return equilibrium_population(thermal_ratio(bounds.f_max(), env));
}

void check_achievable(const ControlBounds& bounds, const Environment& env) {
  const double floor = epsilon_min(bounds, env);
  if (!(bounds.epsilon() > floor)) {
    throw NumericalFailure("reset precision " + io::format_double(bounds.epsilon()) +
                           " is not achievable: epsilon_min = p_eq(f_max) = " +
                           io::format_double(floor));
  }
}

IntegratorOptions integrator_options(const ResetProblem& problem) {
  IntegratorOptions opt;
  opt.log_step_bound = problem.log_step_bound;
  opt.step_limit = problem.step_limit;
  std::size_t grid = 4001;
  if (const auto* tl = std::get_if<TimeLocalOptimal>(&problem.law)) grid = tl->grid_points;
  if (const auto* cp = std::get_if<ConstantAtPeak>(&problem.law)) grid = cp->scan.grid_points;
  // Holding the control over a step costs O(drift²) per step in the objective,
  // so the accumulated Hamiltonian error is linear in the drift bound.
  opt.max_drift_ghz = kDriftPerGridSpacing * (problem.bounds.f_max() - problem.bounds.f_min()) /
                      static_cast<double>(grid - 1);
  const CoherenceTime t1 = coherence_time(problem.spectrum, problem.bounds);
  opt.time_limit_us = t1.infinite ? std::numeric_limits<double>::infinity()
                                  : problem.time_limit_t1 * t1.t1_us;
  return opt;
}

ResetOutcome run_reset(const ResetProblem& problem) {
  const ControlBounds& bounds = problem.bounds;
  check_achievable(bounds, problem.env);

  QubitState start{problem.initial_p_e, 0.0, 0.0};
  if (problem.switch_decay) {
    start = step_constant(start, bounds.f_cp(), bounds.tau_sw(), problem.spectrum, problem.env);
  }
  const FrequencyPolicy policy =
      make_policy(problem.law, problem.spectrum, problem.env, bounds);
  Trajectory traj;
  try {
    traj = integrate_restore(start, policy, problem.spectrum, problem.env, bounds,
                             integrator_options(problem));
  } catch (const NoDescentError& e) {
    throw NumericalFailure(std::string("no descent direction: ") + e.what());
  }
  if (traj.cause != Termination::kPrecisionReached) {
    throw NumericalFailure("restore stopped before reaching epsilon: " + to_string(traj.cause) +
                           " at t = " + io::format_double(traj.tau_st) + " us, p_e = " +
                           io::format_double(traj.back().p_e));
  }

  const CoherenceTime t1 = coherence_time(problem.spectrum, bounds);
  ResetReport r{};
  r.tau_st = traj.tau_st;
  r.T1 = t1.t1_us;
  r.tau_st_over_T1 = traj.tau_st / t1.t1_us;
  r.T_reset = traj.tau_st + 2.0 * bounds.tau_sw();
  r.work = work_ledger(traj, bounds, problem.env);
  r.W_ex_norm = r.work.W_ex / std::log(2.0);
  r.W_TL_norm = t1.infinite
                    ? std::numeric_limits<double>::infinity()
                    : thermodynamic_length_bound(r.T_reset / t1.t1_us) / std::log(2.0);
  r.epsilon_min = epsilon_min(bounds, problem.env);
  return {r, std::move(traj)};
}

WorkLedger work_ledger(const Trajectory& trajectory, const ControlBounds& bounds,
                       const Environment& env) {
  if (trajectory.cause != Termination::kPrecisionReached || trajectory.samples.size() < 2) {
    throw std::invalid_argument("work ledger requires a precision-terminated trajectory");
  }
  const auto& smp = trajectory.samples;
  double restore_integral = 0.0;
  for (std::size_t k = 0; k + 1 < smp.size(); ++k) {
    restore_integral += thermal_ratio(smp[k].f_ghz, env) * (smp[k].p_e - smp[k + 1].p_e);
  }
  const double x_cp = thermal_ratio(bounds.f_cp(), env);
  const double x_start = thermal_ratio(smp.front().f_ghz, env);
  const double x_end = thermal_ratio(smp.back().f_ghz, env);
  const double p_start = smp.front().p_e;
  const double p_end = smp.back().p_e;

  WorkLedger w{};
  w.W_sw1 = (x_start - x_cp) * (p_start - 0.5);
  // ∫ ω̇ (p_e − ½) dt, integrated by parts along the restore.
  w.W_st = x_end * (p_end - 0.5) - x_start * (p_start - 0.5) + restore_integral;
  w.W_sw2 = (x_cp - x_end) * (p_end - 0.5);
  w.W = w.W_sw1 + w.W_st + w.W_sw2;
  w.dU = x_cp * (p_end - p_start);
  w.dS = entropy(p_start) - entropy(p_end);
  w.dF = w.dU - w.dS;
  w.W_ex = restore_integral + w.dS;
  return w;
}

double constant_control_work_approx(double f_st_ghz, const Environment& env) {
  if (!(f_st_ghz > 0.0)) throw DomainError("restoring frequency must be > 0");
  return 0.5 * thermal_ratio(f_st_ghz, env) - std::log(2.0);
}

double thermodynamic_length_bound(double t_reset_over_t1) {
  if (!(t_reset_over_t1 > 0.0)) throw DomainError("T_reset/T1 must be > 0");
  return kThermodynamicLengthConstant / t_reset_over_t1;
}

}  // namespace qreset
