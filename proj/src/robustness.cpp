#include "qreset/robustness.hpp"

#include <algorithm>
#include <cmath>

#include "qreset/search.hpp"

namespace qreset {

Baseline make_baseline(const ResetProblem& problem) {
  ResetOutcome outcome = run_reset(problem);
  FixedSchedule schedule = schedule_from_trajectory(outcome.trajectory);
  return {problem, std::move(outcome.trajectory), std::move(schedule)};
}

namespace {

QubitState replay(const Baseline& b, const QubitState& initial, double t_final) {
  const FrequencyPolicy policy =
      make_policy(b.schedule, b.problem.spectrum, b.problem.env, b.problem.bounds);
  IntegratorOptions opt = integrator_options(b.problem);
  opt.step_limit = std::max<std::size_t>(opt.step_limit, 100 * b.trajectory.samples.size());
  const Trajectory t =
      propagate_for(initial, policy, b.problem.spectrum, b.problem.env, t_final, opt);
  return t.back().state();
}

}  // namespace

DeviationResult run_deviation(const DeviationSpec& spec, const Baseline& baseline) {
  const double tau = baseline.trajectory.tau_st;
  QubitState initial{0.5, 0.0, 0.0};
  double t_final = tau;
  if (const auto* pop = std::get_if<PopulationDeviation>(&spec)) {
    if (!(pop->p >= 0.0 && pop->p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
    initial.p_e = pop->p;
  } else if (const auto* coh = std::get_if<CoherenceDeviation>(&spec)) {
    if (!(coh->c_abs >= 0.0 && coh->c_abs <= 0.5)) {
      throw std::invalid_argument("|c| must lie in [0, 0.5]");
    }
    initial.p_r = coh->c_abs * std::cos(coh->c_phase);
    initial.p_i = coh->c_abs * std::sin(coh->c_phase);
  } else {
    const double dtau = std::get<ControlTimeDeviation>(spec).delta_tau_us;
    if (!(dtau >= -tau)) throw std::invalid_argument("delta_tau must be >= -tau_st");
    t_final = tau + dtau;
  }
  const QubitState final_state = replay(baseline, initial, t_final);
  return {final_state, fidelity(final_state, baseline.problem.bounds.epsilon())};
}

double fidelity(const QubitState& state, double epsilon) {
  if (!is_physical(state)) throw DomainError("state is not a valid density matrix");
  const double overlap = state.p_e * epsilon + (1.0 - state.p_e) * (1.0 - epsilon);
  const double det_rho = std::max(0.0, state.determinant());
  const double det_target = epsilon * (1.0 - epsilon);
  return std::clamp(overlap + 2.0 * std::sqrt(det_rho * det_target), 0.0, 1.0);
}

SensitivityReport sensitivity_report(const Baseline& baseline, const SensitivitySteps& steps) {
  const double tau = baseline.trajectory.tau_st;
  const DecoherenceFactor eta(baseline.trajectory);
  SensitivityReport r{};
  r.eta_tau = eta(tau);

  const double p_plus = run_deviation(PopulationDeviation{0.5 + steps.dp}, baseline).final_state.p_e;
  const double p_minus = run_deviation(PopulationDeviation{0.5 - steps.dp}, baseline).final_state.p_e;
  r.population_derivative = (p_plus - p_minus) / (2.0 * steps.dp);
  r.population_rel_err = std::abs(r.population_derivative / r.eta_tau - 1.0);

  const double c_plus =
      run_deviation(CoherenceDeviation{steps.c_center + steps.dc}, baseline).final_state.coherence_abs();
  const double c_minus =
      run_deviation(CoherenceDeviation{steps.c_center - steps.dc}, baseline).final_state.coherence_abs();
  r.coherence_derivative = (c_plus - c_minus) / (2.0 * steps.dc);
  r.coherence_predicted = std::sqrt(r.eta_tau);
  r.coherence_rel_err = std::abs(r.coherence_derivative / r.coherence_predicted - 1.0);
  r.coherence_rel_err_eta = std::abs(r.coherence_derivative / r.eta_tau - 1.0);

  const double dtau = steps.dtau_rel * tau;
  const auto& last = baseline.trajectory.back();
  const double t_plus = run_deviation(ControlTimeDeviation{dtau}, baseline).final_state.p_e;
  const double t_minus = run_deviation(ControlTimeDeviation{-dtau}, baseline).final_state.p_e;
  r.time_derivative = (t_plus - t_minus) / (2.0 * last.rate_per_us * dtau);
  r.time_predicted = -(last.p_e - last.p_eq);
  r.time_rel_err = std::abs(r.time_derivative / r.time_predicted - 1.0);
  r.time_stated = baseline.problem.bounds.epsilon();
  return r;
}

std::vector<SweepPoint> fidelity_sweep(const Baseline& baseline, DeviationAxis axis,
                                       std::size_t n_points) {
  if (n_points < 2) throw std::invalid_argument("sweep needs at least 2 points");
  const double tau = baseline.trajectory.tau_st;
  double lo = 0.0;
  double hi = 1.0;
  if (axis == DeviationAxis::kCoherence) hi = 0.5;
  if (axis == DeviationAxis::kControlTime) {
    lo = -0.5 * tau;
    hi = 5.0 * tau;
  }
  std::vector<SweepPoint> out;
  out.reserve(n_points);
  for (const double v : search::linspace(lo, hi, n_points)) {
    DeviationSpec spec = PopulationDeviation{v};
    if (axis == DeviationAxis::kCoherence) spec = CoherenceDeviation{v};
    if (axis == DeviationAxis::kControlTime) spec = ControlTimeDeviation{v};
    const DeviationResult r = run_deviation(spec, baseline);
    out.push_back({v, r.fidelity, r.final_state.p_e, r.final_state.coherence_abs()});
  }
  return out;
}

}  // namespace qreset
