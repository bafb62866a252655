#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "qreset/control.hpp"
#include "qreset/dynamics.hpp"
#include "qreset/reset.hpp"

namespace qreset {

/// Initial state diag(p, 1−p).
struct PopulationDeviation {
  double p;
};

/// Initial state [[1/2, c], [c*, 1/2]] with c = c_abs·e^{i·c_phase}.
struct CoherenceDeviation {
  double c_abs;
  double c_phase = 0.0;
};

/// Stop the protocol at τ_st + delta_tau; past τ_st the last frequency is held.
struct ControlTimeDeviation {
  double delta_tau_us;
};

using DeviationSpec = std::variant<PopulationDeviation, CoherenceDeviation, ControlTimeDeviation>;

/// Optimal restore of the unperturbed problem and its open-loop schedule.
struct Baseline {
  ResetProblem problem;
  Trajectory trajectory;
  FixedSchedule schedule;
};

Baseline make_baseline(const ResetProblem& problem);

struct DeviationResult {
  QubitState final_state;
  double fidelity;
};

/// Replays the baseline schedule open-loop from the deviated initial state.
DeviationResult run_deviation(const DeviationSpec& spec, const Baseline& baseline);

/// Uhlmann fidelity against diag with excited population ε, using the
/// two-level closed form Tr(ρσ) + 2√(det ρ · det σ). Throws DomainError for a
/// non-positive state.
double fidelity(const QubitState& state, double epsilon);

struct SensitivitySteps {
  double dp = 1e-3;
  double dc = 1e-3;
  double dtau_rel = 1e-3;
  double c_center = 0.25;  // coherence derivative is taken around this |c|
};

struct SensitivityReport {
  double eta_tau;               // η(τ_st)
  // Population: ∂p_e(τ)/∂p.
  double population_derivative;
  double population_rel_err;    // vs η(τ)
  // Coherence: ∂|ρ_eg(τ)|/∂|c|.
  double coherence_derivative;
  double coherence_predicted;   // √η(τ), from the Γ/2 coherence decay
  double coherence_rel_err;     // vs √η(τ)
  double coherence_rel_err_eta; // vs η(τ), the stated closed form
  // Control time: ∂p_e(τ+δτ)/∂(Γ(τ)·δτ) at δτ = 0.
  double time_derivative;
  double time_predicted;        // −(p_e(τ) − p_eq(f(τ)))
  double time_rel_err;
  double time_stated;           // ε·η(δτ = 0) = ε
};

SensitivityReport sensitivity_report(const Baseline& baseline, const SensitivitySteps& steps = {});

enum class DeviationAxis { kPopulation, kCoherence, kControlTime };

struct SweepPoint {
  double deviation;
  double fidelity;
  double final_p_e;
  double final_coh_abs;
};

/// p ∈ [0, 1], |c| ∈ [0, 0.5] or δτ ∈ [−τ_st/2, 5τ_st], n_points evenly spaced.
std::vector<SweepPoint> fidelity_sweep(const Baseline& baseline, DeviationAxis axis,
                                       std::size_t n_points);

}  // namespace qreset
