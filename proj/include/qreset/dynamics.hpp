#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qreset/spectra.hpp"
#include "qreset/thermo.hpp"

namespace qreset {

/// Diagonal population and coherence ⟨e|ρ|g⟩ = p_r + i·p_i of a qubit.
struct QubitState {
  double p_e = 0.5;
  double p_r = 0.0;
  double p_i = 0.0;

  double coherence_abs() const;
  /// det ρ = p_e(1 − p_e) − |ρ_eg|²; non-negative for a physical state.
  double determinant() const;
};

/// True when 0 <= p_e <= 1 and |ρ_eg|² <= p_e(1−p_e) + tol.
bool is_physical(const QubitState& s, double tol = 1e-12);

enum class Termination { kPrecisionReached, kStepLimit, kTimeLimit, kFinalTime };

std::string to_string(Termination cause);

/// One recorded point. The control (f, rate, p_eq) is the one held on the
/// segment that starts at t; the last sample repeats the final segment's.
struct TrajectorySample {
  double t_us;
  double f_ghz;
  double p_e;
  double p_r;
  double p_i;
  double rate_per_us;
  double p_eq;

  QubitState state() const { return {p_e, p_r, p_i}; }
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double tau_st = 0.0;
  Termination cause = Termination::kPrecisionReached;

  const TrajectorySample& back() const { return samples.back(); }
};

/// Exact propagation for a segment of constant frequency: the population
/// relaxes toward p_eq at rate Γ, the coherence decays at Γ/2 while rotating
/// by the angle 2π·10³·f·dt.
QubitState step_constant(const QubitState& s, double f_ghz, double rate_per_us,
                         double p_eq, double dt_us);

QubitState step_constant(const QubitState& s, double f_ghz, double dt_us,
                         const Spectrum& spectrum, const Environment& env);

/// A frequency choice and how long it may be held without re-evaluation.
struct ControlDecision {
  double f_ghz;
  double hold_until_us = std::numeric_limits<double>::infinity();
};

/// Maps (t, current state, previously applied frequency or NaN) to a decision.
using FrequencyPolicy =
    std::function<ControlDecision(double t_us, const QubitState& s, double f_prev)>;

struct IntegratorOptions {
  double log_step_bound = 0.05;          // max change of ln(p_e − p_eq) per step
  double max_drift_ghz = 1.5e-3;         // max control change between steps
  std::size_t step_limit = 10'000'000;
  double time_limit_us = std::numeric_limits<double>::infinity();
  double crossing_rel_tol = 1e-9;
};

/// Integrates until p_e reaches ε = bounds.epsilon(), refreshing the control
/// at every step. Step limit and time limit end the run with a truncated
/// trajectory and the matching termination cause.
Trajectory integrate_restore(const QubitState& initial, const FrequencyPolicy& policy,
                             const Spectrum& spectrum, const Environment& env,
                             const ControlBounds& bounds, const IntegratorOptions& options = {});

/// Replays a policy open-loop for exactly t_final_us (no precision event).
Trajectory propagate_for(const QubitState& initial, const FrequencyPolicy& policy,
                         const Spectrum& spectrum, const Environment& env, double t_final_us,
                         const IntegratorOptions& options = {});

/// η(t) = exp(−∫₀ᵗ Γ ds) along a trajectory, integrated segment by segment
/// (exact for piecewise-constant control). Beyond the last sample the terminal
/// rate is continued.
class DecoherenceFactor {
 public:
  explicit DecoherenceFactor(const Trajectory& trajectory);

  double operator()(double t_us) const;
  /// ∫₀ᵗ Γ ds.
  double integrated_rate(double t_us) const;

 private:
  std::vector<double> t_;
  std::vector<double> cumulative_;
  std::vector<double> rate_;
};

DecoherenceFactor decoherence_factor(const Trajectory& trajectory);

/// Columns: t_us,f_GHz,p_e,p_r,p_i,rate_per_us,p_eq
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace qreset
