#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "qreset/control.hpp"
#include "qreset/dynamics.hpp"
#include "qreset/spectra.hpp"
#include "qreset/thermo.hpp"

namespace qreset {

/// The restore could not be completed: precision below ε^min, or the
/// integrator stopped on a step or time limit.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything needed to run one switch–restore–switch reset.
struct ResetProblem {
  Spectrum spectrum;
  Environment env;
  ControlBounds bounds;
  ControlLaw law = TimeLocalOptimal{};
  double log_step_bound = 0.05;
  std::size_t step_limit = 10'000'000;
  double time_limit_t1 = 1e4;  // time limit in units of T1 (ignored if T1 is infinite)
  double initial_p_e = 0.5;
  bool switch_decay = false;   // relax at Γ(f_cp) during each switch instead of freezing p_e
};

/// Work terms in units of k_B·T, entropy in units of k_B.
struct WorkLedger {
  double W_sw1;
  double W_st;
  double W_sw2;
  double W;
  double dU;
  double dS;
  double dF;
  double W_ex;
};

struct ResetReport {
  double tau_st;
  double T1;  // +inf when Γ(f_cp) = 0
  double tau_st_over_T1;
  double T_reset;
  WorkLedger work;
  double W_ex_norm;   // W_ex / ln 2
  double W_TL_norm;   // thermodynamic-length bound at T_reset/T1, / ln 2
  double epsilon_min;
};

struct ResetOutcome {
  ResetReport report;
  Trajectory trajectory;
};

/// ε^min = p_eq(f_max).
double epsilon_min(const ControlBounds& bounds, const Environment& env);

/// Throws NumericalFailure unless ε > ε^min.
void check_achievable(const ControlBounds& bounds, const Environment& env);

/// Largest control change per integration step, in scan-grid spacings.
inline constexpr double kDriftPerGridSpacing = 0.25;

/// Integrator settings derived from a problem (drift bound =
/// kDriftPerGridSpacing grid spacings, time limit = time_limit_t1·T1).
IntegratorOptions integrator_options(const ResetProblem& problem);

ResetOutcome run_reset(const ResetProblem& problem);

/// Ledger of a precision-terminated restore. The restore integral is
/// accumulated segment by segment, which is exact for piecewise-constant
/// control: ∫Γ(p_e − p_eq)dt over a segment equals the population drop.
WorkLedger work_ledger(const Trajectory& trajectory, const ControlBounds& bounds,
                       const Environment& env);

/// W_ex ≈ ħω_st/2 − k_B T ln 2 in units of k_B·T.
double constant_control_work_approx(double f_st_ghz, const Environment& env);

inline constexpr double kThermodynamicLengthConstant = 1.4204;

/// W_TL/(k_B T) = 1.4204 / (T_reset/T1).
double thermodynamic_length_bound(double t_reset_over_t1);

}  // namespace qreset
