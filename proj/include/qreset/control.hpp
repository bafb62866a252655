#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

#include "qreset/dynamics.hpp"
#include "qreset/spectra.hpp"
#include "qreset/thermo.hpp"

namespace qreset {

/// No admissible frequency lowers p_e: p_e <= min_f p_eq(f).
class NoDescentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The terminal value of Γ·(p_e − p_eq) is zero or not finite.
class DegenerateTransversalityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Global: argmax of Γ(f)(p_e − p_eq(f)) over the whole interval (the
/// pointwise minimiser of the control Hamiltonian). Continuation: climb from
/// f_cp to the nearest local maximum, then follow it from the previous
/// control; reproduces branch-tracking solutions of multimodal objectives.
enum class ArgmaxMode { kGlobal, kContinuation };

struct TimeLocalOptimal {
  std::size_t grid_points = 4001;
  double refine_tol_ghz = 1e-6;
  ArgmaxMode mode = ArgmaxMode::kGlobal;
};

/// Hold argmax Γ for the whole restore.
struct ConstantAtPeak {
  ScanOptions scan{};
};

struct ScheduleBreakpoint {
  double t_us;
  double f_ghz;
};

/// Piecewise-constant frequency: f_k is held on [t_k, t_{k+1}), the last
/// value indefinitely.
struct FixedSchedule {
  std::vector<ScheduleBreakpoint> points;
};

using ControlLaw = std::variant<TimeLocalOptimal, ConstantAtPeak, FixedSchedule>;

/// Time-local optimiser with Γ and p_eq cached on the scan grid.
class OptimalController {
 public:
  OptimalController(Spectrum spectrum, const Environment& env, const ControlBounds& bounds,
                    const TimeLocalOptimal& options = {});

  /// J(f) = Γ(f)·(p_e − p_eq(f)).
  double objective(double f_ghz, double p_e) const;

  /// Global argmax of J over [f_min, f_max]. Throws NoDescentError if J <= 0
  /// everywhere.
  double frequency(double p_e) const;

  /// Local maximum of J reached by climbing from f_prev (from f_cp when NaN).
  double frequency_continuing(double p_e, double f_prev) const;

  double grid_resolution() const;
  const std::vector<double>& grid() const { return grid_; }

 private:
  double refine(std::size_t index, double p_e) const;
  double gap(std::size_t a, std::size_t b, double p_e) const;  // J_a − J_b
  std::size_t nearest_index(double f) const;

  Spectrum spectrum_;
  Environment env_;
  TimeLocalOptimal options_;
  std::vector<double> grid_;
  std::vector<double> rate_;
  std::vector<double> p_eq_;
  double f_cp_;
};

/// ω*(p_e) = argmax Γ(ω)(p_e − p_eq(ω)) on the admissible interval.
double optimal_frequency(double p_e, const Spectrum& spectrum, const Environment& env,
                         const ControlBounds& bounds, const TimeLocalOptimal& options = {});

/// Low-temperature reduction: argmax Γ over the admissible interval.
double constant_restore_frequency(const Spectrum& spectrum, const ControlBounds& bounds,
                                  const ScanOptions& scan = {});

/// Throws std::invalid_argument if the law can produce a frequency outside
/// the bounds or a schedule is malformed.
void validate(const ControlLaw& law, const ControlBounds& bounds);

FrequencyPolicy make_policy(const ControlLaw& law, const Spectrum& spectrum,
                            const Environment& env, const ControlBounds& bounds);

/// Replayable schedule from a recorded trajectory's controls.
FixedSchedule schedule_from_trajectory(const Trajectory& trajectory);

/// Columns: t_us,f_GHz
void write_schedule_csv(std::ostream& out, const FixedSchedule& schedule);
FixedSchedule load_schedule_csv(std::istream& in);

struct CostateSample {
  double t_us;
  double lambda;
  double hamiltonian;
};

struct CostateTrajectory {
  std::vector<CostateSample> samples;
};

/// λ from transversality at τ_st, propagated backward by
/// λ(t) = λ(τ)·exp(−∫ₜ^τ Γ ds); 𝓗 = 1 − λΓ(p_e − p_eq) at each sample.
CostateTrajectory costate_along(const Trajectory& trajectory);

struct PmpOptions {
  std::size_t probes = 64;
  std::size_t alternatives = 33;
  double minimality_tol = 1e-6;
  double hamiltonian_tol = 1e-3;
  std::uint64_t seed = 0x5eed;
};

struct PmpReport {
  double max_abs_hamiltonian;
  double min_lambda;
  double worst_minimality_gap;  // most negative 𝓗(alt) − 𝓗(chosen)
  double worst_gap_time_us;
  bool lambda_positive;
  bool hamiltonian_vanishes;
  bool pointwise_minimal;

  bool passed() const { return lambda_positive && hamiltonian_vanishes && pointwise_minimal; }
};

PmpReport verify_pmp(const Trajectory& trajectory, const CostateTrajectory& costate,
                     const Spectrum& spectrum, const Environment& env,
                     const ControlBounds& bounds, const PmpOptions& options = {});

}  // namespace qreset
