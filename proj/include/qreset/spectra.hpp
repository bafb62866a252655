#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qreset {

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Malformed tabulated-spectrum input; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Spectrum shapes. Frequencies in cyclic GHz, times in µs, rates in µs⁻¹.
// Defaults are the published parameter sets of the four reference spectra.

/// Resonator-induced Lorentzian peak.
struct Lorentzian {
  double g = 0.107;
  double kappa = 0.044;
  double f_r = 5.4;
};

/// Lorentzian with a protection zero at f_F and a pole at f_R.
struct Protected {
  double kappa = 0.005;
  double g = 0.150;
  double f_F = 5.0;
  double f_R = 6.5;
};

/// Flux-qubit mixture: 1/f-type, dielectric, Purcell and residual channels.
/// Evaluated on raw numbers (ω in units of 2π·GHz, rates in µs⁻¹).
struct Mixed {
  double c_phi = 0.5;
  double c_q = 0.001;
  double c_purcell = 0.08;
  double f_r = 8.27;
  double kappa = 0.0015;
  double c_other = 0.02;
};

/// Josephson quantum filter: a protection dip of width 4κ_j around f_0.
struct Jqf {
  double tau0 = 9.1;
  double tau = 98.0;
  double four_kappa_j = 0.0508;
  double f_0 = 5.011;
};

struct TabulatedPoint {
  double f_ghz;
  double rate_per_us;
};

/// User-supplied spectrum, linearly interpolated between points.
struct Tabulated {
  std::vector<TabulatedPoint> points;
};

using SpectrumModel = std::variant<Lorentzian, Protected, Mixed, Jqf, Tabulated>;

/// Short identifier: "lz", "prot", "mix", "jqf" or "tabulated".
std::string spectrum_kind(const SpectrumModel& model);

/// Throws std::invalid_argument if parameters are non-positive or the table is
/// not strictly increasing in f with non-negative rates.
void validate(const SpectrumModel& model);

inline constexpr double kDefaultRateCap = 1.0e6;

/// A spectrum model together with the cap applied to its singularities.
class Spectrum {
 public:
  explicit Spectrum(SpectrumModel model, double rate_cap = kDefaultRateCap);

  const SpectrumModel& model() const { return model_; }
  double rate_cap() const { return rate_cap_; }

  /// Γ(2πf) before capping; may be +inf at a pole.
  double raw_rate(double f_ghz) const;

  /// min(raw_rate, rate_cap).
  double rate(double f_ghz) const;

 private:
  SpectrumModel model_;
  double rate_cap_;
};

/// Capped Γ(2πf) in µs⁻¹. Throws RangeError outside a tabulated domain.
double eval_rate(const Spectrum& spectrum, double f_ghz);

/// Path constraint on the qubit frequency plus the protocol's fixed numbers.
class ControlBounds {
 public:
  ControlBounds(double f_cp, double delta_f, double tau_sw_us, double epsilon);

  double f_cp() const { return f_cp_; }
  double delta_f() const { return delta_f_; }
  double f_min() const { return f_cp_ - delta_f_; }
  double f_max() const { return f_cp_ + delta_f_; }
  double tau_sw() const { return tau_sw_; }
  double epsilon() const { return epsilon_; }

 private:
  double f_cp_;
  double delta_f_;
  double tau_sw_;
  double epsilon_;
};

/// Defaults: f_cp = 5 GHz, Δf = 3 GHz, τ_sw = 10 ns, ε = 1e-5.
ControlBounds default_bounds();

struct ScanOptions {
  std::size_t grid_points = 4001;
  double refine_tol_ghz = 1e-6;
};

struct RateMaximum {
  double f_ghz;
  double rate_per_us;
  bool capped;  // the scan reached the singularity cap
};

RateMaximum argmax_rate(const Spectrum& spectrum, const ControlBounds& bounds,
                        const ScanOptions& scan = {});

struct CoherenceTime {
  double t1_us;   // +inf when Γ(f_cp) = 0
  bool infinite;
};

CoherenceTime coherence_time(const Spectrum& spectrum, const ControlBounds& bounds);

struct GuidelineReport {
  double f_cp;
  double f_st;
  double rate_cp;
  double rate_st;
  double contrast;        // Γ(f_cp)/Γ(f_st); small is good
  double trend_slope;     // least-squares dΓ/df over the scan grid, µs⁻¹/GHz
  bool increasing_trend;
};

GuidelineReport guideline_report(const Spectrum& spectrum, const ControlBounds& bounds,
                                 const ScanOptions& scan = {});

/// Reads "f_GHz,rate_per_us" rows; an optional header row is skipped.
Tabulated load_tabulated(std::istream& in);

/// Writes with a header row and round-trip precision.
void write_tabulated(std::ostream& out, const Tabulated& table);

}  // namespace qreset
