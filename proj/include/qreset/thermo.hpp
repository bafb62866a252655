#pragma once

#include <stdexcept>
#include <string>

namespace qreset {

/// Raised when an argument lies outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace units {

/// h / k_B in kelvin per GHz of cyclic frequency.
inline constexpr double kPlanckOverBoltzmannKPerGHz = 0.04799243;

/// Angular frequency in µs⁻¹ per GHz of cyclic frequency (2π·10³).
inline constexpr double kAngularPerGHz = 6283.185307179586;

}  // namespace units

/// Thermal bath seen by the qubit. Frequencies are cyclic GHz, times µs and
/// energies are expressed in multiples of k_B·T.
class Environment {
 public:
  explicit Environment(double temperature_k);

  double temperature() const { return temperature_k_; }

  /// Dimensionless ħω/(k_B T) per GHz of cyclic frequency.
  double ratio_per_ghz() const { return ratio_per_ghz_; }

 private:
  double temperature_k_;
  double ratio_per_ghz_;
};

/// x = ħω/(k_B T) for a cyclic frequency in GHz.
double thermal_ratio(double f_ghz, const Environment& env);

/// Bose occupation 1/(e^x − 1). Throws DomainError for x <= 0.
double occupation(double x);

/// Thermal excited-state population 1/(e^x + 1).
double equilibrium_population(double x);

/// S/k_B = p ln p + (1−p) ln(1−p); non-positive, zero at both endpoints.
double entropy(double p_e);

}  // namespace qreset
