#include "qreset/thermo.hpp"

#include <cmath>

namespace qreset {

Environment::Environment(double temperature_k)
    : temperature_k_(temperature_k),
      ratio_per_ghz_(units::kPlanckOverBoltzmannKPerGHz / temperature_k) {
  if (!(temperature_k > 0.0) || !std::isfinite(temperature_k)) {
    throw DomainError("temperature must be finite and > 0 K, got " +
                      std::to_string(temperature_k));
  }
}

double thermal_ratio(double f_ghz, const Environment& env) {
  return env.ratio_per_ghz() * f_ghz;
}

double occupation(double x) {
  if (!(x > 0.0)) {
    throw DomainError("occupation diverges for x <= 0");
  }
  // expm1 keeps full precision for small x; for large x it degrades to e^-x.
  if (x > 40.0) {
    const double e = std::exp(-x);
    return e / (1.0 - e);
  }
  return 1.0 / std::expm1(x);
}

double equilibrium_population(double x) {
  if (x > 36.0) {
    // 1/(e^x + 1) = e^-x / (1 + e^-x); e^-x underflows gracefully to 0.
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (std::exp(x) + 1.0);
}

double entropy(double p_e) {
  if (p_e <= 0.0 || p_e >= 1.0) {
    return 0.0;
  }
  return p_e * std::log(p_e) + (1.0 - p_e) * std::log1p(-p_e);
}

}  // namespace qreset
