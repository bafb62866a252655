#include "qreset/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "qreset/io.hpp"
#include "qreset/search.hpp"
#include "qreset/thermo.hpp"

namespace qreset {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kAngular = units::kAngularPerGHz;

double lorentzian_rate(const Lorentzian& m, double f) {
  const double g = m.g * kAngular;
  const double kappa = m.kappa * kAngular;
  const double detuning = (f - m.f_r) * kAngular;
  const double half = 0.5 * kappa;
  return g * g / kappa * (half * half) / (detuning * detuning + half * half);
}

double protected_rate(const Protected& m, double f) {
  const double w = f * kAngular;
  const double wf = m.f_F * kAngular;
  const double wr = m.f_R * kAngular;
  const double kappa = m.kappa * kAngular;
  const double g = m.g * kAngular;
  const double zero = wf * wf - w * w;
  const double pole = wr * wr - w * w;
  const double span = wr * wr - wf * wf;
  const double num = 4.0 * kappa * g * g * wr * wr * wr * zero * zero;
  const double den = w * span * span * pole * pole;
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

double mixed_rate(const Mixed& m, double f) {
  const double detuning = f - m.f_r;
  return m.c_phi / std::pow(f, 0.9) + m.c_q * f +
         m.c_purcell * m.kappa * m.kappa / (detuning * detuning + m.kappa * m.kappa) +
         m.c_other;
}

double jqf_rate(const Jqf& m, double f) {
  const double detuning = (f - m.f_0) * kAngular;
  const double width = m.four_kappa_j * kAngular;
  const double lorentz = width * width / (detuning * detuning + width * width);
  return 1.0 / (m.tau0 + m.tau * lorentz);
}

double tabulated_rate(const Tabulated& m, double f) {
  const auto& pts = m.points;
  if (f < pts.front().f_ghz || f > pts.back().f_ghz) {
    throw RangeError("frequency " + io::format_double(f) +
                     " GHz outside tabulated domain [" +
                     io::format_double(pts.front().f_ghz) + ", " +
                     io::format_double(pts.back().f_ghz) + "]");
  }
  const auto hi = std::upper_bound(
      pts.begin(), pts.end(), f,
      [](double v, const TabulatedPoint& p) { return v < p.f_ghz; });
  if (hi == pts.end()) return pts.back().rate_per_us;
  const auto lo = hi - 1;
  const double w = (f - lo->f_ghz) / (hi->f_ghz - lo->f_ghz);
  return lo->rate_per_us + w * (hi->rate_per_us - lo->rate_per_us);
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("spectrum parameter ") + name +
                                " must be finite and > 0");
  }
}

}  // namespace

std::string spectrum_kind(const SpectrumModel& model) {
  return std::visit(Overloaded{[](const Lorentzian&) { return std::string("lz"); },
                               [](const Protected&) { return std::string("prot"); },
                               [](const Mixed&) { return std::string("mix"); },
                               [](const Jqf&) { return std::string("jqf"); },
                               [](const Tabulated&) { return std::string("tabulated"); }},
                    model);
}

void validate(const SpectrumModel& model) {
  std::visit(
      Overloaded{
          [](const Lorentzian& m) {
            require_positive(m.g, "g");
            require_positive(m.kappa, "kappa");
            require_positive(m.f_r, "f_r");
          },
          [](const Protected& m) {
            require_positive(m.kappa, "kappa");
            require_positive(m.g, "g");
            require_positive(m.f_F, "f_F");
            require_positive(m.f_R, "f_R");
            if (m.f_F == m.f_R) throw std::invalid_argument("f_F and f_R must differ");
          },
          [](const Mixed& m) {
            require_positive(m.c_phi, "C_phi");
            require_positive(m.c_q, "C_Q");
            require_positive(m.c_purcell, "C_purcell");
            require_positive(m.f_r, "f_r");
            require_positive(m.kappa, "kappa");
            require_positive(m.c_other, "C_other");
          },
          [](const Jqf& m) {
            require_positive(m.tau0, "tau0");
            require_positive(m.tau, "tau");
            require_positive(m.four_kappa_j, "four_kappa_j");
            require_positive(m.f_0, "f_0");
          },
          [](const Tabulated& m) {
            if (m.points.size() < 2) {
              throw std::invalid_argument("tabulated spectrum needs at least 2 points");
            }
            for (std::size_t i = 0; i < m.points.size(); ++i) {
              const auto& p = m.points[i];
              if (!std::isfinite(p.f_ghz) || !std::isfinite(p.rate_per_us) ||
                  p.rate_per_us < 0.0) {
                throw std::invalid_argument("tabulated rates must be finite and >= 0");
              }
              if (i > 0 && !(p.f_ghz > m.points[i - 1].f_ghz)) {
                throw std::invalid_argument("tabulated frequencies must be strictly increasing");
              }
            }
          }},
      model);
}

Spectrum::Spectrum(SpectrumModel model, double rate_cap)
    : model_(std::move(model)), rate_cap_(rate_cap) {
  validate(model_);
  if (!(rate_cap_ > 0.0)) throw std::invalid_argument("rate cap must be > 0");
}

double Spectrum::raw_rate(double f_ghz) const {
  return std::visit(Overloaded{[f_ghz](const Lorentzian& m) { return lorentzian_rate(m, f_ghz); },
                               [f_ghz](const Protected& m) { return protected_rate(m, f_ghz); },
                               [f_ghz](const Mixed& m) { return mixed_rate(m, f_ghz); },
                               [f_ghz](const Jqf& m) { return jqf_rate(m, f_ghz); },
                               [f_ghz](const Tabulated& m) { return tabulated_rate(m, f_ghz); }},
                    model_);
}

double Spectrum::rate(double f_ghz) const {
  return std::min(raw_rate(f_ghz), rate_cap_);
}

double eval_rate(const Spectrum& spectrum, double f_ghz) {
  if (!(f_ghz > 0.0)) throw DomainError("eval_rate requires f > 0");
  return spectrum.rate(f_ghz);
}

ControlBounds::ControlBounds(double f_cp, double delta_f, double tau_sw_us, double epsilon)
    : f_cp_(f_cp), delta_f_(delta_f), tau_sw_(tau_sw_us), epsilon_(epsilon) {
  if (!(delta_f > 0.0) || !(f_cp - delta_f > 0.0)) {
    throw std::invalid_argument("control bounds need 0 < f_min < f_cp < f_max");
  }
  if (!(tau_sw_us >= 0.0)) throw std::invalid_argument("switch duration must be >= 0");
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw std::invalid_argument("reset precision must lie in (0, 0.5)");
  }
}

ControlBounds default_bounds() { return ControlBounds(5.0, 3.0, 0.010, 1e-5); }

RateMaximum argmax_rate(const Spectrum& spectrum, const ControlBounds& bounds,
                        const ScanOptions& scan) {
  const auto grid = search::linspace(bounds.f_min(), bounds.f_max(), scan.grid_points);
  std::vector<double> rates(grid.size());
  bool capped = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rates[i] = spectrum.rate(grid[i]);
    capped = capped || rates[i] >= spectrum.rate_cap();
  }
  const auto best = search::grid_refined_maximum(
      [&spectrum](double f) { return spectrum.rate(f); }, grid, rates, scan.refine_tol_ghz);
  capped = capped || best.value >= spectrum.rate_cap();
  return {best.x, best.value, capped};
}

CoherenceTime coherence_time(const Spectrum& spectrum, const ControlBounds& bounds) {
  const double rate = spectrum.rate(bounds.f_cp());
  if (rate <= 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {1.0 / rate, false};
}

GuidelineReport guideline_report(const Spectrum& spectrum, const ControlBounds& bounds,
                                 const ScanOptions& scan) {
  const RateMaximum peak = argmax_rate(spectrum, bounds, scan);
  const double rate_cp = spectrum.rate(bounds.f_cp());
  const auto grid = search::linspace(bounds.f_min(), bounds.f_max(), scan.grid_points);
  double mean_f = 0.0;
  double mean_r = 0.0;
  std::vector<double> rates(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rates[i] = spectrum.rate(grid[i]);
    mean_f += grid[i];
    mean_r += rates[i];
  }
  const double n = static_cast<double>(grid.size());
  mean_f /= n;
  mean_r /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    sxy += (grid[i] - mean_f) * (rates[i] - mean_r);
    sxx += (grid[i] - mean_f) * (grid[i] - mean_f);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return {bounds.f_cp(), peak.f_ghz, rate_cp, peak.rate_per_us,
          rate_cp / peak.rate_per_us, slope, slope > 0.0};
}

Tabulated load_tabulated(std::istream& in) {
  Tabulated table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = io::trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
      throw ParseError(line_no, "expected two comma-separated fields");
    }
    const auto f = io::parse_double(row.substr(0, comma));
    const auto r = io::parse_double(row.substr(comma + 1));
    if (!f || !r) {
      if (table.points.empty() && line_no == 1 && !f) continue;  // header row
      throw ParseError(line_no, "malformed number");
    }
    if (!std::isfinite(*f) || !std::isfinite(*r)) throw ParseError(line_no, "non-finite value");
    if (*r < 0.0) throw ParseError(line_no, "negative rate");
    if (!table.points.empty() && !(*f > table.points.back().f_ghz)) {
      throw ParseError(line_no, "frequencies must be strictly increasing");
    }
    table.points.push_back({*f, *r});
  }
  if (table.points.size() < 2) throw ParseError(line_no, "need at least 2 data rows");
  return table;
}

void write_tabulated(std::ostream& out, const Tabulated& table) {
  out << "f_GHz,rate_per_us\n";
  for (const auto& p : table.points) {
    out << io::format_double(p.f_ghz) << ',' << io::format_double(p.rate_per_us) << '\n';
  }
}

}  // namespace qreset
