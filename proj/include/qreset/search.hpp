#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace qreset::search {

struct Maximum {
  double x;
  double value;
};

/// Evenly spaced points on [lo, hi]; the last point is exactly hi.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> xs(n);
  if (n == 1) {
    xs[0] = lo;
    return xs;
  }
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) xs[i] = lo + h * static_cast<double>(i);
  xs.back() = hi;
  return xs;
}

/// Index of the largest value; ties go to the smallest index.
inline std::size_t argmax_first(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

/// Golden-section search for the maximum of a unimodal f on [a, b], stopping
/// once the bracket is narrower than tol.
template <class F>
Maximum golden_section_maximize(F&& f, double a, double b, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int iter = 0; iter < 200 && (b - a) > tol; ++iter) {
    // >= keeps the left part on ties, biasing toward smaller x.
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? Maximum{c, fc} : Maximum{d, fd};
}

/// Dense-grid argmax refined by golden-section search inside the bracket
/// formed by the best grid point's neighbours. The refined point replaces the
/// grid point only when it is strictly better, so results stay deterministic
/// and ties resolve toward smaller x.
template <class F>
Maximum grid_refined_maximum(F&& f, std::span<const double> xs,
                             std::span<const double> values, double tol) {
  const std::size_t i = argmax_first(values);
  Maximum best{xs[i], values[i]};
  if (xs.size() < 2 || tol <= 0.0) return best;
  const double lo = xs[i == 0 ? 0 : i - 1];
  const double hi = xs[i + 1 < xs.size() ? i + 1 : i];
  const Maximum refined = golden_section_maximize(f, lo, hi, tol);
  if (refined.value > best.value) best = refined;
  return best;
}

}  // namespace qreset::search
