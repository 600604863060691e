#pragma once

// Pier-scour surrogate: HEC-18 (y_s = alpha y1^0.13 V^0.43) combined with Manning's
// V = (s^0.5 / n) R^0.67 and a wide-channel hydraulic radius R = mu y1 reduces to
// y_s = eta * y1^p. With y1 = d - y_s, where d is the spread between the highest stage and the
// lowest bed reading of the window, the scour depth is the fixed point y_s = eta (d - y_s)^p.

#include <cmath>
#include <string>

#include "scour/error.hpp"

namespace scour {

inline constexpr double kScourExponent = 0.418;

struct SurrogateConstants {
  double alpha = 1.0;      // pier geometry / attack angle / bed condition
  double slope = 1e-3;     // channel slope s
  double manning_n = 0.035;
  double mu = 1.0;         // hydraulic radius per unit flow depth

  double beta() const { return std::sqrt(slope) / manning_n; }
  double eta() const {
    if (!(alpha > 0.0 && slope > 0.0 && manning_n > 0.0 && mu > 0.0)) {
      throw ParameterError("surrogate constants must be positive");
    }
    return alpha * std::pow(beta(), 0.43) * std::pow(mu, 0.67 * 0.43);
  }
};

struct SurrogateSolution {
  double scour = 0.0;
  double residual = 0.0;  // |y_s - eta (d - y_s)^p|
  int iterations = 0;
};

/// Bisection on [0, d]. The left side increases and the right side decreases in y_s, so the
/// root is unique.
inline SurrogateSolution solve_scour_fixed_point(double eta, double spread) {
  if (!(spread > 0.0)) throw ParameterError("stage/bed spread must be positive, got " + std::to_string(spread));
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ParameterError("eta must be finite and >= 0");
  auto f = [&](double y) { return y - eta * std::pow(spread - y, kScourExponent); };
  SurrogateSolution s;
  if (eta == 0.0) return s;
  double lo = 0.0, hi = spread;
  double flo = f(lo);
  for (s.iterations = 0; s.iterations < 2000; ++s.iterations) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  s.scour = std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
  s.residual = std::abs(f(s.scour));
  return s;
}

/// Scour depth for the window's maximum stage and minimum bed elevation.
inline double hec18_surrogate(double eta, double y_st_max, double y_so_min) {
  return solve_scour_fixed_point(eta, y_st_max - y_so_min).scour;
}

inline double hec18_surrogate(const SurrogateConstants& c, double y_st_max, double y_so_min) {
  return hec18_surrogate(c.eta(), y_st_max, y_so_min);
}

}  // namespace scour
