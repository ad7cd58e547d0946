#pragma once

// Shared oracles for the test suite: quadrature along geodesics, golden-
// section minimization, and seeded random generators.  These recompute
// library quantities from the metric directly so the closed forms in the
// headers are checked against independent arithmetic.

#include <cmath>
#include <functional>
#include <random>

#include <h2xr/hyperbolic.hpp>

namespace testsupport {

using h2xr::complexd;

// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int n) {
  if (n % 2) ++n;
  double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Golden-section minimum of a unimodal function on [a, b].
inline double golden_min(const std::function<double(double)>& f, double a,
                         double b, double xtol = 1e-9) {
  const double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > xtol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return f(0.5 * (a + b));
}

// Hyperbolic arclength of the sub-arc t in [t0, t1] of a geodesic, computed
// by quadrature of lambda(z(t)) |z'(t)| with the exact parameterization
// derivative.  Works for both representations.
inline double arclength(const h2xr::Geodesic& g, double t0, double t1,
                        int panels = 4096) {
  if (g.kind == h2xr::GeodesicKind::Diameter) {
    double speed = std::abs(g.e1 - g.e0);
    return simpson(
        [&](double t) {
          return h2xr::conformal_factor(g.point_at(t)) * speed;
        },
        t0, t1, panels);
  }
  double a0 = std::arg(g.e0 - g.center);
  double a1 = std::arg(g.e1 - g.center);
  double sweep = std::remainder(a1 - a0, 2.0 * h2xr::kPi);
  double speed = g.radius * std::abs(sweep);
  return simpson(
      [&](double t) { return h2xr::conformal_factor(g.point_at(t)) * speed; },
      t0, t1, panels);
}

// Parameter at which a scalar function of t crosses zero, by bisection.
// Requires f(lo) and f(hi) of opposite sign.
inline double bisect(const std::function<double(double)>& f, double lo,
                     double hi, int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if ((flo < 0) == (fm < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Random direct isometry with translation part bounded away from the rim.
inline h2xr::Isometry random_isometry(std::mt19937& rng,
                                      bool allow_reflection = false) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * h2xr::kPi);
  std::uniform_real_distribution<double> rad(0.0, 0.4);
  h2xr::Isometry T = h2xr::compose(
      h2xr::rotation_about_origin(ang(rng)),
      h2xr::disk_translation(std::polar(rad(rng), ang(rng))));
  if (allow_reflection && (rng() & 1u)) {
    double a = ang(rng);
    h2xr::Geodesic mirror = h2xr::geodesic_between(h2xr::IdealPoint(a),
                                                   h2xr::IdealPoint(a + 0.7));
    T = h2xr::compose(T, h2xr::reflect_across(mirror));
  }
  return T;
}

inline complexd random_disk_point(std::mt19937& rng, double rmax = 0.6) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * h2xr::kPi);
  std::uniform_real_distribution<double> rad(0.0, rmax);
  return std::polar(rad(rng), ang(rng));
}

}  // namespace testsupport
