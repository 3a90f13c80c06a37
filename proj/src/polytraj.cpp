#include "qss/polytraj.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace qss {

double eval_poly(const Coeffs& c, double tau) {
  return ((c[3] * tau + c[2]) * tau + c[1]) * tau + c[0];
}

double eval(const Trajectory& traj, double t) { return eval_poly(traj.c, t - traj.origin); }

double Trajectory::operator()(double t) const { return eval(*this, t); }

Coeffs shift(const Coeffs& c, double d) {
  if (d == 0.0) return c;
  // Horner-style synthetic division, exact in the number of operations.
  Coeffs r = c;
  for (int i = 0; i < 3; ++i) {
    for (int k = 2; k >= i; --k) r[k] += d * r[k + 1];
  }
  return r;
}

Trajectory advance(const Trajectory& traj, double new_origin) {
  return Trajectory{new_origin, shift(traj.c, new_origin - traj.origin)};
}

Coeffs derivative(const Coeffs& c) { return Coeffs{c[1], 2.0 * c[2], 3.0 * c[3], 0.0}; }

int degree(const Coeffs& c) {
  double norm = 0.0;
  for (double v : c) norm = std::max(norm, std::abs(v));
  if (norm == 0.0) return 0;
  int d = 3;
  while (d > 0 && std::abs(c[d]) < kPolyTol.leading_demotion * norm) --d;
  return d;
}

namespace {

// Real roots of c0 + c1 t + c2 t^2 in ascending order.
int real_roots_quadratic(double c0, double c1, double c2, double out[2]) {
  if (c2 == 0.0) {
    if (c1 == 0.0) return 0;
    out[0] = -c0 / c1;
    return 1;
  }
  const double disc = c1 * c1 - 4.0 * c2 * c0;
  if (disc < 0.0) return 0;
  const double sq = std::sqrt(disc);
  const double qv = -0.5 * (c1 + std::copysign(sq, c1));
  if (qv == 0.0) {
    out[0] = 0.0;
    return 1;
  }
  double r1 = qv / c2;
  double r2 = c0 / qv;
  if (r1 > r2) std::swap(r1, r2);
  out[0] = r1;
  out[1] = r2;
  return r1 == r2 ? 1 : 2;
}

// Root of a monotone polynomial on [lo, hi] with g(lo) <= 0 <= g(hi)
// (or the mirror image).  Newton steps guarded by bisection.
double bracketed_root(const Coeffs& g, double lo, double hi) {
  double flo = eval_poly(g, lo);
  if (flo == 0.0) return lo;
  double fhi = eval_poly(g, hi);
  if (fhi == 0.0) return hi;
  if (flo > 0.0) {
    std::swap(lo, hi);
    std::swap(flo, fhi);
  }
  // Invariant: g(lo) < 0 < g(hi); lo and hi may be in either order.
  if (g[3] == 0.0) {
    double r[2];
    const int k = real_roots_quadratic(g[0], g[1], g[2], r);
    const double a = std::min(lo, hi);
    const double b = std::max(lo, hi);
    for (int i = 0; i < k; ++i) {
      if (r[i] >= a && r[i] <= b) return r[i];
    }
  }
  const Coeffs dg = derivative(g);
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = eval_poly(g, t);
    if (f == 0.0) return t;
    if (f < 0.0)
      lo = t;
    else
      hi = t;
    const double width = std::abs(hi - lo);
    if (width <= kPolyTol.root_rel * std::max(std::abs(lo), std::abs(hi)) || width == 0.0) break;
    const double df = eval_poly(dg, t);
    double next = df != 0.0 ? t - f / df : 0.5 * (lo + hi);
    const double a = std::min(lo, hi);
    const double b = std::max(lo, hi);
    if (!(next > a && next < b)) next = 0.5 * (lo + hi);
    if (next == t) break;
    t = next;
  }
  return t;
}

// Critical points of g in (0, horizon), ascending, with 0 prepended.
int monotone_breaks(const Coeffs& g, int deg, double horizon, double out[4]) {
  int n = 0;
  out[n++] = 0.0;
  if (deg >= 2) {
    double r[2];
    const int k = real_roots_quadratic(g[1], 2.0 * g[2], deg == 3 ? 3.0 * g[3] : 0.0, r);
    for (int i = 0; i < k; ++i) {
      if (r[i] > 0.0 && r[i] < horizon) out[n++] = r[i];
    }
  }
  return n;
}

// Fujiwara bound: every root of g (of degree deg) has modulus at most this.
double root_modulus_bound(const Coeffs& g, int deg) {
  double b = 0.0;
  for (int k = 1; k <= deg; ++k) {
    double r = std::abs(g[deg - k] / g[deg]);
    if (k == deg) r *= 0.5;
    b = std::max(b, std::pow(r, 1.0 / k));
  }
  return 2.0 * b;
}

// Expand the right end of the last monotone piece until g changes sign.
double expand_until_sign(const Coeffs& g, double lo, double sign_target) {
  int deg = 3;
  while (deg > 0 && g[deg] == 0.0) --deg;
  double step = std::max(1.0, std::abs(lo));
  if (deg > 0) {
    const double bound = root_modulus_bound(g, deg);
    if (std::isfinite(bound) && bound > lo) step = (bound - lo) * (1.0 + 1e-9) + 1e-300;
  }
  double hi = lo + step;
  for (int i = 0; i < 2000 && std::isfinite(hi); ++i) {
    if (eval_poly(g, hi) * sign_target > 0.0) return hi;
    step *= 2.0;
    hi = lo + step;
  }
  return kInf;
}

Coeffs demoted(const Coeffs& c, int& deg) {
  deg = degree(c);
  Coeffs g = c;
  for (int k = deg + 1; k < 4; ++k) g[k] = 0.0;
  return g;
}

}  // namespace

std::optional<double> min_positive_root(const Coeffs& c, double horizon) {
  int deg = 0;
  const Coeffs g = demoted(c, deg);
  if (deg == 0) return std::nullopt;
  if (deg <= 2) {
    double r[2];
    const int k = real_roots_quadratic(g[0], g[1], g[2], r);
    for (int i = 0; i < k; ++i) {
      if (r[i] > 0.0 && r[i] <= horizon) return r[i];
    }
    return std::nullopt;
  }
  double br[4];
  const int nb = monotone_breaks(g, deg, horizon, br);
  for (int i = 0; i < nb; ++i) {
    const double a = br[i];
    const double fa = eval_poly(g, a);
    if (fa == 0.0 && a > 0.0) return a;
    double b = i + 1 < nb ? br[i + 1] : horizon;
    if (!std::isfinite(b)) {
      const double lead = g[deg];
      const double far_sign = lead > 0.0 ? 1.0 : -1.0;
      if (fa * far_sign >= 0.0) continue;
      b = expand_until_sign(g, a, far_sign);
      if (!std::isfinite(b)) continue;
    }
    const double fb = eval_poly(g, b);
    if ((fa < 0.0 && fb >= 0.0) || (fa > 0.0 && fb <= 0.0)) {
      const double t = bracketed_root(g, a, b);
      if (t > 0.0 && t <= horizon) return t;
    }
  }
  return std::nullopt;
}

std::optional<double> first_upcrossing(const Coeffs& c, double tol, double horizon) {
  int deg = 0;
  const Coeffs g = demoted(c, deg);
  if (deg == 0) return std::nullopt;
  double br[4];
  const int nb = monotone_breaks(g, deg, horizon, br);
  for (int i = 0; i < nb; ++i) {
    const double a = br[i];
    const double fa = eval_poly(g, a);
    double b = i + 1 < nb ? br[i + 1] : horizon;
    const bool last_unbounded = !std::isfinite(b);
    if (fa > tol) {
      // Already beyond the boundary: report it as soon as g moves further out.
      const bool rising = last_unbounded ? g[deg] > 0.0 : eval_poly(g, b) > fa;
      if (rising) return a;
      continue;
    }
    if (last_unbounded) {
      if (g[deg] <= 0.0) continue;
      b = expand_until_sign(g, a, 1.0);
      if (!std::isfinite(b)) continue;
      while (eval_poly(g, b) <= tol && std::isfinite(b)) b = a + 2.0 * (b - a);
      if (!std::isfinite(b)) continue;
    }
    const double fb = eval_poly(g, b);
    if (fb <= tol) continue;
    if (fa >= 0.0) return a;  // sitting on the boundary and leaving now
    const double t = bracketed_root(g, a, b);
    if (t > 0.0 && t <= horizon) return t;
  }
  return std::nullopt;
}

std::optional<double> band_crossing_delay(const Coeffs& p, double band, bool include_zero_crossing) {
  const double tol = kPolyTol.graze_rel * band;
  Coeffs up = p;
  up[0] -= band;
  Coeffs down{-p[0] - band, -p[1], -p[2], -p[3]};
  std::optional<double> best = first_upcrossing(up, tol);
  if (auto t = first_upcrossing(down, tol); t && (!best || *t < *best)) best = t;

  // When p already starts at zero, q has nothing left to reach.
  if (include_zero_crossing && std::abs(p[0]) > kPolyTol.touch_rel * band) {
    const double horizon = best ? *best : kInf;
    std::optional<double> zero;
    // A sign change of p, or an extremum of p that touches zero.
    zero = min_positive_root(p, horizon);
    int deg = 0;
    const Coeffs g = demoted(p, deg);
    if (deg >= 2) {
      double br[4];
      const int nb = monotone_breaks(g, deg, horizon, br);
      for (int i = 1; i < nb; ++i) {
        if (std::abs(eval_poly(g, br[i])) <= kPolyTol.touch_rel * band) {
          if (!zero || br[i] < *zero) zero = br[i];
          break;
        }
      }
    }
    if (zero && (!best || *zero < *best)) best = zero;
  }
  return best;
}

std::optional<double> band_crossing_time(const Trajectory& x, const Trajectory& q, double band,
                                         bool include_zero_crossing) {
  const Coeffs qc = q.origin == x.origin ? q.c : shift(q.c, x.origin - q.origin);
  Coeffs p;
  for (int k = 0; k < 4; ++k) p[k] = x.c[k] - qc[k];
  auto d = band_crossing_delay(p, band, include_zero_crossing);
  if (!d) return std::nullopt;
  return x.origin + *d;
}

}  // namespace qss
