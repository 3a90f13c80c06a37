#pragma once

#include <array>
#include <limits>
#include <optional>

namespace qss {

// Coefficients c[k] of c0 + c1*tau + c2*tau^2 + c3*tau^3.
using Coeffs = std::array<double, 4>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Tolerances shared by the root finders.  Values are relative to the
// scale noted next to each field.
struct PolyTolerances {
  double leading_demotion = 1e-14;  // |c_deg| vs max |c_k|
  double root_rel = 1e-12;          // bracket width vs root magnitude
  double graze_rel = 1e-8;          // band overshoot that still counts as a touch
  double touch_rel = 1e-9;          // |p| at an extremum treated as reaching zero
};

inline constexpr PolyTolerances kPolyTol{};

struct Trajectory {
  double origin = 0.0;
  Coeffs c{};

  double operator()(double t) const;
};

double eval_poly(const Coeffs& c, double tau);
double eval(const Trajectory& traj, double t);

// Taylor shift of the coefficient array by delta.
Coeffs shift(const Coeffs& c, double delta);
Trajectory advance(const Trajectory& traj, double new_origin);

Coeffs derivative(const Coeffs& c);

// Effective degree after dropping negligible leading coefficients.
int degree(const Coeffs& c);

// Smallest root in (0, horizon].
std::optional<double> min_positive_root(const Coeffs& c, double horizon = kInf);

// Smallest tau in [0, horizon] at which g rises through zero and keeps
// rising past `tol`.  Touches that stay within `tol` of zero are ignored.
// A piece that starts beyond `tol` is reported at its start if g keeps
// rising there, so a zero result means g is already leaving.
std::optional<double> first_upcrossing(const Coeffs& g, double tol, double horizon = kInf);

// Delay until |p| reaches `band` (and, optionally, until p returns to zero).
std::optional<double> band_crossing_delay(const Coeffs& p, double band, bool include_zero_crossing);

// Absolute time of the next band crossing of x - q; q is re-centered onto
// x's origin when they differ.
std::optional<double> band_crossing_time(const Trajectory& x, const Trajectory& q, double band,
                                         bool include_zero_crossing);

}  // namespace qss
