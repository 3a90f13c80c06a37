#pragma once

#include <array>
#include <optional>
#include <string>

#include "qss/polytraj.hpp"

namespace qss {

enum class Method { QSS, LIQSS, eLIQSS, CheQSS };

std::string to_string(Method m);
Method parse_method(const std::string& name);

struct QuantizerContext {
  int order = 1;
  Coeffs x{};                     // Taylor coefficients of x at the update instant
  double a = 0.0;                 // diagonal Jacobian
  std::array<double, 3> u{};      // u, du/dt, d2u/dt2 at the update instant
  double quantum = 1e-3;
  Method policy = Method::QSS;
};

struct QuantizedSegment {
  Trajectory q;                   // origin 0, Taylor coefficients
  double p0 = 0.0;                // x(0) - q(0)
  std::optional<double> t_m;
  bool equilibrium = false;
};

// Rates below this magnitude are treated as a = 0.
inline constexpr double kNegligibleRate = 1e-12;
// Equilibrium offsets are kept within (1 - margin) of the quantum.
inline constexpr double kEquilibriumMargin = 1e-12;

double compute_r(int order, double a, double x0, const std::array<double, 3>& u);

std::optional<QuantizedSegment> equilibrium_branch(int order, double a, double r_n, double quantum,
                                                   const Trajectory& x,
                                                   const std::array<double, 3>& u);

QuantizedSegment quantize_qss(const QuantizerContext& ctx);
QuantizedSegment quantize_liqss(const QuantizerContext& ctx);
QuantizedSegment quantize_cheqss(const QuantizerContext& ctx);

// Dispatches on ctx.policy; eLIQSS shares the LIQSS update rule.
QuantizedSegment quantize(const QuantizerContext& ctx);

double chebyshev_T(int n, double z);

// Step-scale polynomials in t_m, coefficients ascending.  Exposed for tests.
Coeffs liqss_tm_poly(int order, double a, double r_n, double p0);
Coeffs cheqss_tm_poly(int order, double a, double r_n, double p0);

}  // namespace qss
