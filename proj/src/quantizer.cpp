#include "qss/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qss/errors.hpp"

namespace qss {

std::string to_string(Method m) {
  switch (m) {
    case Method::QSS: return "qss";
    case Method::LIQSS: return "liqss";
    case Method::eLIQSS: return "eliqss";
    case Method::CheQSS: return "cheqss";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "qss") return Method::QSS;
  if (name == "liqss") return Method::LIQSS;
  if (name == "eliqss") return Method::eLIQSS;
  if (name == "cheqss") return Method::CheQSS;
  throw InvalidConfig("unknown QSS method '" + name + "'");
}

double chebyshev_T(int n, double z) {
  switch (n) {
    case 1: return z;
    case 2: return 2.0 * z * z - 1.0;
    case 3: return (4.0 * z * z - 3.0) * z;
    default: throw InvalidConfig("Chebyshev degree must be 1, 2 or 3");
  }
}

double compute_r(int order, double a, double x0, const std::array<double, 3>& u) {
  switch (order) {
    case 1: return a * x0 + u[0];
    case 2: return a * a * x0 + a * u[0] + u[1];
    case 3: return a * a * a * x0 + a * a * u[0] + a * u[1] + u[2];
    default: throw InvalidConfig("order must be 1, 2 or 3");
  }
}

namespace {

double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

double effective_rate(double a) { return std::abs(a) < kNegligibleRate ? 0.0 : a; }

void check_order(int order) {
  if (order < 1 || order > 3) throw InvalidConfig("order must be 1, 2 or 3");
}

Trajectory truncated(const Coeffs& x, int order) {
  Trajectory q;
  for (int k = 0; k < order; ++k) q.c[k] = x[k];
  return q;
}

// Builds q from q0 and the difference-polynomial derivatives at the origin:
//   dq/dt = a q + u - dp/dt,  d2q/dt2 = a dq/dt + du/dt - d2p/dt2.
Trajectory assemble(int order, double a, double q0, const std::array<double, 3>& u, double dp,
                    double ddp) {
  Trajectory q;
  q.c[0] = q0;
  if (order >= 2) q.c[1] = a * q0 + u[0] - dp;
  if (order >= 3) q.c[2] = 0.5 * (a * q.c[1] + u[1] - ddp);
  return q;
}

double solve_tm(const Coeffs& poly, const char* method, int order) {
  auto t = min_positive_root(poly);
  // Right at the equilibrium boundary the leading coefficient vanishes to
  // rounding and the root escapes to infinity.
  if (!t && degree(poly) < order) return kInf;
  if (!t) {
    std::ostringstream msg;
    msg.precision(17);
    msg << method << order << ": step-scale equation has no positive root (coefficients "
        << poly[0] << ", " << poly[1] << ", " << poly[2] << ", " << poly[3] << ")";
    throw NoPositiveRoot(msg.str());
  }
  return *t;
}

}  // namespace

Coeffs liqss_tm_poly(int order, double a, double r_n, double p0) {
  switch (order) {
    case 1: return {1.0, r_n / p0 - a, 0.0, 0.0};
    case 2: return {-2.0, 2.0 * a, r_n / p0 - a * a, 0.0};
    case 3: return {6.0, -6.0 * a, 3.0 * a * a, r_n / p0 - a * a * a};
    default: check_order(order); return {};
  }
}

Coeffs cheqss_tm_poly(int order, double a, double r_n, double p0) {
  switch (order) {
    case 1: return {2.0, r_n / p0 - a, 0.0, 0.0};
    case 2: return {-16.0, 8.0 * a, r_n / p0 - a * a, 0.0};
    case 3: return {192.0, -96.0 * a, 18.0 * a * a, r_n / p0 - a * a * a};
    default: check_order(order); return {};
  }
}

std::optional<QuantizedSegment> equilibrium_branch(int order, double a_raw, double r_n,
                                                   double quantum, const Trajectory& x,
                                                   const std::array<double, 3>& u) {
  check_order(order);
  const double a = effective_rate(a_raw);
  if (a == 0.0) {
    if (r_n != 0.0) return std::nullopt;
    QuantizedSegment seg;
    seg.q = truncated(x.c, order);
    seg.p0 = 0.0;
    seg.equilibrium = true;
    return seg;
  }
  const double an = std::pow(std::abs(a), order);
  if (!(std::abs(r_n) <= an * quantum)) return std::nullopt;
  // An offset sitting exactly on the band edge would re-trigger at once on
  // rounding noise, so it is pulled inside by a few ulps of the state.
  const double noise = 16.0 * std::numeric_limits<double>::epsilon() * std::abs(x.c[0]);
  const double limit = std::max(0.5 * quantum, (1.0 - kEquilibriumMargin) * quantum - noise);
  const double c = std::clamp(r_n / std::pow(a, order), -limit, limit);
  QuantizedSegment seg;
  seg.q = assemble(order, a, x.c[0] - c, u, 0.0, 0.0);
  seg.p0 = c;
  seg.equilibrium = true;
  return seg;
}

QuantizedSegment quantize_qss(const QuantizerContext& ctx) {
  check_order(ctx.order);
  QuantizedSegment seg;
  seg.q = truncated(ctx.x, ctx.order);
  seg.p0 = 0.0;
  return seg;
}

QuantizedSegment quantize_liqss(const QuantizerContext& ctx) {
  const int n = ctx.order;
  check_order(n);
  const double a = effective_rate(ctx.a);
  const double dq = ctx.quantum;
  const double rn = compute_r(n, a, ctx.x[0], ctx.u);
  if (auto eq = equilibrium_branch(n, a, rn, dq, Trajectory{0.0, ctx.x}, ctx.u)) return *eq;

  const double s = sign_of(rn);
  QuantizedSegment seg;
  if (n == 1) {
    // Shared with CheQSS1; t_m is the time p needs to sweep the whole band.
    seg.p0 = -s * dq;
    seg.t_m = solve_tm(cheqss_tm_poly(1, a, rn, seg.p0), "LIQSS", 1);
    seg.q = assemble(1, a, ctx.x[0] - seg.p0, ctx.u, 0.0, 0.0);
    return seg;
  }
  seg.p0 = n == 2 ? s * dq : -s * dq;
  const double tm = solve_tm(liqss_tm_poly(n, a, rn, seg.p0), "LIQSS", n);
  seg.t_m = tm;
  // p(t) = p0 (1 - t/t_m)^n
  const double dp = -n * seg.p0 / tm;
  const double ddp = n * (n - 1) * seg.p0 / (tm * tm);
  seg.q = assemble(n, a, ctx.x[0] - seg.p0, ctx.u, dp, ddp);
  return seg;
}

QuantizedSegment quantize_cheqss(const QuantizerContext& ctx) {
  const int n = ctx.order;
  check_order(n);
  if (n == 1) return quantize_liqss(ctx);
  const double a = effective_rate(ctx.a);
  const double dq = ctx.quantum;
  const double rn = compute_r(n, a, ctx.x[0], ctx.u);
  if (auto eq = equilibrium_branch(n, a, rn, dq, Trajectory{0.0, ctx.x}, ctx.u)) return *eq;

  const double s = sign_of(rn);
  QuantizedSegment seg;
  seg.p0 = n == 2 ? s * dq : -s * dq;
  const double tm = solve_tm(cheqss_tm_poly(n, a, rn, seg.p0), "CheQSS", n);
  seg.t_m = tm;
  // p(t) = sigma dQ T_n(2t/t_m - 1); derivatives of T_n at -1 give the factors.
  double dp = 0.0;
  double ddp = 0.0;
  if (n == 2) {
    dp = -8.0 * seg.p0 / tm;
  } else {
    dp = -18.0 * seg.p0 / tm;
    ddp = 96.0 * seg.p0 / (tm * tm);
  }
  seg.q = assemble(n, a, ctx.x[0] - seg.p0, ctx.u, dp, ddp);
  return seg;
}

QuantizedSegment quantize(const QuantizerContext& ctx) {
  switch (ctx.policy) {
    case Method::QSS: return quantize_qss(ctx);
    case Method::LIQSS:
    case Method::eLIQSS: return quantize_liqss(ctx);
    case Method::CheQSS: return quantize_cheqss(ctx);
  }
  throw InvalidConfig("unknown quantization policy");
}

}  // namespace qss
