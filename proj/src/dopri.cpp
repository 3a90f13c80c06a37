#include "qss/dopri.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "qss/errors.hpp"

namespace qss {

namespace {

constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

void check_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NonFiniteState("Runge-Kutta stage produced a non-finite value");
  }
}

}  // namespace

double DopriStep::interpolate(std::size_t i, double theta) const {
  const double s = 1.0 - theta;
  return dense[0][i] +
         theta * (dense[1][i] + s * (dense[2][i] + theta * (dense[3][i] + s * dense[4][i])));
}

DopriStep dopri_step(std::span<const double> x, double t, double h, const RhsFn& rhs,
                     std::span<const double> k1_in) {
  const std::size_t n = x.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y(n);
  if (k1_in.size() == n)
    std::copy(k1_in.begin(), k1_in.end(), k1.begin());
  else
    rhs(t, x, k1);
  check_finite(k1);

  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + h * a21 * k1[i];
  rhs(t + c2 * h, y, k2);
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + h * (a31 * k1[i] + a32 * k2[i]);
  rhs(t + c3 * h, y, k3);
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  rhs(t + c4 * h, y, k4);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = x[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  rhs(t + c5 * h, y, k5);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = x[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
  rhs(t + h, y, k6);
  check_finite(k6);

  DopriStep s;
  s.t = t;
  s.h = h;
  s.x_new.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.x_new[i] = x[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
  check_finite(s.x_new);
  rhs(t + h, s.x_new, k7);
  check_finite(k7);

  s.err.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);

  for (auto& v : s.dense) v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = s.x_new[i] - x[i];
    const double bspl = h * k1[i] - diff;
    s.dense[0][i] = x[i];
    s.dense[1][i] = diff;
    s.dense[2][i] = bspl;
    s.dense[3][i] = diff - h * k7[i] - bspl;
    s.dense[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
  }
  s.k_last = std::move(k7);
  return s;
}

double error_norm(std::span<const double> err, std::span<const double> x,
                  std::span<const double> x_new, double rtol, double atol) {
  double m = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(x[i]), std::abs(x_new[i]));
    m = std::max(m, std::abs(err[i]) / sc);
  }
  return m;
}

namespace {

class RkContext final : public EventContext {
 public:
  RkContext(double t, std::vector<double>& x, std::vector<double>& d, std::vector<double>& timed)
      : t_(t), x_(x), d_(d), timed_(timed) {}
  double time() const override { return t_; }
  double state(std::size_t i) const override { return x_[i]; }
  void set_state(std::size_t i, double v) override { x_[i] = v; }
  double discrete(std::size_t k) const override { return d_[k]; }
  void set_discrete(std::size_t k, double v) override { d_[k] = v; }
  void schedule(std::size_t s, double when) override { timed_[s] = when; }

 private:
  double t_;
  std::vector<double>& x_;
  std::vector<double>& d_;
  std::vector<double>& timed_;
};

double initial_step(const RhsFn& rhs, double t, std::span<const double> x,
                    std::span<const double> f0, const RkController& c, double span) {
  // Hairer-Norsett-Wanner starting step for a 5th-order method.
  const std::size_t n = x.size();
  double d0 = 0.0, d1n = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = c.atol + c.rtol * std::abs(x[i]);
    d0 = std::max(d0, std::abs(x[i]) / sc);
    d1n = std::max(d1n, std::abs(f0[i]) / sc);
  }
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, span);
  std::vector<double> y(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + h0 * f0[i];
  rhs(t + h0, y, f1);
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = c.atol + c.rtol * std::abs(x[i]);
    d2 = std::max(d2, std::abs(f1[i] - f0[i]) / sc / h0);
  }
  const double h1 = std::max(d1n, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                               : std::pow(0.01 / std::max(d1n, d2), 1.0 / 5.0);
  return std::min({100.0 * h0, h1, span});
}

}  // namespace

SimStats dopri_run(ModelPtr model_ptr, const DopriConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Model& model = *model_ptr;
  const RkController& ctrl = cfg.ctrl;
  if (!(cfg.t_end > cfg.t0)) throw InvalidConfig("t_end must be greater than t0");
  if (!(ctrl.rtol >= 0.0 && ctrl.atol > 0.0)) throw InvalidConfig("tolerances must be positive");

  const std::size_t n = model.dimension();
  const std::size_t nz = model.zero_crossing_count();
  std::vector<double> x = model.initial_state();
  std::vector<double> d = model.initial_discrete();
  std::vector<double> timed(model.timed_source_count());
  for (std::size_t s = 0; s < timed.size(); ++s) timed[s] = model.first_timed_event(s);

  const RhsFn rhs = [&](double t, std::span<const double> y, std::span<double> out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = model.rhs(i, y, d, t);
  };

  SimStats stats;
  stats.steps.assign(n, 0);
  std::vector<double> grid;
  std::size_t next_sample = 0;
  if (cfg.record_samples) {
    grid = output_grid(cfg.t0, cfg.t_end, cfg.sample_count, cfg.sample_dt);
    for (std::size_t i = 0; i < n; ++i) stats.samples.names.push_back(model.variable_name(i));
  }
  auto emit_dense = [&](const DopriStep& st, double t_hi) {
    while (next_sample < grid.size() && grid[next_sample] <= t_hi) {
      const double theta = std::clamp((grid[next_sample] - st.t) / st.h, 0.0, 1.0);
      std::vector<double> row(n);
      for (std::size_t i = 0; i < n; ++i) row[i] = st.interpolate(i, theta);
      stats.samples.times.push_back(grid[next_sample++]);
      stats.samples.values.push_back(std::move(row));
    }
  };

  double t = cfg.t0;
  std::vector<double> f(n);
  rhs(t, x, f);
  const double span = cfg.t_end - cfg.t0;
  double h = ctrl.h_init > 0.0 ? ctrl.h_init : initial_step(rhs, t, x, f, ctrl, span);
  const double h_min = 1e-14 * span;
  const double loc_tol = 1e-12 * span;
  std::vector<double> g_old(nz);
  for (std::size_t z = 0; z < nz; ++z) g_old[z] = model.zero_crossing(z, x, d);
  bool last_rejected = false;

  // Samples that coincide with t0.
  while (next_sample < grid.size() && grid[next_sample] <= t) {
    stats.samples.times.push_back(grid[next_sample++]);
    stats.samples.values.push_back(x);
  }

  while (t < cfg.t_end) {
    double t_timed = kInf;
    std::size_t timed_src = 0;
    for (std::size_t s = 0; s < timed.size(); ++s) {
      if (timed[s] < t_timed) {
        t_timed = timed[s];
        timed_src = s;
      }
    }
    if (t_timed <= t) {
      // Simultaneous timed events are applied without an intermediate step.
      EventRecord rec{t, EventKind::Timed, timed_src};
      if (cfg.on_event) cfg.on_event(rec, x);
      RkContext ctx(t, x, d, timed);
      model.on_timed_event(timed_src, ctx);
      ++stats.events;
      rhs(t, x, f);
      for (std::size_t z = 0; z < nz; ++z) g_old[z] = model.zero_crossing(z, x, d);
      continue;
    }
    const double stop = std::min(cfg.t_end, t_timed);
    bool hits_stop = false;
    double h_try = h;
    if (t + h_try >= stop) {
      h_try = stop - t;
      hits_stop = true;
    }
    if (h_try < h_min && !hits_stop) throw StepUnderflow("step size underflow at t=" + std::to_string(t));

    DopriStep st = dopri_step(x, t, h_try, rhs, f);
    const double en = error_norm(st.err, x, st.x_new, ctrl.rtol, ctrl.atol);
    if (en > 1.0) {
      ++stats.rejected_steps;
      const double fac = std::max(ctrl.fac_min, ctrl.safety * std::pow(en, -0.2));
      h = h_try * fac;
      last_rejected = true;
      if (h < h_min) throw StepUnderflow("step size underflow at t=" + std::to_string(t));
      continue;
    }
    ++stats.total_steps;

    // Earliest sign change among the guards over the accepted step.
    double t_event = kInf;
    std::size_t z_event = 0;
    std::vector<double> g_new(nz);
    for (std::size_t z = 0; z < nz; ++z) {
      g_new[z] = model.zero_crossing(z, st.x_new, d);
      if (!(g_old[z] < 0.0 && g_new[z] >= 0.0)) continue;
      const auto inc = model.zero_crossing_incidence(z);
      std::vector<double> probe = st.x_new;
      auto g_at = [&](double theta) {
        for (std::size_t v : inc) probe[v] = st.interpolate(v, theta);
        return model.zero_crossing(z, probe, d);
      };
      double lo = 0.0, hi = 1.0;
      while ((hi - lo) * h_try > loc_tol) {
        const double mid = 0.5 * (lo + hi);
        if (g_at(mid) < 0.0)
          lo = mid;
        else
          hi = mid;
      }
      const double tz = t + hi * h_try;
      if (tz < t_event) {
        t_event = tz;
        z_event = z;
      }
    }

    if (std::isfinite(t_event)) {
      const double theta = (t_event - t) / h_try;
      emit_dense(st, t_event);
      for (std::size_t i = 0; i < n; ++i) x[i] = st.interpolate(i, theta);
      t = t_event;
      EventRecord rec{t, EventKind::ZeroCrossing, z_event};
      if (cfg.on_event) cfg.on_event(rec, x);
      RkContext ctx(t, x, d, timed);
      model.on_zero_crossing(z_event, ctx);
      ++stats.events;
      ++stats.zero_crossings;
    } else {
      emit_dense(st, t + h_try);
      x = st.x_new;
      t = hits_stop ? stop : t + h_try;
      if (hits_stop && stop == t_timed && t_timed < cfg.t_end) {
        EventRecord rec{t, EventKind::Timed, timed_src};
        if (cfg.on_event) cfg.on_event(rec, x);
        RkContext ctx(t, x, d, timed);
        model.on_timed_event(timed_src, ctx);
        ++stats.events;
      } else {
        f = st.k_last;
        for (std::size_t z = 0; z < nz; ++z) g_old[z] = g_new[z];
        double fac = std::min(ctrl.fac_max, std::max(ctrl.fac_min, ctrl.safety * std::pow(std::max(en, 1e-10), -0.2)));
        if (last_rejected) fac = std::min(fac, 1.0);
        if (!hits_stop || h_try >= h) h = h_try * fac;
        last_rejected = false;
        continue;
      }
    }
    // Restart after a discontinuity.
    rhs(t, x, f);
    for (std::size_t z = 0; z < nz; ++z) g_old[z] = model.zero_crossing(z, x, d);
    const double fac = std::min(ctrl.fac_max, std::max(ctrl.fac_min, ctrl.safety * std::pow(std::max(en, 1e-10), -0.2)));
    h = std::max(h_try * fac, h);
    last_rejected = false;
  }

  if (cfg.record_samples) {
    while (next_sample < grid.size()) {
      stats.samples.times.push_back(grid[next_sample++]);
      stats.samples.values.push_back(x);
    }
  }
  std::fill(stats.steps.begin(), stats.steps.end(), stats.total_steps);
  stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

}  // namespace qss
