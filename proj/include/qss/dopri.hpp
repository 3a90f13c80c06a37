#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "qss/engine.hpp"
#include "qss/models.hpp"

namespace qss {

struct RkController {
  double rtol = 1e-6;
  double atol = 1e-8;
  double safety = 0.9;
  double fac_min = 0.2;
  double fac_max = 10.0;
  double h_init = 0.0;  // 0 selects the starting-step heuristic
};

using RhsFn = std::function<void(double t, std::span<const double> x, std::span<double> dxdt)>;

// One Dormand-Prince 5(4) step with the coefficients needed for the
// 4th-order continuous extension.
struct DopriStep {
  std::vector<double> x_new;
  std::vector<double> err;
  std::vector<double> k_last;                // f(t + h, x_new), reusable as the next k1
  std::array<std::vector<double>, 5> dense;  // continuous-extension coefficients
  double t = 0.0;
  double h = 0.0;

  // State at t + theta*h, theta in [0, 1].
  double interpolate(std::size_t i, double theta) const;
};

// k1 = f(t, x) may be passed in (first-same-as-last); otherwise it is evaluated.
DopriStep dopri_step(std::span<const double> x, double t, double h, const RhsFn& rhs,
                     std::span<const double> k1 = {});

// Weighted max-norm of the error estimate used by the controller.
double error_norm(std::span<const double> err, std::span<const double> x,
                  std::span<const double> x_new, double rtol, double atol);

struct DopriConfig {
  RkController ctrl;
  double t0 = 0.0;
  double t_end = 1.0;
  std::size_t sample_count = 500;
  double sample_dt = 0.0;
  bool record_samples = true;
  // Invoked with the located event and the state just before its handler runs.
  std::function<void(const EventRecord&, std::span<const double>)> on_event;
};

SimStats dopri_run(ModelPtr model, const DopriConfig& cfg);

}  // namespace qss
