#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "qss/model.hpp"

namespace qss {

// Integral over [t0, tf] of |d^n x/dt^n / n!|^(1/n), composite Simpson.
double activity_n(const std::function<double(double)>& derivative_n, int n, double t0, double tf,
                  std::size_t panels = 20000);

// Lower bound on the steps of a method whose error polynomial is optimal.
double min_steps_general(double activity, double quantum, int n);
// Lower bound on the steps of classic QSS_n.
double min_steps_classic(double activity, double quantum, int n);

// Taylor coefficient of order n (d^n x/dt^n / n!) of the exact solution
// through state x at time t, for every variable.  n <= 3.
std::vector<double> solution_taylor_coefficient(const Model& model, std::span<const double> x,
                                                std::span<const double> d, double t, int n);

struct ActivityRow {
  std::size_t var = 0;
  int order = 1;
  double activity = 0.0;
  double bound_general = 0.0;
  double bound_classic = 0.0;
};

struct ActivityReport {
  int order = 1;
  double quantum = 0.0;
  std::vector<ActivityRow> rows;
  double total_general = 0.0;
  double total_classic = 0.0;
};

// Activity of every model variable along a reference solution sampled on a
// uniform grid (times.size() odd, at least 3 points).
ActivityReport activity_report(const Model& model, std::span<const double> times,
                               const std::vector<std::vector<double>>& states, int n,
                               double quantum);

// Same report when the quantum depends on the state value, as with
// logarithmic quantization.  Bounds then integrate |x^(n)/n!|^(1/n) / dQ(x)^(1/n),
// and `quantum` in the report is 0.
ActivityReport activity_report(const Model& model, std::span<const double> times,
                               const std::vector<std::vector<double>>& states, int n,
                               const std::function<double(double)>& quantum_of);

void write_activity_csv(std::ostream& os, const ActivityReport& report);

}  // namespace qss
