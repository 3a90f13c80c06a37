#include "qss/activity.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qss/errors.hpp"
#include "qss/io.hpp"

namespace qss {

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

void check_order(int n) {
  if (n < 1 || n > 3) throw InvalidConfig("activity order must be 1, 2 or 3");
}

// Composite Simpson on uniformly spaced samples (odd count).
double simpson(std::span<const double> y, double h) {
  const std::size_t m = y.size() - 1;
  double s = y.front() + y.back();
  for (std::size_t k = 1; k < m; ++k) s += (k % 2 == 1 ? 4.0 : 2.0) * y[k];
  return s * h / 3.0;
}

}  // namespace

double activity_n(const std::function<double(double)>& derivative_n, int n, double t0, double tf,
                  std::size_t panels) {
  check_order(n);
  if (!(tf > t0)) throw InvalidConfig("activity interval must have tf > t0");
  panels = std::max<std::size_t>(panels, 10000);
  if (panels % 2 == 1) ++panels;
  const double h = (tf - t0) / static_cast<double>(panels);
  const double nf = factorial(n);
  std::vector<double> y(panels + 1);
  for (std::size_t k = 0; k <= panels; ++k) {
    const double t = k == panels ? tf : t0 + static_cast<double>(k) * h;
    y[k] = std::pow(std::abs(derivative_n(t) / nf), 1.0 / n);
  }
  return simpson(y, h);
}

double min_steps_general(double activity, double quantum, int n) {
  check_order(n);
  return activity / (std::pow(2.0, (2.0 * n - 1.0) / n) * std::pow(quantum, 1.0 / n));
}

double min_steps_classic(double activity, double quantum, int n) {
  check_order(n);
  return activity / std::pow(quantum, 1.0 / n);
}

std::vector<double> solution_taylor_coefficient(const Model& model, std::span<const double> x,
                                                std::span<const double> d, double t, int n) {
  check_order(n);
  const std::size_t dim = model.dimension();
  const int terms = n + 1;
  std::vector<Taylor> cur(dim), next(dim);
  for (std::size_t i = 0; i < dim; ++i) cur[i] = Taylor(Coeffs{x[i], 0.0, 0.0, 0.0}, terms);
  const Taylor time = Taylor::variable(t, terms);
  // Each Picard sweep fixes one more Taylor coefficient.
  for (int sweep = 0; sweep < n; ++sweep) {
    for (std::size_t i = 0; i < dim; ++i) {
      const Taylor f = model.rhs(i, cur, d, time);
      Coeffs c{x[i], 0.0, 0.0, 0.0};
      for (int k = 0; k + 1 < terms; ++k) c[k + 1] = f[k] / (k + 1);
      next[i] = Taylor(c, terms);
    }
    std::swap(cur, next);
  }
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = cur[i][n];
  return out;
}

namespace {

ActivityReport build_report(const Model& model, std::span<const double> times,
                            const std::vector<std::vector<double>>& states, int n,
                            const std::function<double(double)>* quantum_of, double quantum) {
  check_order(n);
  if (times.size() < 3 || times.size() % 2 == 0 || states.size() != times.size())
    throw InvalidConfig("activity needs an odd number (>= 3) of uniformly spaced samples");
  const std::size_t dim = model.dimension();
  const double h = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  const std::vector<double> d = model.initial_discrete();
  std::vector<std::vector<double>> integrand(dim, std::vector<double>(times.size()));
  std::vector<std::vector<double>> scaled;
  if (quantum_of) scaled.assign(dim, std::vector<double>(times.size()));
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto c = solution_taylor_coefficient(model, states[k], d, times[k], n);
    for (std::size_t i = 0; i < dim; ++i) {
      integrand[i][k] = std::pow(std::abs(c[i]), 1.0 / n);
      if (quantum_of) scaled[i][k] = std::pow(std::abs(c[i]) / (*quantum_of)(states[k][i]), 1.0 / n);
    }
  }
  ActivityReport r;
  r.order = n;
  r.quantum = quantum_of ? 0.0 : quantum;
  for (std::size_t i = 0; i < dim; ++i) {
    ActivityRow row;
    row.var = i;
    row.order = n;
    row.activity = simpson(integrand[i], h);
    if (quantum_of) {
      const double steps = simpson(scaled[i], h);
      row.bound_classic = steps;
      row.bound_general = min_steps_general(steps, 1.0, n);
    } else {
      row.bound_general = min_steps_general(row.activity, quantum, n);
      row.bound_classic = min_steps_classic(row.activity, quantum, n);
    }
    r.total_general += row.bound_general;
    r.total_classic += row.bound_classic;
    r.rows.push_back(row);
  }
  return r;
}

}  // namespace

ActivityReport activity_report(const Model& model, std::span<const double> times,
                               const std::vector<std::vector<double>>& states, int n,
                               double quantum) {
  return build_report(model, times, states, n, nullptr, quantum);
}

ActivityReport activity_report(const Model& model, std::span<const double> times,
                               const std::vector<std::vector<double>>& states, int n,
                               const std::function<double(double)>& quantum_of) {
  return build_report(model, times, states, n, &quantum_of, 0.0);
}

void write_activity_csv(std::ostream& os, const ActivityReport& report) {
  os << "var,order,activity,bound_general,bound_classic\n";
  for (const auto& row : report.rows) {
    os << row.var << ',' << row.order << ',' << format_double(row.activity) << ','
       << format_double(row.bound_general) << ',' << format_double(row.bound_classic) << '\n';
  }
}

}  // namespace qss
