#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qss/taylor.hpp"

namespace qss {

// What an event handler may do to the simulation.  Both the quantized
// engine and the Runge-Kutta baseline implement this.
class EventContext {
 public:
  virtual ~EventContext() = default;
  virtual double time() const = 0;
  virtual double state(std::size_t i) const = 0;
  virtual void set_state(std::size_t i, double value) = 0;
  virtual double discrete(std::size_t k) const = 0;
  virtual void set_discrete(std::size_t k, double value) = 0;
  // Reschedules timed source `source` (kInf disables it).
  virtual void schedule(std::size_t source, double time) = 0;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> initial_state() const = 0;
  virtual std::vector<double> initial_discrete() const { return {}; }
  virtual std::string variable_name(std::size_t i) const { return "x" + std::to_string(i); }

  virtual double rhs(std::size_t i, std::span<const double> x, std::span<const double> d,
                     double t) const = 0;
  virtual Taylor rhs(std::size_t i, std::span<const Taylor> q, std::span<const double> d,
                     const Taylor& t) const = 0;

  // Analytic df_i/dx_i; empty means the engine falls back to finite differences.
  virtual std::optional<double> diag_jacobian(std::size_t /*i*/, std::span<const double> /*q*/,
                                              std::span<const double> /*d*/, double /*t*/) const {
    return std::nullopt;
  }

  // State indices read by f_i.
  virtual std::span<const std::size_t> incidence(std::size_t i) const = 0;
  // States whose f reads discrete variable k.
  virtual std::span<const std::size_t> discrete_readers(std::size_t /*k*/) const { return {}; }

  // Rising zero crossings of polynomial guards g_z(x): the event fires when
  // g_z goes from negative to positive.
  virtual std::size_t zero_crossing_count() const { return 0; }
  virtual Taylor zero_crossing(std::size_t /*z*/, std::span<const Taylor> /*x*/,
                               std::span<const double> /*d*/) const {
    return Taylor(0.0);
  }
  virtual double zero_crossing(std::size_t /*z*/, std::span<const double> /*x*/,
                               std::span<const double> /*d*/) const {
    return 0.0;
  }
  virtual std::span<const std::size_t> zero_crossing_incidence(std::size_t /*z*/) const { return {}; }
  virtual void on_zero_crossing(std::size_t /*z*/, EventContext& /*ctx*/) const {}

  // Timed discontinuities (input arrivals, end of refractory windows).
  virtual std::size_t timed_source_count() const { return 0; }
  virtual double first_timed_event(std::size_t /*source*/) const { return kInf; }
  virtual void on_timed_event(std::size_t /*source*/, EventContext& /*ctx*/) const {}

  virtual std::optional<double> exact_solution(std::size_t /*i*/, double /*t*/) const {
    return std::nullopt;
  }
};

// Implements both rhs overloads from one templated `f<T>` in Derived.
template <class Derived>
class ModelBase : public Model {
 public:
  double rhs(std::size_t i, std::span<const double> x, std::span<const double> d,
             double t) const override {
    return static_cast<const Derived*>(this)->template f<double>(i, x, d, t);
  }
  Taylor rhs(std::size_t i, std::span<const Taylor> q, std::span<const double> d,
             const Taylor& t) const override {
    return static_cast<const Derived*>(this)->template f<Taylor>(i, q, d, t);
  }
};

// Central finite difference of f_i with respect to x_i.
double fd_diag_jacobian(const Model& model, std::size_t i, std::span<const double> q,
                        std::span<const double> d, double t);

}  // namespace qss
