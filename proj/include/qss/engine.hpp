#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qss/event_queue.hpp"
#include "qss/models.hpp"
#include "qss/quantizer.hpp"

namespace qss {

struct QuantumSpec {
  double rel = 0.0;
  double abs = 1e-3;
};

double effective_quantum(const QuantumSpec& spec, double x);

// Output trajectories on a fixed grid; values[k][i] is variable i at times[k].
struct Samples {
  std::vector<std::string> names;
  std::vector<double> times;
  std::vector<std::vector<double>> values;
};

struct SimStats {
  std::vector<std::uint64_t> steps;
  std::uint64_t total_steps = 0;
  std::uint64_t events = 0;          // zero crossings + timed discontinuities
  std::uint64_t zero_crossings = 0;  // for the network model: emitted spikes
  std::uint64_t rejected_steps = 0;  // Runge-Kutta baseline only
  Samples samples;
  double wall_ms = 0.0;
};

// Uniform output grid on [t0, t_end]: `count` points, or spacing `dt` when dt > 0.
std::vector<double> output_grid(double t0, double t_end, std::size_t count, double dt = 0.0);

// Which trajectory the output grid samples.  The quantized state is what the
// rest of the system sees and is the default; the state trajectory x is the
// integrator's internal variable.
enum class SampleSource { Quantized, State };

struct EngineConfig {
  Method method = Method::QSS;
  int order = 1;
  QuantumSpec quantum;
  double t0 = 0.0;
  double t_end = 1.0;
  std::size_t sample_count = 500;
  double sample_dt = 0.0;
  bool record_samples = true;
  SampleSource sample_source = SampleSource::Quantized;
};

class Engine {
 public:
  // Called before each event is applied.
  using Observer = std::function<void(const Engine&, const EventRecord&)>;

  Engine(ModelPtr model, EngineConfig cfg);

  bool finished() const;
  EventRecord next_event() const { return queue_.top(); }
  EventRecord step();
  SimStats run();

  void set_observer(Observer obs) { observer_ = std::move(obs); }

  const Model& model() const { return *model_; }
  const EngineConfig& config() const { return cfg_; }
  double time() const { return t_; }
  std::size_t size() const { return x_.size(); }
  const Trajectory& x(std::size_t i) const { return x_[i]; }
  const Trajectory& q(std::size_t i) const { return q_[i]; }
  double quantum(std::size_t i) const { return dq_[i]; }
  double jacobian(std::size_t i) const { return a_[i]; }
  std::uint64_t steps(std::size_t i) const { return steps_[i]; }
  const std::vector<double>& discrete() const { return d_; }
  double next_internal(std::size_t i) const { return queue_.time_of(EventKind::Internal, i); }
  // Current stats snapshot (samples recorded so far).
  SimStats stats() const;

 private:
  class Context;

  Taylor q_taylor(std::size_t j) const;
  void recompute_derivative(std::size_t i);
  void quantize_var(std::size_t i);
  void schedule_internal(std::size_t i);
  void schedule_zero_crossing(std::size_t z, bool just_fired = false);
  void reschedule_crossings_of(std::size_t var);
  void internal_event(std::size_t i);
  void discontinuity(const EventRecord& ev);
  double refine_crossing(std::size_t z, double t);
  void emit_samples_before(double t, bool inclusive);

  ModelPtr model_;
  EngineConfig cfg_;
  double t_ = 0.0;
  std::vector<Trajectory> x_;
  std::vector<Trajectory> q_;
  std::vector<double> dq_;
  std::vector<double> a_;
  std::vector<std::uint64_t> steps_;
  std::vector<double> d_;
  std::vector<std::vector<std::size_t>> dependents_;
  std::vector<std::vector<std::size_t>> crossings_of_;
  EventQueue queue_;
  std::vector<Taylor> scratch_q_;
  std::vector<Taylor> scratch_x_;
  std::vector<double> scratch_v_;
  std::vector<std::size_t> jumped_;
  std::vector<std::size_t> touched_;
  std::vector<std::size_t> discrete_readers_;
  std::vector<std::uint32_t> mark_;
  std::uint32_t epoch_ = 0;
  std::uint64_t events_ = 0;
  std::uint64_t zero_crossings_ = 0;
  std::uint64_t stalled_ = 0;
  std::vector<double> grid_;
  std::size_t next_sample_ = 0;
  Samples samples_;
  Observer observer_;
};

}  // namespace qss
