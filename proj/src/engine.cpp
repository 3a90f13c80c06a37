#include "qss/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "qss/errors.hpp"

namespace qss {

double effective_quantum(const QuantumSpec& spec, double x) {
  return std::max(spec.abs, spec.rel * std::abs(x));
}

std::vector<double> output_grid(double t0, double t_end, std::size_t count, double dt) {
  std::vector<double> grid;
  if (dt > 0.0) {
    const auto n = static_cast<std::size_t>(std::floor((t_end - t0) / dt * (1.0 + 1e-12)));
    grid.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) grid.push_back(t0 + static_cast<double>(k) * dt);
    return grid;
  }
  if (count == 0) return grid;
  if (count == 1) return {t_end};
  grid.reserve(count);
  const double h = (t_end - t0) / static_cast<double>(count - 1);
  for (std::size_t k = 0; k + 1 < count; ++k) grid.push_back(t0 + static_cast<double>(k) * h);
  grid.push_back(t_end);
  return grid;
}

class Engine::Context final : public EventContext {
 public:
  explicit Context(Engine& e) : e_(e) {}
  double time() const override { return e_.t_; }
  double state(std::size_t i) const override { return eval(e_.x_[i], e_.t_); }
  void set_state(std::size_t i, double value) override {
    if (!std::isfinite(value)) throw NonFiniteState("event handler produced a non-finite state");
    e_.x_[i] = advance(e_.x_[i], e_.t_);
    e_.x_[i].c[0] = value;
    e_.jumped_.push_back(i);
  }
  double discrete(std::size_t k) const override { return e_.d_[k]; }
  void set_discrete(std::size_t k, double value) override {
    if (e_.d_[k] == value) return;
    e_.d_[k] = value;
    for (std::size_t v : e_.model_->discrete_readers(k)) e_.discrete_readers_.push_back(v);
  }
  void schedule(std::size_t source, double time) override {
    e_.queue_.set(EventKind::Timed, source, time);
  }

 private:
  Engine& e_;
};

Engine::Engine(ModelPtr model, EngineConfig cfg) : model_(std::move(model)), cfg_(cfg) {
  if (cfg_.order < 1 || cfg_.order > 3)
    throw InvalidConfig("order " + std::to_string(cfg_.order) + " is not supported (use 1, 2 or 3)");
  if (!(cfg_.t_end > cfg_.t0)) throw InvalidConfig("t_end must be greater than t0");
  if (!(cfg_.quantum.abs > 0.0) || cfg_.quantum.rel < 0.0)
    throw InvalidConfig("quantum requires abs > 0 and rel >= 0");

  const Model& m = *model_;
  const std::size_t n = m.dimension();
  t_ = cfg_.t0;
  const std::vector<double> x0 = m.initial_state();
  d_ = m.initial_discrete();
  x_.resize(n);
  q_.resize(n);
  dq_.resize(n);
  a_.assign(n, 0.0);
  steps_.assign(n, 0);
  scratch_q_.assign(n, Taylor(0.0));
  scratch_x_.assign(n, Taylor(0.0));
  scratch_v_.assign(n, 0.0);
  mark_.assign(n, 0);
  dependents_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : m.incidence(i)) dependents_[j].push_back(i);
  }
  const std::size_t nz = m.zero_crossing_count();
  crossings_of_.resize(n);
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t v : m.zero_crossing_incidence(z)) crossings_of_[v].push_back(z);
  }

  for (std::size_t i = 0; i < n; ++i) {
    x_[i] = Trajectory{t_, {x0[i], 0.0, 0.0, 0.0}};
    q_[i] = Trajectory{t_, {x0[i], 0.0, 0.0, 0.0}};
    dq_[i] = effective_quantum(cfg_.quantum, x0[i]);
  }
  // Picard sweeps give x the Taylor expansion of the true solution at t0,
  // so the first quantization sees meaningful higher derivatives.
  for (int sweep = 0; sweep < cfg_.order; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) recompute_derivative(i);
    for (std::size_t i = 0; i < n; ++i) {
      q_[i] = Trajectory{t_, {}};
      for (int k = 0; k < cfg_.order; ++k) q_[i].c[k] = x_[i].c[k];
    }
  }
  for (std::size_t i = 0; i < n; ++i) recompute_derivative(i);

  queue_ = EventQueue(n, nz, m.timed_source_count());
  for (std::size_t i = 0; i < n; ++i) queue_.set(EventKind::Internal, i, t_);
  for (std::size_t z = 0; z < nz; ++z) schedule_zero_crossing(z);
  for (std::size_t s = 0; s < m.timed_source_count(); ++s)
    queue_.set(EventKind::Timed, s, m.first_timed_event(s));

  if (cfg_.record_samples) {
    grid_ = output_grid(cfg_.t0, cfg_.t_end, cfg_.sample_count, cfg_.sample_dt);
    samples_.names.reserve(n);
    for (std::size_t i = 0; i < n; ++i) samples_.names.push_back(m.variable_name(i));
    samples_.times.reserve(grid_.size());
    samples_.values.reserve(grid_.size());
  }
}

Taylor Engine::q_taylor(std::size_t j) const {
  const Trajectory& q = q_[j];
  return Taylor(q.origin == t_ ? q.c : shift(q.c, t_ - q.origin), cfg_.order);
}

void Engine::recompute_derivative(std::size_t i) {
  for (std::size_t j : model_->incidence(i)) scratch_q_[j] = q_taylor(j);
  const Taylor f = model_->rhs(i, scratch_q_, d_, Taylor::variable(t_, cfg_.order));
  Trajectory& x = x_[i];
  const double value = x.origin == t_ ? x.c[0] : eval(x, t_);
  x.origin = t_;
  x.c[0] = value;
  for (int k = 0; k < 3; ++k) x.c[k + 1] = k < cfg_.order ? f[k] / (k + 1) : 0.0;
  if (!std::isfinite(value) || !std::isfinite(x.c[1]))
    throw NonFiniteState("state " + model_->variable_name(i) + " became non-finite at t=" +
                         std::to_string(t_));
}

void Engine::quantize_var(std::size_t i) {
  const int n = cfg_.order;
  Trajectory& x = x_[i];
  if (x.origin != t_) x = advance(x, t_);
  dq_[i] = effective_quantum(cfg_.quantum, x.c[0]);

  QuantizerContext ctx;
  ctx.order = n;
  ctx.x = x.c;
  ctx.quantum = dq_[i];
  ctx.policy = cfg_.method;
  if (cfg_.method != Method::QSS) {
    for (std::size_t j : model_->incidence(i)) scratch_v_[j] = eval(q_[j], t_);
    scratch_v_[i] = eval(q_[i], t_);
    auto a = model_->diag_jacobian(i, scratch_v_, d_, t_);
    a_[i] = a ? *a : fd_diag_jacobian(*model_, i, scratch_v_, d_, t_);
    // u(t) = f(q(t)) - a q_i(t); f along the old q is the slope of x.
    const Coeffs qc = shift(q_[i].c, t_ - q_[i].origin);
    double taylor_u[3] = {0.0, 0.0, 0.0};
    for (int k = 0; k < n; ++k) taylor_u[k] = (k + 1) * x.c[k + 1] - a_[i] * qc[k];
    ctx.a = a_[i];
    ctx.u = {taylor_u[0], taylor_u[1], 2.0 * taylor_u[2]};
  }
  const QuantizedSegment seg = quantize(ctx);
  q_[i] = Trajectory{t_, seg.q.c};
}

void Engine::schedule_internal(std::size_t i) {
  const Trajectory& x = x_[i];
  const Coeffs qc = shift(q_[i].c, x.origin - q_[i].origin);
  Coeffs p;
  for (int k = 0; k < 4; ++k) p[k] = x.c[k] - qc[k];
  auto delay = band_crossing_delay(p, dq_[i], cfg_.method == Method::LIQSS);
  queue_.set(EventKind::Internal, i, delay ? x.origin + *delay : kInf);
}

void Engine::schedule_zero_crossing(std::size_t z, bool just_fired) {
  for (std::size_t v : model_->zero_crossing_incidence(z)) {
    const Trajectory& x = x_[v];
    scratch_x_[v] = Taylor(x.origin == t_ ? x.c : shift(x.c, t_ - x.origin), cfg_.order + 1);
  }
  const Taylor g = model_->zero_crossing(z, scratch_x_, d_);
  auto delay = first_upcrossing(g.coeffs(), 0.0);
  double when = delay ? t_ + *delay : kInf;
  if (just_fired && when <= t_) when = kInf;
  queue_.set(EventKind::ZeroCrossing, z, when);
}

void Engine::reschedule_crossings_of(std::size_t var) {
  for (std::size_t z : crossings_of_[var]) schedule_zero_crossing(z);
}

void Engine::internal_event(std::size_t i) {
  quantize_var(i);
  ++steps_[i];
  recompute_derivative(i);
  schedule_internal(i);
  reschedule_crossings_of(i);
  for (std::size_t j : dependents_[i]) {
    if (j == i) continue;
    recompute_derivative(j);
    schedule_internal(j);
    reschedule_crossings_of(j);
  }
}

double Engine::refine_crossing(std::size_t z, double t) {
  // One Newton step on the guard evaluated from the state trajectories.
  for (std::size_t v : model_->zero_crossing_incidence(z)) {
    scratch_v_[v] = eval(x_[v], t);
    scratch_x_[v] = Taylor(shift(x_[v].c, t - x_[v].origin), 2);
  }
  const double g = model_->zero_crossing(z, scratch_v_, d_);
  const double dg = model_->zero_crossing(z, scratch_x_, d_)[1];
  if (dg <= 0.0 || !std::isfinite(g)) return t;
  const double refined = t - g / dg;
  return std::abs(refined - t) <= 1e-9 * std::max(1.0, std::abs(t)) && refined >= t_ ? refined : t;
}

void Engine::discontinuity(const EventRecord& ev) {
  Context ctx(*this);
  jumped_.clear();
  touched_.clear();
  discrete_readers_.clear();
  if (ev.kind == EventKind::ZeroCrossing) {
    t_ = refine_crossing(ev.index, ev.time);
    ++zero_crossings_;
    model_->on_zero_crossing(ev.index, ctx);
  } else {
    model_->on_timed_event(ev.index, ctx);
  }
  ++events_;

  if (++epoch_ == 0) {
    std::fill(mark_.begin(), mark_.end(), 0);
    epoch_ = 1;
  }
  auto touch = [&](std::size_t v) {
    if (mark_[v] == epoch_) return;
    mark_[v] = epoch_;
    touched_.push_back(v);
  };
  for (std::size_t v : discrete_readers_) touch(v);
  std::sort(jumped_.begin(), jumped_.end());
  jumped_.erase(std::unique(jumped_.begin(), jumped_.end()), jumped_.end());

  for (std::size_t v : jumped_) q_[v] = Trajectory{t_, {x_[v].c[0], 0.0, 0.0, 0.0}};
  for (std::size_t v : jumped_) {
    recompute_derivative(v);
    quantize_var(v);
    touch(v);
    for (std::size_t j : dependents_[v]) touch(j);
  }
  for (std::size_t v : touched_) {
    recompute_derivative(v);
    schedule_internal(v);
  }
  for (std::size_t v : touched_) reschedule_crossings_of(v);
  if (ev.kind == EventKind::ZeroCrossing) schedule_zero_crossing(ev.index, true);
}

EventRecord Engine::step() {
  EventRecord ev = queue_.top();
  if (!std::isfinite(ev.time)) return ev;
  if (cfg_.record_samples) emit_samples_before(ev.time, false);
  if (observer_) observer_(*this, ev);

  const double min_advance = 1e-14 * (cfg_.t_end - cfg_.t0);
  if (ev.time - t_ < min_advance) {
    if (++stalled_ >= 1000000)
      throw StalledSimulation("simulation stalled near t=" + std::to_string(t_));
  } else {
    stalled_ = 0;
  }
  t_ = ev.time;
  if (ev.kind == EventKind::Internal)
    internal_event(ev.index);
  else
    discontinuity(ev);
  ev.time = t_;
  return ev;
}

bool Engine::finished() const {
  return queue_.empty() || !(queue_.top().time < cfg_.t_end);
}

void Engine::emit_samples_before(double t, bool inclusive) {
  const std::size_t n = x_.size();
  while (next_sample_ < grid_.size() &&
         (grid_[next_sample_] < t || (inclusive && grid_[next_sample_] <= t))) {
    const double ts = grid_[next_sample_++];
    const auto& traj = cfg_.sample_source == SampleSource::Quantized ? q_ : x_;
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) row[i] = eval(traj[i], ts);
    samples_.times.push_back(ts);
    samples_.values.push_back(std::move(row));
  }
}

SimStats Engine::stats() const {
  SimStats s;
  s.steps = steps_;
  for (auto c : steps_) s.total_steps += c;
  s.events = events_;
  s.zero_crossings = zero_crossings_;
  s.samples = samples_;
  return s;
}

SimStats Engine::run() {
  const auto start = std::chrono::steady_clock::now();
  while (!finished()) step();
  if (cfg_.record_samples) emit_samples_before(cfg_.t_end, true);
  SimStats s;
  s.steps = steps_;
  for (auto c : steps_) s.total_steps += c;
  s.events = events_;
  s.zero_crossings = zero_crossings_;
  s.samples = std::move(samples_);
  samples_ = {};
  s.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return s;
}

}  // namespace qss
