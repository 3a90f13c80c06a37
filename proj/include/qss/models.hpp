#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "qss/model.hpp"

namespace qss {

// dx/dt = 1 - x, x(0) = 0.
class ScalarModel : public ModelBase<ScalarModel> {
 public:
  template <class T>
  T f(std::size_t, std::span<const T> x, std::span<const double>, const T&) const {
    return 1.0 - x[0];
  }

  std::string name() const override { return "scalar"; }
  std::size_t dimension() const override { return 1; }
  std::vector<double> initial_state() const override { return {0.0}; }
  std::optional<double> diag_jacobian(std::size_t, std::span<const double>, std::span<const double>,
                                      double) const override {
    return -1.0;
  }
  std::span<const std::size_t> incidence(std::size_t) const override { return self_; }
  std::optional<double> exact_solution(std::size_t i, double t) const override;

 private:
  std::vector<std::size_t> self_{0};
};

struct AdrParams {
  std::size_t n = 100;
  double advection = 1.0;
  double diffusion = 0.1;
  double reaction = 100.0;
  double length = 10.0;
  double inflow = 1.0;
};

// Upwind advection, central diffusion and cubic reaction on a 1-D grid.
class AdrModel : public ModelBase<AdrModel> {
 public:
  explicit AdrModel(AdrParams p);

  template <class T>
  T f(std::size_t i, std::span<const T> x, std::span<const double>, const T&) const {
    const T& xi = x[i];
    const T left = i > 0 ? x[i - 1] : T(p_.inflow);
    // The closed right end mirrors its neighbour.
    const T& right = i + 1 < p_.n ? x[i + 1] : x[i - 1];
    return -p_.advection * (xi - left) / dx_ +
           p_.diffusion * (right - 2.0 * xi + left) / (dx_ * dx_) +
           p_.reaction * (xi * xi - xi * xi * xi);
  }

  std::string name() const override { return "adr"; }
  std::size_t dimension() const override { return p_.n; }
  std::vector<double> initial_state() const override { return std::vector<double>(p_.n, 0.0); }
  std::optional<double> diag_jacobian(std::size_t i, std::span<const double> q,
                                      std::span<const double>, double) const override;
  std::span<const std::size_t> incidence(std::size_t i) const override { return incidence_[i]; }

  const AdrParams& params() const { return p_; }
  double dx() const { return dx_; }

 private:
  AdrParams p_;
  double dx_;
  std::vector<std::vector<std::size_t>> incidence_;
};

// Leaky integrate-and-fire network.  Time is in seconds; membrane
// potentials are in mV and synaptic currents in nA, so absolute quanta are
// meaningful for both state kinds.  Parameters keep the units in their names.
struct SnnParams {
  std::size_t n = 1000;
  double exc_fraction = 0.8;
  std::size_t in_degree = 10;
  std::size_t exc_in_degree = 8;
  double tau_m_ms = 10.0;
  double tau_r_ms = 2.0;
  double tau_s_ms = 0.5;
  double c_m_pF = 250.0;
  double v_reset_mV = -65.0;
  double theta_mV = -50.0;
  double e_l_mV = -65.0;
  double nu_bg_hz = 8.0;
  double k_ext = 940.0;
  double j_mean_pA = 87.8;
  double j_sd_pA = 8.78;
  double g = 4.0;
  double v0_lo_mV = -65.0;
  double v0_hi_mV = -64.0;
  double i0_lo_nA = 0.4;
  double i0_hi_nA = 0.5;
  double horizon_s = 0.05;  // external arrivals are generated up to this time
  std::uint64_t seed = 1;
};

class SnnModel : public ModelBase<SnnModel> {
 public:
  explicit SnnModel(SnnParams p);

  template <class T>
  T f(std::size_t i, std::span<const T> x, std::span<const double> d, const T&) const {
    const std::size_t neuron = i / 2;
    if (i % 2 == 1) return -x[i] / tau_s_;
    if (d[neuron] != 0.0) return T(0.0);
    return -(x[i] - p_.e_l_mV) / tau_m_ + (1e6 / p_.c_m_pF) * x[i + 1];
  }

  std::string name() const override { return "snn"; }
  std::size_t dimension() const override { return 2 * p_.n; }
  std::vector<double> initial_state() const override { return initial_; }
  std::vector<double> initial_discrete() const override { return std::vector<double>(p_.n, 0.0); }
  std::string variable_name(std::size_t i) const override;

  std::optional<double> diag_jacobian(std::size_t i, std::span<const double> q,
                                      std::span<const double> d, double t) const override;
  std::span<const std::size_t> incidence(std::size_t i) const override { return incidence_[i]; }
  std::span<const std::size_t> discrete_readers(std::size_t k) const override {
    return std::span<const std::size_t>(&potential_index_[k], 1);
  }

  std::size_t zero_crossing_count() const override { return p_.n; }
  Taylor zero_crossing(std::size_t z, std::span<const Taylor> x,
                       std::span<const double> d) const override;
  double zero_crossing(std::size_t z, std::span<const double> x,
                       std::span<const double> d) const override;
  std::span<const std::size_t> zero_crossing_incidence(std::size_t z) const override {
    return std::span<const std::size_t>(&potential_index_[z], 1);
  }
  void on_zero_crossing(std::size_t z, EventContext& ctx) const override;

  // Sources [0, n) are external Poisson inputs, [n, 2n) end refractory windows.
  std::size_t timed_source_count() const override { return 2 * p_.n; }
  double first_timed_event(std::size_t source) const override;
  void on_timed_event(std::size_t source, EventContext& ctx) const override;

  static std::size_t potential(std::size_t neuron) { return 2 * neuron; }
  static std::size_t current(std::size_t neuron) { return 2 * neuron + 1; }

  const SnnParams& params() const { return p_; }
  std::size_t excitatory_count() const { return n_exc_; }
  bool is_excitatory(std::size_t neuron) const { return neuron < n_exc_; }
  const std::vector<std::size_t>& sources(std::size_t neuron) const { return sources_[neuron]; }
  const std::vector<std::size_t>& targets(std::size_t neuron) const { return targets_[neuron]; }
  double efficacy_nA(std::size_t neuron) const { return efficacy_[neuron]; }
  const std::vector<double>& arrivals(std::size_t neuron) const { return arrivals_[neuron]; }

 private:
  SnnParams p_;
  double tau_m_;
  double tau_r_;
  double tau_s_;
  std::size_t n_exc_;
  std::vector<double> initial_;
  std::vector<std::vector<std::size_t>> incidence_;
  std::vector<std::size_t> potential_index_;
  std::vector<std::vector<std::size_t>> sources_;
  std::vector<std::vector<std::size_t>> targets_;
  std::vector<double> efficacy_;  // nA, positive magnitude of each neuron's draw
  std::vector<std::vector<double>> arrivals_;
};

using ModelPtr = std::shared_ptr<const Model>;
using ParamMap = std::map<std::string, std::string>;

ModelPtr scalar_model();
ModelPtr adr_model(const AdrParams& p = {});
ModelPtr snn_model(const SnnParams& p);

// Applies key=value overrides; unknown keys raise InvalidConfig.
AdrParams adr_params_from(const ParamMap& overrides);
SnnParams snn_params_from(const ParamMap& overrides, std::uint64_t seed, double horizon);

}  // namespace qss
