#include "qss/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qss/errors.hpp"

namespace qss {

double fd_diag_jacobian(const Model& model, std::size_t i, std::span<const double> q,
                        std::span<const double> d, double t) {
  std::vector<double> probe(q.begin(), q.end());
  const double h = std::max(1e-8, 1e-8 * std::abs(q[i]));
  probe[i] = q[i] + h;
  const double fp = model.rhs(i, probe, d, t);
  probe[i] = q[i] - h;
  const double fm = model.rhs(i, probe, d, t);
  return (fp - fm) / (2.0 * h);
}

std::optional<double> ScalarModel::exact_solution(std::size_t, double t) const {
  return 1.0 - std::exp(-t);
}

AdrModel::AdrModel(AdrParams p) : p_(p), dx_(p.length / static_cast<double>(p.n)) {
  if (p_.n < 3) throw InvalidConfig("ADR grid needs at least 3 points");
  incidence_.resize(p_.n);
  for (std::size_t i = 0; i < p_.n; ++i) {
    if (i > 0) incidence_[i].push_back(i - 1);
    incidence_[i].push_back(i);
    if (i + 1 < p_.n) incidence_[i].push_back(i + 1);
  }
}

std::optional<double> AdrModel::diag_jacobian(std::size_t i, std::span<const double> q,
                                              std::span<const double>, double) const {
  const double x = q[i];
  return -p_.advection / dx_ - 2.0 * p_.diffusion / (dx_ * dx_) +
         p_.reaction * (2.0 * x - 3.0 * x * x);
}

namespace {

// Independent generator per (seed, stream, neuron).
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t neuron) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(neuron),
                    static_cast<std::uint32_t>(neuron >> 32)};
  return std::mt19937_64(seq);
}

enum Stream : std::uint64_t { kTopology = 1, kEfficacy = 2, kInitial = 3, kArrivals = 4 };

void draw_distinct(std::mt19937_64& rng, std::size_t lo, std::size_t hi, std::size_t count,
                   std::size_t exclude, std::vector<std::size_t>& out) {
  std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
  const std::size_t first = out.size();
  while (out.size() - first < count) {
    const std::size_t s = pick(rng);
    if (s == exclude) continue;
    if (std::find(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(), s) != out.end())
      continue;
    out.push_back(s);
  }
}

}  // namespace

SnnModel::SnnModel(SnnParams p)
    : p_(p),
      tau_m_(p.tau_m_ms * 1e-3),
      tau_r_(p.tau_r_ms * 1e-3),
      tau_s_(p.tau_s_ms * 1e-3),
      n_exc_(static_cast<std::size_t>(std::llround(p.exc_fraction * static_cast<double>(p.n)))) {
  if (!(tau_m_ > 0.0 && tau_r_ > 0.0 && tau_s_ > 0.0 && p_.c_m_pF > 0.0))
    throw InvalidConfig("SNN time constants and capacitance must be positive");
  if (!(p_.theta_mV > p_.v_reset_mV)) throw InvalidConfig("SNN threshold must exceed reset potential");
  if (p_.exc_in_degree > p_.in_degree) throw InvalidTopology("excitatory in-degree exceeds in-degree");
  const std::size_t inh_in = p_.in_degree - p_.exc_in_degree;
  const std::size_t n_inh = p_.n - n_exc_;
  // A neuron cannot pick itself, so each pool needs one spare member.
  if (p_.exc_in_degree > 0 && n_exc_ < p_.exc_in_degree + 1)
    throw InvalidTopology("not enough excitatory neurons for the requested in-degree");
  if (inh_in > 0 && n_inh < inh_in + 1)
    throw InvalidTopology("not enough inhibitory neurons for the requested in-degree");

  const std::size_t n = p_.n;
  initial_.resize(2 * n);
  incidence_.resize(2 * n);
  potential_index_.resize(n);
  sources_.resize(n);
  targets_.resize(n);
  efficacy_.resize(n);
  arrivals_.resize(n);

  const double nu_ext = p_.k_ext * p_.nu_bg_hz;
  for (std::size_t k = 0; k < n; ++k) {
    potential_index_[k] = potential(k);
    incidence_[potential(k)] = {potential(k), current(k)};
    incidence_[current(k)] = {current(k)};

    auto topo = stream_rng(p_.seed, kTopology, k);
    draw_distinct(topo, 0, n_exc_, p_.exc_in_degree, k, sources_[k]);
    draw_distinct(topo, n_exc_, n, inh_in, k, sources_[k]);

    auto eff = stream_rng(p_.seed, kEfficacy, k);
    std::normal_distribution<double> gauss(p_.j_mean_pA, p_.j_sd_pA);
    double w = gauss(eff);
    for (int tries = 0; w <= 0.0 && tries < 100; ++tries) w = gauss(eff);
    efficacy_[k] = std::max(w, 0.0) * 1e-3;  // pA -> nA

    auto init = stream_rng(p_.seed, kInitial, k);
    initial_[potential(k)] = std::uniform_real_distribution<double>(p_.v0_lo_mV, p_.v0_hi_mV)(init);
    initial_[current(k)] = std::uniform_real_distribution<double>(p_.i0_lo_nA, p_.i0_hi_nA)(init);

    if (nu_ext > 0.0) {
      auto arr = stream_rng(p_.seed, kArrivals, k);
      std::exponential_distribution<double> gap(nu_ext);
      for (double t = gap(arr); t < p_.horizon_s; t += gap(arr)) arrivals_[k].push_back(t);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t s : sources_[k]) targets_[s].push_back(k);
  }
  for (auto& t : targets_) std::sort(t.begin(), t.end());
}

std::string SnnModel::variable_name(std::size_t i) const {
  return (i % 2 == 0 ? "V" : "I") + std::to_string(i / 2);
}

std::optional<double> SnnModel::diag_jacobian(std::size_t i, std::span<const double>,
                                              std::span<const double> d, double) const {
  if (i % 2 == 1) return -1.0 / tau_s_;
  return d[i / 2] != 0.0 ? 0.0 : -1.0 / tau_m_;
}

Taylor SnnModel::zero_crossing(std::size_t z, std::span<const Taylor> x,
                               std::span<const double>) const {
  return x[potential(z)] - p_.theta_mV;
}

double SnnModel::zero_crossing(std::size_t z, std::span<const double> x,
                               std::span<const double>) const {
  return x[potential(z)] - p_.theta_mV;
}

void SnnModel::on_zero_crossing(std::size_t z, EventContext& ctx) const {
  ctx.set_state(potential(z), p_.v_reset_mV);
  ctx.set_discrete(z, 1.0);
  ctx.schedule(p_.n + z, ctx.time() + tau_r_);
  const double w = is_excitatory(z) ? efficacy_[z] : -p_.g * efficacy_[z];
  for (std::size_t j : targets_[z]) ctx.set_state(current(j), ctx.state(current(j)) + w);
}

double SnnModel::first_timed_event(std::size_t source) const {
  if (source < p_.n) return arrivals_[source].empty() ? kInf : arrivals_[source].front();
  return kInf;
}

void SnnModel::on_timed_event(std::size_t source, EventContext& ctx) const {
  if (source < p_.n) {
    const std::size_t k = source;
    ctx.set_state(current(k), ctx.state(current(k)) + efficacy_[k]);
    const auto& a = arrivals_[k];
    auto next = std::upper_bound(a.begin(), a.end(), ctx.time());
    ctx.schedule(source, next == a.end() ? kInf : *next);
    return;
  }
  const std::size_t k = source - p_.n;
  ctx.set_discrete(k, 0.0);
  ctx.schedule(source, kInf);
}

ModelPtr scalar_model() { return std::make_shared<const ScalarModel>(); }
ModelPtr adr_model(const AdrParams& p) { return std::make_shared<const AdrModel>(p); }
ModelPtr snn_model(const SnnParams& p) { return std::make_shared<const SnnModel>(p); }

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidConfig("parameter '" + key + "' expects a number, got '" + v + "'");
  }
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d < 0.0 || d != std::floor(d)) throw InvalidConfig("parameter '" + key + "' expects a count");
  return static_cast<std::size_t>(d);
}

}  // namespace

AdrParams adr_params_from(const ParamMap& overrides) {
  AdrParams p;
  for (const auto& [k, v] : overrides) {
    if (k == "n" || k == "N")
      p.n = to_count(k, v);
    else if (k == "A" || k == "advection")
      p.advection = to_double(k, v);
    else if (k == "D" || k == "diffusion")
      p.diffusion = to_double(k, v);
    else if (k == "R" || k == "reaction")
      p.reaction = to_double(k, v);
    else if (k == "L" || k == "length")
      p.length = to_double(k, v);
    else if (k == "inflow")
      p.inflow = to_double(k, v);
    else
      throw InvalidConfig("unknown adr parameter '" + k + "'");
  }
  return p;
}

SnnParams snn_params_from(const ParamMap& overrides, std::uint64_t seed, double horizon) {
  SnnParams p;
  p.seed = seed;
  p.horizon_s = horizon;
  const std::map<std::string, double SnnParams::*> reals{
      {"exc_fraction", &SnnParams::exc_fraction}, {"tau_m_ms", &SnnParams::tau_m_ms},
      {"tau_r_ms", &SnnParams::tau_r_ms},         {"tau_s_ms", &SnnParams::tau_s_ms},
      {"c_m_pF", &SnnParams::c_m_pF},             {"v_reset_mV", &SnnParams::v_reset_mV},
      {"theta_mV", &SnnParams::theta_mV},         {"e_l_mV", &SnnParams::e_l_mV},
      {"nu_bg_hz", &SnnParams::nu_bg_hz},         {"k_ext", &SnnParams::k_ext},
      {"j_mean_pA", &SnnParams::j_mean_pA},       {"j_sd_pA", &SnnParams::j_sd_pA},
      {"g", &SnnParams::g},                       {"v0_lo_mV", &SnnParams::v0_lo_mV},
      {"v0_hi_mV", &SnnParams::v0_hi_mV},         {"i0_lo_nA", &SnnParams::i0_lo_nA},
      {"i0_hi_nA", &SnnParams::i0_hi_nA}};
  for (const auto& [k, v] : overrides) {
    if (auto it = reals.find(k); it != reals.end())
      p.*(it->second) = to_double(k, v);
    else if (k == "n" || k == "N")
      p.n = to_count(k, v);
    else if (k == "in_degree")
      p.in_degree = to_count(k, v);
    else if (k == "exc_in_degree")
      p.exc_in_degree = to_count(k, v);
    else
      throw InvalidConfig("unknown snn parameter '" + k + "'");
  }
  return p;
}

}  // namespace qss
