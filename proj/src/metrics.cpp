#include "qss/metrics.hpp"

#include <cmath>

#include "qss/errors.hpp"

namespace qss {

double mae(const Samples& sim, const Samples& ref) {
  if (sim.times.size() != ref.times.size() || sim.values.size() != ref.values.size())
    throw GridMismatch("sample grids differ in length");
  if (sim.times.empty()) throw GridMismatch("empty sample grid");
  for (std::size_t k = 0; k < sim.times.size(); ++k) {
    const double tol = 1e-12 * std::max(1.0, std::abs(ref.times[k]));
    if (std::abs(sim.times[k] - ref.times[k]) > tol)
      throw GridMismatch("sample times differ at row " + std::to_string(k));
  }
  const std::size_t nv = ref.values.front().size();
  double total = 0.0;
  for (std::size_t k = 0; k < sim.values.size(); ++k) {
    if (sim.values[k].size() != nv || ref.values[k].size() != nv)
      throw GridMismatch("variable count differs at row " + std::to_string(k));
    for (std::size_t i = 0; i < nv; ++i) total += std::abs(sim.values[k][i] - ref.values[k][i]);
  }
  return total / (static_cast<double>(nv) * static_cast<double>(sim.values.size()));
}

double mre_spikes(std::span<const double> sim_counts, std::span<const double> ref_counts) {
  if (sim_counts.size() != ref_counts.size() || ref_counts.empty())
    throw GridMismatch("spike-count arrays must be non-empty and of equal length");
  double sum = 0.0;
  for (std::size_t k = 0; k < ref_counts.size(); ++k) {
    if (ref_counts[k] == 0.0) throw ZeroReference("reference spike count is zero for run " + std::to_string(k));
    sum += std::abs(ref_counts[k] - sim_counts[k]) / ref_counts[k];
  }
  return sum / static_cast<double>(ref_counts.size());
}

}  // namespace qss
