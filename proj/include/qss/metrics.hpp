#pragma once

#include <cstdint>
#include <span>

#include "qss/engine.hpp"

namespace qss {

// Mean over variables of the mean absolute deviation over the grid.
double mae(const Samples& sim, const Samples& ref);

// Mean relative error of spike counts, seed by seed.
double mre_spikes(std::span<const double> sim_counts, std::span<const double> ref_counts);

}  // namespace qss
