#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qss/engine.hpp"

namespace qss {

// time,<var0>,<var1>,... with 17 significant digits.
void write_samples_csv(std::ostream& os, const Samples& s);
Samples read_samples_csv(std::istream& is);

// key=value lines; `extra` entries are appended in order.
void write_stats(std::ostream& os, const SimStats& s,
                 const std::vector<std::pair<std::string, double>>& extra = {});
std::map<std::string, std::string> read_key_values(std::istream& is);

// seed,spikes rows.
void write_spike_counts(std::ostream& os, const std::vector<std::uint64_t>& seeds,
                        const std::vector<double>& counts);
void read_spike_counts(std::istream& is, std::vector<std::uint64_t>& seeds,
                       std::vector<double>& counts);

std::string format_double(double v);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace qss
