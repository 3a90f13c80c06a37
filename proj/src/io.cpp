#include "qss/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "qss/errors.hpp"

namespace qss {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_samples_csv(std::ostream& os, const Samples& s) {
  os << "time";
  for (const auto& name : s.names) os << ',' << name;
  os << '\n';
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    os << format_double(s.times[k]);
    for (double v : s.values[k]) os << ',' << format_double(v);
    os << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error("malformed number '" + s + "'");
  }
  if (used != s.size()) throw Error("malformed number '" + s + "'");
  return v;
}

}  // namespace

Samples read_samples_csv(std::istream& is) {
  Samples s;
  std::string line;
  if (!std::getline(is, line)) throw Error("empty trajectory file");
  auto header = split(line, ',');
  if (header.empty() || header[0] != "time") throw Error("trajectory header must start with 'time'");
  s.names.assign(header.begin() + 1, header.end());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != header.size()) throw Error("trajectory row has wrong number of columns");
    s.times.push_back(parse_number(cells[0]));
    std::vector<double> row;
    row.reserve(cells.size() - 1);
    for (std::size_t c = 1; c < cells.size(); ++c) row.push_back(parse_number(cells[c]));
    s.values.push_back(std::move(row));
  }
  return s;
}

void write_stats(std::ostream& os, const SimStats& s,
                 const std::vector<std::pair<std::string, double>>& extra) {
  os << "total_steps=" << s.total_steps << '\n';
  os << "events=" << s.events << '\n';
  os << "zero_crossings=" << s.zero_crossings << '\n';
  os << "rejected_steps=" << s.rejected_steps << '\n';
  os << "wall_ms=" << format_double(s.wall_ms) << '\n';
  for (std::size_t i = 0; i < s.steps.size(); ++i) os << "steps[" << i << "]=" << s.steps[i] << '\n';
  for (const auto& [k, v] : extra) os << k << '=' << format_double(v) << '\n';
}

std::map<std::string, std::string> read_key_values(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("expected key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

void write_spike_counts(std::ostream& os, const std::vector<std::uint64_t>& seeds,
                        const std::vector<double>& counts) {
  os << "seed,spikes\n";
  for (std::size_t k = 0; k < seeds.size(); ++k) os << seeds[k] << ',' << format_double(counts[k]) << '\n';
}

void read_spike_counts(std::istream& is, std::vector<std::uint64_t>& seeds, std::vector<double>& counts) {
  std::string line;
  if (!std::getline(is, line) || line != "seed,spikes") throw Error("spike-count file must start with 'seed,spikes'");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != 2) throw Error("spike-count row must have two columns");
    seeds.push_back(static_cast<std::uint64_t>(parse_number(cells[0])));
    counts.push_back(parse_number(cells[1]));
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace qss
