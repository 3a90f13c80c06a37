#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qss/engine.hpp"
#include "qss/models.hpp"

namespace qss {

// One point of a sweep.  `method` is a QSS method name or "dopri"; order is 0
// for dopri.
struct SweepEntry {
  std::string method;
  int order = 0;
  double rtol = 0.0;
  double atol = 0.0;
};

// How reference solutions are produced when none is supplied.  `Cheqss`
// runs CheQSS2 at (1e-10, 1e-12) for scalar/adr and CheQSS3 at 1e-10 for snn;
// `Dopri` integrates with the Runge-Kutta baseline at rtol 1e-10, atol 1e-12,
// which is much faster on the smooth models.
enum class ReferenceKind { Cheqss, Dopri };

struct RunConfig {
  std::string model = "scalar";
  std::vector<std::string> methods{"cheqss"};
  std::vector<int> orders{1};
  // Zipped pairwise; a single value is broadcast against the other list.
  std::vector<double> rtols{0.0};
  std::vector<double> atols{1e-2};
  std::optional<double> t_end;  // model default when unset
  std::uint64_t seed = 1;
  std::optional<std::size_t> runs;  // snn: seeds seed..seed+runs-1 (default 10); else 1
  std::size_t sample_count = 500;
  double sample_dt = 0.0;
  ParamMap params;
  ReferenceKind reference = ReferenceKind::Cheqss;
  std::string traj_out;
  std::string stats_out;
  std::string bench_out;
  std::string ref_in;
  std::string ref_out;
  std::string activity_out;
  std::size_t threads = 0;  // 0: QSS_SOLVER_THREADS, else hardware concurrency
};

// Fills model defaults and checks every field; throws InvalidConfig.
RunConfig validated(RunConfig cfg);
std::vector<SweepEntry> sweep_entries(const RunConfig& cfg);
std::vector<std::uint64_t> run_seeds(const RunConfig& cfg);
// Worker count honouring QSS_SOLVER_THREADS.
std::size_t worker_count(const RunConfig& cfg, std::size_t jobs);

ModelPtr build_model(const RunConfig& cfg, std::uint64_t seed);
SimStats simulate(const RunConfig& cfg, const SweepEntry& entry, std::uint64_t seed,
                  bool record_samples = true);

// Grid samples (scalar, adr) or spike counts per seed (snn).
struct ReferenceRun {
  Samples samples;
  std::vector<std::uint64_t> seeds;
  std::vector<double> spikes;
};

SweepEntry reference_entry(const RunConfig& cfg);
ReferenceRun compute_reference(const RunConfig& cfg);
ReferenceRun load_reference(const RunConfig& cfg, const std::string& path);
void save_reference(const RunConfig& cfg, const ReferenceRun& ref, const std::string& path);
// Analytic grid samples for the scalar model.
Samples analytic_scalar_samples(const RunConfig& cfg);

struct BenchRow {
  std::string model;
  std::string method;
  int order = 0;
  double rtol = 0.0;
  double atol = 0.0;
  double steps_mean = 0.0;
  double wall_ms_mean = 0.0;
  double error = 0.0;                 // MAE (scalar, adr) or spike-count MRE (snn)
  std::optional<double> theor_min;    // QSS methods on scalar and adr only
};

// Rows are sorted by (model, method, order, rtol, atol).
void write_bench_csv(std::ostream& os, std::vector<BenchRow> rows);
std::vector<BenchRow> read_bench_csv(std::istream& is);

// Activity-based lower bound on the total step count of an order-n method.
double theoretical_minimum(const RunConfig& cfg, int order, double rtol, double atol);

struct BenchResult {
  std::vector<BenchRow> rows;
  // Stats of every run, entry-major, with seeds in order.
  std::vector<SimStats> stats;
};

// Runs the sweep and writes the requested output files.
BenchResult run_benchmark(const RunConfig& cfg);
// Runs the reference configuration and writes it to cfg.ref_out.
ReferenceRun make_reference(const RunConfig& cfg);

}  // namespace qss
