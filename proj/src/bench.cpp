#include "qss/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "qss/activity.hpp"
#include "qss/dopri.hpp"
#include "qss/errors.hpp"
#include "qss/io.hpp"
#include "qss/metrics.hpp"

namespace qss {

namespace {

bool is_qss_method(const std::string& m) {
  return m == "qss" || m == "liqss" || m == "eliqss" || m == "cheqss";
}

double default_t_end(const std::string& model) {
  if (model == "adr") return 3.0;
  if (model == "snn") return 0.05;
  return 5.0;
}

// Runs job(k) for k in [0, jobs) on up to `workers` threads.  The first
// exception is rethrown after all workers stop.
template <class Job>
void parallel_for(std::size_t jobs, std::size_t workers, Job job) {
  if (workers <= 1 || jobs <= 1) {
    for (std::size_t k = 0; k < jobs; ++k) job(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, jobs); ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < jobs && !failed; k = next++) {
        try {
          job(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string tag_number(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

// path "out/traj.csv" + tag "cheqss2_r0_a0.01" -> "out/traj_cheqss2_r0_a0.01.csv"
std::string suffixed(const std::string& path, const std::string& tag) {
  const std::filesystem::path p(path);
  std::filesystem::path out = p.parent_path() / (p.stem().string() + "_" + tag + p.extension().string());
  return out.string();
}

std::string entry_tag(const SweepEntry& e) {
  std::string tag = e.method;
  if (e.order > 0) tag += std::to_string(e.order);
  return tag + "_r" + tag_number(e.rtol) + "_a" + tag_number(e.atol);
}

Samples reference_dense_states(const RunConfig& cfg, std::size_t count) {
  RunConfig dense = cfg;
  dense.sample_count = count;
  dense.sample_dt = 0.0;
  if (cfg.model == "scalar") return analytic_scalar_samples(dense);
  return simulate(dense, SweepEntry{"dopri", 0, 1e-10, 1e-12}, cfg.seed).samples;
}

}  // namespace

RunConfig validated(RunConfig cfg) {
  if (cfg.model != "scalar" && cfg.model != "adr" && cfg.model != "snn")
    throw InvalidConfig("unknown model '" + cfg.model + "' (expected scalar, adr or snn)");
  if (cfg.methods.empty()) throw InvalidConfig("no method given");
  for (const auto& m : cfg.methods) {
    if (m != "dopri" && !is_qss_method(m))
      throw InvalidConfig("unknown method '" + m + "' (expected qss, liqss, eliqss, cheqss or dopri)");
  }
  if (cfg.orders.empty()) throw InvalidConfig("no order given");
  for (int n : cfg.orders) {
    if (n < 1 || n > 3) throw InvalidConfig("order must be 1, 2 or 3");
  }
  if (cfg.rtols.empty() || cfg.atols.empty()) throw InvalidConfig("tolerance lists must not be empty");
  if (cfg.rtols.size() != cfg.atols.size() && cfg.rtols.size() != 1 && cfg.atols.size() != 1)
    throw InvalidConfig("rtol and atol lists must have equal length or one element");
  for (double r : cfg.rtols) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidConfig("rtol must be finite and >= 0");
  }
  for (double a : cfg.atols) {
    if (!(a > 0.0) || !std::isfinite(a)) throw InvalidConfig("atol must be finite and > 0");
  }
  if (!cfg.t_end) cfg.t_end = default_t_end(cfg.model);
  if (!(*cfg.t_end > 0.0) || !std::isfinite(*cfg.t_end)) throw InvalidConfig("t_end must be > 0");
  if (!cfg.runs) cfg.runs = cfg.model == "snn" ? 10 : 1;
  if (*cfg.runs == 0) throw InvalidConfig("runs must be at least 1");
  if (cfg.sample_dt < 0.0) throw InvalidConfig("sample_dt must be >= 0");
  if (cfg.sample_dt == 0.0 && cfg.sample_count < 2) throw InvalidConfig("need at least 2 samples");
  if (cfg.model == "scalar" && !cfg.params.empty())
    throw InvalidConfig("the scalar model takes no parameters");
  // Parse once so bad keys fail before any run starts.
  if (cfg.model == "adr") adr_params_from(cfg.params);
  if (cfg.model == "snn") snn_params_from(cfg.params, cfg.seed, *cfg.t_end);
  return cfg;
}

std::vector<SweepEntry> sweep_entries(const RunConfig& cfg) {
  const std::size_t ntol = std::max(cfg.rtols.size(), cfg.atols.size());
  std::vector<SweepEntry> out;
  for (const auto& m : cfg.methods) {
    const std::vector<int> orders = m == "dopri" ? std::vector<int>{0} : cfg.orders;
    for (int n : orders) {
      for (std::size_t k = 0; k < ntol; ++k) {
        const double r = cfg.rtols[cfg.rtols.size() == 1 ? 0 : k];
        const double a = cfg.atols[cfg.atols.size() == 1 ? 0 : k];
        out.push_back({m, n, r, a});
      }
    }
  }
  return out;
}

std::vector<std::uint64_t> run_seeds(const RunConfig& cfg) {
  const std::size_t runs = cfg.runs.value_or(1);
  std::vector<std::uint64_t> seeds(runs);
  for (std::size_t k = 0; k < runs; ++k) seeds[k] = cfg.model == "snn" ? cfg.seed + k : cfg.seed;
  return seeds;
}

std::size_t worker_count(const RunConfig& cfg, std::size_t jobs) {
  std::size_t cap = cfg.threads;
  if (cap == 0) {
    if (const char* env = std::getenv("QSS_SOLVER_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && *end == '\0' && v > 0) cap = static_cast<std::size_t>(v);
    }
  }
  if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

ModelPtr build_model(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.model == "scalar") return scalar_model();
  if (cfg.model == "adr") return adr_model(adr_params_from(cfg.params));
  if (cfg.model == "snn") return snn_model(snn_params_from(cfg.params, seed, cfg.t_end.value_or(0.05)));
  throw InvalidConfig("unknown model '" + cfg.model + "'");
}

SimStats simulate(const RunConfig& cfg, const SweepEntry& entry, std::uint64_t seed,
                  bool record_samples) {
  const ModelPtr model = build_model(cfg, seed);
  const double t_end = cfg.t_end.value_or(default_t_end(cfg.model));
  if (entry.method == "dopri") {
    DopriConfig dc;
    dc.ctrl.rtol = entry.rtol;
    dc.ctrl.atol = entry.atol;
    dc.t_end = t_end;
    dc.sample_count = cfg.sample_count;
    dc.sample_dt = cfg.sample_dt;
    dc.record_samples = record_samples;
    return dopri_run(model, dc);
  }
  EngineConfig ec;
  ec.method = parse_method(entry.method);
  ec.order = entry.order;
  ec.quantum = {entry.rtol, entry.atol};
  ec.t_end = t_end;
  ec.sample_count = cfg.sample_count;
  ec.sample_dt = cfg.sample_dt;
  ec.record_samples = record_samples;
  Engine engine(model, ec);
  return engine.run();
}

SweepEntry reference_entry(const RunConfig& cfg) {
  if (cfg.reference == ReferenceKind::Dopri) return {"dopri", 0, 1e-10, 1e-12};
  if (cfg.model == "snn") return {"cheqss", 3, 0.0, 1e-10};
  return {"cheqss", 2, 1e-10, 1e-12};
}

Samples analytic_scalar_samples(const RunConfig& cfg) {
  const ModelPtr model = scalar_model();
  Samples s;
  s.names = {model->variable_name(0)};
  s.times = output_grid(0.0, cfg.t_end.value_or(5.0), cfg.sample_count, cfg.sample_dt);
  for (double t : s.times) s.values.push_back({*model->exact_solution(0, t)});
  return s;
}

ReferenceRun compute_reference(const RunConfig& raw) {
  const RunConfig cfg = validated(raw);
  const SweepEntry entry = reference_entry(cfg);
  ReferenceRun ref;
  if (cfg.model != "snn") {
    ref.samples = simulate(cfg, entry, cfg.seed).samples;
    return ref;
  }
  ref.seeds = run_seeds(cfg);
  ref.spikes.assign(ref.seeds.size(), 0.0);
  parallel_for(ref.seeds.size(), worker_count(cfg, ref.seeds.size()), [&](std::size_t k) {
    ref.spikes[k] = static_cast<double>(simulate(cfg, entry, ref.seeds[k], false).zero_crossings);
  });
  return ref;
}

ReferenceRun load_reference(const RunConfig& cfg, const std::string& path) {
  std::istringstream in(read_file(path));
  ReferenceRun ref;
  if (cfg.model == "snn")
    read_spike_counts(in, ref.seeds, ref.spikes);
  else
    ref.samples = read_samples_csv(in);
  return ref;
}

void save_reference(const RunConfig& cfg, const ReferenceRun& ref, const std::string& path) {
  std::ostringstream out;
  if (cfg.model == "snn")
    write_spike_counts(out, ref.seeds, ref.spikes);
  else
    write_samples_csv(out, ref.samples);
  write_file(path, out.str());
}

void write_bench_csv(std::ostream& os, std::vector<BenchRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tie(a.model, a.method, a.order, a.rtol, a.atol) <
           std::tie(b.model, b.method, b.order, b.rtol, b.atol);
  });
  os << "model,method,order,rtol,atol,steps_mean,wall_ms_mean,mae_or_mre,theor_min,theor_min_ceil\n";
  for (const auto& r : rows) {
    os << r.model << ',' << r.method << ',' << r.order << ',' << format_double(r.rtol) << ','
       << format_double(r.atol) << ',' << format_double(r.steps_mean) << ','
       << format_double(r.wall_ms_mean) << ',' << format_double(r.error) << ',';
    if (r.theor_min) os << format_double(*r.theor_min) << ',' << format_double(std::ceil(*r.theor_min));
    else os << ',';
    os << '\n';
  }
}

std::vector<BenchRow> read_bench_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("model,method,order", 0) != 0)
    throw Error("benchmark CSV header missing");
  std::vector<BenchRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 10) throw Error("benchmark CSV row needs 10 fields: " + line);
    BenchRow r;
    try {
      r.model = f[0];
      r.method = f[1];
      r.order = std::stoi(f[2]);
      r.rtol = std::stod(f[3]);
      r.atol = std::stod(f[4]);
      r.steps_mean = std::stod(f[5]);
      r.wall_ms_mean = std::stod(f[6]);
      r.error = std::stod(f[7]);
      if (!f[8].empty()) r.theor_min = std::stod(f[8]);
    } catch (const std::exception&) {
      throw Error("malformed benchmark CSV row: " + line);
    }
    rows.push_back(r);
  }
  return rows;
}

double theoretical_minimum(const RunConfig& raw, int order, double rtol, double atol) {
  const RunConfig cfg = validated(raw);
  if (cfg.model == "snn") throw InvalidConfig("no theoretical minimum for the snn model");
  const Samples dense = reference_dense_states(cfg, 4001);
  const ModelPtr model = build_model(cfg, cfg.seed);
  const ActivityReport report =
      rtol == 0.0 ? activity_report(*model, dense.times, dense.values, order, atol)
                  : activity_report(*model, dense.times, dense.values, order,
                                    [&](double x) { return effective_quantum({rtol, atol}, x); });
  return report.total_general;
}

BenchResult run_benchmark(const RunConfig& raw) {
  const RunConfig cfg = validated(raw);
  const std::vector<SweepEntry> entries = sweep_entries(cfg);
  const std::vector<std::uint64_t> seeds = run_seeds(cfg);
  const bool snn = cfg.model == "snn";

  ReferenceRun ref;
  if (!cfg.ref_in.empty())
    ref = load_reference(cfg, cfg.ref_in);
  else if (cfg.model == "scalar")
    ref.samples = analytic_scalar_samples(cfg);
  else
    ref = compute_reference(cfg);
  if (!cfg.ref_out.empty()) save_reference(cfg, ref, cfg.ref_out);

  std::vector<double> ref_spikes;
  if (snn) {
    std::map<std::uint64_t, double> by_seed;
    for (std::size_t k = 0; k < ref.seeds.size(); ++k) by_seed[ref.seeds[k]] = ref.spikes[k];
    for (auto s : seeds) {
      auto it = by_seed.find(s);
      if (it == by_seed.end()) throw InvalidConfig("reference has no spike count for seed " + std::to_string(s));
      ref_spikes.push_back(it->second);
    }
  }

  const std::size_t jobs = entries.size() * seeds.size();
  BenchResult result;
  result.stats.resize(jobs);
  parallel_for(jobs, worker_count(cfg, jobs), [&](std::size_t k) {
    const std::size_t e = k / seeds.size();
    result.stats[k] = simulate(cfg, entries[e], seeds[k % seeds.size()], !snn || !cfg.traj_out.empty());
  });

  const bool many = jobs > 1;
  std::vector<std::pair<std::string, double>> extra;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const SweepEntry& entry = entries[e];
    BenchRow row;
    row.model = cfg.model;
    row.method = entry.method;
    row.order = entry.order;
    row.rtol = entry.rtol;
    row.atol = entry.atol;
    std::vector<double> spikes;
    double err_sum = 0.0;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const SimStats& st = result.stats[e * seeds.size() + s];
      row.steps_mean += static_cast<double>(st.total_steps);
      row.wall_ms_mean += st.wall_ms;
      if (snn)
        spikes.push_back(static_cast<double>(st.zero_crossings));
      else
        err_sum += mae(st.samples, ref.samples);
    }
    const double runs = static_cast<double>(seeds.size());
    row.steps_mean /= runs;
    row.wall_ms_mean /= runs;
    row.error = snn ? mre_spikes(spikes, ref_spikes) : err_sum / runs;
    if (!snn && entry.method != "dopri")
      row.theor_min = theoretical_minimum(cfg, entry.order, entry.rtol, entry.atol);
    result.rows.push_back(row);

    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const SimStats& st = result.stats[e * seeds.size() + s];
      std::string tag = entry_tag(entry);
      if (seeds.size() > 1) tag += "_s" + std::to_string(seeds[s]) + "_" + std::to_string(s);
      if (!cfg.traj_out.empty()) {
        std::ostringstream out;
        write_samples_csv(out, st.samples);
        write_file(many ? suffixed(cfg.traj_out, tag) : cfg.traj_out, out.str());
      }
      if (!cfg.stats_out.empty()) {
        extra.clear();
        if (snn) {
          extra.emplace_back("spikes", static_cast<double>(st.zero_crossings));
          extra.emplace_back("mre", row.error);
        } else {
          extra.emplace_back("mae", mae(st.samples, ref.samples));
        }
        std::ostringstream out;
        write_stats(out, st, extra);
        write_file(many ? suffixed(cfg.stats_out, tag) : cfg.stats_out, out.str());
      }
    }
  }

  if (!cfg.bench_out.empty()) {
    std::ostringstream out;
    write_bench_csv(out, result.rows);
    write_file(cfg.bench_out, out.str());
  }
  if (!cfg.activity_out.empty()) {
    if (snn) throw InvalidConfig("activity output is only available for scalar and adr");
    const Samples dense = reference_dense_states(cfg, 4001);
    const ModelPtr model = build_model(cfg, cfg.seed);
    std::ostringstream out;
    bool first = true;
    for (const auto& entry : entries) {
      if (entry.method == "dopri") continue;
      const ActivityReport report =
          entry.rtol == 0.0
              ? activity_report(*model, dense.times, dense.values, entry.order, entry.atol)
              : activity_report(*model, dense.times, dense.values, entry.order, [&](double x) {
                  return effective_quantum({entry.rtol, entry.atol}, x);
                });
      std::ostringstream block;
      write_activity_csv(block, report);
      std::string text = block.str();
      if (!first) text = text.substr(text.find('\n') + 1);
      out << text;
      first = false;
    }
    write_file(cfg.activity_out, out.str());
  }
  return result;
}

ReferenceRun make_reference(const RunConfig& raw) {
  const RunConfig cfg = validated(raw);
  if (cfg.ref_out.empty()) throw InvalidConfig("make_reference needs an output path (--ref-out)");
  const ReferenceRun ref = compute_reference(cfg);
  save_reference(cfg, ref, cfg.ref_out);
  return ref;
}

}  // namespace qss
