#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "qss/bench.hpp"
#include "qss/errors.hpp"
#include "qss/io.hpp"

using namespace qss;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qss_bench_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig scalar(const std::string& method, int order, double atol) {
  RunConfig c;
  c.model = "scalar";
  c.methods = {method};
  c.orders = {order};
  c.rtols = {0.0};
  c.atols = {atol};
  c.threads = 1;
  return c;
}

}  // namespace

TEST(RunConfig, ModelDefaults) {
  RunConfig c;
  c.model = "adr";
  EXPECT_EQ(*validated(c).t_end, 3.0);
  c.model = "scalar";
  EXPECT_EQ(*validated(c).t_end, 5.0);
  c.model = "snn";
  const RunConfig s = validated(c);
  EXPECT_EQ(*s.t_end, 0.05);
  EXPECT_EQ(run_seeds(s).size(), 10u);
  EXPECT_EQ(run_seeds(s).front(), 1u);
}

TEST(RunConfig, InvalidConfigsAreRejected) {
  RunConfig c;
  c.model = "pendulum";
  EXPECT_THROW(validated(c), InvalidConfig);
  c = RunConfig{};
  c.methods = {"rk4"};
  EXPECT_THROW(validated(c), InvalidConfig);
  c = RunConfig{};
  c.orders = {4};
  EXPECT_THROW(validated(c), InvalidConfig);
  c = RunConfig{};
  c.atols = {1e-2, 1e-3};
  c.rtols = {0.0, 0.0, 0.0};
  EXPECT_THROW(validated(c), InvalidConfig);
  c = RunConfig{};
  c.t_end = -1.0;
  EXPECT_THROW(validated(c), InvalidConfig);
}

TEST(RunConfig, SweepEntriesZipTolerancesAndSkipOrderForDopri) {
  RunConfig c;
  c.methods = {"cheqss", "dopri"};
  c.orders = {1, 2};
  c.rtols = {0.0};
  c.atols = {1e-2, 1e-3};
  const auto e = sweep_entries(validated(c));
  // cheqss: 2 orders x 2 tolerances, dopri: 2 tolerances.
  ASSERT_EQ(e.size(), 6u);
  EXPECT_EQ(std::count_if(e.begin(), e.end(), [](const SweepEntry& s) { return s.method == "dopri"; }), 2);
  for (const auto& s : e)
    if (s.method == "dopri") EXPECT_EQ(s.order, 0);
}

TEST(Bench, ScalarExamplesFromTheCli) {
  // Published: CheQSS1 at 1e-2 takes 51 steps and LIQSS3 at 1e-4 takes 33.
  const auto che = run_benchmark(scalar("cheqss", 1, 1e-2));
  ASSERT_EQ(che.rows.size(), 1u);
  EXPECT_NEAR(che.rows[0].steps_mean, 51.0, 5.1);
  ASSERT_TRUE(che.rows[0].theor_min.has_value());
  EXPECT_NEAR(*che.rows[0].theor_min, 49.66, 0.01);
  EXPECT_LE(che.rows[0].error, 2e-2);

  const auto liq = run_benchmark(scalar("liqss", 3, 1e-4));
  EXPECT_GT(liq.rows[0].steps_mean, 0.0);
  EXPECT_LE(liq.rows[0].error, 2e-4);
}

TEST(Bench, AdrDopriSmoke) {
  RunConfig c;
  c.model = "adr";
  c.methods = {"dopri"};
  c.rtols = {1e-3};
  c.atols = {1e-5};
  c.reference = ReferenceKind::Dopri;
  const auto r = run_benchmark(c);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_TRUE(std::isfinite(r.rows[0].error));
  EXPECT_LE(r.rows[0].error, 1e-2);
  EXPECT_FALSE(r.rows[0].theor_min.has_value());
}

TEST(Bench, ScalarReferenceMatchesAnalyticSolution) {
  RunConfig c = validated(scalar("cheqss", 1, 1e-2));
  const ReferenceRun ref = compute_reference(c);
  const Samples exact = analytic_scalar_samples(c);
  ASSERT_EQ(ref.samples.times.size(), exact.times.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < exact.times.size(); ++k)
    worst = std::max(worst, std::abs(ref.samples.values[k][0] - exact.values[k][0]));
  EXPECT_LE(worst, 1e-8);
}

TEST(Bench, AdrReferenceIsDeterministic) {
  const fs::path dir = scratch_dir("adr_ref");
  RunConfig c;
  c.model = "adr";
  c.t_end = 0.5;
  c.params = {{"n", "20"}};
  c.ref_out = (dir / "a.csv").string();
  make_reference(c);
  c.ref_out = (dir / "b.csv").string();
  make_reference(c);
  EXPECT_EQ(read_file((dir / "a.csv").string()), read_file((dir / "b.csv").string()));
  const ReferenceRun back = load_reference(validated(c), c.ref_out);
  EXPECT_EQ(back.samples.times.size(), 500u);
  EXPECT_EQ(back.samples.values.front().size(), 20u);
}

TEST(Bench, SnnReferenceStoresOneCountPerSeed) {
  const fs::path dir = scratch_dir("snn_ref");
  RunConfig c;
  c.model = "snn";
  c.t_end = 0.01;
  c.runs = 3;
  c.params = {{"n", "40"}};
  c.reference = ReferenceKind::Dopri;
  c.ref_out = (dir / "ref.csv").string();
  const ReferenceRun made = make_reference(c);
  std::istringstream is(read_file(c.ref_out));
  std::vector<std::uint64_t> seeds;
  std::vector<double> counts;
  read_spike_counts(is, seeds, counts);
  EXPECT_EQ(seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(counts, made.spikes);
  for (double s : counts) EXPECT_EQ(s, std::floor(s));
}

TEST(Bench, OutputFilesAreWritten) {
  const fs::path dir = scratch_dir("outputs");
  RunConfig c = scalar("cheqss", 2, 1e-3);
  c.traj_out = (dir / "traj.csv").string();
  c.stats_out = (dir / "stats.txt").string();
  c.bench_out = (dir / "bench.csv").string();
  c.activity_out = (dir / "activity.csv").string();
  run_benchmark(c);
  std::istringstream traj(read_file(c.traj_out));
  EXPECT_EQ(read_samples_csv(traj).times.size(), 500u);
  std::istringstream stats(read_file(c.stats_out));
  const auto kv = read_key_values(stats);
  EXPECT_TRUE(kv.count("total_steps"));
  EXPECT_TRUE(kv.count("mae"));
  std::istringstream bench(read_file(c.bench_out));
  EXPECT_EQ(read_bench_csv(bench).size(), 1u);
  EXPECT_NE(read_file(c.activity_out).find("var,order,activity"), std::string::npos);
}

TEST(BenchProperties, CsvIsSortedAndRoundTrips) {
  std::vector<BenchRow> rows;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const char* methods[] = {"cheqss", "dopri", "liqss", "qss"};
  for (int k = 0; k < 24; ++k) {
    BenchRow r;
    r.model = k % 2 ? "adr" : "scalar";
    r.method = methods[k % 4];
    r.order = r.method == "dopri" ? 0 : 1 + k % 3;
    r.rtol = k % 3 ? 1e-3 : 0.0;
    r.atol = std::pow(10.0, -(k % 5) - 1);
    r.steps_mean = std::floor(1e4 * u(rng));
    r.wall_ms_mean = u(rng);
    r.error = u(rng) * 1e-3;
    if (r.method != "dopri") r.theor_min = 100.0 * u(rng);
    rows.push_back(r);
  }
  std::ostringstream first;
  write_bench_csv(first, rows);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(rows.begin(), rows.end(), rng);
    std::ostringstream again;
    write_bench_csv(again, rows);
    EXPECT_EQ(again.str(), first.str());
  }
  std::istringstream is(first.str());
  const auto back = read_bench_csv(is);
  ASSERT_EQ(back.size(), rows.size());
  std::ostringstream round;
  write_bench_csv(round, back);
  EXPECT_EQ(round.str(), first.str());
}
