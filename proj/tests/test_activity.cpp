#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "qss/activity.hpp"
#include "qss/engine.hpp"
#include "qss/errors.hpp"
#include "qss/models.hpp"

using namespace qss;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Derivatives of 1 - e^{-t}: d^n/dt^n = (-1)^{n+1} e^{-t}.
double scalar_derivative(int n, double t) { return (n % 2 == 1 ? 1.0 : -1.0) * std::exp(-t); }

}  // namespace

TEST(Activity, ClosedFormExamples) {
  const double a1 = activity_n([](double t) { return scalar_derivative(1, t); }, 1, 0.0, 5.0);
  EXPECT_NEAR(a1, 1.0 - std::exp(-5.0), 1e-6 * a1);
  EXPECT_NEAR(a1, 0.993262, 1e-6);
  const double a2 = activity_n([](double t) { return scalar_derivative(2, t); }, 2, 0.0, 5.0);
  EXPECT_NEAR(a2, std::sqrt(2.0) * (1.0 - std::exp(-2.5)), 1e-6 * a2);
  EXPECT_NEAR(a2, 1.298128, 1e-6);
  // n = 3: integral of (e^{-t}/6)^{1/3} = 3 * 6^{-1/3} (1 - e^{-5/3}).
  const double a3 = activity_n([](double t) { return scalar_derivative(3, t); }, 3, 0.0, 5.0);
  EXPECT_NEAR(a3, 3.0 * std::pow(6.0, -1.0 / 3.0) * (1.0 - std::exp(-5.0 / 3.0)), 1e-6 * a3);
  for (int n = 1; n <= 3; ++n) EXPECT_EQ(activity_n([](double) { return 0.0; }, n, 0.0, 1.0), 0.0);
}

TEST(Activity, RejectsBadArguments) {
  EXPECT_THROW(activity_n([](double) { return 1.0; }, 4, 0.0, 1.0), InvalidConfig);
  EXPECT_THROW(activity_n([](double) { return 1.0; }, 1, 1.0, 1.0), InvalidConfig);
}

TEST(Activity, MinimumStepExamples) {
  EXPECT_NEAR(min_steps_general(0.993262, 1e-2, 1), 49.66, 0.01);
  EXPECT_NEAR(min_steps_general(1.298129, 1e-2, 2), 4.59, 0.01);
  EXPECT_EQ(min_steps_general(0.0, 1e-2, 3), 0.0);
  EXPECT_NEAR(min_steps_classic(0.993262, 1e-2, 1), 99.3, 0.05);
  for (int n = 1; n <= 3; ++n) EXPECT_DOUBLE_EQ(min_steps_classic(1.0, 1.0, n), 1.0);
  EXPECT_DOUBLE_EQ(min_steps_general(3.7, 1e-3, 1) / min_steps_classic(3.7, 1e-3, 1), 0.5);
}

TEST(Activity, GeneralIsClassicScaledByPowerOfTwo) {
  for (int n = 1; n <= 3; ++n) {
    for (double a : {0.1, 1.0, 17.0}) {
      for (double dq : {1e-1, 1e-4, 1e-7}) {
        const double ratio = min_steps_classic(a, dq, n) / std::pow(2.0, (2.0 * n - 1.0) / n);
        EXPECT_NEAR(min_steps_general(a, dq, n), ratio, 1e-12 * ratio);
        EXPECT_LE(min_steps_general(a, dq, n), min_steps_classic(a, dq, n));
      }
    }
  }
}

TEST(Activity, TaylorCoefficientOfScalarSolution) {
  const auto m = scalar_model();
  const double t = 0.7;
  const std::vector<double> x{1.0 - std::exp(-t)};
  for (int n = 1; n <= 3; ++n) {
    const auto c = solution_taylor_coefficient(*m, x, {}, t, n);
    EXPECT_NEAR(c[0], scalar_derivative(n, t) / factorial(n), 1e-14);
  }
}

TEST(Activity, ReportOnScalarReproducesTableBounds) {
  const auto m = scalar_model();
  const auto times = output_grid(0.0, 5.0, 20001);
  std::vector<std::vector<double>> states;
  for (double t : times) states.push_back({1.0 - std::exp(-t)});
  // Published lower bounds: 50/497/4965, 5/15/46, 2/5/10.
  const double expected[3][3] = {{50, 497, 4965}, {5, 15, 46}, {2, 5, 10}};
  for (int n = 1; n <= 3; ++n) {
    for (int k = 0; k < 3; ++k) {
      const double dq = std::pow(10.0, -2 - k);
      const auto r = activity_report(*m, times, states, n, dq);
      ASSERT_EQ(r.rows.size(), 1u);
      EXPECT_GE(r.rows[0].activity, 0.0);
      EXPECT_LE(r.total_general, r.total_classic);
      EXPECT_LT(std::abs(r.total_general - expected[n - 1][k]), 1.5) << "n=" << n << " dq=" << dq;
    }
  }
}

TEST(Activity, StateDependentQuantumReducesToConstant) {
  const auto m = adr_model();
  // A synthetic smooth state history on a uniform grid.
  const auto times = output_grid(0.0, 1.0, 101);
  std::vector<std::vector<double>> states;
  for (double t : times) {
    std::vector<double> x(100);
    for (std::size_t i = 0; i < 100; ++i) x[i] = 0.5 + 0.4 * std::sin(t + 0.1 * static_cast<double>(i));
    states.push_back(x);
  }
  for (int n = 1; n <= 3; ++n) {
    const auto fixed = activity_report(*m, times, states, n, 1e-3);
    const auto fn = activity_report(*m, times, states, n, [](double) { return 1e-3; });
    EXPECT_NEAR(fn.total_general, fixed.total_general, 1e-9 * fixed.total_general);
    EXPECT_NEAR(fn.total_classic, fixed.total_classic, 1e-9 * fixed.total_classic);
  }
}

TEST(Activity, ReportNeedsOddUniformGrid) {
  const auto m = scalar_model();
  const std::vector<double> times{0.0, 1.0};
  const std::vector<std::vector<double>> states{{0.0}, {0.5}};
  EXPECT_THROW(activity_report(*m, times, states, 1, 1e-2), InvalidConfig);
}

TEST(Activity, CsvLayout) {
  ActivityReport r;
  r.rows.push_back({0, 2, 1.5, 2.5, 3.5});
  std::ostringstream os;
  write_activity_csv(os, r);
  EXPECT_EQ(os.str(), "var,order,activity,bound_general,bound_classic\n0,2,1.5,2.5,3.5\n");
}

// Observed step counts respect the lower bound (constant quantum).
TEST(ActivityProperties, StepsNeverBeatTheBound) {
  const auto m = scalar_model();
  const auto times = output_grid(0.0, 5.0, 20001);
  std::vector<std::vector<double>> states;
  for (double t : times) states.push_back({1.0 - std::exp(-t)});
  for (Method method : {Method::QSS, Method::LIQSS, Method::eLIQSS, Method::CheQSS}) {
    for (int n = 1; n <= 3; ++n) {
      for (double dq : {1e-2, 1e-3, 1e-4, 1e-5}) {
        EngineConfig c;
        c.method = method;
        c.order = n;
        c.quantum = {0.0, dq};
        c.t_end = 5.0;
        c.record_samples = false;
        Engine e(m, c);
        const auto steps = static_cast<double>(e.run().total_steps);
        const double bound = activity_report(*m, times, states, n, dq).total_general;
        EXPECT_GE(steps + 1.0, std::floor(bound)) << to_string(method) << n << " dq=" << dq;
      }
    }
  }
}

TEST(ActivityProperties, AdrStepsNeverBeatTheBound) {
  const auto m = adr_model();
  EngineConfig ref;
  ref.method = Method::CheQSS;
  ref.order = 3;
  ref.quantum = {1e-9, 1e-11};
  ref.t_end = 3.0;
  ref.sample_count = 3001;
  ref.sample_source = SampleSource::State;
  Engine re(m, ref);
  const Samples dense = re.run().samples;
  for (Method method : {Method::LIQSS, Method::eLIQSS, Method::CheQSS}) {
    for (int n = 1; n <= 3; ++n) {
      const double dq = 1e-3;
      EngineConfig c;
      c.method = method;
      c.order = n;
      c.quantum = {0.0, dq};
      c.t_end = 3.0;
      c.record_samples = false;
      Engine e(m, c);
      const SimStats s = e.run();
      const auto report = activity_report(*m, dense.times, dense.values, n, dq);
      for (std::size_t i = 0; i < 100; ++i) {
        EXPECT_GE(static_cast<double>(s.steps[i]) + 1.0, std::floor(report.rows[i].bound_general))
            << to_string(method) << n << " var " << i;
      }
    }
  }
}
