#include <gtest/gtest.h>

#include <cmath>

#include "multcp/policing.hpp"
#include "multcp/simulation.hpp"

using namespace multcp;

namespace {

SimTime sec(double s) { return SimTime::from_seconds(s); }

// A synthetic cwnd trace with `count` congestion-avoidance reductions of
// weight `n`, one per second.
std::vector<TraceRecord> reductions(double n, int count, FlowId flow = 0) {
  std::vector<TraceRecord> t;
  for (int i = 0; i < count; ++i) {
    TraceRecord r;
    r.time = sec(1.0 + i);
    r.flow = flow;
    r.event = TraceEvent::loss_detected;
    r.cwnd_before = 40.0;
    r.cwnd_after = 40.0 * (n - 0.5) / n;
    t.push_back(r);
  }
  return t;
}

// Weighted Sack flow sharing a RED bottleneck with three standard flows.
Scenario policing_scenario(double n, bool trace) {
  DumbbellParams p;
  p.variant = Variant::sack;
  Scenario s = build_dumbbell(4, p);
  s.flows[0].n = n;
  s.flows[0].trace = trace;
  s.duration = sec(40);
  s.warmup = sec(5);
  s.seed = 21;
  return s;
}

}  // namespace

TEST(Inversion, Examples) {
  EXPECT_DOUBLE_EQ(estimate_n_from_decrease(0.5), 1.0);
  EXPECT_DOUBLE_EQ(estimate_n_from_decrease(0.75), 2.0);
  EXPECT_NEAR(estimate_n_from_decrease(0.95), 10.0, 1e-12);
  EXPECT_THROW(estimate_n_from_decrease(1.0), std::invalid_argument);
  EXPECT_THROW(estimate_n_from_decrease(0.0), std::invalid_argument);
}

TEST(Inversion, ExactInverseOfDecrease) {
  for (double n = 1.0; n <= 20.0; n += 0.25) {
    EXPECT_NEAR(estimate_n_from_decrease((n - 0.5) / n), n, 1e-12 * n);
  }
}

TEST(Inversion, CrossoverInverse) {
  for (double n : {1.0, 2.0, 4.0, 8.0}) {
    const double w = std::pow(3.0, std::log(n) / (std::log(3.0) - std::log(2.0)));
    EXPECT_NEAR(estimate_n_from_crossover(w), n, 1e-9 * n);
  }
}

TEST(AnalyzeTrace, SyntheticReductions) {
  const TraceEstimate e = analyze_trace(reductions(3.0, 6));
  ASSERT_FALSE(e.indeterminate());
  EXPECT_NEAR(*e.n, 3.0, 1e-12);
  EXPECT_EQ(e.method(), "decrease");
  EXPECT_FALSE(e.reconstructed);
}

TEST(AnalyzeTrace, MedianIgnoresSlowStartHalving) {
  auto t = reductions(4.0, 6);
  t[2].cwnd_after = *t[2].cwnd_before / 2.0;
  EXPECT_NEAR(*analyze_trace(t).n, 4.0, 1e-12);
}

TEST(AnalyzeTrace, TimeoutsExcluded) {
  auto t = reductions(2.0, 5);
  TraceRecord to;
  to.time = sec(10);
  to.event = TraceEvent::timeout;
  to.cwnd_before = 50.0;
  to.cwnd_after = 1.0;
  t.push_back(to);
  const TraceEstimate e = analyze_trace(t);
  EXPECT_EQ(e.decrease_samples, 5u);
  EXPECT_NEAR(*e.n, 2.0, 1e-12);
}

TEST(AnalyzeTrace, NoEvidenceIsIndeterminate) {
  std::vector<TraceRecord> t;
  for (int i = 0; i < 10; ++i) {
    TraceRecord r;
    r.time = sec(i);
    r.event = TraceEvent::ack_received;
    r.cwnd_before = 20.0 + i * 0.05;
    r.cwnd_after = 20.05 + i * 0.05;
    t.push_back(r);
  }
  const TraceEstimate e = analyze_trace(t);
  EXPECT_TRUE(e.indeterminate());
  EXPECT_EQ(e.method(), "indeterminate");
  EXPECT_TRUE(analyze_trace({}).indeterminate());
}

TEST(AnalyzeTrace, SlowStartFallback) {
  // N=2: +2 up to 6.54, then +1.
  std::vector<TraceRecord> t;
  double w = 1.0;
  for (int i = 0; i < 8; ++i) {
    TraceRecord r;
    r.time = sec(i * 0.01);
    r.event = TraceEvent::ack_received;
    r.cwnd_before = w;
    w += w <= 6.5413 ? 2.0 : 1.0;
    r.cwnd_after = w;
    t.push_back(r);
  }
  const TraceEstimate e = analyze_trace(t);
  ASSERT_FALSE(e.indeterminate());
  EXPECT_EQ(e.method(), "slow-start");
  EXPECT_EQ(e.slow_start_samples, 1u);
  EXPECT_NEAR(*e.n, estimate_n_from_crossover(5.0), 1e-12);
}

TEST(AnalyzeTrace, MixedFlowsRejected) {
  auto t = reductions(2.0, 3, 0);
  auto u = reductions(2.0, 3, 1);
  t.insert(t.end(), u.begin(), u.end());
  EXPECT_THROW(analyze_trace(t), std::invalid_argument);
  EXPECT_EQ(select_records(t, 1).size(), 3u);
  EXPECT_EQ(select_records(t, 0, sec(2), sec(3)).size(), 2u);
}

TEST(Compliance, Examples) {
  const Declaration two{0, 2.0, sec(0), sec(100)};
  const Compliance ok = verify_declaration(reductions(2.05, 6), two);
  EXPECT_EQ(ok.status, ComplianceStatus::compliant);
  const Compliance bad = verify_declaration(reductions(3.0, 6), two);
  EXPECT_EQ(bad.status, ComplianceStatus::violation);
  EXPECT_NEAR(bad.observed_n.value(), 3.0, 1e-12);
  const Compliance under = verify_declaration(reductions(1.5, 6), Declaration{0, 4.0, sec(0), sec(100)});
  EXPECT_EQ(under.status, ComplianceStatus::compliant);
}

TEST(Compliance, IndeterminateIsUnverifiable) {
  const Declaration d{0, 1.0, sec(0), sec(100)};
  EXPECT_EQ(verify_declaration({}, d).status, ComplianceStatus::unverifiable);
  EXPECT_EQ(verify_declaration(reductions(8.0, 6, 5), d).status, ComplianceStatus::unverifiable);
  EXPECT_EQ(to_string(ComplianceStatus::unverifiable), "unverifiable");
}

TEST(Compliance, OnlyDeclaredIntervalCounts) {
  auto t = reductions(1.0, 6);
  auto late = reductions(8.0, 6);
  for (auto& r : late) r.time += sec(100);
  t.insert(t.end(), late.begin(), late.end());
  EXPECT_EQ(verify_declaration(t, Declaration{0, 1.0, sec(0), sec(50)}).status, ComplianceStatus::compliant);
  EXPECT_EQ(verify_declaration(t, Declaration{0, 1.0, sec(50), sec(200)}).status, ComplianceStatus::violation);
}

TEST(Declaration, Validation) {
  EXPECT_THROW((Declaration{0, 0.5, sec(0), sec(1)}).validate(), std::invalid_argument);
  EXPECT_THROW((Declaration{0, 1.0, sec(1), sec(1)}).validate(), std::invalid_argument);
}

TEST(Bill, Examples) {
  EXPECT_DOUBLE_EQ(bill({{1, 2.0, sec(0), sec(100)}, {2, 3.0, sec(0), sec(100)}}, sec(0), sec(100)), 500.0);
  EXPECT_DOUBLE_EQ(bill({{1, 2.0, sec(0), sec(50)}, {1, 4.0, sec(50), sec(100)}}, sec(0), sec(100)), 300.0);
  EXPECT_DOUBLE_EQ(bill({}, sec(0), sec(100)), 0.0);
  EXPECT_DOUBLE_EQ(bill({{1, 2.0, sec(0), sec(100)}}, sec(10), sec(10)), 0.0);
}

TEST(Bill, AdditiveOverDisjointPeriods) {
  const std::vector<Declaration> d{{1, 2.0, sec(5), sec(70)}, {2, 1.5, sec(0), sec(40)}, {1, 6.0, sec(80), sec(95)}};
  const double whole = bill(d, sec(0), sec(100));
  double pieces = 0.0;
  for (int i = 0; i < 10; ++i) pieces += bill(d, sec(i * 10), sec(i * 10 + 10));
  EXPECT_NEAR(whole, pieces, 1e-9);
  EXPECT_NEAR(whole, 2.0 * 65 + 1.5 * 40 + 6.0 * 15, 1e-9);
}

TEST(Bill, RejectsOverlapAndBadPeriod) {
  EXPECT_THROW(bill({{1, 2.0, sec(0), sec(50)}, {1, 4.0, sec(40), sec(100)}}, sec(0), sec(100)),
               std::invalid_argument);
  EXPECT_THROW(bill({}, sec(10), sec(0)), std::invalid_argument);
}

TEST(PolicingSimulation, RecoversStandardWeight) {
  Simulation sim(policing_scenario(1.0, true));
  sim.run();
  const TraceEstimate e = analyze_trace(select_records(sim.trace(), 0));
  ASSERT_GE(e.decrease_samples, 20u);
  EXPECT_NEAR(*e.n, 1.0, 0.1);
}

TEST(PolicingSimulation, RecoversWeightFour) {
  Simulation sim(policing_scenario(4.0, true));
  sim.run();
  const TraceEstimate e = analyze_trace(select_records(sim.trace(), 0));
  ASSERT_GE(e.decrease_samples, 20u);
  EXPECT_NEAR(*e.n, 4.0, 0.4);
}

TEST(PolicingSimulation, WireOnlyReconstructionIsMonotone) {
  auto wire = [](double n) {
    Simulation sim(policing_scenario(n, true));
    sim.run();
    std::vector<TraceRecord> t = select_records(sim.trace(), 0);
    for (TraceRecord& r : t) {
      r.cwnd_before.reset();
      r.cwnd_after.reset();
    }
    const TraceEstimate e = analyze_trace(t);
    EXPECT_TRUE(e.reconstructed);
    return e.n.value_or(0.0);
  };
  const double one = wire(1.0);
  const double eight = wire(8.0);
  EXPECT_GT(one, 0.0);
  EXPECT_GT(eight, 2.0 * one);
}
