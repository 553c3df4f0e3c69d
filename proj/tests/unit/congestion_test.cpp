#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "multcp/congestion.hpp"

using namespace multcp;

TEST(Crossover, KnownValues) {
  EXPECT_EQ(slow_start_crossover(1.0), 1.0);
  EXPECT_NEAR(slow_start_crossover(2.0), 6.5410, 1e-4);
  EXPECT_NEAR(slow_start_crossover(8.0), 279.8546, 1e-3);
  EXPECT_THROW(slow_start_crossover(0.5), std::invalid_argument);
}

TEST(Crossover, EqualsNStandardWindowsAfterKRounds) {
  for (double n : {1.5, 2.0, 3.0, 8.0, 10.0}) {
    const double k = std::log(n) / (std::log(3.0) - std::log(2.0));
    EXPECT_NEAR(slow_start_crossover(n), n * std::pow(2.0, k), 1e-9 * slow_start_crossover(n));
  }
}

TEST(Crossover, StrictlyIncreasing) {
  double prev = slow_start_crossover(1.0);
  for (double n = 1.1; n <= 10.0; n += 0.1) {
    const double c = slow_start_crossover(n);
    EXPECT_GT(c, prev);
    prev = c;
  }
}

TEST(SlowStart, IncrementsByTwoThenOne) {
  CongestionState s = make_congestion_state(Variant::reno, 2.0);
  s.cwnd = 1.0;
  on_ack_slow_start(s);
  EXPECT_EQ(s.cwnd, 3.0);
  s.cwnd = 7.0;
  on_ack_slow_start(s);
  EXPECT_EQ(s.cwnd, 8.0);
}

TEST(SlowStart, BoundaryUsesLessOrEqual) {
  CongestionState s = make_congestion_state(Variant::reno, 8.0, 1000.0);
  s.cwnd = 280.0;  // just above 279.85
  on_ack_slow_start(s);
  EXPECT_EQ(s.cwnd, 281.0);
  s.cwnd = 279.0;
  on_ack_slow_start(s);
  EXPECT_EQ(s.cwnd, 281.0);
}

TEST(SlowStart, FirstAckOfStandardFlowJumpsToThree) {
  CongestionState s = make_congestion_state(Variant::reno, 1.0);
  on_ack_slow_start(s);
  EXPECT_EQ(s.cwnd, 3.0);
  on_ack_slow_start(s);
  EXPECT_EQ(s.cwnd, 4.0);
}

TEST(SlowStart, MeetsNStandardConnectionsWithinOneRound) {
  for (double n : {2.0, 4.0, 8.0}) {
    // Round-based: every segment of a window is acked within one RTT.
    CongestionState s = make_congestion_state(Variant::reno, n, 1e9);
    const double target = slow_start_crossover(n);
    int rounds = 0;
    while (s.cwnd < target) {
      const auto acks = static_cast<int>(std::floor(s.cwnd));
      for (int a = 0; a < acks; ++a) on_ack_slow_start(s);
      ++rounds;
    }
    const double k = std::log(n) / (std::log(3.0) - std::log(2.0));
    EXPECT_LE(std::abs(rounds - k), 1.0 + 1e-9) << "n=" << n;
  }
}

TEST(CongestionAvoidance, Increment) {
  CongestionState s = make_congestion_state(Variant::reno, 1.0);
  s.cwnd = 10.0;
  on_ack_congestion_avoidance(s);
  EXPECT_DOUBLE_EQ(s.cwnd, 10.1);
  s = make_congestion_state(Variant::reno, 5.0);
  s.cwnd = 10.0;
  on_ack_congestion_avoidance(s);
  EXPECT_DOUBLE_EQ(s.cwnd, 10.5);
}

TEST(CongestionAvoidance, GrowsByAboutNPerWindow) {
  for (double n : {1.0, 2.0, 4.0, 8.0}) {
    CongestionState s = make_congestion_state(Variant::reno, n);
    const double w = 100.0;
    s.cwnd = w;
    for (int i = 0; i < 100; ++i) on_ack_congestion_avoidance(s);
    EXPECT_NEAR(s.cwnd, w + n, 0.05 * (w + n));
  }
}

TEST(CongestionSignal, CongestionAvoidanceDecrease) {
  CongestionState s = make_congestion_state(Variant::reno, 2.0);
  s.cwnd = 100.0;
  s.ssthresh = 50.0;
  on_congestion_signal(s);
  EXPECT_EQ(s.cwnd, 75.0);
  EXPECT_EQ(s.ssthresh, 75.0);

  s = make_congestion_state(Variant::reno, 1.0);
  s.cwnd = 100.0;
  s.ssthresh = 50.0;
  on_congestion_signal(s);
  EXPECT_EQ(s.cwnd, 50.0);
  EXPECT_EQ(s.ssthresh, 50.0);
}

TEST(CongestionSignal, SlowStartHalves) {
  CongestionState s = make_congestion_state(Variant::reno, 4.0);
  s.cwnd = 40.0;
  s.ssthresh = 50.0;
  on_congestion_signal(s);
  EXPECT_EQ(s.cwnd, 20.0);
  EXPECT_EQ(s.ssthresh, 20.0);
}

TEST(CongestionSignal, RepeatedDecreasesCompose) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> nd(1.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double n = nd(rng);
    CongestionState s = make_congestion_state(Variant::reno, n, 2.0);
    s.cwnd = 1e6;
    s.ssthresh = 2.0;
    for (int k = 1; k <= 6; ++k) {
      on_congestion_signal(s);
      s.ssthresh = 2.0;  // stay in congestion avoidance
      EXPECT_NEAR(s.cwnd, 1e6 * std::pow((n - 0.5) / n, k), 1e-6);
    }
  }
}

TEST(CongestionSignal, FloorsAndMinimums) {
  CongestionState s = make_congestion_state(Variant::reno, 1.0);
  s.ssthresh = 2.0;
  s.cwnd = 2.5;
  on_congestion_signal(s);
  EXPECT_GE(s.cwnd, 1.0);
  EXPECT_GE(s.ssthresh, 2.0);
  s.cwnd = 1.0;
  s.ssthresh = 2.0;
  on_congestion_signal(s);
  EXPECT_GE(s.cwnd, 1.0);
  EXPECT_GE(s.ssthresh, 2.0);
}

TEST(Timeout, ReducesSsthreshByWeightedFactor) {
  CongestionState s = make_congestion_state(Variant::reno, 2.0);
  s.cwnd = 60.0;
  on_timeout(s);
  EXPECT_EQ(s.ssthresh, 45.0);
  EXPECT_EQ(s.cwnd, 1.0);
  EXPECT_EQ(s.phase(), Phase::slow_start);

  s = make_congestion_state(Variant::reno, 1.0);
  s.cwnd = 60.0;
  on_timeout(s);
  EXPECT_EQ(s.ssthresh, 30.0);

  s = make_congestion_state(Variant::reno, 10.0);
  s.cwnd = 3.0;
  on_timeout(s);
  EXPECT_EQ(s.ssthresh, 2.0);
}

TEST(Timeout, BackoffDoublesAndCaps) {
  CongestionState s = make_congestion_state(Variant::reno, 1.0);
  const SimTime base = s.rto();
  on_timeout(s);
  EXPECT_EQ(s.rto(), base * 2);
  on_timeout(s);
  EXPECT_EQ(s.rto(), base * 4);
  for (int i = 0; i < 20; ++i) on_timeout(s);
  EXPECT_LE(s.rto(), SimTime::from_seconds(60));
}

TEST(StateInvariants, RandomTransitions) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> op(0, 3);
  std::uniform_real_distribution<double> nd(1.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    CongestionState s = make_congestion_state(Variant::reno, nd(rng));
    for (int i = 0; i < 500; ++i) {
      switch (op(rng)) {
        case 0:
        case 1: open_window(s); break;
        case 2: on_congestion_signal(s); break;
        case 3: on_timeout(s); break;
      }
      ASSERT_GE(s.cwnd, 1.0);
      ASSERT_GE(s.ssthresh, 2.0);
    }
  }
}

TEST(WindowAllowsSend, FloorAndAdvertisedWindow) {
  CongestionState s = make_congestion_state(Variant::reno, 1.0);
  s.cwnd = 10.7;
  EXPECT_FALSE(window_allows_send(s, 10));
  EXPECT_TRUE(window_allows_send(s, 9));
  s.cwnd = 50.0;
  EXPECT_FALSE(window_allows_send(s, 8, 8));
  EXPECT_TRUE(window_allows_send(s, 7, 8));
}

TEST(RttEstimator, FloorAndSmoothing) {
  RttEstimator e;
  EXPECT_EQ(e.rto(), RttEstimator::kInitialRto);
  e.sample(SimTime::from_seconds(0.01));
  EXPECT_EQ(e.rto(), RttEstimator::kMinRto);
  RttEstimator slow;
  slow.sample(SimTime::from_seconds(1.0));
  // srtt = 1, rttvar = 0.5: 1 + 4 * 0.5 = 3 s.
  EXPECT_EQ(slow.rto(), SimTime::from_seconds(3.0));
  slow.sample(SimTime::from_seconds(1.0));
  // rttvar = 0.375: 1 + 1.5.
  EXPECT_EQ(slow.rto(), SimTime::from_seconds(2.5));
}

TEST(Variant, NamesRoundTrip) {
  for (Variant v : {Variant::tahoe, Variant::reno, Variant::newreno, Variant::sack}) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_THROW(parse_variant("vegas"), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Sender state machines driven by hand-built ack streams.

namespace {

struct Harness {
  TcpSender sender;
  std::vector<SendAction> sent;

  Harness(Variant v, double n, double cwnd, double ssthresh) : sender(TcpSender::Config{v, n, 64.0, {}}) {
    sender.mutable_state().cwnd = cwnd;
    sender.mutable_state().ssthresh = ssthresh;
  }

  void pump() {
    while (auto a = sender.next_send()) sent.push_back(*a);
  }

  AckOutcome ack(SeqNum cumulative, std::vector<SackBlock> blocks = {}) {
    AckInfo info;
    info.cumulative = cumulative;
    for (const SackBlock& b : blocks) info.blocks[info.block_count++] = b;
    AckOutcome out = sender.on_ack(info, SimTime::from_seconds(0.05));
    if (out.retransmit) sent.push_back(SendAction{*out.retransmit, true});
    return out;
  }

  std::vector<SeqNum> retransmitted() const {
    std::vector<SeqNum> r;
    for (const SendAction& a : sent)
      if (a.retransmission) r.push_back(a.seq);
    return r;
  }
};

}  // namespace

TEST(RenoSender, TwoDupacksDoNotRetransmit) {
  Harness h(Variant::reno, 1.0, 10.0, 5.0);
  h.pump();
  h.ack(1);
  h.ack(1);
  h.ack(1);
  EXPECT_TRUE(h.retransmitted().empty());
  EXPECT_FALSE(h.sender.state().in_recovery);
}

TEST(RenoSender, ThirdDupackRetransmitsAndInflates) {
  Harness h(Variant::reno, 2.0, 100.0, 50.0);
  h.pump();
  ASSERT_EQ(h.sent.size(), 100u);
  h.ack(1);  // segment 1 is lost
  h.ack(1);
  h.ack(1);
  const AckOutcome out = h.ack(1);
  ASSERT_TRUE(out.decreased_cwnd.has_value());
  EXPECT_DOUBLE_EQ(h.sender.state().cwnd, out.cwnd_before * 0.75);
  EXPECT_EQ(h.retransmitted(), (std::vector<SeqNum>{1}));
  EXPECT_EQ(h.sender.state().phase(), Phase::fast_recovery);
  EXPECT_EQ(h.sender.state().inflation, 3);
  h.ack(1);
  EXPECT_EQ(h.sender.state().inflation, 4);
  h.ack(101);
  EXPECT_FALSE(h.sender.state().in_recovery);
  EXPECT_EQ(h.sender.state().inflation, 0);
}

TEST(TahoeSender, FastRetransmitCollapsesWindow) {
  Harness h(Variant::tahoe, 1.0, 10.0, 5.0);
  h.pump();
  h.ack(1);
  h.ack(1);
  h.ack(1);
  const AckOutcome out = h.ack(1);
  ASSERT_TRUE(out.decreased_cwnd.has_value());
  EXPECT_EQ(h.sender.state().cwnd, 1.0);
  EXPECT_EQ(h.sender.snd_nxt(), 1);
  h.pump();
  EXPECT_EQ(h.retransmitted(), (std::vector<SeqNum>{1}));
}

TEST(NewRenoSender, PartialAckRetransmitsNextHoleWithoutLeavingRecovery) {
  Harness h(Variant::newreno, 1.0, 10.0, 5.0);
  h.pump();
  // Segments 2 and 5 lost.
  h.ack(1);
  h.ack(2);
  h.ack(2);
  h.ack(2);
  h.ack(2);
  EXPECT_TRUE(h.sender.state().in_recovery);
  const AckOutcome partial = h.ack(5);
  EXPECT_TRUE(h.sender.state().in_recovery);
  ASSERT_TRUE(partial.retransmit.has_value());
  EXPECT_EQ(*partial.retransmit, 5);
  h.ack(10);
  EXPECT_FALSE(h.sender.state().in_recovery);
  EXPECT_EQ(h.retransmitted(), (std::vector<SeqNum>{2, 5}));
}

TEST(SackSender, TwoHolesRetransmittedWithOneReduction) {
  Harness h(Variant::sack, 2.0, 10.0, 5.0);
  h.pump();
  ASSERT_EQ(h.sent.size(), 10u);
  // Segments 2 and 5 of 0..9 lost.
  h.ack(1);
  h.ack(2);
  h.ack(2, {{3, 4}});
  h.ack(2, {{3, 5}});
  int reductions = 0;
  double before = 0.0;
  for (auto blocks : std::vector<std::vector<SackBlock>>{{{6, 7}, {3, 5}}, {{6, 8}, {3, 5}}, {{6, 9}, {3, 5}},
                                                         {{6, 10}, {3, 5}}}) {
    const AckOutcome out = h.ack(2, blocks);
    if (out.decreased_cwnd) {
      ++reductions;
      before = out.cwnd_before;
    }
    h.pump();
  }
  EXPECT_EQ(reductions, 1);
  const std::vector<SeqNum> r = h.retransmitted();
  EXPECT_EQ(std::set<SeqNum>(r.begin(), r.end()), (std::set<SeqNum>{2, 5}));
  EXPECT_DOUBLE_EQ(h.sender.state().cwnd, before * 0.75);
}

TEST(SackScoreboard, LossInferenceAndPipe) {
  SackScoreboard sb;
  sb.reset(0);
  sb.mark_sacked({3, 6});
  EXPECT_TRUE(sb.is_lost(0));
  EXPECT_TRUE(sb.is_lost(2));
  EXPECT_FALSE(sb.is_lost(3));
  EXPECT_EQ(sb.high_sacked(), 6);
  // Segments 0..2 are lost, 3..5 sacked, 6..7 in flight.
  EXPECT_EQ(sb.pipe(8), 2);
  EXPECT_EQ(sb.next_hole(true), SeqNum{0});
  sb.mark_retransmitted(0, 8);
  EXPECT_EQ(sb.pipe(8), 3);
  EXPECT_EQ(sb.next_hole(true), SeqNum{1});
}

TEST(SackScoreboard, LostRetransmissionBecomesHoleAgain) {
  SackScoreboard sb;
  sb.reset(0);
  sb.mark_sacked({1, 4});
  sb.mark_retransmitted(0, 8);
  EXPECT_EQ(sb.next_hole(true), std::nullopt);
  sb.mark_sacked({4, 8});
  EXPECT_TRUE(sb.retransmitted(0));
  sb.mark_sacked({8, 9});  // sent after the retransmission
  EXPECT_FALSE(sb.retransmitted(0));
  EXPECT_EQ(sb.next_hole(true), SeqNum{0});
}

TEST(SackScoreboard, AdvanceDropsAckedState) {
  SackScoreboard sb;
  sb.reset(0);
  sb.mark_sacked({2, 4});
  sb.advance(3);
  EXPECT_EQ(sb.base(), 3);
  EXPECT_TRUE(sb.sacked(3));
  EXPECT_EQ(sb.sacked_count(), 1u);
}

TEST(Sender, TimeoutRewindsToCumulativeAck) {
  Harness h(Variant::newreno, 2.0, 10.0, 64.0);
  h.pump();
  h.ack(4);
  h.sender.on_timeout();
  EXPECT_EQ(h.sender.snd_nxt(), 4);
  EXPECT_EQ(h.sender.state().cwnd, 1.0);
  const auto next = h.sender.next_send();
  ASSERT_TRUE(next.has_value());
  EXPECT_EQ(next->seq, 4);
  EXPECT_TRUE(next->retransmission);
}

TEST(Sender, AdvertisedWindowCapsSending) {
  TcpSender s(TcpSender::Config{Variant::reno, 1.0, 64.0, {}});
  s.mutable_state().cwnd = 50.0;
  int count = 0;
  while (s.next_send()) ++count;
  EXPECT_EQ(count, 50);
  TcpSender capped(TcpSender::Config{Variant::reno, 1.0, 64.0, {}});
  capped.mutable_state().cwnd = 50.0;
  capped.next_send();
  AckInfo info;
  info.cumulative = 1;
  info.advertised_window = 8;
  capped.on_ack(info, SimTime::from_seconds(0.1));
  count = 0;
  while (capped.next_send()) ++count;
  EXPECT_EQ(count, 8);
}
