#pragma once

// MulTCP congestion control: Tahoe, Reno, NewReno and Sack state machines
// whose window dynamics mimic N concurrent standard connections.

#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>

#include "multcp/engine.hpp"

namespace multcp {

enum class Variant { tahoe, reno, newreno, sack };
enum class Phase { slow_start, congestion_avoidance, fast_recovery };

std::string_view to_string(Variant v);
std::string_view to_string(Phase p);
/// Throws std::invalid_argument on an unknown name.
Variant parse_variant(std::string_view name);

inline constexpr int kDupAckThreshold = 3;

/// Window at which N standard connections in slow start catch up with one
/// connection sending three packets per ack: 3^(log N / (log 3 - log 2)).
/// Throws std::invalid_argument when n < 1.
double slow_start_crossover(double n);

/// Window scaling applied on a congestion signal in congestion avoidance.
inline double decrease_ratio(double n) { return (n - 0.5) / n; }

/// Jacobson/Karels estimator with 1 ms granularity and a 200 ms floor.
class RttEstimator {
 public:
  static constexpr SimTime kMinRto = SimTime::from_ns(200'000'000);
  static constexpr SimTime kInitialRto = SimTime::from_ns(1'000'000'000);
  static constexpr SimTime kGranularity = SimTime::from_ns(1'000'000);

  void sample(SimTime rtt);
  SimTime rto() const { return rto_; }
  std::optional<SimTime> srtt() const;

 private:
  bool has_sample_ = false;
  double srtt_ns_ = 0.0;
  double rttvar_ns_ = 0.0;
  SimTime rto_ = kInitialRto;
};

/// Per-segment scoreboard for the window [base, base + size).
class SackScoreboard {
 public:
  void reset(SeqNum base);
  /// Slides the window forward to a new cumulative ack.
  void advance(SeqNum base);
  void mark_sacked(SackBlock block);
  /// Records a retransmission of `seq` sent while `snd_max` was the highest
  /// sequence number sent. Once a segment at or above `snd_max` is sacked the
  /// retransmission is deemed lost and the segment becomes a hole again.
  void mark_retransmitted(SeqNum seq, SeqNum snd_max);

  SeqNum base() const { return base_; }
  bool sacked(SeqNum seq) const { return flag(seq) & kSacked; }
  bool retransmitted(SeqNum seq) const { return flag(seq) & kRetransmitted; }
  /// One past the highest sacked segment, or base() when nothing is sacked.
  SeqNum high_sacked() const { return high_sacked_; }
  std::size_t sacked_count() const { return sacked_count_; }
  /// At least kDupAckThreshold segments above `seq` have been sacked.
  bool is_lost(SeqNum seq) const;

  /// Segments believed to be in the network between base() and snd_max.
  std::int64_t pipe(SeqNum snd_max) const;
  /// First unsacked, not yet retransmitted segment below high_sacked() that
  /// the loss rule deems lost (or any such hole when `require_lost` is false).
  std::optional<SeqNum> next_hole(bool require_lost) const;

 private:
  static constexpr std::uint8_t kSacked = 1;
  static constexpr std::uint8_t kRetransmitted = 2;
  struct Slot {
    std::uint8_t flags = 0;
    SeqNum retransmit_mark = 0;
  };
  std::uint8_t flag(SeqNum seq) const;
  Slot& slot(SeqNum seq);

  SeqNum base_ = 0;
  SeqNum high_sacked_ = 0;
  std::size_t sacked_count_ = 0;
  std::deque<Slot> slots_;
};

struct CongestionState {
  Variant variant = Variant::reno;
  double n = 1.0;
  double cwnd = 1.0;       // segments, real-valued
  double ssthresh = 64.0;  // segments
  bool in_recovery = false;
  int dupacks = 0;
  SeqNum recovery_point = -1;
  // Reno/NewReno fast-recovery inflation, in segments.
  std::int64_t inflation = 0;
  SackScoreboard scoreboard;
  RttEstimator rtt;
  int backoff = 1;

  Phase phase() const {
    if (in_recovery) return Phase::fast_recovery;
    return cwnd < ssthresh ? Phase::slow_start : Phase::congestion_avoidance;
  }
  SimTime rto() const;
};

/// Throws std::invalid_argument when n < 1 or ssthresh < 2.
CongestionState make_congestion_state(Variant variant, double n, double initial_ssthresh = 64.0);

void on_ack_slow_start(CongestionState& s);
void on_ack_congestion_avoidance(CongestionState& s);
/// Dispatches to the slow-start or congestion-avoidance increase.
void open_window(CongestionState& s);
/// Multiplicative decrease on a loss detected by duplicate acks.
void on_congestion_signal(CongestionState& s);
/// Retransmission-timer expiry: shrink ssthresh, collapse cwnd, back off.
void on_timeout(CongestionState& s);
/// True iff in_flight < min(floor(cwnd) + inflation, advertised).
bool window_allows_send(const CongestionState& s, std::int64_t in_flight,
                        std::uint32_t advertised = kUnlimitedWindow);

struct SendAction {
  SeqNum seq = 0;
  bool retransmission = false;
};

enum class TimerAction { none, restart, stop };

struct AckOutcome {
  double cwnd_before = 0.0;
  double cwnd_after = 0.0;
  bool new_data = false;
  bool duplicate = false;
  // Set when this ack triggered fast retransmit; holds the window computed
  // by the multiplicative decrease (before any Tahoe collapse).
  std::optional<double> decreased_cwnd;
  std::optional<SeqNum> retransmit;
  TimerAction timer = TimerAction::none;
};

/// Sender-side sequence bookkeeping plus the variant state machines. Pure
/// logic: the caller owns the clock, timers and packet I/O.
class TcpSender {
 public:
  struct Config {
    Variant variant = Variant::reno;
    double n = 1.0;
    double initial_ssthresh = 64.0;
    // Segments to send in total; nullopt is an unbounded bulk transfer.
    std::optional<SeqNum> limit;
  };

  explicit TcpSender(Config config);

  AckOutcome on_ack(const AckInfo& ack, SimTime rtt_sample);
  /// Applies the timeout transition and rewinds to the cumulative ack.
  void on_timeout();
  /// Next segment the windows allow to be sent, recorded as sent.
  std::optional<SendAction> next_send();

  const CongestionState& state() const { return state_; }
  CongestionState& mutable_state() { return state_; }
  SeqNum snd_una() const { return snd_una_; }
  SeqNum snd_nxt() const { return snd_nxt_; }
  SeqNum snd_max() const { return snd_max_; }
  bool has_outstanding() const { return snd_una_ < snd_max_; }
  bool finished() const { return config_.limit && snd_una_ >= *config_.limit; }
  std::uint32_t advertised_window() const { return advertised_; }
  void stop_new_data() { config_.limit = snd_max_; }

 private:
  void on_new_ack(SeqNum acked, AckOutcome& out);
  void on_duplicate_ack(AckOutcome& out);
  void enter_fast_recovery(AckOutcome& out);
  bool may_send_new() const;

  Config config_;
  CongestionState state_;
  SeqNum snd_una_ = 0;
  SeqNum snd_nxt_ = 0;
  SeqNum snd_max_ = 0;
  std::uint32_t advertised_ = kUnlimitedWindow;
  bool last_recovery_by_timeout_ = false;
  bool partial_ack_seen_ = false;
  std::optional<std::int64_t> pipe_;
};

}  // namespace multcp
