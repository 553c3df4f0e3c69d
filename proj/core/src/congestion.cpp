#include "multcp/congestion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace multcp {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::tahoe: return "tahoe";
    case Variant::reno: return "reno";
    case Variant::newreno: return "newreno";
    case Variant::sack: return "sack";
  }
  return "?";
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::slow_start: return "slow-start";
    case Phase::congestion_avoidance: return "congestion-avoidance";
    case Phase::fast_recovery: return "fast-recovery";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "tahoe") return Variant::tahoe;
  if (name == "reno") return Variant::reno;
  if (name == "newreno") return Variant::newreno;
  if (name == "sack") return Variant::sack;
  throw std::invalid_argument("unknown TCP variant '" + std::string(name) + "'");
}

double slow_start_crossover(double n) {
  if (!(n >= 1.0)) throw std::invalid_argument("weight N must be >= 1");
  return std::pow(3.0, std::log(n) / (std::log(3.0) - std::log(2.0)));
}

// ---------------------------------------------------------------------------

void RttEstimator::sample(SimTime rtt) {
  const auto r = static_cast<double>(rtt.ns());
  if (!has_sample_) {
    srtt_ns_ = r;
    rttvar_ns_ = r / 2.0;
    has_sample_ = true;
  } else {
    rttvar_ns_ = 0.75 * rttvar_ns_ + 0.25 * std::abs(srtt_ns_ - r);
    srtt_ns_ = 0.875 * srtt_ns_ + 0.125 * r;
  }
  const double g = static_cast<double>(kGranularity.ns());
  const double raw = srtt_ns_ + std::max(g, 4.0 * rttvar_ns_);
  const auto rounded = static_cast<std::int64_t>(std::ceil(raw / g)) * kGranularity.ns();
  rto_ = std::max(kMinRto, SimTime::from_ns(rounded));
}

std::optional<SimTime> RttEstimator::srtt() const {
  if (!has_sample_) return std::nullopt;
  return SimTime::from_ns(std::llround(srtt_ns_));
}

// ---------------------------------------------------------------------------

void SackScoreboard::reset(SeqNum base) {
  base_ = base;
  high_sacked_ = base;
  sacked_count_ = 0;
  slots_.clear();
}

void SackScoreboard::advance(SeqNum base) {
  while (base_ < base) {
    if (!slots_.empty()) {
      if (slots_.front().flags & kSacked) --sacked_count_;
      slots_.pop_front();
    }
    ++base_;
  }
  high_sacked_ = std::max(high_sacked_, base_);
}

std::uint8_t SackScoreboard::flag(SeqNum seq) const {
  if (seq < base_) return 0;
  const auto i = static_cast<std::size_t>(seq - base_);
  return i < slots_.size() ? slots_[i].flags : 0;
}

SackScoreboard::Slot& SackScoreboard::slot(SeqNum seq) {
  const auto i = static_cast<std::size_t>(seq - base_);
  if (i >= slots_.size()) slots_.resize(i + 1);
  return slots_[i];
}

void SackScoreboard::mark_sacked(SackBlock block) {
  for (SeqNum s = std::max(block.start, base_); s < block.end; ++s) {
    Slot& sl = slot(s);
    if (!(sl.flags & kSacked)) {
      sl.flags |= kSacked;
      ++sacked_count_;
    }
  }
  if (block.end > base_) high_sacked_ = std::max(high_sacked_, block.end);
  for (Slot& sl : slots_) {
    if ((sl.flags & kRetransmitted) && !(sl.flags & kSacked) && high_sacked_ > sl.retransmit_mark) {
      sl.flags &= static_cast<std::uint8_t>(~kRetransmitted);
    }
  }
}

void SackScoreboard::mark_retransmitted(SeqNum seq, SeqNum snd_max) {
  if (seq < base_) return;
  Slot& sl = slot(seq);
  sl.flags |= kRetransmitted;
  sl.retransmit_mark = snd_max;
}

bool SackScoreboard::is_lost(SeqNum seq) const {
  int above = 0;
  for (SeqNum s = seq + 1; s < high_sacked_; ++s) {
    if (sacked(s) && ++above >= kDupAckThreshold) return true;
  }
  return false;
}

std::int64_t SackScoreboard::pipe(SeqNum snd_max) const {
  std::int64_t pipe = 0;
  int above = 0;
  for (SeqNum s = snd_max - 1; s >= base_; --s) {
    const std::uint8_t f = flag(s);
    if (f & kSacked) {
      ++above;
      continue;
    }
    if (above < kDupAckThreshold) ++pipe;
    if (f & kRetransmitted) ++pipe;
  }
  return pipe;
}

std::optional<SeqNum> SackScoreboard::next_hole(bool require_lost) const {
  std::size_t seen = 0;
  for (SeqNum s = base_; s < high_sacked_; ++s) {
    const std::uint8_t f = flag(s);
    if (f & kSacked) {
      ++seen;
      continue;
    }
    if (f & kRetransmitted) continue;
    const std::size_t above = sacked_count_ - seen;
    if (!require_lost || above >= static_cast<std::size_t>(kDupAckThreshold)) return s;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

SimTime CongestionState::rto() const {
  constexpr std::int64_t kMaxRtoNs = 60'000'000'000;
  const std::int64_t base = rtt.rto().ns();
  return SimTime::from_ns(std::min(kMaxRtoNs, base * backoff));
}

CongestionState make_congestion_state(Variant variant, double n, double initial_ssthresh) {
  if (!(n >= 1.0)) throw std::invalid_argument("weight N must be >= 1");
  if (!(initial_ssthresh >= 2.0)) throw std::invalid_argument("initial ssthresh must be >= 2 segments");
  CongestionState s;
  s.variant = variant;
  s.n = n;
  s.ssthresh = initial_ssthresh;
  return s;
}

void on_ack_slow_start(CongestionState& s) {
  if (s.cwnd <= slow_start_crossover(s.n))
    s.cwnd += 2.0;
  else
    s.cwnd += 1.0;
}

void on_ack_congestion_avoidance(CongestionState& s) { s.cwnd += s.n / s.cwnd; }

void open_window(CongestionState& s) {
  if (s.cwnd < s.ssthresh)
    on_ack_slow_start(s);
  else
    on_ack_congestion_avoidance(s);
}

void on_congestion_signal(CongestionState& s) {
  if (s.cwnd < s.ssthresh)
    s.cwnd = s.cwnd / 2.0;
  else
    s.cwnd = s.cwnd * decrease_ratio(s.n);
  s.cwnd = std::max(1.0, s.cwnd);
  s.ssthresh = std::max(2.0, std::floor(s.cwnd));
}

void on_timeout(CongestionState& s) {
  s.ssthresh = std::max(2.0, std::floor(s.cwnd * decrease_ratio(s.n)));
  s.cwnd = 1.0;
  s.in_recovery = false;
  s.inflation = 0;
  s.dupacks = 0;
  s.backoff = std::min(s.backoff * 2, 64);
}

bool window_allows_send(const CongestionState& s, std::int64_t in_flight, std::uint32_t advertised) {
  const auto cwnd = static_cast<std::int64_t>(std::floor(s.cwnd)) + s.inflation;
  const std::int64_t window = std::min<std::int64_t>(cwnd, advertised);
  return in_flight < window;
}

// ---------------------------------------------------------------------------

TcpSender::TcpSender(Config config)
    : config_(config), state_(make_congestion_state(config.variant, config.n, config.initial_ssthresh)) {
  state_.scoreboard.reset(0);
}

bool TcpSender::may_send_new() const {
  if (config_.limit && snd_max_ >= *config_.limit) return false;
  return snd_max_ - snd_una_ < static_cast<std::int64_t>(advertised_);
}

std::optional<SendAction> TcpSender::next_send() {
  if (state_.variant == Variant::sack && state_.in_recovery) {
    if (!pipe_) pipe_ = state_.scoreboard.pipe(snd_max_);
    const auto cwnd = static_cast<std::int64_t>(std::floor(state_.cwnd));
    if (*pipe_ >= cwnd) return std::nullopt;
    std::optional<SendAction> action;
    if (auto hole = state_.scoreboard.next_hole(true)) {
      action = SendAction{*hole, true};
    } else if (may_send_new()) {
      action = SendAction{snd_max_, false};
      snd_nxt_ = ++snd_max_;
    } else if (auto rest = state_.scoreboard.next_hole(false)) {
      action = SendAction{*rest, true};
    }
    if (!action) return std::nullopt;
    if (action->retransmission) state_.scoreboard.mark_retransmitted(action->seq, snd_max_);
    ++*pipe_;
    return action;
  }

  if (config_.limit && snd_nxt_ >= *config_.limit) return std::nullopt;
  if (!window_allows_send(state_, snd_nxt_ - snd_una_, advertised_)) return std::nullopt;
  SendAction action{snd_nxt_, snd_nxt_ < snd_max_};
  ++snd_nxt_;
  snd_max_ = std::max(snd_max_, snd_nxt_);
  return action;
}

AckOutcome TcpSender::on_ack(const AckInfo& ack, SimTime rtt_sample) {
  AckOutcome out;
  out.cwnd_before = state_.cwnd;
  advertised_ = ack.advertised_window;
  const bool sack = state_.variant == Variant::sack;

  if (ack.cumulative > snd_una_) {
    const SeqNum cumulative = std::min(ack.cumulative, snd_max_);
    state_.rtt.sample(rtt_sample);
    state_.backoff = 1;
    const SeqNum acked = cumulative - snd_una_;
    snd_una_ = cumulative;
    if (snd_nxt_ < snd_una_) snd_nxt_ = snd_una_;
    if (sack) {
      state_.scoreboard.advance(snd_una_);
      for (const SackBlock& b : ack.sack()) state_.scoreboard.mark_sacked(b);
    }
    out.new_data = true;
    out.timer = has_outstanding() ? TimerAction::restart : TimerAction::stop;
    on_new_ack(acked, out);
  } else if (ack.cumulative == snd_una_ && has_outstanding()) {
    if (sack)
      for (const SackBlock& b : ack.sack()) state_.scoreboard.mark_sacked(b);
    out.duplicate = true;
    on_duplicate_ack(out);
  }

  pipe_.reset();
  out.cwnd_after = state_.cwnd;
  return out;
}

void TcpSender::on_new_ack(SeqNum acked, AckOutcome& out) {
  auto exit_recovery = [this] {
    state_.in_recovery = false;
    state_.inflation = 0;
    state_.dupacks = 0;
    partial_ack_seen_ = false;
  };

  if (!state_.in_recovery) {
    state_.dupacks = 0;
    open_window(state_);
    return;
  }

  switch (state_.variant) {
    case Variant::tahoe:
    case Variant::reno:
      exit_recovery();
      open_window(state_);
      break;
    case Variant::newreno:
      if (snd_una_ >= state_.recovery_point) {
        exit_recovery();
        open_window(state_);
      } else {
        // Partial ack: the next hole is retransmitted at once, the inflated
        // window deflates by the amount acked, and the timer is only reset
        // for the first partial ack of the episode.
        out.retransmit = snd_una_;
        state_.inflation = std::max<std::int64_t>(0, state_.inflation - acked + 1);
        if (partial_ack_seen_) out.timer = TimerAction::none;
        partial_ack_seen_ = true;
      }
      break;
    case Variant::sack:
      if (snd_una_ >= state_.recovery_point) {
        exit_recovery();
        open_window(state_);
      }
      break;
  }
}

void TcpSender::on_duplicate_ack(AckOutcome& out) {
  ++state_.dupacks;
  if (state_.in_recovery) {
    if (state_.variant == Variant::reno || state_.variant == Variant::newreno) ++state_.inflation;
    return;
  }

  bool trigger = state_.dupacks == kDupAckThreshold;
  if (state_.variant == Variant::sack)
    trigger = state_.dupacks >= kDupAckThreshold || state_.scoreboard.is_lost(snd_una_);
  if (!trigger) return;

  // A second fast retransmit for data sent before the last recovery point is
  // suppressed; Reno only applies the guard after a timeout.
  bool allowed = snd_una_ > state_.recovery_point;
  if (state_.variant == Variant::reno) allowed = allowed || !last_recovery_by_timeout_;
  if (!allowed) return;
  enter_fast_recovery(out);
}

void TcpSender::enter_fast_recovery(AckOutcome& out) {
  on_congestion_signal(state_);
  out.decreased_cwnd = state_.cwnd;
  out.timer = TimerAction::restart;
  state_.recovery_point = snd_max_;
  last_recovery_by_timeout_ = false;
  partial_ack_seen_ = false;

  switch (state_.variant) {
    case Variant::tahoe:
      state_.cwnd = 1.0;
      snd_nxt_ = snd_una_;
      break;
    case Variant::reno:
    case Variant::newreno:
      state_.in_recovery = true;
      state_.inflation = kDupAckThreshold;
      out.retransmit = snd_una_;
      break;
    case Variant::sack:
      state_.in_recovery = true;
      state_.scoreboard.mark_retransmitted(snd_una_, snd_max_);
      out.retransmit = snd_una_;
      break;
  }
}

void TcpSender::on_timeout() {
  multcp::on_timeout(state_);
  state_.recovery_point = snd_max_;
  last_recovery_by_timeout_ = true;
  partial_ack_seen_ = false;
  snd_nxt_ = snd_una_;
  if (state_.variant == Variant::sack) state_.scoreboard.reset(snd_una_);
  pipe_.reset();
}

}  // namespace multcp
