#pragma once

// Random Early Detection in packet mode.

#include <deque>
#include <optional>

#include "multcp/engine.hpp"

namespace multcp {

struct RedParams {
  double thresh = 5.0;      // packets
  double maxthresh = 15.0;  // packets
  std::size_t limit = 20;   // packets
  double ewma_weight = 0.002;
  double max_drop_prob = 0.1;

  /// Throws std::invalid_argument unless 0 < thresh < maxthresh <= limit and
  /// both weights lie in (0, 1].
  void validate() const;
};

struct RedQueueState {
  std::deque<Packet> queue;
  double avg = 0.0;
  int count = -1;  // packets since the last drop; -1 below thresh
  std::optional<SimTime> idle_start = SimTime{};
};

/// The drop probability applied to the current arrival, given the average
/// queue and the count of packets admitted since the last drop.
double red_drop_probability(const RedParams& params, double avg, int count);

class RedQueue final : public QueueDiscipline {
 public:
  /// `typical_transmission` is the serialization time of a typical packet on
  /// the outgoing link; it scales the average decay across idle periods.
  RedQueue(RedParams params, SimTime typical_transmission, Rng& rng);

  EnqueueResult enqueue(Packet packet, SimTime now) override;
  std::optional<Packet> dequeue(SimTime now) override;
  std::size_t length() const override { return state_.queue.size(); }

  const RedParams& params() const { return params_; }
  const RedQueueState& state() const { return state_; }
  std::uint64_t early_drops() const { return early_drops_; }
  std::uint64_t forced_drops() const { return forced_drops_; }

 private:
  void update_average(SimTime now);

  RedParams params_;
  SimTime typical_transmission_;
  Rng& rng_;
  RedQueueState state_;
  std::uint64_t early_drops_ = 0;
  std::uint64_t forced_drops_ = 0;
};

}  // namespace multcp
