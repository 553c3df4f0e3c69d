#pragma once

// Discrete-event core: clock, event queue, links and packet delivery.

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <vector>

#include "multcp/sim_time.hpp"

namespace multcp {

using FlowId = std::uint32_t;
using LinkId = std::uint32_t;
/// Segment-granular sequence number. One packet carries one segment.
using SeqNum = std::int64_t;

inline constexpr std::size_t kMaxSackBlocks = 3;
inline constexpr std::uint32_t kUnlimitedWindow = 0xffffffffu;
inline constexpr std::uint32_t kAckBytes = 40;

/// Half-open segment range [start, end) reported by a selective ack.
struct SackBlock {
  SeqNum start = 0;
  SeqNum end = 0;
  friend bool operator==(const SackBlock&, const SackBlock&) = default;
};

struct AckInfo {
  SeqNum cumulative = 0;  // next segment expected by the receiver
  std::array<SackBlock, kMaxSackBlocks> blocks{};
  std::uint8_t block_count = 0;
  std::uint32_t advertised_window = kUnlimitedWindow;  // segments

  std::span<const SackBlock> sack() const { return {blocks.data(), block_count}; }
};

struct Packet {
  FlowId flow = 0;
  SeqNum seq = 0;
  std::uint32_t size = 0;  // bytes
  bool is_ack = false;
  bool retransmission = false;
  AckInfo ack;
  // Data: time the segment left the sender. Ack: echo of that time.
  SimTime send_time;
  const std::vector<LinkId>* route = nullptr;
  std::uint32_t hop = 0;
};

enum class EventKind : std::uint8_t { packet_arrival, packet_departure, timer_expiry, flow_start, flow_stop };

struct Event {
  SimTime time;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::timer_expiry;
  std::function<void()> action;
};

/// Stream of uniform variates. Portable across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

class Simulator {
 public:
  explicit Simulator(std::uint64_t seed) : rng_(seed) {}
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  SimTime now() const { return now_; }
  Rng& rng() { return rng_; }

  /// Aborts when `at` precedes the current clock.
  void schedule(SimTime at, EventKind kind, std::function<void()> action);
  void schedule_in(SimTime delay, EventKind kind, std::function<void()> action) {
    schedule(now_ + delay, kind, std::move(action));
  }

  /// Dispatches every event with time <= end in (time, sequence) order and
  /// then advances the clock to `end` (unless `end` is SimTime::max()).
  /// Returns the number of events dispatched.
  std::uint64_t run_until(SimTime end);

  std::size_t pending() const { return queue_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.sequence > b.sequence;
    }
  };

  SimTime now_;
  std::uint64_t next_sequence_ = 0;
  std::uint64_t dispatched_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  Rng rng_;
};

enum class EnqueueResult { admitted, dropped };

class QueueDiscipline {
 public:
  virtual ~QueueDiscipline() = default;
  virtual EnqueueResult enqueue(Packet packet, SimTime now) = 0;
  virtual std::optional<Packet> dequeue(SimTime now) = 0;
  virtual std::size_t length() const = 0;
};

/// FIFO with a packet limit. A limit of 0 means unbounded.
class DropTailQueue final : public QueueDiscipline {
 public:
  explicit DropTailQueue(std::size_t limit = 0) : limit_(limit) {}
  EnqueueResult enqueue(Packet packet, SimTime now) override;
  std::optional<Packet> dequeue(SimTime now) override;
  std::size_t length() const override { return queue_.size(); }

 private:
  std::size_t limit_;
  std::deque<Packet> queue_;
};

struct LinkConfig {
  double bandwidth_bps = 0.0;
  SimTime delay;
};

struct LinkStats {
  std::uint64_t packets_sent = 0;
  std::uint64_t bits_sent = 0;
  std::uint64_t packets_dropped = 0;
  SimTime busy_time;
};

class Link {
 public:
  /// Throws std::invalid_argument unless bandwidth > 0 and delay >= 0.
  Link(LinkConfig config, std::unique_ptr<QueueDiscipline> queue);

  const LinkConfig& config() const { return config_; }
  SimTime serialization_time(std::uint32_t bytes) const;
  QueueDiscipline& queue() { return *queue_; }
  const QueueDiscipline& queue() const { return *queue_; }
  const LinkStats& stats() const { return stats_; }

 private:
  friend class Network;
  LinkConfig config_;
  std::unique_ptr<QueueDiscipline> queue_;
  bool busy_ = false;
  LinkStats stats_;
};

/// Static-route packet forwarding over a set of unidirectional links.
class Network {
 public:
  using DeliverFn = std::function<void(Packet&&)>;
  using DropFn = std::function<void(const Packet&, LinkId)>;

  explicit Network(Simulator& sim) : sim_(sim) {}

  LinkId add_link(LinkConfig config, std::unique_ptr<QueueDiscipline> queue);
  Link& link(LinkId id) { return links_.at(id); }
  const Link& link(LinkId id) const { return links_.at(id); }
  std::size_t link_count() const { return links_.size(); }

  void on_deliver(DeliverFn fn) { deliver_ = std::move(fn); }
  void on_drop(DropFn fn) { drop_ = std::move(fn); }

  /// Injects a packet at the first hop of its route.
  void send(Packet packet);
  /// Offers a packet to a link's queue; the link serializes its queue one
  /// packet at a time and schedules arrival after serialization + delay.
  void transmit(LinkId id, Packet packet);

 private:
  void start_transmission(LinkId id);
  void arrive(Packet&& packet);

  Simulator& sim_;
  std::vector<Link> links_;
  DeliverFn deliver_;
  DropFn drop_;
};

}  // namespace multcp
