#include "multcp/engine.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace multcp {

void Simulator::schedule(SimTime at, EventKind kind, std::function<void()> action) {
  if (at < now_) {
    std::fprintf(stderr, "multcp: event scheduled in the past (%lld ns < %lld ns)\n",
                 static_cast<long long>(at.ns()), static_cast<long long>(now_.ns()));
    std::abort();
  }
  queue_.push(Event{at, next_sequence_++, kind, std::move(action)});
}

std::uint64_t Simulator::run_until(SimTime end) {
  std::uint64_t count = 0;
  while (!queue_.empty() && queue_.top().time <= end) {
    // priority_queue::top is const; the action is moved out before pop.
    Event event = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    now_ = event.time;
    event.action();
    ++count;
  }
  if (end > now_ && end != SimTime::max()) now_ = end;
  dispatched_ += count;
  return count;
}

EnqueueResult DropTailQueue::enqueue(Packet packet, SimTime) {
  if (limit_ != 0 && queue_.size() >= limit_) return EnqueueResult::dropped;
  queue_.push_back(std::move(packet));
  return EnqueueResult::admitted;
}

std::optional<Packet> DropTailQueue::dequeue(SimTime) {
  if (queue_.empty()) return std::nullopt;
  Packet p = std::move(queue_.front());
  queue_.pop_front();
  return p;
}

Link::Link(LinkConfig config, std::unique_ptr<QueueDiscipline> queue)
    : config_(config), queue_(std::move(queue)) {
  if (!(config_.bandwidth_bps > 0.0)) throw std::invalid_argument("link bandwidth must be positive");
  if (config_.delay < SimTime{}) throw std::invalid_argument("link delay must be non-negative");
  if (!queue_) queue_ = std::make_unique<DropTailQueue>();
}

SimTime Link::serialization_time(std::uint32_t bytes) const {
  return SimTime::from_ns(std::llround(static_cast<double>(bytes) * 8.0 * 1e9 / config_.bandwidth_bps));
}

LinkId Network::add_link(LinkConfig config, std::unique_ptr<QueueDiscipline> queue) {
  links_.emplace_back(config, std::move(queue));
  return static_cast<LinkId>(links_.size() - 1);
}

void Network::send(Packet packet) {
  packet.hop = 0;
  transmit((*packet.route)[0], std::move(packet));
}

void Network::transmit(LinkId id, Packet packet) {
  Link& l = links_.at(id);
  if (l.queue_->enqueue(packet, sim_.now()) == EnqueueResult::dropped) {
    ++l.stats_.packets_dropped;
    if (drop_) drop_(packet, id);
    return;
  }
  if (!l.busy_) start_transmission(id);
}

void Network::start_transmission(LinkId id) {
  Link& l = links_[id];
  std::optional<Packet> next = l.queue_->dequeue(sim_.now());
  if (!next) {
    l.busy_ = false;
    return;
  }
  l.busy_ = true;
  const SimTime tx = l.serialization_time(next->size);
  l.stats_.packets_sent += 1;
  l.stats_.bits_sent += static_cast<std::uint64_t>(next->size) * 8;
  l.stats_.busy_time += tx;
  const SimTime arrival = sim_.now() + tx + l.config_.delay;
  sim_.schedule_in(tx, EventKind::packet_departure, [this, id] { start_transmission(id); });
  sim_.schedule(arrival, EventKind::packet_arrival,
                [this, p = std::move(*next)]() mutable { arrive(std::move(p)); });
}

void Network::arrive(Packet&& packet) {
  ++packet.hop;
  if (packet.hop < packet.route->size()) {
    transmit((*packet.route)[packet.hop], std::move(packet));
    return;
  }
  if (deliver_) deliver_(std::move(packet));
}

}  // namespace multcp
