#include "multcp/simulation.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace multcp {

double SimulationStats::throughput(std::size_t flow) const {
  const FlowStats& f = flows.at(flow);
  if (end <= warmup) return 0.0;
  const double bytes = static_cast<double>(f.bytes_delivered - f.bytes_delivered_at_warmup);
  return bytes / (end - warmup).seconds();
}

// ---------------------------------------------------------------------------

class Simulation::SenderAgent {
 public:
  SenderAgent(Simulation& owner, FlowId id, const FlowSpec& spec)
      : owner_(owner),
        id_(id),
        traced_(spec.trace),
        logic_(TcpSender::Config{spec.variant, spec.n, spec.initial_ssthresh, spec.segments}) {}

  const TcpSender& logic() const { return logic_; }

  void start() {
    started_ = true;
    owner_.flow_stats_[id_].start_time = owner_.sim_.now();
    send_available();
  }

  void stop() { logic_.stop_new_data(); }

  void on_ack(const Packet& ack) {
    const SimTime now = owner_.sim_.now();
    const AckOutcome out = logic_.on_ack(ack.ack, now - ack.send_time);
    FlowStats& stats = owner_.flow_stats_[id_];

    if (traced_)
      record(TraceEvent::ack_received, out.cwnd_before, out.cwnd_after, std::nullopt, ack.ack.cumulative);
    if (out.decreased_cwnd) {
      ++stats.fast_retransmits;
      if (traced_)
        record(TraceEvent::loss_detected, out.cwnd_before, *out.decreased_cwnd, logic_.snd_una(),
               ack.ack.cumulative);
    }
    if (out.retransmit) transmit(SendAction{*out.retransmit, true});

    switch (out.timer) {
      case TimerAction::restart: restart_timer(); break;
      case TimerAction::stop: timer_armed_ = false; break;
      case TimerAction::none: break;
    }
    send_available();
    if (logic_.finished() && !stats.completion_time) stats.completion_time = now;
  }

 private:
  void send_available() {
    if (!started_) return;
    while (auto action = logic_.next_send()) transmit(*action);
  }

  void transmit(SendAction action) {
    Packet p;
    p.flow = id_;
    p.seq = action.seq;
    p.size = owner_.scenario_.packet_size;
    p.retransmission = action.retransmission;
    p.send_time = owner_.sim_.now();
    p.route = &owner_.forward_routes_[id_];
    FlowStats& stats = owner_.flow_stats_[id_];
    ++stats.packets_sent;
    ++stats.in_network;
    if (action.retransmission) ++stats.retransmissions;
    if (traced_) {
      const double w = logic_.state().cwnd;
      record(TraceEvent::data_sent, w, w, action.seq, logic_.snd_una());
    }
    owner_.net_.send(std::move(p));
    if (!timer_armed_) restart_timer();
  }

  // One live timer event at a time; restarts that push the deadline later
  // let the live event re-arm itself when it fires early.
  void restart_timer() {
    const SimTime deadline = owner_.sim_.now() + logic_.state().rto();
    timer_armed_ = true;
    timer_deadline_ = deadline;
    if (timer_live_ && timer_live_at_ <= deadline) return;
    schedule_timer(deadline);
  }

  void schedule_timer(SimTime at) {
    const std::uint64_t gen = ++timer_generation_;
    timer_live_ = true;
    timer_live_at_ = at;
    owner_.sim_.schedule(at, EventKind::timer_expiry, [this, gen] { on_timer(gen); });
  }

  void on_timer(std::uint64_t gen) {
    if (gen != timer_generation_) return;
    timer_live_ = false;
    if (!timer_armed_) return;
    if (owner_.sim_.now() < timer_deadline_) {
      schedule_timer(timer_deadline_);
      return;
    }
    timer_armed_ = false;
    if (!logic_.has_outstanding()) return;

    ++owner_.flow_stats_[id_].timeouts;
    const double before = logic_.state().cwnd;
    logic_.on_timeout();
    if (traced_) record(TraceEvent::timeout, before, logic_.state().cwnd, logic_.snd_una(), logic_.snd_una());
    send_available();
  }

  void record(TraceEvent e, double before, double after, std::optional<SeqNum> seq, std::optional<SeqNum> ack) {
    owner_.trace_.push_back(TraceRecord{owner_.sim_.now(), id_, e, before, after, seq, ack});
  }

  Simulation& owner_;
  FlowId id_;
  bool traced_;
  bool started_ = false;
  TcpSender logic_;
  bool timer_armed_ = false;
  SimTime timer_deadline_;
  bool timer_live_ = false;
  SimTime timer_live_at_;
  std::uint64_t timer_generation_ = 0;
};

// ---------------------------------------------------------------------------

class Simulation::ReceiverAgent {
 public:
  ReceiverAgent(Simulation& owner, FlowId id, const FlowSpec& spec)
      : owner_(owner), id_(id), sack_(spec.variant == Variant::sack) {
    set_buffer(spec.receive_buffer);
  }

  void set_buffer(std::optional<std::uint64_t> bytes) {
    if (!bytes) {
      window_ = kUnlimitedWindow;
      return;
    }
    const std::uint64_t segments = *bytes / owner_.scenario_.packet_size;
    window_ = static_cast<std::uint32_t>(std::min<std::uint64_t>(segments, kUnlimitedWindow - 1));
  }

  void on_data(const Packet& data) {
    FlowStats& stats = owner_.flow_stats_[id_];
    ++stats.packets_received;
    --stats.in_network;

    if (data.seq == next_expected_) {
      ++next_expected_;
      stats.bytes_delivered += data.size;
      auto it = out_of_order_.begin();
      while (it != out_of_order_.end() && it->first == next_expected_) {
        ++next_expected_;
        stats.bytes_delivered += data.size;
        it = out_of_order_.erase(it);
      }
    } else if (data.seq > next_expected_) {
      out_of_order_.emplace(data.seq, ++arrivals_);
    }

    Packet ack;
    ack.flow = id_;
    ack.is_ack = true;
    ack.size = kAckBytes;
    ack.send_time = data.send_time;
    ack.route = &owner_.reverse_routes_[id_];
    ack.ack.cumulative = next_expected_;
    ack.ack.advertised_window = window_;
    if (sack_) fill_sack_blocks(ack.ack);
    owner_.net_.send(std::move(ack));
  }

 private:
  // Contiguous out-of-order runs, most recently updated first.
  void fill_sack_blocks(AckInfo& info) const {
    struct Run {
      SackBlock block;
      std::uint64_t recency;
    };
    std::vector<Run> runs;
    for (const auto& [seq, order] : out_of_order_) {
      if (!runs.empty() && runs.back().block.end == seq) {
        runs.back().block.end = seq + 1;
        runs.back().recency = std::max(runs.back().recency, order);
      } else {
        runs.push_back(Run{SackBlock{seq, seq + 1}, order});
      }
    }
    std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.recency > b.recency; });
    info.block_count = static_cast<std::uint8_t>(std::min(runs.size(), kMaxSackBlocks));
    for (std::size_t i = 0; i < info.block_count; ++i) info.blocks[i] = runs[i].block;
  }

  Simulation& owner_;
  FlowId id_;
  bool sack_;
  std::uint32_t window_ = kUnlimitedWindow;
  SeqNum next_expected_ = 0;
  std::map<SeqNum, std::uint64_t> out_of_order_;
  std::uint64_t arrivals_ = 0;
};

// ---------------------------------------------------------------------------

Simulation::Simulation(const Scenario& scenario) : scenario_(scenario), sim_(scenario.seed), net_(sim_) {
  scenario_.validate();

  std::vector<LinkId> forward_ids;
  std::vector<LinkId> reverse_ids;
  for (const LinkSpec& spec : scenario_.links) {
    const LinkConfig config{spec.bandwidth_bps, spec.delay};
    std::unique_ptr<QueueDiscipline> queue;
    if (spec.queue == QueueKind::red) {
      const SimTime typical = SimTime::from_ns(
          std::llround(static_cast<double>(scenario_.packet_size) * 8.0 * 1e9 / spec.bandwidth_bps));
      queue = std::make_unique<RedQueue>(scenario_.red, typical, sim_.rng());
    } else {
      queue = std::make_unique<DropTailQueue>(spec.limit);
    }
    forward_ids.push_back(net_.add_link(config, std::move(queue)));
    reverse_ids.push_back(net_.add_link(config, std::make_unique<DropTailQueue>()));
  }

  const std::size_t n = scenario_.flows.size();
  forward_routes_.resize(n);
  reverse_routes_.resize(n);
  flow_stats_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FlowSpec& f = scenario_.flows[i];
    for (const std::string& name : f.route) forward_routes_[i].push_back(forward_ids[scenario_.link_index(name)]);
    for (auto it = f.route.rbegin(); it != f.route.rend(); ++it)
      reverse_routes_[i].push_back(reverse_ids[scenario_.link_index(*it)]);
    flow_stats_[i].id = static_cast<FlowId>(i);
    senders_.push_back(std::make_unique<SenderAgent>(*this, static_cast<FlowId>(i), f));
    receivers_.push_back(std::make_unique<ReceiverAgent>(*this, static_cast<FlowId>(i), f));
  }

  net_.on_deliver([this](Packet&& p) {
    if (p.is_ack)
      senders_[p.flow]->on_ack(p);
    else
      receivers_[p.flow]->on_data(p);
  });
  net_.on_drop([this](const Packet& p, LinkId) {
    if (p.is_ack) return;
    ++flow_stats_[p.flow].packets_dropped;
    --flow_stats_[p.flow].in_network;
  });

  // Start times are drawn in flow order before any other random choice.
  for (std::size_t i = 0; i < n; ++i) {
    const FlowSpec& f = scenario_.flows[i];
    SimTime start = f.start.value_or(SimTime::from_ns(
        static_cast<std::int64_t>(sim_.rng().uniform() * static_cast<double>(scenario_.start_jitter.ns()))));
    SenderAgent* agent = senders_[i].get();
    sim_.schedule(start, EventKind::flow_start, [agent] { agent->start(); });
    if (f.stop) sim_.schedule(*f.stop, EventKind::flow_stop, [agent] { agent->stop(); });
  }

  sim_.schedule(scenario_.warmup, EventKind::timer_expiry, [this] {
    for (FlowStats& s : flow_stats_) s.bytes_delivered_at_warmup = s.bytes_delivered;
  });
}

Simulation::~Simulation() = default;

SimulationStats Simulation::run_until(SimTime end) {
  sim_.run_until(end);
  return stats();
}

SimulationStats Simulation::stats() const {
  SimulationStats out;
  out.end = sim_.now();
  out.warmup = scenario_.warmup;
  out.flows = flow_stats_;
  out.events = sim_.dispatched();
  for (std::size_t i = 0; i < net_.link_count(); ++i) out.links.push_back(net_.link(static_cast<LinkId>(i)).stats());
  return out;
}

const TcpSender& Simulation::sender(FlowId flow) const { return senders_.at(flow)->logic(); }

void Simulation::set_receive_buffer(FlowId flow, std::optional<std::uint64_t> bytes) {
  receivers_.at(flow)->set_buffer(bytes);
}

}  // namespace multcp
