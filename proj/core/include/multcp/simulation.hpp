#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "multcp/congestion.hpp"
#include "multcp/engine.hpp"
#include "multcp/scenario.hpp"
#include "multcp/trace.hpp"

namespace multcp {

struct FlowStats {
  FlowId id = 0;
  std::uint64_t packets_sent = 0;  // including retransmissions
  std::uint64_t retransmissions = 0;
  std::uint64_t packets_received = 0;  // arrivals at the receiver, duplicates included
  std::uint64_t packets_dropped = 0;
  std::uint64_t in_network = 0;
  std::uint64_t bytes_delivered = 0;  // unique, in-order
  std::uint64_t bytes_delivered_at_warmup = 0;
  std::uint64_t fast_retransmits = 0;
  std::uint64_t timeouts = 0;
  std::optional<SimTime> start_time;
  std::optional<SimTime> completion_time;
};

struct SimulationStats {
  SimTime end;
  SimTime warmup;
  std::vector<FlowStats> flows;
  std::vector<LinkStats> links;
  std::uint64_t events = 0;

  /// Bytes per second delivered to the flow's receiver between warmup and end.
  double throughput(std::size_t flow) const;
};

/// One deterministic simulation instance built from a scenario. Strictly
/// single-threaded; separate instances share nothing.
class Simulation {
 public:
  explicit Simulation(const Scenario& scenario);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  SimulationStats run_until(SimTime end);
  SimulationStats run() { return run_until(scenario_.duration); }

  SimulationStats stats() const;
  const std::vector<TraceRecord>& trace() const { return trace_; }
  const Scenario& scenario() const { return scenario_; }
  Simulator& simulator() { return sim_; }
  Network& network() { return net_; }
  const TcpSender& sender(FlowId flow) const;

  /// Changes the receiver's buffer; the sender sees the new window on the
  /// next ack.
  void set_receive_buffer(FlowId flow, std::optional<std::uint64_t> bytes);

 private:
  class SenderAgent;
  class ReceiverAgent;
  friend class SenderAgent;
  friend class ReceiverAgent;

  Scenario scenario_;
  Simulator sim_;
  Network net_;
  std::vector<std::vector<LinkId>> forward_routes_;
  std::vector<std::vector<LinkId>> reverse_routes_;
  std::vector<FlowStats> flow_stats_;
  std::vector<std::unique_ptr<SenderAgent>> senders_;
  std::vector<std::unique_ptr<ReceiverAgent>> receivers_;
  std::vector<TraceRecord> trace_;
};

}  // namespace multcp
