#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "multcp/congestion.hpp"
#include "multcp/red_queue.hpp"
#include "multcp/sim_time.hpp"

namespace multcp {

enum class QueueKind { droptail, red };

struct LinkSpec {
  std::string name;
  std::string from;
  std::string to;
  double bandwidth_bps = 0.0;
  SimTime delay;
  QueueKind queue = QueueKind::droptail;
  std::size_t limit = 0;  // drop-tail only; 0 is unbounded
};

struct FlowSpec {
  Variant variant = Variant::reno;
  double n = 1.0;
  std::vector<std::string> route;  // link names, sender to receiver
  std::optional<SimTime> start;    // drawn from the start jitter when absent
  std::optional<SimTime> stop;
  std::optional<std::int64_t> segments;  // unbounded bulk transfer when absent
  double initial_ssthresh = 64.0;
  std::optional<std::uint64_t> receive_buffer;  // bytes
  bool trace = false;
};

/// A complete simulation input. Acks return over mirror links with
/// unbounded FIFO queues, so only the forward path can drop.
struct Scenario {
  std::vector<LinkSpec> links;
  std::vector<FlowSpec> flows;
  RedParams red;
  SimTime duration = SimTime::from_seconds(70.0);
  SimTime warmup = SimTime::from_seconds(10.0);
  std::uint64_t seed = 1;
  std::uint32_t packet_size = 1000;  // bytes per segment
  SimTime start_jitter = SimTime::from_seconds(1.0);

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
  std::size_t link_index(const std::string& name) const;
  /// Round-trip propagation plus one data and one ack serialization.
  SimTime base_rtt(std::size_t flow) const;
  /// Smallest link bandwidth on the flow's route.
  double path_bandwidth(std::size_t flow) const;
};

struct DumbbellParams {
  double bottleneck_bps = 10e6;
  SimTime bottleneck_delay = SimTime::from_seconds(0.020);
  double access_bps = 100e6;
  SimTime access_delay_min = SimTime::from_seconds(0.002);
  SimTime access_delay_max = SimTime::from_seconds(0.040);
  std::size_t access_limit = 1000;
  QueueKind bottleneck_queue = QueueKind::red;
  std::size_t bottleneck_limit = 0;  // drop-tail bottleneck only
  Variant variant = Variant::reno;
  double n = 1.0;
};

/// One shared bottleneck; flow i enters through its own access link whose
/// delay is spread linearly over [access_delay_min, access_delay_max].
/// Throws std::invalid_argument when n_flows < 2.
Scenario build_dumbbell(std::size_t n_flows, const DumbbellParams& params = {});

/// YAML scenario loading; errors carry the offending key.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::string& path);

}  // namespace multcp
