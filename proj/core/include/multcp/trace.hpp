#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "multcp/engine.hpp"

namespace multcp {

enum class TraceEvent { data_sent, ack_received, loss_detected, timeout };

std::string_view to_string(TraceEvent e);
TraceEvent parse_trace_event(std::string_view name);

/// One per-flow observation. Simulator traces carry cwnd values; wire-only
/// traces leave them empty.
struct TraceRecord {
  SimTime time;
  FlowId flow = 0;
  TraceEvent event = TraceEvent::data_sent;
  std::optional<double> cwnd_before;
  std::optional<double> cwnd_after;
  std::optional<SeqNum> seq;
  std::optional<SeqNum> ack;
};

inline constexpr std::string_view kTraceCsvHeader = "time_ns,flow_id,event,cwnd_before,cwnd_after,seq,ack";

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& records);
/// Throws std::runtime_error with the line number on malformed input.
std::vector<TraceRecord> read_trace_csv(std::istream& in);

}  // namespace multcp
