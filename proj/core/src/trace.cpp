#include "multcp/trace.hpp"

#include "csv.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace multcp {

std::string_view to_string(TraceEvent e) {
  switch (e) {
    case TraceEvent::data_sent: return "data-sent";
    case TraceEvent::ack_received: return "ack-received";
    case TraceEvent::loss_detected: return "loss-detected";
    case TraceEvent::timeout: return "timeout";
  }
  return "?";
}

TraceEvent parse_trace_event(std::string_view name) {
  if (name == "data-sent") return TraceEvent::data_sent;
  if (name == "ack-received") return TraceEvent::ack_received;
  if (name == "loss-detected") return TraceEvent::loss_detected;
  if (name == "timeout") return TraceEvent::timeout;
  throw std::invalid_argument("unknown trace event '" + std::string(name) + "'");
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& records) {
  out << kTraceCsvHeader << '\n';
  std::string line;
  for (const TraceRecord& r : records) {
    line = fmt::format("{},{},{},", r.time.ns(), r.flow, to_string(r.event));
    if (r.cwnd_before) line += fmt::format("{:.9g}", *r.cwnd_before);
    line += ',';
    if (r.cwnd_after) line += fmt::format("{:.9g}", *r.cwnd_after);
    line += ',';
    if (r.seq) line += fmt::format("{}", *r.seq);
    line += ',';
    if (r.ack) line += fmt::format("{}", *r.ack);
    out << line << '\n';
  }
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::vector<TraceRecord> records;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty() || text.starts_with('#')) continue;
    if (line_no == 1 && text.starts_with("time_ns")) continue;
    const std::string where = fmt::format("trace line {}", line_no);
    const auto f = csv::split(text, ',');
    if (f.size() != 7) throw std::runtime_error(where + ": expected 7 columns");
    TraceRecord r;
    r.time = SimTime::from_ns(csv::parse_integer<std::int64_t>(f[0], where));
    r.flow = csv::parse_integer<FlowId>(f[1], where);
    try {
      r.event = parse_trace_event(f[2]);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(fmt::format("{}: {}", where, e.what()));
    }
    if (!f[3].empty()) r.cwnd_before = csv::parse_double(f[3], where);
    if (!f[4].empty()) r.cwnd_after = csv::parse_double(f[4], where);
    if (!f[5].empty()) r.seq = csv::parse_integer<SeqNum>(f[5], where);
    if (!f[6].empty()) r.ack = csv::parse_integer<SeqNum>(f[6], where);
    records.push_back(r);
  }
  return records;
}

}  // namespace multcp
