#include "multcp/policing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace multcp {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

bool equals(double a, double b) { return std::abs(a - b) < 1e-9; }

// Per-ack window growth in slow start and per-episode window reductions.
struct Evidence {
  std::vector<double> crossovers;
  std::vector<double> ratios;
};

void add_growth(Evidence& ev, std::optional<std::pair<double, double>>& prev, double before, double step) {
  if (prev && equals(prev->second, 2.0) && equals(step, 1.0) && equals(before, prev->first + 2.0)) {
    ev.crossovers.push_back(prev->first);
  }
  prev = std::make_pair(before, step);
}

Evidence from_cwnd_records(const std::vector<TraceRecord>& trace) {
  Evidence ev;
  std::optional<std::pair<double, double>> prev;
  for (const TraceRecord& r : trace) {
    if (!r.cwnd_before || !r.cwnd_after) continue;
    switch (r.event) {
      case TraceEvent::ack_received: {
        const double step = *r.cwnd_after - *r.cwnd_before;
        if (step > 0.0) add_growth(ev, prev, *r.cwnd_before, step);
        break;
      }
      case TraceEvent::loss_detected: {
        const double ratio = *r.cwnd_after / *r.cwnd_before;
        if (ratio > 0.0 && ratio < 1.0) ev.ratios.push_back(ratio);
        prev.reset();
        break;
      }
      case TraceEvent::timeout:
        prev.reset();
        break;
      case TraceEvent::data_sent:
        break;
    }
  }
  return ev;
}

// Wire-only traces. Slow-start growth is read from the number of segments
// released by each one-segment ack (3 while adding two, 2 while adding one).
// Around each fast retransmission the window is taken as the number of
// segments sent in one median RTT before and after it.
Evidence from_wire(const std::vector<TraceRecord>& trace) {
  Evidence ev;
  SeqNum snd_max = 0;
  SeqNum snd_una = 0;
  int dupacks = 0;
  bool in_recovery = false;
  SeqNum recovery_point = 0;

  std::map<SeqNum, SimTime> first_sent;
  std::vector<double> rtts;
  std::vector<SimTime> sends;
  std::vector<SimTime> episodes;

  std::optional<std::pair<double, double>> prev;
  double ack_flight = -1.0;  // flight just before a one-segment ack, or -1
  int released = 0;
  auto close_growth = [&] {
    if (ack_flight >= 0.0 && (released == 2 || released == 3)) add_growth(ev, prev, ack_flight, released - 1.0);
    ack_flight = -1.0;
    released = 0;
  };

  for (const TraceRecord& r : trace) {
    if (r.event == TraceEvent::data_sent && r.seq) {
      const SeqNum seq = *r.seq;
      sends.push_back(r.time);
      if (seq >= snd_max) {
        first_sent.emplace(seq, r.time);
        snd_max = seq + 1;
        if (ack_flight >= 0.0) ++released;
      } else if (!in_recovery) {
        ack_flight = -1.0;
        close_growth();
        prev.reset();
        in_recovery = true;
        recovery_point = snd_max;
        if (dupacks > 0) episodes.push_back(r.time);
      }
    } else if (r.event == TraceEvent::ack_received && r.ack) {
      close_growth();
      const SeqNum ack = *r.ack;
      if (ack > snd_una) {
        auto sent = first_sent.find(ack - 1);
        if (sent != first_sent.end()) rtts.push_back((r.time - sent->second).seconds());
        first_sent.erase(first_sent.begin(), first_sent.lower_bound(ack));
        if (ack == snd_una + 1 && !in_recovery) ack_flight = static_cast<double>(snd_max - snd_una);
        snd_una = ack;
        dupacks = 0;
        if (in_recovery && snd_una >= recovery_point) in_recovery = false;
      } else if (ack == snd_una) {
        ++dupacks;
      }
    }
  }
  close_growth();

  if (rtts.empty()) return ev;
  const SimTime rtt = SimTime::from_seconds(median(rtts));
  auto sent_between = [&](SimTime from, SimTime to) {
    return static_cast<double>(std::lower_bound(sends.begin(), sends.end(), to) -
                               std::lower_bound(sends.begin(), sends.end(), from));
  };
  for (SimTime t : episodes) {
    if (t < sends.front() + rtt || sends.back() < t + rtt) continue;
    const double before = sent_between(t - rtt, t);
    const double after = sent_between(t, t + rtt);
    if (before > 0.0 && after > 0.0 && after < before) ev.ratios.push_back(after / before);
  }
  return ev;
}

}  // namespace

void Declaration::validate() const {
  if (!(declared_n >= 1.0)) throw std::invalid_argument("declared N must be >= 1");
  if (!(start < end)) throw std::invalid_argument("declaration interval must have start < end");
}

double estimate_n_from_decrease(double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("decrease ratio must lie in (0, 1), got " + std::to_string(ratio));
  }
  return 0.5 / (1.0 - ratio);
}

double estimate_n_from_crossover(double window) {
  if (!(window >= 1.0)) throw std::invalid_argument("crossover window must be >= 1");
  return std::pow(window, std::log(1.5) / std::log(3.0));
}

std::string TraceEstimate::method() const {
  if (!n) return "indeterminate";
  if (steady_state_n && decrease_samples >= kMinDecreaseSamples) return "decrease";
  return "slow-start";
}

TraceEstimate analyze_trace(const std::vector<TraceRecord>& trace) {
  for (const TraceRecord& r : trace) {
    if (r.flow != trace.front().flow) throw std::invalid_argument("trace mixes several flows");
  }
  const bool has_cwnd = std::any_of(trace.begin(), trace.end(), [](const TraceRecord& r) {
    return r.cwnd_before.has_value() && r.cwnd_after.has_value();
  });

  TraceEstimate out;
  out.reconstructed = !has_cwnd;
  const Evidence ev = has_cwnd ? from_cwnd_records(trace) : from_wire(trace);

  std::vector<double> steady;
  for (double r : ev.ratios) steady.push_back(estimate_n_from_decrease(r));
  out.decrease_samples = steady.size();
  if (!steady.empty()) out.steady_state_n = median(steady);

  std::vector<double> slow;
  for (double w : ev.crossovers) slow.push_back(estimate_n_from_crossover(w));
  out.slow_start_samples = slow.size();
  if (!slow.empty()) out.slow_start_n = median(slow);

  if (out.decrease_samples >= kMinDecreaseSamples) {
    out.n = out.steady_state_n;
  } else if (out.slow_start_n) {
    out.n = out.slow_start_n;
  }
  return out;
}

std::vector<TraceRecord> select_records(const std::vector<TraceRecord>& trace, FlowId flow,
                                        std::optional<SimTime> start, std::optional<SimTime> end) {
  std::vector<TraceRecord> out;
  for (const TraceRecord& r : trace) {
    if (r.flow != flow) continue;
    if (start && r.time < *start) continue;
    if (end && r.time > *end) continue;
    out.push_back(r);
  }
  return out;
}

std::string to_string(ComplianceStatus status) {
  switch (status) {
    case ComplianceStatus::compliant: return "compliant";
    case ComplianceStatus::violation: return "violation";
    case ComplianceStatus::unverifiable: return "unverifiable";
  }
  return "unknown";
}

Compliance verify_declaration(const std::vector<TraceRecord>& trace, const Declaration& decl, double tolerance) {
  decl.validate();
  if (!(tolerance >= 0.0)) throw std::invalid_argument("tolerance must be non-negative");
  const std::vector<TraceRecord> records = select_records(trace, decl.flow, decl.start, decl.end);
  Compliance out;
  if (records.empty()) return out;
  const TraceEstimate est = analyze_trace(records);
  if (est.indeterminate()) return out;
  out.observed_n = est.n;
  out.status = *est.n > decl.declared_n * (1.0 + tolerance) ? ComplianceStatus::violation
                                                             : ComplianceStatus::compliant;
  return out;
}

double bill(const std::vector<Declaration>& declarations, SimTime period_start, SimTime period_end) {
  if (period_end < period_start) throw std::invalid_argument("billing period ends before it starts");
  std::map<FlowId, std::vector<const Declaration*>> by_flow;
  for (const Declaration& d : declarations) {
    d.validate();
    by_flow[d.flow].push_back(&d);
  }
  for (auto& [flow, list] : by_flow) {
    std::sort(list.begin(), list.end(), [](const Declaration* a, const Declaration* b) { return a->start < b->start; });
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i]->start < list[i - 1]->end) {
        throw std::invalid_argument("overlapping declarations for flow " + std::to_string(flow));
      }
    }
  }
  double total = 0.0;
  for (const Declaration& d : declarations) {
    const SimTime from = std::max(d.start, period_start);
    const SimTime to = std::min(d.end, period_end);
    if (from < to) total += d.declared_n * (to - from).seconds();
  }
  return total;
}

}  // namespace multcp
