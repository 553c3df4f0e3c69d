#pragma once

// Trace-based estimation of a flow's weight, declaration checks and billing.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "multcp/trace.hpp"

namespace multcp {

struct Declaration {
  FlowId flow = 0;
  double declared_n = 1.0;
  SimTime start;
  SimTime end;

  void validate() const;
};

/// Inverts the congestion-avoidance decrease cwnd' = cwnd (N - 1/2) / N.
double estimate_n_from_decrease(double ratio);
/// Inverts the slow-start crossover window.
double estimate_n_from_crossover(double window);

/// Fewest window reductions for the steady-state estimate to be used.
inline constexpr std::size_t kMinDecreaseSamples = 5;

struct TraceEstimate {
  std::optional<double> n;  // headline; absent when indeterminate
  std::optional<double> steady_state_n;
  std::size_t decrease_samples = 0;
  std::optional<double> slow_start_n;
  std::size_t slow_start_samples = 0;
  /// Window sizes came from in-flight counts rather than cwnd records.
  bool reconstructed = false;

  bool indeterminate() const { return !n.has_value(); }
  std::string method() const;
};

/// Records must belong to a single flow (std::invalid_argument otherwise).
/// The steady-state estimate is the median of per-reduction estimates,
/// ignoring timeouts; the slow-start estimate is the median over observed
/// switches from +2 to +1 segments per ack. Traces without cwnd values fall
/// back to window sizes reconstructed from in-flight segment counts.
TraceEstimate analyze_trace(const std::vector<TraceRecord>& trace);

/// Records of `flow` with time in [start, end].
std::vector<TraceRecord> select_records(const std::vector<TraceRecord>& trace, FlowId flow,
                                        std::optional<SimTime> start = std::nullopt,
                                        std::optional<SimTime> end = std::nullopt);

enum class ComplianceStatus { compliant, violation, unverifiable };

std::string to_string(ComplianceStatus status);

struct Compliance {
  ComplianceStatus status = ComplianceStatus::unverifiable;
  std::optional<double> observed_n;
};

inline constexpr double kDefaultTolerance = 0.10;

/// Only excess aggressiveness is a violation: observed > declared (1 + tolerance).
Compliance verify_declaration(const std::vector<TraceRecord>& trace, const Declaration& decl,
                              double tolerance = kDefaultTolerance);

/// Integral of the summed declared weights over the period, in weight-seconds.
/// Declarations are clipped to the period. Overlapping declarations for one
/// flow are rejected with std::invalid_argument.
double bill(const std::vector<Declaration>& declarations, SimTime period_start, SimTime period_end);

}  // namespace multcp
