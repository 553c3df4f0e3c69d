#pragma once

// Steady-state saw-tooth model of a weighted congestion controller.

#include <cstdint>

namespace multcp {

struct ModelParams {
  double n = 1.0;               // weight
  double p = 0.01;              // per-packet loss probability
  double packet_bytes = 1000.0;
  double rtt = 0.1;             // seconds

  /// Throws std::invalid_argument unless n >= 1, 0 < p < 1, and the packet
  /// size and RTT are positive.
  void validate() const;
};

/// Segments sent during one loss cycle peaking at window `w`.
double cycle_data(double w, double n);

/// Loss probability that sustains a peak window `w`. Throws
/// std::domain_error when the result is not below one.
double loss_rate_for_window(double w, double n);
double window_for_loss_rate(double p, double n);

/// Bytes per second.
double multcp_throughput(double n, double p, double packet_bytes, double rtt);
double multcp_throughput(const ModelParams& params);
double single_tcp_throughput(double p, double packet_bytes, double rtt);

/// Throughput of a weight-n flow relative to a standard flow at equal loss.
double gain_ratio(double n);

struct OracleResult {
  double throughput = 0.0;  // bytes per second
  std::int64_t cycles = 0;
  double rounds = 0.0;
  double mean_window = 0.0;
};

/// Round-by-round idealized simulation: each round sends the current window,
/// every packet is lost independently with probability p, a lossy round
/// scales the window by (n - 1/2)/n and a loss-free one adds n. Further
/// losses within a lossy round are absorbed. The first 100 cycles are
/// discarded as warmup before `cycles` measured ones.
OracleResult sawtooth_oracle(const ModelParams& params, std::int64_t cycles, std::uint64_t seed);

}  // namespace multcp
