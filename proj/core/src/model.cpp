#include "multcp/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace multcp {

namespace {

void require_weight(double n) {
  if (!(n >= 1.0)) throw std::invalid_argument("weight N must be >= 1, got " + std::to_string(n));
}

void require_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("loss probability must lie in (0, 1), got " + std::to_string(p));
  }
}

constexpr std::int64_t kWarmupCycles = 100;

}  // namespace

void ModelParams::validate() const {
  require_weight(n);
  require_probability(p);
  if (!(packet_bytes > 0.0)) throw std::invalid_argument("packet size must be positive");
  if (!(rtt > 0.0)) throw std::invalid_argument("RTT must be positive");
}

double cycle_data(double w, double n) {
  require_weight(n);
  if (!(w > 0.0)) throw std::invalid_argument("window must be positive");
  return w * w / (2.0 * n * n) * (n - 0.25) / n;
}

double loss_rate_for_window(double w, double n) {
  const double p = 1.0 / cycle_data(w, n);
  if (!(p < 1.0)) {
    throw std::domain_error("window " + std::to_string(w) + " is too small for the model (p >= 1)");
  }
  return p;
}

double window_for_loss_rate(double p, double n) {
  require_weight(n);
  require_probability(p);
  return std::sqrt(2.0 * n * n * n / ((n - 0.25) * p));
}

double multcp_throughput(double n, double p, double packet_bytes, double rtt) {
  return multcp_throughput(ModelParams{n, p, packet_bytes, rtt});
}

double multcp_throughput(const ModelParams& params) {
  params.validate();
  const double n = params.n;
  return std::sqrt(2.0) * std::sqrt(n * (n - 0.25)) * params.packet_bytes /
         (params.rtt * std::sqrt(params.p));
}

double single_tcp_throughput(double p, double packet_bytes, double rtt) {
  return multcp_throughput(1.0, p, packet_bytes, rtt);
}

double gain_ratio(double n) {
  require_weight(n);
  return 2.0 / std::sqrt(3.0) * std::sqrt(n * (n - 0.25));
}

OracleResult sawtooth_oracle(const ModelParams& params, std::int64_t cycles, std::uint64_t seed) {
  params.validate();
  if (cycles < 100) throw std::invalid_argument("the oracle needs at least 100 cycles");

  std::mt19937_64 rng(seed);
  std::geometric_distribution<std::int64_t> until_loss(params.p);
  const double n = params.n;
  const double decrease = (n - 0.5) / n;

  double w = window_for_loss_rate(params.p, n);
  double budget = static_cast<double>(until_loss(rng));
  std::int64_t done = 0;
  double packets = 0.0;
  double rounds = 0.0;
  double window_sum = 0.0;

  while (done < kWarmupCycles + cycles) {
    const bool measuring = done >= kWarmupCycles;
    if (measuring) {
      packets += w;
      rounds += 1.0;
      window_sum += w;
    }
    if (budget < w) {
      w = std::max(1.0, w * decrease);
      budget = static_cast<double>(until_loss(rng));
      ++done;
    } else {
      budget -= w;
      w += n;
    }
  }

  OracleResult out;
  out.cycles = cycles;
  out.rounds = rounds;
  out.mean_window = window_sum / rounds;
  out.throughput = packets * params.packet_bytes / (rounds * params.rtt);
  return out;
}

}  // namespace multcp
