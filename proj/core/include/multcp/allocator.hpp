#pragma once

// Price-proportional receive-buffer sharing for buffer-limited connections.

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace multcp {

using ConnectionId = std::uint64_t;

struct PricedConnection {
  ConnectionId id = 0;
  double price = 1.0;  // charge units per unit time
  double rtt = 0.1;    // seconds
};

struct BufferBudget {
  double total = 0.0;  // bytes
};

/// bandwidth/8 x mean RTT bytes.
BufferBudget compute_budget(double bottleneck_bps, double mean_rtt);

double price_weighted_mean_rtt(const std::vector<PricedConnection>& conns);

/// Buffers in bytes aligned with `conns`, whole segments each. Shares follow
/// B k_i / sum k; whole segments left after flooring go one each to the
/// largest fractional remainders (ties to the higher price, then lower id).
std::vector<std::uint64_t> allocate_buffers(const std::vector<PricedConnection>& conns, BufferBudget budget,
                                            std::uint32_t segment_size = 1000);

/// Bytes per second a window of `buffer` bytes allows over `rtt`.
double throughput_bound(double buffer, double rtt);

struct Join {
  PricedConnection connection;
};
struct Leave {
  ConnectionId id = 0;
};
struct Reprice {
  ConnectionId id = 0;
  double price = 1.0;
};
using RebalanceEvent = std::variant<Join, Leave, Reprice>;

struct BufferAssignment {
  ConnectionId id = 0;
  std::uint64_t bytes = 0;
};

struct BufferChange {
  ConnectionId id = 0;
  std::optional<std::uint64_t> before;  // absent for a joining connection
  std::optional<std::uint64_t> after;   // absent for a leaving connection
  /// A shrinking window closes only as packets arrive, so the new size takes
  /// effect gradually.
  bool shrinks() const { return before && after && *after < *before; }
};

struct RebalanceResult {
  std::vector<BufferAssignment> allocation;
  std::vector<BufferChange> changes;
};

/// Owns the set of priced connections and recomputes every buffer on each
/// event. With a bottleneck bandwidth the budget follows the price-weighted
/// mean RTT of the current connections; otherwise it stays fixed.
class Allocator {
 public:
  static Allocator with_budget(BufferBudget budget, std::uint32_t segment_size = 1000);
  static Allocator for_bottleneck(double bottleneck_bps, std::uint32_t segment_size = 1000);

  /// Throws std::invalid_argument for a duplicate join, an unknown id, or a
  /// non-positive price.
  RebalanceResult apply(const RebalanceEvent& event);

  const std::vector<PricedConnection>& connections() const { return conns_; }
  const std::vector<BufferAssignment>& allocation() const { return allocation_; }
  std::optional<BufferBudget> budget() const;

 private:
  Allocator(std::optional<BufferBudget> fixed, std::optional<double> bottleneck_bps, std::uint32_t segment_size);
  std::vector<PricedConnection>::iterator find(ConnectionId id);

  std::optional<BufferBudget> fixed_;
  std::optional<double> bottleneck_bps_;
  std::uint32_t segment_size_;
  std::vector<PricedConnection> conns_;
  std::vector<BufferAssignment> allocation_;
};

}  // namespace multcp
