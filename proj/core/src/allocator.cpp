#include "multcp/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace multcp {

namespace {

void require_price(double price) {
  if (!(price > 0.0)) throw std::invalid_argument("connection price must be positive");
}

}  // namespace

BufferBudget compute_budget(double bottleneck_bps, double mean_rtt) {
  if (!(bottleneck_bps > 0.0)) throw std::invalid_argument("bottleneck bandwidth must be positive");
  if (!(mean_rtt > 0.0)) throw std::invalid_argument("mean RTT must be positive");
  return BufferBudget{bottleneck_bps / 8.0 * mean_rtt};
}

double price_weighted_mean_rtt(const std::vector<PricedConnection>& conns) {
  if (conns.empty()) throw std::invalid_argument("no connections");
  double weighted = 0.0;
  double total = 0.0;
  for (const PricedConnection& c : conns) {
    require_price(c.price);
    weighted += c.price * c.rtt;
    total += c.price;
  }
  return weighted / total;
}

std::vector<std::uint64_t> allocate_buffers(const std::vector<PricedConnection>& conns, BufferBudget budget,
                                            std::uint32_t segment_size) {
  if (conns.empty()) throw std::invalid_argument("cannot allocate buffers to an empty connection list");
  if (!(budget.total > 0.0)) throw std::invalid_argument("buffer budget must be positive");
  if (segment_size == 0) throw std::invalid_argument("segment size must be positive");
  double prices = 0.0;
  for (const PricedConnection& c : conns) {
    require_price(c.price);
    prices += c.price;
  }

  const double seg = segment_size;
  const auto whole = static_cast<std::uint64_t>(std::floor(budget.total / seg));
  std::vector<std::uint64_t> segments(conns.size());
  std::vector<double> remainder(conns.size());
  std::uint64_t given = 0;
  for (std::size_t i = 0; i < conns.size(); ++i) {
    const double exact = budget.total * conns[i].price / prices / seg;
    segments[i] = static_cast<std::uint64_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(segments[i]);
    given += segments[i];
  }

  std::vector<std::size_t> order(conns.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    if (conns[a].price != conns[b].price) return conns[a].price > conns[b].price;
    return conns[a].id < conns[b].id;
  });
  for (std::size_t k = 0; given < whole && k < order.size(); ++k, ++given) ++segments[order[k]];

  std::vector<std::uint64_t> bytes(conns.size());
  for (std::size_t i = 0; i < conns.size(); ++i) bytes[i] = segments[i] * segment_size;
  return bytes;
}

double throughput_bound(double buffer, double rtt) {
  if (!(buffer > 0.0) || !(rtt > 0.0)) throw std::invalid_argument("buffer and RTT must be positive");
  return buffer / rtt;
}

Allocator::Allocator(std::optional<BufferBudget> fixed, std::optional<double> bottleneck_bps,
                     std::uint32_t segment_size)
    : fixed_(fixed), bottleneck_bps_(bottleneck_bps), segment_size_(segment_size) {
  if (segment_size == 0) throw std::invalid_argument("segment size must be positive");
}

Allocator Allocator::with_budget(BufferBudget budget, std::uint32_t segment_size) {
  if (!(budget.total > 0.0)) throw std::invalid_argument("buffer budget must be positive");
  return Allocator(budget, std::nullopt, segment_size);
}

Allocator Allocator::for_bottleneck(double bottleneck_bps, std::uint32_t segment_size) {
  if (!(bottleneck_bps > 0.0)) throw std::invalid_argument("bottleneck bandwidth must be positive");
  return Allocator(std::nullopt, bottleneck_bps, segment_size);
}

std::optional<BufferBudget> Allocator::budget() const {
  if (fixed_) return fixed_;
  if (conns_.empty()) return std::nullopt;
  return compute_budget(*bottleneck_bps_, price_weighted_mean_rtt(conns_));
}

std::vector<PricedConnection>::iterator Allocator::find(ConnectionId id) {
  return std::find_if(conns_.begin(), conns_.end(), [id](const PricedConnection& c) { return c.id == id; });
}

RebalanceResult Allocator::apply(const RebalanceEvent& event) {
  if (const auto* join = std::get_if<Join>(&event)) {
    require_price(join->connection.price);
    if (find(join->connection.id) != conns_.end()) {
      throw std::invalid_argument("connection " + std::to_string(join->connection.id) + " already joined");
    }
    conns_.push_back(join->connection);
  } else if (const auto* leave = std::get_if<Leave>(&event)) {
    auto it = find(leave->id);
    if (it == conns_.end()) throw std::invalid_argument("unknown connection " + std::to_string(leave->id));
    conns_.erase(it);
  } else {
    const auto& reprice = std::get<Reprice>(event);
    require_price(reprice.price);
    auto it = find(reprice.id);
    if (it == conns_.end()) throw std::invalid_argument("unknown connection " + std::to_string(reprice.id));
    it->price = reprice.price;
  }

  std::map<ConnectionId, std::uint64_t> before;
  for (const BufferAssignment& a : allocation_) before[a.id] = a.bytes;

  std::vector<BufferAssignment> next;
  if (!conns_.empty()) {
    const std::vector<std::uint64_t> bytes = allocate_buffers(conns_, *budget(), segment_size_);
    for (std::size_t i = 0; i < conns_.size(); ++i) next.push_back(BufferAssignment{conns_[i].id, bytes[i]});
  }

  RebalanceResult result;
  for (const BufferAssignment& a : next) {
    auto it = before.find(a.id);
    if (it == before.end()) {
      result.changes.push_back(BufferChange{a.id, std::nullopt, a.bytes});
    } else {
      if (it->second != a.bytes) result.changes.push_back(BufferChange{a.id, it->second, a.bytes});
      before.erase(it);
    }
  }
  for (const auto& [id, bytes] : before) result.changes.push_back(BufferChange{id, bytes, std::nullopt});

  allocation_ = next;
  result.allocation = next;
  return result;
}

}  // namespace multcp
