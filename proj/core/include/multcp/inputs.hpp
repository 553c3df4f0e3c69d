#pragma once

// Readers for the small input files taken by the command-line tools.

#include <iosfwd>
#include <string>
#include <vector>

#include "multcp/allocator.hpp"
#include "multcp/fairness.hpp"
#include "multcp/policing.hpp"

namespace multcp {

struct NetworkDescription {
  CapacitatedNetwork net;
  std::vector<std::string> link_names;
  std::vector<std::string> connection_names;
  WeightVector weights;  // 1 where the file gives none
};

/// YAML with `links` (name, capacity) and `connections` (name, route as a
/// list of link names, optional weight).
NetworkDescription parse_network(std::istream& in);
NetworkDescription load_network(const std::string& path);

/// CSV `id,price[,rtt_s]` with an optional header line.
std::vector<PricedConnection> read_price_list(std::istream& in);

/// CSV `flow_id,declared_n,start_s,end_s` with an optional header line.
std::vector<Declaration> read_declarations(std::istream& in);

}  // namespace multcp
