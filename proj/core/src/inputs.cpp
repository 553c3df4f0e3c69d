#include "multcp/inputs.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <stdexcept>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "csv.hpp"

namespace multcp {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("network: " + what); }

struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// Trimmed fields of each row, skipping blanks, comments and a leading header.
std::vector<Row> rows(std::istream& in) {
  std::vector<Row> out;
  std::string text;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, text)) {
    ++line_no;
    const std::string_view t = csv::trim(text);
    if (t.empty() || t.front() == '#') continue;
    const bool header = first && !(std::isdigit(static_cast<unsigned char>(t.front())) || t.front() == '-' ||
                                   t.front() == '+' || t.front() == '.');
    first = false;
    if (header) continue;
    Row row{line_no, {}};
    for (std::string_view f : csv::split(t, ',')) row.fields.emplace_back(csv::trim(f));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

NetworkDescription parse_network(std::istream& in) {
  YAML::Node root;
  try {
    root = YAML::Load(in);
  } catch (const YAML::Exception& e) {
    fail(e.what());
  }
  if (!root.IsMap() || !root["links"] || !root["connections"]) fail("expected 'links' and 'connections'");

  NetworkDescription d;
  std::map<std::string, std::size_t> index;
  try {
    for (const YAML::Node& l : root["links"]) {
      const auto name = l["name"] ? l["name"].as<std::string>() : fmt::format("L{}", d.link_names.size() + 1);
      if (!l["capacity"]) fail(fmt::format("link '{}' needs a capacity", name));
      if (!index.emplace(name, d.link_names.size()).second) fail(fmt::format("duplicate link '{}'", name));
      d.link_names.push_back(name);
      d.net.capacities.push_back(l["capacity"].as<double>());
    }
    for (const YAML::Node& c : root["connections"]) {
      const auto name =
          c["name"] ? c["name"].as<std::string>() : fmt::format("f{}", d.connection_names.size() + 1);
      if (!c["route"]) fail(fmt::format("connection '{}' needs a route", name));
      std::vector<std::size_t> route;
      for (const auto& link : c["route"].as<std::vector<std::string>>()) {
        auto it = index.find(link);
        if (it == index.end()) fail(fmt::format("connection '{}' crosses unknown link '{}'", name, link));
        route.push_back(it->second);
      }
      d.connection_names.push_back(name);
      d.net.routes.push_back(route);
      d.weights.push_back(c["weight"] ? c["weight"].as<double>() : 1.0);
    }
  } catch (const YAML::Exception& e) {
    fail(e.what());
  }
  try {
    d.net.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  return d;
}

NetworkDescription load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open network file '{}'", path));
  try {
    return parse_network(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(fmt::format("{}: {}", path, e.what()));
  }
}

std::vector<PricedConnection> read_price_list(std::istream& in) {
  std::vector<PricedConnection> out;
  for (const auto& [line, f] : rows(in)) {
    const std::string where = fmt::format("price list line {}", line);
    if (f.size() < 2 || f.size() > 3) throw std::runtime_error(where + ": expected id,price[,rtt_s]");
    PricedConnection c;
    c.id = csv::parse_integer<ConnectionId>(f[0], where);
    c.price = csv::parse_double(f[1], where);
    if (f.size() == 3) c.rtt = csv::parse_double(f[2], where);
    out.push_back(c);
  }
  return out;
}

std::vector<Declaration> read_declarations(std::istream& in) {
  std::vector<Declaration> out;
  for (const auto& [line, f] : rows(in)) {
    const std::string where = fmt::format("declarations line {}", line);
    if (f.size() != 4) throw std::runtime_error(where + ": expected flow_id,declared_n,start_s,end_s");
    Declaration d;
    d.flow = csv::parse_integer<FlowId>(f[0], where);
    d.declared_n = csv::parse_double(f[1], where);
    d.start = SimTime::from_seconds(csv::parse_double(f[2], where));
    d.end = SimTime::from_seconds(csv::parse_double(f[3], where));
    try {
      d.validate();
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(fmt::format("{}: {}", where, e.what()));
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace multcp
