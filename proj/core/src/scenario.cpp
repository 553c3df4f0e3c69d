#include "multcp/scenario.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace multcp {

void Scenario::validate() const {
  if (links.empty()) throw std::invalid_argument("scenario has no links");
  std::set<std::string> names;
  for (const LinkSpec& l : links) {
    if (l.name.empty()) throw std::invalid_argument("link without a name");
    if (!names.insert(l.name).second) throw std::invalid_argument(fmt::format("duplicate link '{}'", l.name));
    if (!(l.bandwidth_bps > 0.0)) throw std::invalid_argument(fmt::format("link '{}': bandwidth must be positive", l.name));
    if (l.delay < SimTime{}) throw std::invalid_argument(fmt::format("link '{}': delay must be non-negative", l.name));
  }
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const FlowSpec& f = flows[i];
    if (f.route.empty()) throw std::invalid_argument(fmt::format("flow {}: empty route", i));
    for (std::size_t h = 0; h < f.route.size(); ++h) {
      if (!names.contains(f.route[h]))
        throw std::invalid_argument(fmt::format("flow {}: route references unknown link '{}'", i, f.route[h]));
      if (h > 0) {
        const LinkSpec& prev = links[link_index(f.route[h - 1])];
        const LinkSpec& next = links[link_index(f.route[h])];
        if (!prev.to.empty() && !next.from.empty() && prev.to != next.from)
          throw std::invalid_argument(
              fmt::format("flow {}: link '{}' does not continue from '{}'", i, next.name, prev.name));
      }
    }
    if (!(f.n >= 1.0)) throw std::invalid_argument(fmt::format("flow {}: N must be >= 1", i));
    if (!(f.initial_ssthresh >= 2.0)) throw std::invalid_argument(fmt::format("flow {}: ssthresh must be >= 2", i));
    if (f.segments && *f.segments <= 0) throw std::invalid_argument(fmt::format("flow {}: segments must be positive", i));
    if (f.start && *f.start < SimTime{}) throw std::invalid_argument(fmt::format("flow {}: negative start", i));
  }
  if (!(duration > warmup)) throw std::invalid_argument("duration must exceed warmup");
  if (warmup < SimTime{}) throw std::invalid_argument("warmup must be non-negative");
  if (packet_size == 0) throw std::invalid_argument("packet_size must be positive");
  red.validate();
}

std::size_t Scenario::link_index(const std::string& name) const {
  for (std::size_t i = 0; i < links.size(); ++i)
    if (links[i].name == name) return i;
  throw std::invalid_argument(fmt::format("unknown link '{}'", name));
}

SimTime Scenario::base_rtt(std::size_t flow) const {
  SimTime rtt;
  for (const std::string& name : flows.at(flow).route) {
    const LinkSpec& l = links[link_index(name)];
    const double bits = static_cast<double>(packet_size + kAckBytes) * 8.0;
    rtt += l.delay * 2 + SimTime::from_ns(std::llround(bits * 1e9 / l.bandwidth_bps));
  }
  return rtt;
}

double Scenario::path_bandwidth(std::size_t flow) const {
  double bw = 0.0;
  for (const std::string& name : flows.at(flow).route) {
    const double b = links[link_index(name)].bandwidth_bps;
    bw = bw == 0.0 ? b : std::min(bw, b);
  }
  return bw;
}

Scenario build_dumbbell(std::size_t n_flows, const DumbbellParams& params) {
  if (n_flows < 2) throw std::invalid_argument("a dumbbell needs at least two flows");
  Scenario s;
  const double lo = params.access_delay_min.seconds();
  const double hi = params.access_delay_max.seconds();
  for (std::size_t i = 0; i < n_flows; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(n_flows - 1);
    s.links.push_back(LinkSpec{fmt::format("access{}", i), fmt::format("src{}", i), "r1", params.access_bps,
                               SimTime::from_seconds(lo + (hi - lo) * frac), QueueKind::droptail,
                               params.access_limit});
  }
  s.links.push_back(LinkSpec{"bottleneck", "r1", "r2", params.bottleneck_bps, params.bottleneck_delay,
                             params.bottleneck_queue, params.bottleneck_limit});
  for (std::size_t i = 0; i < n_flows; ++i) {
    FlowSpec f;
    f.variant = params.variant;
    f.n = params.n;
    f.route = {fmt::format("access{}", i), "bottleneck"};
    s.flows.push_back(std::move(f));
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::invalid_argument(fmt::format("scenario: {}: {}", where, what));
}

template <typename T>
T get(const YAML::Node& node, const std::string& key, const T& fallback) {
  const YAML::Node v = node[key];
  if (!v) return fallback;
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    fail(key, "wrong type");
  }
}

SimTime seconds(const YAML::Node& node, const std::string& key, SimTime fallback) {
  const YAML::Node v = node[key];
  if (!v) return fallback;
  try {
    return SimTime::from_seconds(v.as<double>());
  } catch (const YAML::Exception&) {
    fail(key, "expected seconds");
  }
}

QueueKind queue_kind(const std::string& name, const std::string& where) {
  if (name == "red") return QueueKind::red;
  if (name == "droptail") return QueueKind::droptail;
  fail(where, "queue must be 'red' or 'droptail'");
}

void apply_flow_fields(const YAML::Node& node, FlowSpec& f) {
  try {
    if (node["variant"]) f.variant = parse_variant(node["variant"].as<std::string>());
  } catch (const std::invalid_argument& e) {
    fail("variant", e.what());
  }
  f.n = get<double>(node, "n", f.n);
  f.initial_ssthresh = get<double>(node, "ssthresh", f.initial_ssthresh);
  if (node["start"]) f.start = seconds(node, "start", {});
  if (node["stop"]) f.stop = seconds(node, "stop", {});
  if (node["segments"]) f.segments = get<std::int64_t>(node, "segments", 0);
  if (node["receive_buffer"]) f.receive_buffer = get<std::uint64_t>(node, "receive_buffer", 0);
  f.trace = get<bool>(node, "trace", f.trace);
  if (node["route"]) f.route = get<std::vector<std::string>>(node, "route", {});
}

}  // namespace

Scenario parse_scenario(std::istream& in) {
  YAML::Node root;
  try {
    root = YAML::Load(in);
  } catch (const YAML::Exception& e) {
    fail("syntax", e.what());
  }
  if (!root.IsMap()) fail("document", "expected a mapping");
  if (!root["duration"]) fail("duration", "required");
  if (!root["topology"]) fail("topology", "required");

  Scenario s;
  const YAML::Node topo = root["topology"];
  FlowSpec defaults;
  if (root["flow_defaults"]) apply_flow_fields(root["flow_defaults"], defaults);

  if (topo["dumbbell"]) {
    const YAML::Node d = topo["dumbbell"];
    DumbbellParams p;
    p.bottleneck_bps = get<double>(d, "bottleneck_bw", p.bottleneck_bps);
    p.bottleneck_delay = seconds(d, "bottleneck_delay", p.bottleneck_delay);
    p.access_bps = get<double>(d, "access_bw", p.access_bps);
    p.access_delay_min = seconds(d, "access_delay_min", p.access_delay_min);
    p.access_delay_max = seconds(d, "access_delay_max", p.access_delay_max);
    p.access_limit = get<std::size_t>(d, "access_limit", p.access_limit);
    p.bottleneck_queue = queue_kind(get<std::string>(d, "bottleneck_queue", "red"), "bottleneck_queue");
    p.bottleneck_limit = get<std::size_t>(d, "bottleneck_limit", p.bottleneck_limit);
    const auto n_flows = get<std::size_t>(d, "flows", 22);
    s = build_dumbbell(n_flows, p);
    for (FlowSpec& f : s.flows) {
      auto route = f.route;
      f = defaults;
      f.route = route;
    }
    if (root["flows"]) {
      std::size_t next = 0;
      for (const YAML::Node& fn : root["flows"]) {
        const auto index = get<std::size_t>(fn, "index", next);
        if (index >= s.flows.size()) fail("flows", fmt::format("index {} beyond dumbbell size", index));
        auto route = s.flows[index].route;
        apply_flow_fields(fn, s.flows[index]);
        if (fn["route"]) fail("flows", "dumbbell flows take their route from the topology");
        s.flows[index].route = route;
        next = index + 1;
      }
    }
  } else if (topo["links"]) {
    for (const YAML::Node& ln : topo["links"]) {
      LinkSpec l;
      l.name = get<std::string>(ln, "name", "");
      l.from = get<std::string>(ln, "from", "");
      l.to = get<std::string>(ln, "to", "");
      if (!ln["bandwidth"]) fail("links", fmt::format("link '{}' needs a bandwidth", l.name));
      l.bandwidth_bps = get<double>(ln, "bandwidth", 0.0);
      l.delay = seconds(ln, "delay", {});
      l.queue = queue_kind(get<std::string>(ln, "queue", "droptail"), "queue");
      l.limit = get<std::size_t>(ln, "limit", 0);
      s.links.push_back(l);
    }
    if (root["flows"]) {
      for (const YAML::Node& fn : root["flows"]) {
        FlowSpec f = defaults;
        apply_flow_fields(fn, f);
        s.flows.push_back(std::move(f));
      }
    }
  } else {
    fail("topology", "expected 'dumbbell' or 'links'");
  }

  s.duration = seconds(root, "duration", s.duration);
  s.warmup = seconds(root, "warmup", s.warmup);
  s.seed = get<std::uint64_t>(root, "seed", s.seed);
  s.packet_size = get<std::uint32_t>(root, "packet_size", s.packet_size);
  s.start_jitter = seconds(root, "start_jitter", s.start_jitter);
  if (const YAML::Node r = root["red"]) {
    s.red.thresh = get<double>(r, "thresh", s.red.thresh);
    s.red.maxthresh = get<double>(r, "maxthresh", s.red.maxthresh);
    s.red.limit = get<std::size_t>(r, "limit", s.red.limit);
    s.red.ewma_weight = get<double>(r, "ewma_weight", s.red.ewma_weight);
    s.red.max_drop_prob = get<double>(r, "max_drop_prob", s.red.max_drop_prob);
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    fail("validation", e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open scenario file '{}'", path));
  try {
    return parse_scenario(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(fmt::format("{}: {}", path, e.what()));
  }
}

}  // namespace multcp
