// Acceptance checks. Prints one PASS/FAIL line per criterion, with the
// measured values underneath, and exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "multcp/allocator.hpp"
#include "multcp/experiments.hpp"
#include "multcp/fairness.hpp"
#include "multcp/model.hpp"
#include "multcp/policing.hpp"
#include "multcp/simulation.hpp"

using namespace multcp;

namespace {

// Collects notes and failures for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      notes_.push_back("FAILED: " + what);
    }
  }
  void note(std::string text) { notes_.push_back(std::move(text)); }
  bool passed() const { return pass_; }
  const std::vector<std::string>& notes() const { return notes_; }

 private:
  bool pass_ = true;
  std::vector<std::string> notes_;
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// ---------------------------------------------------------------------------

void model_identity(Check& c) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lp(-6.0, -0.5);
  std::uniform_real_distribution<double> bytes(40.0, 9000.0);
  std::uniform_real_distribution<double> rtt(0.001, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double p = std::pow(10.0, lp(rng));
    const double b = bytes(rng);
    const double r = rtt(rng);
    const double expected = std::sqrt(1.5) * b / (r * std::sqrt(p));
    worst = std::max(worst, rel(multcp_throughput(1.0, p, b, r), expected));
  }
  c.note(fmt::format("worst relative error over 100 triples: {:.3g}", worst));
  c.expect(worst <= 1e-12, "relative error <= 1e-12");
}

void oracle_agreement(Check& c) {
  std::uint64_t seed = 100;
  for (double n : {1.0, 2.0, 4.0, 8.0}) {
    for (double p : {1e-4, 1e-3}) {
      const ModelParams params{n, p, 1000.0, 0.1};
      const double oracle = sawtooth_oracle(params, 10000, ++seed).throughput;
      const double formula = multcp_throughput(params);
      c.note(fmt::format("N={} p={:g}: oracle/formula = {:.4f}", n, p, oracle / formula));
      c.expect(rel(oracle, formula) <= 0.10, fmt::format("N={} p={:g} within 10%", n, p));
    }
  }
}

void gain_ratio_bounds(Check& c) {
  c.expect(gain_ratio(1.0) == 1.0, "gain_ratio(1) == 1 exactly");
  double worst = 0.0;
  double at = 1.0;
  for (int i = 0; i <= 9000; ++i) {
    const double n = 1.0 + i * 0.001;
    const double dev = std::abs(gain_ratio(n) - n) / n;
    if (dev > worst) {
      worst = dev;
      at = n;
    }
  }
  c.note(fmt::format("gain_ratio(1) = {:.17g}; worst deviation {:.4f} at N={:.3f}", gain_ratio(1.0), worst, at));
  c.expect(worst <= 0.15, "deviation <= 0.15 on [1, 10]");
}

void gain_sweep(Check& c) {
  const std::vector<Variant> variants{Variant::tahoe, Variant::reno, Variant::newreno, Variant::sack};
  double sack8 = 0.0;
  std::vector<std::pair<Variant, double>> others8;
  for (Variant v : variants) {
    SweepConfig cfg;
    cfg.variant = v;
    cfg.n_grid = {1.0, 1.5, 2.0, 8.0};
    if (v == Variant::sack) cfg.n_grid = {1.0, 1.5, 2.0, 4.0, 8.0};
    const GainTable t = run_gain_experiment(cfg);
    std::string line = fmt::format("{:8}", to_string(v));
    for (const SummaryRow& s : t.summary) {
      line += fmt::format("  N={}: {:.3f}+-{:.3f}", s.n, s.mean, s.sd);
      if (s.n <= 2.0) {
        c.expect(rel(s.mean, s.n) <= 0.35, fmt::format("(a) {} N={} within 35%", to_string(v), s.n));
      } else if (v == Variant::sack) {
        c.expect(rel(s.mean, s.n) <= 0.30, fmt::format("(c) sack N={} within 30%", s.n));
      } else {
        c.expect(s.mean <= 3.0, fmt::format("(b) {} N=8 <= 3.0", to_string(v)));
      }
      if (s.n == 8.0) {
        if (v == Variant::sack)
          sack8 = s.mean;
        else
          others8.emplace_back(v, s.mean);
      }
    }
    c.note(line);
  }
  for (const auto& [v, g] : others8) c.expect(g < sack8, fmt::format("{} gain(8) below sack gain(8)", to_string(v)));
}

void fairness_sweep(Check& c) {
  SweepConfig cfg;
  cfg.variant = Variant::sack;
  cfg.n_grid = {1.0, 2.0, 4.0, 8.0};
  const DispersionTable t = run_fairness_experiment(cfg);
  std::string line;
  for (const SummaryRow& s : t.summary) line += fmt::format("  N={}: {:.3f}+-{:.3f}", s.n, s.mean, s.sd);
  c.note("std/mean" + line);
  c.note(fmt::format("rank trend (Spearman): {:.3f}", t.rank_trend));
  const double n1 = t.summary.front().mean;
  c.expect(n1 >= 0.03 && n1 <= 0.15, "N=1 std/mean in [0.03, 0.15]");
  c.expect(t.rank_trend > 0.0, "positive rank trend over the grid");
}

void fairness_library(Check& c) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> cap(0.1, 100.0);
  std::uniform_real_distribution<double> wt(0.1, 10.0);
  std::uniform_int_distribution<int> conns(1, 8);
  double worst_closed = 0.0;
  int pf_pass = 0;
  for (int i = 0; i < 50; ++i) {
    CapacitatedNetwork net;
    net.capacities = {cap(rng)};
    WeightVector w;
    const int k = conns(rng);
    for (int s = 0; s < k; ++s) {
      net.routes.push_back({0});
      w.push_back(wt(rng));
    }
    const RateVector x = wpf_allocate(net, w);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (int s = 0; s < k; ++s) {
      const double expected = net.capacities[0] * w[static_cast<std::size_t>(s)] / total;
      worst_closed = std::max(worst_closed, std::abs(x[static_cast<std::size_t>(s)] - expected) / expected);
    }
    pf_pass += check_weighted_pf(x, w, net, 10000, static_cast<std::uint64_t>(i)).pass;
  }
  c.note(fmt::format("single-link wpf: worst relative error {:.3g}; {} of 50 pass the sampled check", worst_closed,
                     pf_pass));
  c.expect(worst_closed <= 1e-9, "wpf matches C w_s / sum w to 1e-9");
  c.expect(pf_pass == 50, "all 50 pass check_weighted_pf with 1e4 samples");

  // Small instances: the documented examples plus random routings.
  std::vector<CapacitatedNetwork> set;
  set.push_back({{1.0}, {{0}, {0}, {0}, {0}}});
  set.push_back({{1.0, 1.0}, {{0, 1}, {0}, {1}}});
  set.push_back({{1.0, 2.0}, {{0, 1}, {0}, {1}}});
  set.push_back({{1.0, 2.0, 3.0}, {{0, 1, 2}, {0}, {1}, {2}}});
  std::uniform_int_distribution<int> links(1, 3);
  std::uniform_int_distribution<int> bit(0, 1);
  std::uniform_real_distribution<double> small_cap(0.5, 4.0);
  for (int i = 0; i < 100; ++i) {
    CapacitatedNetwork net;
    const int l = links(rng);
    for (int j = 0; j < l; ++j) net.capacities.push_back(small_cap(rng));
    const int k = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int s = 0; s < k; ++s) {
      std::vector<std::size_t> route;
      for (int j = 0; j < l; ++j)
        if (bit(rng)) route.push_back(static_cast<std::size_t>(j));
      if (route.empty()) route.push_back(static_cast<std::size_t>(s % l));
      net.routes.push_back(route);
    }
    set.push_back(net);
  }
  int mm_pass = 0;
  int brute = 0;
  for (const CapacitatedNetwork& net : set) {
    const MaxMinVerdict v = check_maxmin(maxmin_allocate(net), net);
    mm_pass += v.pass;
    brute += v.method == MaxMinMethod::brute_force;
  }
  c.note(fmt::format("maxmin_allocate: {} of {} instances pass ({} checked by brute force)", mm_pass, set.size(),
                     brute));
  c.expect(brute == static_cast<int>(set.size()), "every small instance checked by brute force");
  c.expect(mm_pass == static_cast<int>(set.size()), "every small instance passes");
}

Scenario capped_pair(double bottleneck_bps, std::uint64_t buffer_a, std::uint64_t buffer_b) {
  Scenario s;
  s.links.push_back(LinkSpec{"wire", "a", "b", bottleneck_bps, SimTime::from_seconds(0.02), QueueKind::droptail, 0});
  for (std::uint64_t buf : {buffer_a, buffer_b}) {
    FlowSpec f;
    f.route = {"wire"};
    f.receive_buffer = buf;
    s.flows.push_back(f);
  }
  s.duration = SimTime::from_seconds(30);
  s.warmup = SimTime::from_seconds(5);
  return s;
}

void allocator(Check& c) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> price(0.01, 100.0);
  std::uniform_int_distribution<int> count(1, 12);
  std::uniform_real_distribution<double> budget(1e4, 1e7);
  const std::uint32_t seg = 1000;
  int prop_ok = 0;
  int cons_ok = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<PricedConnection> conns;
    const int k = count(rng);
    for (int j = 0; j < k; ++j) conns.push_back({static_cast<ConnectionId>(j), price(rng), 0.1});
    const BufferBudget b{budget(rng)};
    const auto out = allocate_buffers(conns, b, seg);
    double total_k = 0.0;
    for (const auto& p : conns) total_k += p.price;
    bool prop = true;
    for (std::size_t j = 0; j < out.size(); ++j) {
      const double exact = b.total * conns[j].price / total_k;
      prop = prop && std::abs(static_cast<double>(out[j]) - exact) < seg && out[j] % seg == 0;
    }
    const double sum = static_cast<double>(std::accumulate(out.begin(), out.end(), std::uint64_t{0}));
    prop_ok += prop;
    cons_ok += sum <= b.total && sum > b.total - seg;
  }
  c.note(fmt::format("random price vectors: proportional {}/1000, conserving {}/1000", prop_ok, cons_ok));
  c.expect(prop_ok == 1000, "every buffer within one segment of B k_i / sum k");
  c.expect(cons_ok == 1000, "sum of buffers in (B - segment, B]");

  const auto priced = allocate_buffers({{1, 1.0, 0.1}, {2, 2.0, 0.1}}, {30000}, seg);
  Simulation sim(capped_pair(100e6, priced[0], priced[1]));
  const SimulationStats st = sim.run();
  const double ratio = st.throughput(1) / st.throughput(0);
  Simulation eq_sim(capped_pair(100e6, 15000, 15000));
  const SimulationStats eq = eq_sim.run();
  const double eq_ratio = eq.throughput(1) / eq.throughput(0);
  c.note(fmt::format("prices 1:2 -> buffers {}:{} bytes -> throughput ratio {:.4f}; equal prices -> {:.4f}", priced[0],
                     priced[1], ratio, eq_ratio));
  c.expect(rel(ratio, 2.0) <= 0.10, "price ratio 2 reproduced within 10%");
  c.expect(rel(eq_ratio, 1.0) <= 0.10, "equal prices give equal throughput within 10%");

  // One capped flow on a 10 Mb/s path: linear in the buffer, then flat.
  std::string line = "buffer sweep (kB:Mb/s)";
  std::vector<double> linear_err;
  std::vector<double> flat;
  for (std::uint64_t kb : {2, 4, 8, 16, 64, 128, 256}) {
    Scenario s = capped_pair(10e6, kb * 1000, 1000);
    s.flows.pop_back();
    Simulation one(s);
    const double thr = one.run().throughput(0);
    line += fmt::format(" {}:{:.2f}", kb, thr * 8 / 1e6);
    const double bound = throughput_bound(static_cast<double>(kb * 1000), s.base_rtt(0).seconds());
    if (bound < 0.8 * 10e6 / 8) linear_err.push_back(rel(thr, bound));
    if (bound > 2.0 * 10e6 / 8) flat.push_back(thr);
  }
  c.note(line);
  const double worst_linear = *std::max_element(linear_err.begin(), linear_err.end());
  const double spread = (*std::max_element(flat.begin(), flat.end()) - *std::min_element(flat.begin(), flat.end())) /
                        (10e6 / 8);
  c.expect(linear_err.size() >= 3 && worst_linear <= 0.10, "throughput tracks buffer/RTT below the ceiling");
  c.expect(flat.size() >= 2 && spread <= 0.05 && flat.front() >= 0.9 * 10e6 / 8, "throughput flat at the ceiling");
}

void policing(Check& c) {
  for (double n : {1.0, 2.0, 4.0, 8.0}) {
    DumbbellParams p;
    p.variant = Variant::sack;
    Scenario s = build_dumbbell(4, p);
    s.flows[0].n = n;
    s.flows[0].trace = true;
    s.duration = SimTime::from_seconds(40);
    s.warmup = SimTime::from_seconds(5);
    s.seed = 21;
    Simulation sim(s);
    sim.run();
    const TraceEstimate e = analyze_trace(select_records(sim.trace(), 0));
    const double est = e.n.value_or(0.0);
    c.note(fmt::format("true N={}: estimate {:.3f} from {} reductions ({})", n, est, e.decrease_samples, e.method()));
    c.expect(e.decrease_samples >= 20, fmt::format("N={} has >= 20 losses", n));
    c.expect(rel(est, n) <= 0.10, fmt::format("N={} estimate within 10%", n));
  }
  const auto sec = [](double x) { return SimTime::from_seconds(x); };
  const double a = bill({{1, 2.0, sec(0), sec(100)}, {2, 3.0, sec(0), sec(100)}}, sec(0), sec(100));
  const double b = bill({{1, 2.0, sec(0), sec(50)}, {1, 4.0, sec(50), sec(100)}}, sec(0), sec(100));
  const double z = bill({}, sec(0), sec(100));
  c.note(fmt::format("bill examples: {} {} {}", a, b, z));
  c.expect(a == 500.0 && b == 300.0 && z == 0.0, "bill examples exact");
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism(Check& c) {
  auto simulate_csv = [] {
    DumbbellParams p;
    p.variant = Variant::newreno;
    Scenario s = build_dumbbell(6, p);
    s.flows[0].n = 3.0;
    s.flows[0].trace = true;
    s.duration = SimTime::from_seconds(20);
    s.warmup = SimTime::from_seconds(5);
    s.seed = 77;
    Simulation sim(s);
    const SimulationStats st = sim.run();
    std::ostringstream out;
    write_flow_stats_csv(out, s, st);
    write_trace_csv(out, sim.trace());
    return out.str();
  };
  const std::string first = simulate_csv();
  const std::string second = simulate_csv();
  c.note(fmt::format("simulation CSV: {} bytes, identical: {}", first.size(), first == second));
  c.expect(!first.empty() && first == second, "simulation CSV byte-identical");

  const auto dir = std::filesystem::temp_directory_path() / "multcp_acceptance";
  std::filesystem::create_directories(dir);
  SweepConfig cfg;
  cfg.variant = Variant::reno;
  cfg.n_grid = {1.0, 2.0};
  cfg.seeds = default_seeds(3);
  cfg.duration = SimTime::from_seconds(20);
  cfg.warmup = SimTime::from_seconds(5);
  cfg.threads = 1;
  emit_results(run_gain_experiment(cfg), (dir / "a.csv").string());
  cfg.threads = 4;
  emit_results(run_gain_experiment(cfg), (dir / "b.csv").string());
  bool same = true;
  for (const char* suffix : {".csv", ".flows.csv", ".summary.csv"}) {
    same = same && read_file(dir / (std::string("a") + suffix)) == read_file(dir / (std::string("b") + suffix));
  }
  c.note(fmt::format("sweep CSVs with 1 and 4 threads identical: {}", same));
  c.expect(same, "sweep CSV byte-identical across reruns");
  std::filesystem::remove_all(dir);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"analytic model identity", model_identity},
      {"oracle agreement", oracle_agreement},
      {"gain-ratio bounds", gain_ratio_bounds},
      {"gain sweep reproduction", gain_sweep},
      {"fairness sweep reproduction", fairness_sweep},
      {"fairness library", fairness_library},
      {"buffer allocator", allocator},
      {"policing round-trip", policing},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !c.passed();
    fmt::print("{} {} {} ({:.1f} s)\n", c.passed() ? "PASS" : "FAIL", i + 1, criteria[i].first, secs);
    for (const std::string& n : c.notes()) fmt::print("    {}\n", n);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
  return failures == 0 ? 0 : 1;
}
