#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "multcp/allocator.hpp"
#include "multcp/experiments.hpp"
#include "multcp/fairness.hpp"
#include "multcp/inputs.hpp"
#include "multcp/model.hpp"
#include "multcp/policing.hpp"
#include "multcp/simulation.hpp"
#include "multcp/trace.hpp"

using namespace multcp;

namespace {

std::ofstream open_file(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path));
  return out;
}

std::ifstream read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  return in;
}

const char* verdict(bool ok) { return ok ? "pass" : "fail"; }

// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::string scenario;
  std::string output;
  std::string trace;
  bool trace_all = false;
  std::optional<std::uint64_t> seed;
};

void run_simulate(const SimulateOptions& o) {
  Scenario s = load_scenario(o.scenario);
  if (o.seed) s.seed = *o.seed;
  if (o.trace_all) {
    for (FlowSpec& f : s.flows) f.trace = true;
  }
  Simulation sim(s);
  const SimulationStats stats = sim.run();
  if (o.output.empty()) {
    write_flow_stats_csv(std::cout, s, stats);
  } else {
    std::ofstream out = open_file(o.output);
    write_flow_stats_csv(out, s, stats);
  }
  if (!o.trace.empty()) {
    std::ofstream out = open_file(o.trace);
    write_trace_csv(out, sim.trace());
  }
}

// ---------------------------------------------------------------------------

struct SweepOptions {
  std::string variant;
  std::vector<double> n_grid{1.0, 2.0, 4.0, 8.0};
  std::size_t seeds = 10;
  std::size_t flows = kDefaultFlows;
  double duration = 70.0;
  double warmup = 10.0;
  unsigned threads = 0;
  std::string out;
};

SweepConfig sweep_config(const SweepOptions& o) {
  SweepConfig c;
  c.variant = parse_variant(o.variant);
  c.n_grid = o.n_grid;
  c.seeds = default_seeds(o.seeds);
  c.flows = o.flows;
  c.duration = SimTime::from_seconds(o.duration);
  c.warmup = SimTime::from_seconds(o.warmup);
  c.threads = o.threads;
  return c;
}

void run_sweep_gain(const SweepOptions& o) {
  const GainTable table = run_gain_experiment(sweep_config(o));
  if (o.out.empty()) {
    write_gain_csv(std::cout, table);
    return;
  }
  emit_results(table, o.out);
  write_gain_summary_csv(std::cout, table);
}

void run_sweep_fairness(const SweepOptions& o) {
  const DispersionTable table = run_fairness_experiment(sweep_config(o));
  if (o.out.empty()) {
    write_dispersion_csv(std::cout, table);
  } else {
    emit_results(table, o.out);
    write_dispersion_summary_csv(std::cout, table);
  }
  fmt::print(stderr, "rank trend (spearman, N vs mean std/mean): {:.6g}\n", table.rank_trend);
}

// ---------------------------------------------------------------------------

struct ModelOptions {
  std::vector<double> n{1.0, 2.0, 4.0, 8.0};
  std::vector<double> p{1e-4, 1e-3};
  double packet_bytes = 1000.0;
  double rtt = 0.1;
  std::int64_t cycles = 10000;
  std::uint64_t seed = 1;
};

void run_model(const ModelOptions& o) {
  fmt::print("N,p,packet_bytes,rtt_s,throughput_Bps,single_tcp_Bps,gain_ratio,oracle_Bps,oracle_over_model\n");
  for (double n : o.n) {
    for (double p : o.p) {
      const ModelParams m{n, p, o.packet_bytes, o.rtt};
      const double t = multcp_throughput(m);
      fmt::print("{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}", n, p, o.packet_bytes, o.rtt, t,
                 single_tcp_throughput(p, o.packet_bytes, o.rtt), gain_ratio(n));
      if (o.cycles > 0) {
        const OracleResult r = sawtooth_oracle(m, o.cycles, o.seed);
        fmt::print(",{:.9g},{:.9g}\n", r.throughput, r.throughput / t);
      } else {
        fmt::print(",,\n");
      }
    }
  }
}

// ---------------------------------------------------------------------------

struct FairnessOptions {
  std::string network;
  std::vector<double> rates;
  std::vector<double> weights;
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
};

void run_fairness_check(const FairnessOptions& o) {
  const NetworkDescription d = load_network(o.network);
  const WeightVector w = o.weights.empty() ? d.weights : o.weights;
  if (o.rates.size() != d.net.connection_count()) {
    throw std::invalid_argument(fmt::format("{} rates given for {} connections", o.rates.size(),
                                            d.net.connection_count()));
  }
  if (w.size() != d.net.connection_count()) throw std::invalid_argument("weight count does not match connections");

  fmt::print("check,verdict,detail\n");
  const bool feasible = is_feasible(o.rates, d.net);
  fmt::print("feasible,{},\n", verdict(feasible));
  if (!feasible) return;

  if (std::any_of(o.rates.begin(), o.rates.end(), [](double v) { return v == 0.0; })) {
    fmt::print("weighted_pf,undefined,zero rate\n");
  } else {
    const PfVerdict pf = check_weighted_pf(o.rates, w, d.net, o.trials, o.seed);
    fmt::print("weighted_pf,{},trials={};worst_sum={:.6g}\n", verdict(pf.pass), pf.trials, pf.worst_sum);
    if (pf.unweighted_pass) fmt::print("unweighted_pf,{},\n", verdict(*pf.unweighted_pass));
  }
  const MaxMinVerdict mm = check_maxmin(o.rates, d.net);
  std::string detail = fmt::format("method={};bottleneck={}", to_string(mm.method), verdict(mm.bottleneck_pass));
  if (mm.nonstrict_pass) detail += fmt::format(";nonstrict={}", verdict(*mm.nonstrict_pass));
  if (mm.strict_pass) detail += fmt::format(";strict={}", verdict(*mm.strict_pass));
  fmt::print("maxmin,{},{}\n", verdict(mm.pass), detail);
}

// ---------------------------------------------------------------------------

struct AllocRatesOptions {
  std::string network;
  std::string method = "wpf";
};

void run_alloc_rates(const AllocRatesOptions& o) {
  const NetworkDescription d = load_network(o.network);
  const RateVector x = o.method == "maxmin" ? maxmin_allocate(d.net) : wpf_allocate(d.net, d.weights);
  fmt::print("connection,weight,rate\n");
  for (std::size_t s = 0; s < x.size(); ++s) {
    fmt::print("{},{:.9g},{:.12g}\n", d.connection_names[s], d.weights[s], x[s]);
  }
}

struct AllocBuffersOptions {
  std::string prices;
  std::optional<double> budget;
  std::optional<double> bandwidth;
  std::uint32_t segment = 1000;
};

void run_alloc_buffers(const AllocBuffersOptions& o) {
  std::ifstream in = read_file(o.prices);
  const std::vector<PricedConnection> conns = read_price_list(in);
  if (conns.empty()) throw std::invalid_argument(fmt::format("'{}' lists no connections", o.prices));
  const BufferBudget budget =
      o.budget ? BufferBudget{*o.budget} : compute_budget(*o.bandwidth, price_weighted_mean_rtt(conns));
  const std::vector<std::uint64_t> bytes = allocate_buffers(conns, budget, o.segment);
  fmt::print("id,price,rtt_s,buffer_bytes,throughput_bound_Bps\n");
  for (std::size_t i = 0; i < conns.size(); ++i) {
    const double bound = bytes[i] > 0 ? throughput_bound(static_cast<double>(bytes[i]), conns[i].rtt) : 0.0;
    fmt::print("{},{:.9g},{:.9g},{},{:.9g}\n", conns[i].id, conns[i].price, conns[i].rtt, bytes[i], bound);
  }
}

// ---------------------------------------------------------------------------

struct PoliceOptions {
  std::string trace;
  std::string declarations;
  double tolerance = kDefaultTolerance;
  std::optional<double> period_start;
  std::optional<double> period_end;
};

std::string optional_number(const std::optional<double>& v) { return v ? fmt::format("{:.6g}", *v) : ""; }

void run_police(const PoliceOptions& o) {
  std::ifstream tin = read_file(o.trace);
  const std::vector<TraceRecord> trace = read_trace_csv(tin);

  if (o.declarations.empty()) {
    std::set<FlowId> flows;
    for (const TraceRecord& r : trace) flows.insert(r.flow);
    fmt::print("flow,estimated_N,method,decrease_samples,decrease_N,slow_start_samples,slow_start_N,reconstructed\n");
    for (FlowId f : flows) {
      const TraceEstimate e = analyze_trace(select_records(trace, f));
      fmt::print("{},{},{},{},{},{},{},{}\n", f, optional_number(e.n), e.method(), e.decrease_samples,
                 optional_number(e.steady_state_n), e.slow_start_samples, optional_number(e.slow_start_n),
                 e.reconstructed);
    }
    return;
  }

  std::ifstream din = read_file(o.declarations);
  const std::vector<Declaration> decls = read_declarations(din);
  fmt::print("flow,declared_N,start_s,end_s,observed_N,status\n");
  for (const Declaration& d : decls) {
    const Compliance c = verify_declaration(trace, d, o.tolerance);
    fmt::print("{},{:.9g},{:.9g},{:.9g},{},{}\n", d.flow, d.declared_n, d.start.seconds(), d.end.seconds(),
               optional_number(c.observed_n), to_string(c.status));
  }
  SimTime start = SimTime::max();
  SimTime end;
  for (const Declaration& d : decls) {
    start = std::min(start, d.start);
    end = std::max(end, d.end);
  }
  if (decls.empty()) start = SimTime{};
  if (o.period_start) start = SimTime::from_seconds(*o.period_start);
  if (o.period_end) end = SimTime::from_seconds(*o.period_end);
  fmt::print("\nperiod_start_s,period_end_s,charge_N_seconds\n{:.9g},{:.9g},{:.9g}\n", start.seconds(),
             end.seconds(), bill(decls, start, end));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MulTCP simulator and weighted-fairness toolkit"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Run one scenario file and print per-flow statistics");
  simulate->add_option("scenario", sim.scenario, "YAML scenario file")->required();
  simulate->add_option("-o,--output", sim.output, "Per-flow CSV destination (default stdout)");
  simulate->add_option("--trace", sim.trace, "Write the trace CSV of traced flows here");
  simulate->add_flag("--trace-all", sim.trace_all, "Trace every flow");
  simulate->add_option("--seed", sim.seed, "Override the scenario seed");

  SweepOptions gain;
  gain.variant = "reno";
  SweepOptions fair;
  fair.variant = "sack";
  auto* sweep = app.add_subcommand("sweep", "Parameter sweeps over the dumbbell");
  sweep->require_subcommand(1);
  for (auto [name, opts, help] : {std::tuple{"gain", &gain, "Throughput of one weighted flow over a standard flow"},
                                  std::tuple{"fairness", &fair, "Dispersion of RTT-normalized throughput"}}) {
    auto* cmd = sweep->add_subcommand(name, help);
    cmd->add_option("--variant", opts->variant, "tahoe, reno, newreno or sack")->capture_default_str();
    cmd->add_option("--n-grid", opts->n_grid, "Weights to sweep")->delimiter(',')->capture_default_str();
    cmd->add_option("--seeds", opts->seeds, "Seeds 1..k per grid point")->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--flows", opts->flows, "Flows sharing the bottleneck")->capture_default_str();
    cmd->add_option("--duration", opts->duration, "Simulated seconds")->capture_default_str();
    cmd->add_option("--warmup", opts->warmup, "Seconds excluded from measurement")->capture_default_str();
    cmd->add_option("--threads", opts->threads, "Worker threads (0 = all cores)")->capture_default_str();
    cmd->add_option("-o,--out", opts->out, "Write <out>, <stem>.flows.csv and <stem>.summary.csv");
  }

  ModelOptions model;
  auto* model_cmd = app.add_subcommand("model", "Analytic throughput model and saw-tooth oracle");
  model_cmd->add_option("--n", model.n, "Weights")->delimiter(',')->capture_default_str();
  model_cmd->add_option("--p", model.p, "Loss probabilities")->delimiter(',')->capture_default_str();
  model_cmd->add_option("--packet-bytes", model.packet_bytes)->capture_default_str();
  model_cmd->add_option("--rtt", model.rtt, "Seconds")->capture_default_str();
  model_cmd->add_option("--cycles", model.cycles, "Oracle loss cycles (0 skips the oracle)")->capture_default_str();
  model_cmd->add_option("--seed", model.seed)->capture_default_str();

  FairnessOptions fc;
  auto* fc_cmd = app.add_subcommand("fairness-check", "Check a rate vector against the fairness predicates");
  fc_cmd->add_option("network", fc.network, "YAML network description")->required();
  fc_cmd->add_option("--rates", fc.rates, "One rate per connection")->delimiter(',')->required();
  fc_cmd->add_option("--weights", fc.weights, "Override the file's weights")->delimiter(',');
  fc_cmd->add_option("--trials", fc.trials, "Sampled alternatives")->capture_default_str();
  fc_cmd->add_option("--seed", fc.seed)->capture_default_str();

  AllocRatesOptions ar;
  AllocBuffersOptions ab;
  auto* alloc = app.add_subcommand("alloc", "Rate or receive-buffer allocation");
  alloc->require_subcommand(1);
  auto* rates = alloc->add_subcommand("rates", "Max-min or weighted proportionally fair rates");
  rates->add_option("network", ar.network, "YAML network description")->required();
  rates->add_option("--method", ar.method)->check(CLI::IsMember({"maxmin", "wpf"}))->capture_default_str();
  auto* buffers = alloc->add_subcommand("buffers", "Price-proportional receive buffers");
  buffers->add_option("prices", ab.prices, "CSV id,price[,rtt_s]")->required();
  auto* budget = buffers->add_option("--budget", ab.budget, "Total bytes");
  auto* bandwidth = buffers->add_option("--bandwidth", ab.bandwidth, "Bottleneck bits/s; budget uses the mean RTT");
  budget->excludes(bandwidth);
  buffers->add_option("--segment", ab.segment, "Segment size in bytes")->capture_default_str();

  PoliceOptions po;
  auto* police = app.add_subcommand("police", "Estimate weights from a trace, verify declarations, bill");
  police->add_option("trace", po.trace, "Trace CSV")->required();
  police->add_option("--declarations", po.declarations, "CSV flow_id,declared_n,start_s,end_s");
  police->add_option("--tolerance", po.tolerance, "Allowed excess over the declared N")->capture_default_str();
  police->add_option("--period-start", po.period_start, "Billing period start, seconds");
  police->add_option("--period-end", po.period_end, "Billing period end, seconds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) run_simulate(sim);
    if (auto* g = sweep->get_subcommand("gain"); *g) run_sweep_gain(gain);
    if (auto* f = sweep->get_subcommand("fairness"); *f) run_sweep_fairness(fair);
    if (*model_cmd) run_model(model);
    if (*fc_cmd) run_fairness_check(fc);
    if (*rates) run_alloc_rates(ar);
    if (*buffers) {
      if (!ab.budget && !ab.bandwidth) throw std::invalid_argument("alloc buffers needs --budget or --bandwidth");
      run_alloc_buffers(ab);
    }
    if (*police) run_police(po);
  } catch (const std::exception& e) {
    std::cout.flush();
    fmt::print(stderr, "multcp: error: {}\n", e.what());
    return 1;
  }
  return 0;
}
