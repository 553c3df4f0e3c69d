#include "multcp/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace multcp {

namespace {

Scenario base_scenario(const SweepConfig& config, std::uint64_t seed) {
  DumbbellParams params = config.topology;
  params.variant = config.variant;
  params.n = 1.0;
  Scenario s = build_dumbbell(config.flows, params);
  s.duration = config.duration;
  s.warmup = config.warmup;
  s.seed = seed;
  return s;
}

// Runs job(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < count; i = next++) job(i);
      } catch (...) {
        errors[t] = std::current_exception();
        next = count;
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <typename Row, typename Value>
std::vector<SummaryRow> summarize(const std::vector<double>& grid, const std::vector<Row>& rows, Value value) {
  std::vector<SummaryRow> out;
  for (double n : grid) {
    std::vector<double> v;
    for (const Row& r : rows) {
      if (r.run.n == n) v.push_back(value(r));
    }
    out.push_back(SummaryRow{n, v.size(), mean(v), sample_sd(v), median(v)});
  }
  return out;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
}

std::filesystem::path sibling(const std::filesystem::path& path, const std::string& suffix) {
  std::filesystem::path p = path;
  p.replace_filename(path.stem().string() + suffix);
  return p;
}

template <typename Table>
void emit(const Table& table, const std::string& path, void (*main)(std::ostream&, const Table&),
          void (*flows)(std::ostream&, const Table&), void (*summary)(std::ostream&, const Table&)) {
  const std::filesystem::path p(path);
  const std::pair<std::filesystem::path, void (*)(std::ostream&, const Table&)> files[] = {
      {p, main}, {sibling(p, ".flows.csv"), flows}, {sibling(p, ".summary.csv"), summary}};
  for (const auto& [file, writer] : files) {
    std::ofstream out = open_output(file);
    writer(out, table);
    finish(out, file);
  }
}

}  // namespace

std::vector<std::uint64_t> default_seeds(std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  std::iota(seeds.begin(), seeds.end(), std::uint64_t{1});
  return seeds;
}

void SweepConfig::validate() const {
  if (n_grid.empty()) throw std::invalid_argument("the N grid is empty");
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  for (double n : n_grid) {
    if (!(n >= 1.0)) throw std::invalid_argument(fmt::format("grid weight {} is below 1", n));
  }
  if (flows < 2) throw std::invalid_argument("a sweep needs at least two flows");
}

Scenario gain_scenario(const SweepConfig& config, double n, std::uint64_t seed) {
  Scenario s = base_scenario(config, seed);
  s.flows[0].n = n;
  s.validate();
  return s;
}

Scenario fairness_scenario(const SweepConfig& config, double n, std::uint64_t seed) {
  Scenario s = base_scenario(config, seed);
  for (FlowSpec& f : s.flows) f.n = n;
  s.validate();
  return s;
}

RunResult run_once(const Scenario& scenario, double n, std::uint64_t seed) {
  Simulation sim(scenario);
  const SimulationStats stats = sim.run();
  RunResult r;
  r.n = n;
  r.seed = seed;
  double total = 0.0;
  double capacity = 0.0;
  for (std::size_t i = 0; i < scenario.flows.size(); ++i) {
    r.flows.push_back(FlowResult{i, scenario.flows[i].n, scenario.base_rtt(i).seconds(), stats.throughput(i)});
    total += stats.throughput(i);
    const double bw = scenario.path_bandwidth(i);
    capacity = capacity == 0.0 ? bw : std::min(capacity, bw);
  }
  r.utilization = total * 8.0 / capacity;
  return r;
}

GainTable run_gain_experiment(const SweepConfig& config) {
  config.validate();
  GainTable table;
  table.variant = config.variant;
  const std::size_t k = config.seeds.size();
  table.rows.resize(config.n_grid.size() * k);
  parallel_for(table.rows.size(), config.threads, [&](std::size_t i) {
    const double n = config.n_grid[i / k];
    const std::uint64_t seed = config.seeds[i % k];
    GainRow& row = table.rows[i];
    row.run = run_once(gain_scenario(config, n, seed), n, seed);
    const double reference = row.run.flows[1].throughput;
    row.gain = reference > 0.0 ? row.run.flows[0].throughput / reference : 0.0;
  });
  table.summary = summarize(config.n_grid, table.rows, [](const GainRow& r) { return r.gain; });
  return table;
}

DispersionTable run_fairness_experiment(const SweepConfig& config) {
  config.validate();
  DispersionTable table;
  table.variant = config.variant;
  const std::size_t k = config.seeds.size();
  table.rows.resize(config.n_grid.size() * k);
  parallel_for(table.rows.size(), config.threads, [&](std::size_t i) {
    const double n = config.n_grid[i / k];
    const std::uint64_t seed = config.seeds[i % k];
    DispersionRow& row = table.rows[i];
    row.run = run_once(fairness_scenario(config, n, seed), n, seed);
    std::vector<double> normalized;
    for (const FlowResult& f : row.run.flows) normalized.push_back(f.throughput * f.rtt);
    row.std_over_mean = std_over_mean(normalized);
  });
  table.summary = summarize(config.n_grid, table.rows, [](const DispersionRow& r) { return r.std_over_mean; });
  std::vector<double> means;
  for (const SummaryRow& s : table.summary) means.push_back(s.mean);
  table.rank_trend = config.n_grid.size() > 1 ? spearman(config.n_grid, means) : 0.0;
  return table;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double std_over_mean(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  if (m == 0.0) throw std::domain_error("dispersion is undefined for a zero mean");
  return sample_sd(v) / m;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman needs two equal series of length >= 2");
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  const double mx = mean(rx);
  const double my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

void write_gain_csv(std::ostream& out, const GainTable& table) {
  fmt::print(out, "variant,N,seed,gain\n");
  for (const GainRow& r : table.rows) {
    fmt::print(out, "{},{:.9g},{},{:.9g}\n", to_string(table.variant), r.run.n, r.run.seed, r.gain);
  }
}

void write_gain_flows_csv(std::ostream& out, const GainTable& table) {
  fmt::print(out, "variant,N,seed,flow,flow_N,rtt_s,throughput_Bps\n");
  for (const GainRow& r : table.rows) {
    for (const FlowResult& f : r.run.flows) {
      fmt::print(out, "{},{:.9g},{},{},{:.9g},{:.9g},{:.9g}\n", to_string(table.variant), r.run.n, r.run.seed, f.flow,
                 f.n, f.rtt, f.throughput);
    }
  }
}

void write_gain_summary_csv(std::ostream& out, const GainTable& table) {
  fmt::print(out, "variant,N,seeds,mean_gain,sd_gain,median_gain\n");
  for (const SummaryRow& s : table.summary) {
    fmt::print(out, "{},{:.9g},{},{:.9g},{:.9g},{:.9g}\n", to_string(table.variant), s.n, s.samples, s.mean, s.sd,
               s.median);
  }
}

void write_dispersion_csv(std::ostream& out, const DispersionTable& table) {
  fmt::print(out, "N,seed,std_over_mean\n");
  for (const DispersionRow& r : table.rows) fmt::print(out, "{:.9g},{},{:.9g}\n", r.run.n, r.run.seed, r.std_over_mean);
}

void write_dispersion_flows_csv(std::ostream& out, const DispersionTable& table) {
  fmt::print(out, "N,seed,flow,rtt_s,throughput_Bps,normalized\n");
  for (const DispersionRow& r : table.rows) {
    for (const FlowResult& f : r.run.flows) {
      fmt::print(out, "{:.9g},{},{},{:.9g},{:.9g},{:.9g}\n", r.run.n, r.run.seed, f.flow, f.rtt, f.throughput,
                 f.throughput * f.rtt);
    }
  }
}

void write_dispersion_summary_csv(std::ostream& out, const DispersionTable& table) {
  fmt::print(out, "N,seeds,mean_std_over_mean,sd_std_over_mean,median_std_over_mean\n");
  for (const SummaryRow& s : table.summary) {
    fmt::print(out, "{:.9g},{},{:.9g},{:.9g},{:.9g}\n", s.n, s.samples, s.mean, s.sd, s.median);
  }
}

void write_flow_stats_csv(std::ostream& out, const Scenario& scenario, const SimulationStats& stats) {
  fmt::print(out,
             "flow,variant,N,rtt_s,throughput_Bps,packets_sent,retransmissions,packets_dropped,fast_retransmits,"
             "timeouts,bytes_delivered\n");
  for (std::size_t i = 0; i < scenario.flows.size(); ++i) {
    const FlowSpec& f = scenario.flows[i];
    const FlowStats& s = stats.flows[i];
    fmt::print(out, "{},{},{:.9g},{:.9g},{:.9g},{},{},{},{},{},{}\n", i, to_string(f.variant), f.n,
               scenario.base_rtt(i).seconds(), stats.throughput(i), s.packets_sent, s.retransmissions,
               s.packets_dropped, s.fast_retransmits, s.timeouts, s.bytes_delivered);
  }
}

void emit_results(const GainTable& table, const std::string& path) {
  emit(table, path, &write_gain_csv, &write_gain_flows_csv, &write_gain_summary_csv);
}

void emit_results(const DispersionTable& table, const std::string& path) {
  emit(table, path, &write_dispersion_csv, &write_dispersion_flows_csv, &write_dispersion_summary_csv);
}

}  // namespace multcp
