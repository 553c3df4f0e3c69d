#pragma once

// Gain and fairness sweeps over the dumbbell, plus CSV emission.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "multcp/congestion.hpp"
#include "multcp/scenario.hpp"
#include "multcp/simulation.hpp"

namespace multcp {

inline constexpr std::size_t kDefaultFlows = 22;

std::vector<std::uint64_t> default_seeds(std::size_t count = 10);

struct SweepConfig {
  Variant variant = Variant::reno;
  std::vector<double> n_grid;
  std::vector<std::uint64_t> seeds = default_seeds();
  DumbbellParams topology;
  std::size_t flows = kDefaultFlows;
  SimTime duration = SimTime::from_seconds(70.0);
  SimTime warmup = SimTime::from_seconds(10.0);
  /// Worker threads; 0 picks the hardware concurrency. Results do not
  /// depend on this value.
  unsigned threads = 0;

  /// Throws std::invalid_argument on an empty grid or an invalid weight.
  void validate() const;
};

struct FlowResult {
  std::size_t flow = 0;
  double n = 1.0;
  double rtt = 0.0;         // base route RTT, seconds
  double throughput = 0.0;  // bytes per second over the measurement window
};

struct RunResult {
  double n = 1.0;
  std::uint64_t seed = 0;
  std::vector<FlowResult> flows;
  double utilization = 0.0;  // bottleneck
};

struct GainRow {
  RunResult run;
  double gain = 0.0;  // flow 0 over flow 1
};

struct SummaryRow {
  double n = 1.0;
  std::size_t samples = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  double median = 0.0;
};

struct GainTable {
  Variant variant = Variant::reno;
  std::vector<GainRow> rows;  // grid order, seeds innermost
  std::vector<SummaryRow> summary;
};

struct DispersionRow {
  RunResult run;
  double std_over_mean = 0.0;
};

struct DispersionTable {
  Variant variant = Variant::sack;
  std::vector<DispersionRow> rows;
  std::vector<SummaryRow> summary;
  /// Spearman correlation between N and the mean dispersion over the grid.
  double rank_trend = 0.0;
};

/// Flow 0 runs with weight N, flow 1 is a standard flow of the same variant
/// and the rest are standard background flows.
Scenario gain_scenario(const SweepConfig& config, double n, std::uint64_t seed);
/// Every flow runs with weight N.
Scenario fairness_scenario(const SweepConfig& config, double n, std::uint64_t seed);

RunResult run_once(const Scenario& scenario, double n, std::uint64_t seed);

GainTable run_gain_experiment(const SweepConfig& config);
DispersionTable run_fairness_experiment(const SweepConfig& config);

double mean(const std::vector<double>& v);
/// Zero for fewer than two values.
double sample_sd(const std::vector<double>& v);
double median(std::vector<double> v);
/// Sample standard deviation over mean; zero for a single value.
double std_over_mean(const std::vector<double>& v);
/// Pearson correlation of the average ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

void write_gain_csv(std::ostream& out, const GainTable& table);
void write_gain_flows_csv(std::ostream& out, const GainTable& table);
void write_gain_summary_csv(std::ostream& out, const GainTable& table);
void write_dispersion_csv(std::ostream& out, const DispersionTable& table);
void write_dispersion_flows_csv(std::ostream& out, const DispersionTable& table);
void write_dispersion_summary_csv(std::ostream& out, const DispersionTable& table);
/// Per-flow statistics of one simulation.
void write_flow_stats_csv(std::ostream& out, const Scenario& scenario, const SimulationStats& stats);

/// Writes the plot-ready table to `path` and, beside it, `<stem>.flows.csv`
/// with one row per (N, seed, flow) and `<stem>.summary.csv` with one row per
/// N. Throws std::runtime_error naming the path on I/O failure.
void emit_results(const GainTable& table, const std::string& path);
void emit_results(const DispersionTable& table, const std::string& path);

}  // namespace multcp
