#pragma once

// Fairness predicates and allocators over capacitated networks.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace multcp {

using RateVector = std::vector<double>;
using WeightVector = std::vector<double>;

struct CapacitatedNetwork {
  std::vector<double> capacities;
  /// Link indices crossed by each connection.
  std::vector<std::vector<std::size_t>> routes;

  std::size_t link_count() const { return capacities.size(); }
  std::size_t connection_count() const { return routes.size(); }
  /// Throws std::invalid_argument on a non-positive capacity, an empty
  /// route, or a route naming an unknown link.
  void validate() const;
  /// Per-link sum of the rates crossing it.
  std::vector<double> loads(const RateVector& x) const;
};

/// Relative tolerance on link capacity used by every predicate.
inline constexpr double kFeasibilityTolerance = 1e-9;
/// Absolute slack on the aggregate proportional change.
inline constexpr double kPfEpsilon = 1e-9;

bool is_feasible(const RateVector& x, const CapacitatedNetwork& net);

struct PfVerdict {
  bool pass = true;
  std::size_t trials = 0;
  double worst_sum = 0.0;  // largest sampled sum of w_s (y_s - x_s) / x_s
  RateVector worst_y;
  /// Set when all weights are equal; the same check with unit weights.
  std::optional<bool> unweighted_pass;
};

/// Samples feasible alternatives y and checks that none improves the
/// weighted aggregate of proportional changes by more than kPfEpsilon. Half
/// the samples are uniform over each connection's route capacity, half are
/// multiplicative perturbations of x; each sample is rescaled so its most
/// loaded link is exactly saturated. Throws std::domain_error when x has a
/// zero rate.
PfVerdict check_weighted_pf(const RateVector& x, const WeightVector& w, const CapacitatedNetwork& net,
                            std::size_t trials, std::uint64_t seed);

enum class MaxMinMethod { brute_force, bottleneck_criterion };

std::string to_string(MaxMinMethod method);

struct MaxMinVerdict {
  bool pass = false;
  MaxMinMethod method = MaxMinMethod::bottleneck_criterion;
  bool bottleneck_pass = false;
  /// Grid results, only for brute-force-sized instances. The `<=` form
  /// decides `pass`; the strict form differs only on ties.
  std::optional<bool> nonstrict_pass;
  std::optional<bool> strict_pass;
  std::optional<RateVector> counterexample;
};

inline constexpr std::size_t kBruteForceConnections = 4;
inline constexpr std::size_t kBruteForceLinks = 3;

MaxMinVerdict check_maxmin(const RateVector& x, const CapacitatedNetwork& net, int grid_steps = 20);

/// Progressive filling.
RateVector maxmin_allocate(const CapacitatedNetwork& net);

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Maximizer of sum w_s log x_s over the feasible region. Single-link
/// networks use the closed form; otherwise link prices are found by cyclic
/// coordinate descent on the dual until the relative KKT residual is tiny.
RateVector wpf_allocate(const CapacitatedNetwork& net, const WeightVector& w, int max_sweeps = 100000);

}  // namespace multcp
