#include "multcp/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace multcp {

namespace {

void require_dimensions(const RateVector& x, const CapacitatedNetwork& net) {
  if (x.size() != net.connection_count()) {
    throw std::invalid_argument("rate vector has " + std::to_string(x.size()) + " entries for " +
                                std::to_string(net.connection_count()) + " connections");
  }
}

bool saturated(double load, double capacity) { return load >= capacity * (1.0 - kFeasibilityTolerance); }

double route_capacity(const CapacitatedNetwork& net, std::size_t s) {
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t l : net.routes[s]) c = std::min(c, net.capacities[l]);
  return c;
}

// Scales y so that its most loaded link is exactly saturated.
void saturate(RateVector& y, const CapacitatedNetwork& net) {
  const std::vector<double> load = net.loads(y);
  double scale = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < load.size(); ++l) {
    if (load[l] > 0.0) scale = std::min(scale, net.capacities[l] / load[l]);
  }
  if (std::isfinite(scale)) {
    for (double& v : y) v *= scale;
  }
}

bool bottleneck_condition(const RateVector& x, const CapacitatedNetwork& net) {
  const std::vector<double> load = net.loads(x);
  std::vector<double> peak(net.link_count(), 0.0);
  for (std::size_t s = 0; s < x.size(); ++s) {
    for (std::size_t l : net.routes[s]) peak[l] = std::max(peak[l], x[s]);
  }
  for (std::size_t r = 0; r < x.size(); ++r) {
    bool found = false;
    for (std::size_t l : net.routes[r]) {
      const double tol = kFeasibilityTolerance * net.capacities[l];
      if (saturated(load[l], net.capacities[l]) && x[r] >= peak[l] - tol) {
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

struct GridOutcome {
  bool nonstrict = true;
  bool strict = true;
  std::optional<RateVector> counterexample;
};

GridOutcome grid_search(const RateVector& x, const CapacitatedNetwork& net, int steps) {
  const std::size_t n = x.size();
  double scale = 0.0;
  for (double c : net.capacities) scale = std::max(scale, c);
  const double tol = 1e-12 * scale;

  std::vector<std::vector<double>> values(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double cap = route_capacity(net, s);
    const double h = cap / steps;
    for (int k = 0; k <= steps; ++k) values[s].push_back(h * k);
    for (double v : {x[s], x[s] - h / 10.0, x[s] + h / 10.0}) {
      if (v >= 0.0) values[s].push_back(v);
    }
    std::sort(values[s].begin(), values[s].end());
    values[s].erase(std::unique(values[s].begin(), values[s].end()), values[s].end());
  }

  GridOutcome out;
  std::vector<std::size_t> index(n, 0);
  RateVector y(n);
  while (true) {
    for (std::size_t s = 0; s < n; ++s) y[s] = values[s][index[s]];
    if (is_feasible(y, net)) {
      for (std::size_t r = 0; r < n; ++r) {
        if (!(y[r] > x[r] + tol)) continue;
        bool weak = false;
        bool strict = false;
        for (std::size_t s = 0; s < n; ++s) {
          if (!(y[s] < x[s] - tol)) continue;
          if (x[s] <= x[r] + tol) weak = true;
          if (x[s] < x[r] - tol) strict = true;
        }
        if (!weak && out.nonstrict) {
          out.nonstrict = false;
          out.counterexample = y;
        }
        if (!strict) out.strict = false;
      }
    }
    std::size_t d = 0;
    while (d < n && ++index[d] == values[d].size()) index[d++] = 0;
    if (d == n) break;
  }
  return out;
}

// Root of sum_s w_s / (mu + m_s) = c in mu >= 0, or 0 if the sum is already
// within capacity at mu = 0.
double solve_price(const std::vector<double>& w, const std::vector<double>& m, double c) {
  auto excess = [&](double mu) {
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] / (mu + m[i]);
    return sum - c;
  };
  const bool open = std::all_of(m.begin(), m.end(), [](double v) { return v > 0.0; });
  if (open && excess(0.0) <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = std::accumulate(w.begin(), w.end(), 0.0) / c;
  for (int i = 0; i < 200 && hi - lo > 1e-16 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

void CapacitatedNetwork::validate() const {
  for (std::size_t l = 0; l < capacities.size(); ++l) {
    if (!(capacities[l] > 0.0)) throw std::invalid_argument("link " + std::to_string(l) + " has non-positive capacity");
  }
  for (std::size_t s = 0; s < routes.size(); ++s) {
    if (routes[s].empty()) throw std::invalid_argument("connection " + std::to_string(s) + " has an empty route");
    for (std::size_t l : routes[s]) {
      if (l >= capacities.size()) {
        throw std::invalid_argument("connection " + std::to_string(s) + " crosses unknown link " + std::to_string(l));
      }
    }
  }
}

std::vector<double> CapacitatedNetwork::loads(const RateVector& x) const {
  std::vector<double> load(capacities.size(), 0.0);
  for (std::size_t s = 0; s < routes.size(); ++s) {
    for (std::size_t l : routes[s]) load[l] += x[s];
  }
  return load;
}

bool is_feasible(const RateVector& x, const CapacitatedNetwork& net) {
  require_dimensions(x, net);
  if (std::any_of(x.begin(), x.end(), [](double v) { return !(v >= 0.0); })) return false;
  const std::vector<double> load = net.loads(x);
  for (std::size_t l = 0; l < load.size(); ++l) {
    if (load[l] > net.capacities[l] * (1.0 + kFeasibilityTolerance)) return false;
  }
  return true;
}

PfVerdict check_weighted_pf(const RateVector& x, const WeightVector& w, const CapacitatedNetwork& net,
                            std::size_t trials, std::uint64_t seed) {
  net.validate();
  require_dimensions(x, net);
  if (w.size() != x.size()) throw std::invalid_argument("weight vector length does not match the connections");
  if (std::any_of(w.begin(), w.end(), [](double v) { return !(v > 0.0); })) {
    throw std::invalid_argument("weights must be positive");
  }
  if (std::any_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) {
    throw std::domain_error("proportional fairness is undefined for a zero rate");
  }
  if (!is_feasible(x, net)) throw std::invalid_argument("rate vector is not feasible");

  const bool equal = std::all_of(w.begin(), w.end(), [&](double v) { return v == w.front(); });
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PfVerdict verdict;
  verdict.trials = trials;
  verdict.worst_sum = -std::numeric_limits<double>::infinity();
  bool unweighted = true;
  RateVector y(x.size());
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t s = 0; s < x.size(); ++s) {
      y[s] = t % 2 == 0 ? unit(rng) * route_capacity(net, s) : x[s] * (0.5 + unit(rng));
    }
    saturate(y, net);
    double sum = 0.0;
    double plain = 0.0;
    for (std::size_t s = 0; s < x.size(); ++s) {
      sum += w[s] * (y[s] - x[s]) / x[s];
      plain += (y[s] - x[s]) / x[s];
    }
    if (sum > verdict.worst_sum) {
      verdict.worst_sum = sum;
      verdict.worst_y = y;
    }
    if (sum > kPfEpsilon) verdict.pass = false;
    if (plain > kPfEpsilon) unweighted = false;
  }
  if (equal) verdict.unweighted_pass = unweighted;
  return verdict;
}

std::string to_string(MaxMinMethod method) {
  return method == MaxMinMethod::brute_force ? "brute-force" : "bottleneck-criterion";
}

MaxMinVerdict check_maxmin(const RateVector& x, const CapacitatedNetwork& net, int grid_steps) {
  net.validate();
  require_dimensions(x, net);
  if (!is_feasible(x, net)) throw std::invalid_argument("rate vector is not feasible");
  if (grid_steps < 1) throw std::invalid_argument("grid needs at least one step");

  MaxMinVerdict verdict;
  verdict.bottleneck_pass = bottleneck_condition(x, net);
  if (net.connection_count() > kBruteForceConnections || net.link_count() > kBruteForceLinks) {
    verdict.method = MaxMinMethod::bottleneck_criterion;
    verdict.pass = verdict.bottleneck_pass;
    return verdict;
  }
  const GridOutcome grid = grid_search(x, net, grid_steps);
  verdict.method = MaxMinMethod::brute_force;
  verdict.nonstrict_pass = grid.nonstrict;
  verdict.strict_pass = grid.strict;
  verdict.counterexample = grid.counterexample;
  verdict.pass = grid.nonstrict;
  return verdict;
}

RateVector maxmin_allocate(const CapacitatedNetwork& net) {
  net.validate();
  const std::size_t n = net.connection_count();
  RateVector x(n, 0.0);
  std::vector<bool> frozen(n, false);
  std::vector<bool> full(net.link_count(), false);

  for (std::size_t remaining = n; remaining > 0;) {
    std::vector<double> load = net.loads(x);
    std::vector<std::size_t> active(net.link_count(), 0);
    for (std::size_t s = 0; s < n; ++s) {
      if (frozen[s]) continue;
      for (std::size_t l : net.routes[s]) ++active[l];
    }
    double step = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < net.link_count(); ++l) {
      if (active[l] > 0) step = std::min(step, (net.capacities[l] - load[l]) / static_cast<double>(active[l]));
    }
    step = std::max(step, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      if (!frozen[s]) x[s] += step;
    }
    load = net.loads(x);
    for (std::size_t l = 0; l < net.link_count(); ++l) {
      if (active[l] > 0 && saturated(load[l], net.capacities[l])) full[l] = true;
    }
    for (std::size_t s = 0; s < n; ++s) {
      if (frozen[s]) continue;
      if (std::any_of(net.routes[s].begin(), net.routes[s].end(), [&](std::size_t l) { return full[l]; })) {
        frozen[s] = true;
        --remaining;
      }
    }
  }
  return x;
}

RateVector wpf_allocate(const CapacitatedNetwork& net, const WeightVector& w, int max_sweeps) {
  net.validate();
  const std::size_t n = net.connection_count();
  if (w.size() != n) throw std::invalid_argument("weight vector length does not match the connections");
  if (std::any_of(w.begin(), w.end(), [](double v) { return !(v > 0.0); })) {
    throw std::invalid_argument("weights must be positive");
  }
  if (n == 0) return {};

  if (net.link_count() == 1) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    RateVector x(n);
    for (std::size_t s = 0; s < n; ++s) x[s] = net.capacities[0] * w[s] / total;
    return x;
  }

  std::vector<std::vector<std::size_t>> users(net.link_count());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t l : net.routes[s]) users[l].push_back(s);
  }
  std::vector<double> mu(net.link_count(), 0.0);
  for (std::size_t l = 0; l < mu.size(); ++l) {
    for (std::size_t s : users[l]) mu[l] += w[s];
    mu[l] /= net.capacities[l];
  }
  auto price = [&](std::size_t s) {
    double sum = 0.0;
    for (std::size_t l : net.routes[s]) sum += mu[l];
    return sum;
  };
  auto rates = [&] {
    RateVector x(n);
    for (std::size_t s = 0; s < n; ++s) x[s] = w[s] / price(s);
    return x;
  };
  auto residual = [&](const RateVector& x) {
    const std::vector<double> load = net.loads(x);
    double r = 0.0;
    for (std::size_t l = 0; l < load.size(); ++l) {
      if (users[l].empty()) continue;
      const double gap = (load[l] - net.capacities[l]) / net.capacities[l];
      r = std::max(r, mu[l] > 0.0 ? std::abs(gap) : std::max(0.0, gap));
    }
    return r;
  };

  RateVector x = rates();
  double r = residual(x);
  for (int sweep = 0; sweep < max_sweeps && r > 1e-13; ++sweep) {
    for (std::size_t l = 0; l < mu.size(); ++l) {
      if (users[l].empty()) continue;
      std::vector<double> ws;
      std::vector<double> others;
      for (std::size_t s : users[l]) {
        ws.push_back(w[s]);
        others.push_back(std::max(0.0, price(s) - mu[l]));
      }
      mu[l] = solve_price(ws, others, net.capacities[l]);
    }
    x = rates();
    r = residual(x);
  }
  if (r > 1e-6) throw ConvergenceError("weighted proportional allocation did not converge", r);

  // Trim rounding so the result is feasible without tolerance.
  const std::vector<double> load = net.loads(x);
  double scale = 1.0;
  for (std::size_t l = 0; l < load.size(); ++l) {
    if (load[l] > net.capacities[l]) scale = std::min(scale, net.capacities[l] / load[l]);
  }
  for (double& v : x) v *= scale;
  return x;
}

}  // namespace multcp
