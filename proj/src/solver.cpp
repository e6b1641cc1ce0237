#include "teforge/solver.hpp"

#include <algorithm>
#include <cmath>

#include "teforge/lp.hpp"

namespace teforge {

double FlowAssignment::total_met() const {
  double sum = 0.0;
  for (const auto& [pair, path_flows] : flows)
    for (double f : path_flows) sum += f;
  return sum;
}

double FlowAssignment::total_unmet(const DemandMatrix& demands) const {
  return demands.total_volume() - total_met();
}

std::vector<double> FlowAssignment::edge_loads(const Topology& topology,
                                               const PathSet& paths) const {
  std::vector<double> loads(topology.edges.size(), 0.0);
  for (const auto& [pair, path_flows] : flows) {
    const std::vector<Path>& candidates = paths.at(pair);
    for (size_t i = 0; i < path_flows.size(); ++i) {
      if (path_flows[i] <= 0.0) continue;
      for (int e : candidates[i].edges) loads[e] += path_flows[i];
    }
  }
  return loads;
}

int FlowAssignment::dominant_path(const PairKey& pair) const {
  auto it = flows.find(pair);
  if (it == flows.end()) return -1;
  int best = -1;
  double best_flow = kEpsNum;
  for (size_t i = 0; i < it->second.size(); ++i) {
    if (it->second[i] > best_flow) {
      best = static_cast<int>(i);
      best_flow = it->second[i];
    }
  }
  return best;
}

double total_met(const FlowAssignment& assignment) { return assignment.total_met(); }

std::string feasibility_violation(const Topology& topology, const DemandMatrix& demands,
                                  const PathSet& paths, const FlowAssignment& assignment,
                                  double eps) {
  for (const auto& [pair, path_flows] : assignment.flows) {
    for (double f : path_flows)
      if (f < -eps) return "negative flow for pair " + pair_label(pair);
  }
  std::vector<double> loads = assignment.edge_loads(topology, paths);
  for (size_t e = 0; e < loads.size(); ++e) {
    if (loads[e] > topology.edges[e].capacity + eps)
      return "capacity exceeded on edge " + topology.edges[e].src + "->" +
             topology.edges[e].dst;
  }
  for (const Demand& d : demands.demands) {
    auto it = assignment.flows.find(d.pair());
    if (it == assignment.flows.end()) continue;
    double routed = 0.0;
    for (double f : it->second) routed += f;
    if (routed > d.volume + eps)
      return "routed volume exceeds demand for pair " + pair_label(d.pair());
  }
  for (const auto& [pair, path_flows] : assignment.flows) {
    double routed = 0.0;
    for (double f : path_flows) routed += f;
    if (routed > kEpsNum && demands.volume(pair) == 0.0 &&
        std::none_of(demands.demands.begin(), demands.demands.end(),
                     [&](const Demand& d) { return d.pair() == pair; }))
      return "flow for pair without demand: " + pair_label(pair);
  }
  double met = assignment.total_met();
  double unmet = assignment.total_unmet(demands);
  if (std::abs(met + unmet - demands.total_volume()) > eps)
    return "met/unmet totals do not conserve demand volume";
  return {};
}

FlowAssignment solve_optimal(const Topology& topology, const DemandMatrix& demands,
                             const PathSet& paths) {
  std::map<PairKey, double> remaining;
  std::map<PairKey, std::vector<std::pair<int, Path>>> candidates;
  for (const Demand& d : demands.demands) {
    const std::vector<Path>& list = paths.at(d.pair());  // throws when missing
    remaining[d.pair()] = d.volume;
    auto& entry = candidates[d.pair()];
    for (size_t i = 0; i < list.size(); ++i) entry.push_back({static_cast<int>(i), list[i]});
  }
  std::vector<double> residual(topology.edges.size());
  for (size_t e = 0; e < topology.edges.size(); ++e) residual[e] = topology.edges[e].capacity;
  return solve_residual_lp(residual, remaining, candidates);
}

FlowAssignment solve_residual_lp(
    const std::vector<double>& residual, const std::map<PairKey, double>& remaining,
    const std::map<PairKey, std::vector<std::pair<int, Path>>>& candidates) {
  // Variables: one per candidate path, ordered by (pair, candidate order).
  struct Var {
    PairKey pair;
    int path_index;
    const Path* path;
  };
  std::vector<Var> vars;
  for (const auto& [pair, list] : candidates) {
    if (remaining.at(pair) <= 0.0) continue;
    for (const auto& [idx, path] : list) vars.push_back({pair, idx, &path});
  }

  LpProblem lp;
  lp.num_vars = static_cast<int>(vars.size());
  lp.objective.assign(vars.size(), 1.0);

  // Per-edge capacity rows, only for edges some candidate uses.
  std::map<int, std::vector<std::pair<int, double>>> edge_terms;
  for (size_t v = 0; v < vars.size(); ++v)
    for (int e : vars[v].path->edges) edge_terms[e].push_back({static_cast<int>(v), 1.0});
  for (const auto& [e, terms] : edge_terms) {
    LpProblem::Row row;
    row.coeffs = terms;
    row.rhs = std::max(0.0, residual[e]);
    lp.rows.push_back(row);
  }

  // Per-pair volume rows.
  std::map<PairKey, std::vector<std::pair<int, double>>> pair_terms;
  for (size_t v = 0; v < vars.size(); ++v)
    pair_terms[vars[v].pair].push_back({static_cast<int>(v), 1.0});
  for (const auto& [pair, terms] : pair_terms) {
    LpProblem::Row row;
    row.coeffs = terms;
    row.rhs = std::max(0.0, remaining.at(pair));
    lp.rows.push_back(row);
  }

  LpSolution sol = solve_lp_max(lp);

  FlowAssignment out;
  for (const auto& [pair, list] : candidates) {
    size_t width = 0;
    for (const auto& [idx, path] : list) width = std::max(width, static_cast<size_t>(idx) + 1);
    out.flows[pair].assign(width, 0.0);
  }
  for (size_t v = 0; v < vars.size(); ++v) {
    if (sol.x[v] > kEpsNum) out.flows[vars[v].pair][vars[v].path_index] = sol.x[v];
  }
  return out;
}

}  // namespace teforge
