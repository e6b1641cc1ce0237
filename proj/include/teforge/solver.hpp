#pragma once

#include "teforge/topology.hpp"

namespace teforge {

/// Flows on the candidate paths of a shared PathSet: flows[pair][i] is the
/// volume routed on paths.at(pair)[i]. Totals and per-edge loads derive from
/// this map.
struct FlowAssignment {
  std::map<PairKey, std::vector<double>> flows;

  double total_met() const;
  double total_unmet(const DemandMatrix& demands) const;
  std::vector<double> edge_loads(const Topology& topology, const PathSet& paths) const;
  /// Index of the path carrying the largest flow for the pair (lowest index
  /// wins ties, which is the path-set tie-break order); -1 when the pair
  /// carries no flow.
  int dominant_path(const PairKey& pair) const;
};

double total_met(const FlowAssignment& assignment);

/// Empty string when feasible; otherwise a description of the first violated
/// capacity / demand-cap / conservation invariant.
std::string feasibility_violation(const Topology& topology, const DemandMatrix& demands,
                                  const PathSet& paths, const FlowAssignment& assignment,
                                  double eps = kEpsCap);

/// Max total met demand over the candidate paths: the path-formulation LP
/// with per-edge capacity rows and per-demand volume rows. Optimality is
/// relative to the supplied PathSet. Every demand pair must be present in the
/// PathSet (possibly with an empty candidate list).
FlowAssignment solve_optimal(const Topology& topology, const DemandMatrix& demands,
                             const PathSet& paths);

/// Same LP on explicit residual capacities and per-pair remaining volumes;
/// candidate lists may be pre-filtered. Used by the interpreter stages.
FlowAssignment solve_residual_lp(const std::vector<double>& residual,
                                 const std::map<PairKey, double>& remaining,
                                 const std::map<PairKey, std::vector<std::pair<int, Path>>>& candidates);

}  // namespace teforge
