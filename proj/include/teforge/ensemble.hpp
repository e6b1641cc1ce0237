#pragma once

#include "teforge/analyzer.hpp"

namespace teforge {

/// {(region, specialist)} entries evaluated in declared order plus a
/// fallback program for inputs outside every region.
struct EnsembleSpec {
  struct Entry {
    Region region;
    HeuristicProgram program;
  };
  std::vector<Entry> entries;
  HeuristicProgram fallback;

  /// Every referenced program must validate ok.
  void validate_programs() const;

  json to_json() const;
  static EnsembleSpec from_json(const json& j);
};

/// Id of the first region containing the matrix, or empty = fallback.
std::string classify(const EnsembleSpec& spec, const DemandMatrix& demands);

struct RouteResult {
  RoutingOutcome outcome;
  std::string region_id;  // empty = fallback
};

/// Dispatch mode: interpret the classified program.
RouteResult route(const EnsembleSpec& spec, const Topology& topology,
                  const DemandMatrix& demands, const PathSet& paths);

/// Parallel mode: run every program (entries then fallback) and keep the
/// best total_met; earliest wins ties.
RouteResult route_parallel(const EnsembleSpec& spec, const Topology& topology,
                           const DemandMatrix& demands, const PathSet& paths);

/// Held-out evaluation of a target (ensemble dispatch or a single program)
/// against the base heuristic on the same instances.
struct HeldoutReport {
  int instances = 0;
  std::vector<double> gaps;       // per instance, evaluation order
  std::vector<double> base_gaps;  // base heuristic on the same instances
  std::vector<std::string> dispatched_region;  // per instance (ensemble target)
  double max_gap = 0.0;
  double mean_gap = 0.0;
  double stderr_gap = 0.0;
  double base_max_gap = 0.0;
  double base_mean_gap = 0.0;
  /// Percent of the base heuristic's worst-case gap on this set.
  double normalized_max_pct = 0.0;
  double normalized_mean_pct = 0.0;
  /// Median wall-clock per instance over the base's; measured, not
  /// deterministic, and therefore kept out of report.json.
  double runtime_ratio = 1.0;

  json to_json(const std::string& config_hash) const;
  std::string to_markdown(const std::string& target_name) const;
};

HeldoutReport evaluate_heldout(const EnsembleSpec& spec,
                               const std::vector<DemandMatrix>& held_out,
                               const Topology& topology, const PathSet& paths,
                               const HeuristicProgram& base);

HeldoutReport evaluate_heldout(const HeuristicProgram& program,
                               const std::vector<DemandMatrix>& held_out,
                               const Topology& topology, const PathSet& paths,
                               const HeuristicProgram& base);

}  // namespace teforge
