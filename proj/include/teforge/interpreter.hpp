#pragma once

#include "teforge/program.hpp"
#include "teforge/solver.hpp"

namespace teforge {

struct RoutingOutcome {
  FlowAssignment assignment;
  double total_met = 0.0;
  double total_unmet = 0.0;
  std::int64_t elapsed_ms = 0;
  bool timed_out = false;
  /// Dominant candidate-path index per demand pair (-1 = none routed).
  std::map<PairKey, int> dominant_paths;
};

/// Executes the program's stages over a residual-capacity view. Throws
/// ProgramError when validate(program) reports violations and InstanceError
/// when a demand pair is missing from the PathSet; never fails otherwise.
/// When the wall-clock budget runs out between atomic steps the partial
/// (feasible) outcome is returned with timed_out set.
RoutingOutcome interpret(const HeuristicProgram& program, const Topology& topology,
                         const DemandMatrix& demands, const PathSet& paths);

/// solve_optimal.total_met - interpret.total_met, floored at zero.
double evaluate_gap(const HeuristicProgram& program, const Topology& topology,
                    const DemandMatrix& demands, const PathSet& paths,
                    double optimal_total);

}  // namespace teforge
