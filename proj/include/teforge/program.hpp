#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "teforge/common.hpp"

namespace teforge {

/// Route every demand with volume < threshold fully-or-nothing on its
/// shortest path.
struct PinSmall {
  double threshold = 0.0;
  bool operator==(const PinSmall&) const = default;
};

/// Per ordered demand, fill the top-k candidate paths greedily; with
/// split=false the demand goes fully-or-nothing on the first fitting path.
struct GreedyTopK {
  int k = 1;
  bool split = true;
  bool operator==(const GreedyTopK&) const = default;
};

/// Optimal LP over residual capacities for the remaining demands, either all
/// of them or only the `heavy_count` largest remainders.
struct LpResidual {
  std::optional<int> heavy_count;  // nullopt = all_remaining
  bool operator==(const LpResidual&) const = default;
};

/// Re-solve the neighborhood of over-utilized edges: carve the nodes within
/// `radius` hops of a hot edge's endpoints, clear flows on paths that touch
/// region edges, re-route the region's demands optimally and keep the result
/// only when it does not lose traffic.
struct HotspotReopt {
  double util_threshold = 0.8;
  int max_hotspots = 1;
  int radius = 1;
  bool operator==(const HotspotReopt&) const = default;
};

using Stage = std::variant<PinSmall, GreedyTopK, LpResidual, HotspotReopt>;

enum class Ordering { volume_desc, volume_asc, pair_lex };

std::string ordering_name(Ordering o);

/// One heuristic: an ordering over demands plus a stage list, executed under
/// a wall-clock budget. Programs round-trip losslessly through canonical
/// JSON.
struct HeuristicProgram {
  std::string name;
  Ordering ordering = Ordering::pair_lex;
  std::int64_t budget_ms = 2000;
  std::vector<std::string> lineage;
  std::vector<Stage> stages;

  bool operator==(const HeuristicProgram&) const = default;
};

/// All range/shape violations; empty means the program is safe to interpret.
std::vector<std::string> validate(const HeuristicProgram& program);

/// Demand pinning below `threshold`, then an exact LP on the residual.
HeuristicProgram base_heuristic(double threshold);

json program_to_json(const HeuristicProgram& program);
/// Throws ProgramError naming the offending field / unknown stage tag.
HeuristicProgram program_from_json(const json& j);

/// Canonical serialized form (sorted keys); parse(serialize(p)) == p.
std::string serialize_program(const HeuristicProgram& program);
HeuristicProgram parse_program(const std::string& text);

/// Canonical form with name/lineage stripped; two programs with equal
/// semantic JSON are considered the same individual by the search.
std::string canonical_semantic_json(const HeuristicProgram& program);

}  // namespace teforge
