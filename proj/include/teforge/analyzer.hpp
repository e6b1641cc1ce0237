#pragma once

#include <random>

#include "teforge/interpreter.hpp"
#include "teforge/paths.hpp"

namespace teforge {

/// The searchable demand space: a fixed pair list with per-pair volume
/// bounds and an optional cap on the total volume.
struct DemandSpace {
  struct PairBounds {
    PairKey pair;
    double lo = 0.0;
    double hi = 0.0;
  };
  std::vector<PairBounds> pairs;
  std::optional<double> total_cap;

  std::vector<PairKey> pair_keys() const;
  /// Clamps per-pair volumes into bounds and scales down to the total cap.
  DemandMatrix clamp(const DemandMatrix& demands) const;
  bool contains(const DemandMatrix& demands, double eps = kEpsNum) const;
  void validate(const Topology* topology = nullptr) const;

  static DemandSpace from_json(const json& j);
  json to_json() const;
};

struct AdversarialSample {
  DemandMatrix demands;
  double gap = 0.0;             // optimal total_met - heuristic total_met
  double normalized_gap = 0.0;  // gap / worst gap found for the base heuristic
  /// Demand pairs whose dominant path differs between heuristic and optimal.
  std::vector<PairKey> signature;

  json to_json() const;
  static AdversarialSample from_json(const json& j);
};

/// Deterministic uniform sampling within the space bounds.
std::vector<DemandMatrix> sample_normal(const DemandSpace& space, int n, std::uint64_t seed);

/// Restart hill-climbing over per-pair volume perturbations, maximizing the
/// optimal-vs-heuristic gap. Returns every evaluated point deduplicated at
/// grid granularity, sorted by gap descending; gaps are the values computed
/// by solve_optimal/interpret at evaluation time. Deterministic given seed,
/// and for a fixed seed the evaluation sequence is budget-prefix-stable (a
/// larger budget extends, never changes, the earlier evaluations).
std::vector<AdversarialSample> find_adversarial(const HeuristicProgram& program,
                                                const Topology& topology,
                                                const DemandSpace& space, int budget,
                                                std::uint64_t seed, int path_k = 8);

/// A region of demand space: samples grouped by rerouted-pair signature with
/// a padded bounding box fitted over the members.
struct Region {
  std::string id;
  std::vector<PairKey> rerouted_pairs;
  std::vector<DemandSpace::PairBounds> box;
  std::string description;
  std::vector<int> member_indices;  // into the sample list given to partition_regions
  double max_gap = 0.0;

  bool contains(const DemandMatrix& demands, double eps = kEpsNum) const;

  json to_json() const;
  static Region from_json(const json& j);
};

/// Groups samples by signature, merges the smallest groups until at most
/// max_regions remain, and fits a bounding box per group. Regions are
/// ordered by descending worst member gap (the dispatch order).
std::vector<Region> partition_regions(const std::vector<AdversarialSample>& samples,
                                      int max_regions);

struct Explanation {
  struct Difference {
    PairKey pair;
    int heuristic_path = -1;  // candidate index, -1 = none
    int optimal_path = -1;
    double heuristic_flow = 0.0;
    double optimal_flow = 0.0;
    std::string heuristic_label;  // node sequence label, empty = none
    std::string optimal_label;
  };
  std::vector<Difference> differences;
  int pairs_compared = 0;

  json to_json() const;
};

/// Per-pair decision differences: pairs whose dominant path differs between
/// the heuristic outcome and the optimal assignment on the same instance.
Explanation explain(const RoutingOutcome& heuristic_out, const FlowAssignment& optimal_out,
                    const Topology& topology, const DemandMatrix& demands,
                    const PathSet& paths);

/// One sentence per difference, e.g. "the heuristic routes 1->3 via 1-2-3,
/// but the optimal uses 1-4-5-3".
std::string render_explanation_text(const Explanation& explanation);

/// Uniform double in [lo, hi] from raw 64-bit draws; used instead of
/// std::uniform_real_distribution so streams are implementation-independent.
double uniform_in(std::mt19937_64& rng, double lo, double hi);

}  // namespace teforge
