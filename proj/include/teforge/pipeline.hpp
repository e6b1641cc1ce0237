#pragma once

#include "teforge/ensemble.hpp"
#include "teforge/run_config.hpp"

namespace teforge {

/// Everything the subcommands share, built once from the effective config.
struct PipelineContext {
  RunConfig config;
  std::string hash;
  Topology topology;
  PathSet paths;
  HeuristicProgram base;
};

PipelineContext load_context(const RunConfig& config);

/// Seeded held-out set: uniform samples mixed with adversarial samples found
/// against the base heuristic, on a seed disjoint from analysis/training.
std::vector<DemandMatrix> make_heldout(const PipelineContext& ctx);

struct AnalysisArtifacts {
  std::vector<AdversarialSample> samples;
  std::vector<Region> regions;

  const Region& region_by_id(const std::string& id) const;
};

/// find_adversarial + partition_regions + explain on the base heuristic;
/// writes samples.json, regions.json and explanations.json under
/// out_dir/analysis.
AnalysisArtifacts cmd_analyze(const PipelineContext& ctx);

/// Loads (and hash-checks) the analyze artifacts.
AnalysisArtifacts load_analysis(const PipelineContext& ctx);

/// Suggester + writer for one region; artifacts go to out_dir/search_<id>.
SearchState cmd_search(const PipelineContext& ctx, const std::string& region_id, bool resume);

/// Assembles the ensemble from per-region search results, evaluates it on a
/// fresh held-out set and writes ensemble.json / report.json / report.md.
HeldoutReport cmd_ensemble(const PipelineContext& ctx);

/// Single-step prompt-variant comparison (vanilla / samples /
/// samples+explanations / suggestions), ten candidates each, evaluated on
/// the held-out adversarial samples; writes oneshot.json.
json cmd_oneshot(const PipelineContext& ctx);

/// Emits plot-ready CSVs from an existing run directory into dir/plots.
void cmd_plotdata(const std::string& dir);

}  // namespace teforge
