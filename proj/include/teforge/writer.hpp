#pragma once

#include <random>

#include "teforge/suggester.hpp"

namespace teforge {

struct WriterConfig {
  int islands = 3;          // I
  int max_iterations = 10;  // T
  int worst_samples = 5;    // m shown to the backend
  int fix_rounds = 3;       // R_fix
  int archive_size = 16;    // A
  int patience = 5;         // p
  int parents = 1;          // k
  int island_member_cap = 8;
  std::uint64_t seed = 0;

  void validate() const;
  json to_json() const;
  static WriterConfig from_json(const json& j);
};

struct ScoredProgram {
  HeuristicProgram program;
  double worst_gap = 0.0;
  std::vector<double> per_sample_gaps;  // aligned with the training batch

  json to_json() const;
  static ScoredProgram from_json(const json& j);
};

struct Island {
  int id = 0;
  std::vector<ScoredProgram> members;

  /// Lowest worst-case gap across members.
  double best_gap() const;
  const ScoredProgram& best_member() const;
};

struct CandidateRecord {
  int iteration = 0;
  int island = 0;
  std::string name;
  std::string status;  // accepted / rejected / fixed_then_* / failed / backend_error
  double worst_gap = -1.0;  // -1 when never scored
  int fix_rounds_used = 0;
};

struct CurvePoint {
  int iteration = 0;
  double best_train_gap = 0.0;
  double best_heldout_gap = 0.0;
};

struct SearchState {
  WriterConfig config;
  std::string config_hash;
  std::vector<Island> islands;
  std::vector<ScoredProgram> archive;
  int iteration = 0;
  std::vector<CurvePoint> curve;  // running minima, index 0 = the seeded base
  std::string rng_state;
  json backend_state;  // opaque; scripted consumption counters
  int backend_calls = 0;
  ScoredProgram best;
  double best_heldout_gap = 0.0;
  int no_improve_iters = 0;
  std::vector<CandidateRecord> candidates;
  bool finished = false;
  std::string stop_reason;

  json to_json() const;
  static SearchState from_json(const json& j);
};

/// k parents by size-2 tournaments minimizing worst-case gap; deterministic
/// given the rng state. Returns member indices.
std::vector<int> tournament_select(const Island& island, std::mt19937_64& rng, int k);

/// True iff the candidate's semantic canonical JSON differs from every
/// member's (name/lineage metadata excluded).
bool is_diverse(const HeuristicProgram& candidate, const Island& island);

/// Extracts a heuristic program from backend output: fenced or bare JSON,
/// either a [{"code": ..., "reasoning": ...}] array or a program object.
/// Throws ProgramError with a message suitable for the fix prompt.
HeuristicProgram parse_candidate_text(const std::string& text);

std::string checkpoint(const SearchState& state, const std::string& dir);
/// Throws IoError naming the failed section on corrupt files.
SearchState restore(const std::string& path);

/// The island-based evolutionary loop. Writes checkpoints/, curves.csv and
/// candidates.jsonl under run_dir when given; resumes from `resume` when
/// present (the backend's consumption state is restored from it).
SearchState run_search(const WriterConfig& config, const HeuristicProgram& base,
                       const std::vector<DemandMatrix>& train,
                       const std::vector<DemandMatrix>& held_out,
                       const std::vector<Suggestion>& suggestions, LlmBackend& backend,
                       const Topology& topology, const PathSet& paths,
                       const std::string& run_dir = {},
                       const std::string& config_hash = {},
                       std::optional<SearchState> resume = std::nullopt);

void write_curves_csv(const SearchState& state, const std::string& path);

}  // namespace teforge
