#pragma once

#include "teforge/backend.hpp"

namespace teforge {

struct PatternReport {
  struct Pattern {
    std::string name;
    std::string description;
  };
  std::vector<Pattern> patterns;
  bool empty_marker = false;  // backend produced no usable text
  std::string region_id;

  std::string to_text() const;
};

struct Suggestion {
  std::string idea;
  std::string reasoning;
  std::string region_id;
  std::string backend_id;
  std::string template_id;

  json to_json() const;
  static Suggestion from_json(const json& j);
};

/// Parses numbered-list backend text into named patterns ("1. Name: desc");
/// non-conforming text collapses into one unnamed pattern, empty text yields
/// the explicit empty marker. Never throws on content.
PatternReport parse_pattern_text(const std::string& text);

PatternReport analyze_patterns(LlmBackend& backend, const PromptBundle& prompt);

/// Strips code fences and extracts the first JSON array of
/// {"idea","reasoning"} objects; nullopt when no parse succeeds.
std::optional<std::vector<Suggestion>> parse_suggestions(const std::string& text);

/// Two-stage pipeline: pattern analysis over a balanced batch, then the
/// suggestion call. At most n suggestions; one retry with a format reminder
/// on parse failure; empty list (never a throw) when the retry also fails.
std::vector<Suggestion> suggest(LlmBackend& backend, const Region& region,
                                const std::vector<AdversarialSample>& adversarial,
                                const std::vector<AdversarialSample>& normal,
                                const Explanation& explanation,
                                const HeuristicProgram& program, int n,
                                int batch_per_class = 5);

/// Top-m adversarial members plus the m normal samples nearest (euclidean
/// over pair volumes) to the adversarial centroid: the balanced batch fed to
/// pattern analysis.
std::pair<std::vector<AdversarialSample>, std::vector<AdversarialSample>> balanced_batch(
    const Region& region, const std::vector<AdversarialSample>& samples,
    const std::vector<DemandMatrix>& normal_pool, int m);

}  // namespace teforge
