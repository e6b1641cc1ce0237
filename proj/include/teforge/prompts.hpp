#pragma once

#include "teforge/analyzer.hpp"
#include "teforge/program.hpp"

namespace teforge {

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::string content;
};

struct PromptBundle {
  std::string template_id;
  std::vector<ChatMessage> messages;
  size_t rendered_chars = 0;

  /// Stable textual form used by golden tests and transcripts.
  std::string render() const;
  json to_json() const;
};

inline constexpr const char* kPatternTemplateId = "pattern_analysis_v1";
inline constexpr const char* kSuggestTemplateId = "suggest_improvement_v1";
inline constexpr const char* kMutationTemplateId = "mutation_v1";
inline constexpr const char* kFixTemplateId = "fix_v1";

/// One line of JSON per sample: demands keyed by "src->dst" plus the gap.
std::string render_sample_line(const DemandMatrix& demands, double gap);

/// Pattern-analysis call: region description plus a balanced batch of
/// adversarial and normal samples, truncated to n per class.
PromptBundle build_pattern_prompt(const Region& region,
                                  const std::vector<AdversarialSample>& adversarial,
                                  const std::vector<AdversarialSample>& normal, int n);

/// Suggest-improvement call: pattern analysis text, current program, decision
/// differences (top 10 by flow volume with a truncation note), task items,
/// requirements and the JSON output format.
PromptBundle build_suggestion_prompt(const std::string& pattern_analysis_text,
                                     const Explanation& explanation,
                                     const HeuristicProgram& program, int n);

struct MutationParent {
  HeuristicProgram program;
  std::vector<AdversarialSample> worst_samples;
};

struct MutationPromptOptions {
  bool include_samples = true;
  bool include_suggestions = true;
  /// Extra decision-difference section (the one-shot samples+explanations
  /// variant); empty = omitted.
  std::string explanations_text;
};

/// Writer mutation call: per-parent code block, worst-m samples and
/// suggestions, then requirements and the {"code","reasoning"} output format.
PromptBundle build_mutation_prompt(const std::vector<MutationParent>& parents,
                                   const std::vector<std::string>& suggestions, int m,
                                   const MutationPromptOptions& options = {});

/// Fix call: failing program text plus the error, asking for corrected
/// program JSON only.
PromptBundle build_fix_prompt(const std::string& program_text, const std::string& error);

}  // namespace teforge
