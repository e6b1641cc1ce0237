#include "teforge/prompts.hpp"

#include <algorithm>

namespace teforge {

namespace {

const char* kProblemDescription =
    "You are an expert in analyzing heuristic performance difference between the optimal "
    "solution and the heuristic solution in the Traffic Engineering problem. In this "
    "problem, we have a topology with nodes and directed edges with limited capacity. The "
    "inputs are the demands between the nodes. The goal is to route the maximum amount of "
    "traffic between the nodes in the network. Your final goal is to help design a better "
    "heuristic. Be concise and to the point.";

// Compact schema reminder included wherever the model is asked to reason
// about or emit heuristic programs.
const char* kProgramSchema =
    "Heuristics are staged routing programs in JSON with fields \"name\", \"ordering\" "
    "(volume_desc | volume_asc | pair_lex), \"budget_ms\", \"lineage\" and \"stages\". "
    "Stage types: {\"type\": \"pin_small\", \"threshold\": <number>}, {\"type\": "
    "\"greedy_topk\", \"k\": <int>, \"split\": <bool>}, {\"type\": \"lp_residual\", "
    "\"scope\": \"all_remaining\"} or {\"type\": \"lp_residual\", \"scope\": "
    "\"heavy_subset\", \"count\": <int>}, {\"type\": \"hotspot_reopt\", \"util_threshold\": "
    "<number in (0,1]>, \"max_hotspots\": <int>, \"radius\": <int>}.";

std::string sample_block(const std::vector<AdversarialSample>& samples, int n) {
  std::string out;
  int count = std::min<int>(n, static_cast<int>(samples.size()));
  for (int i = 0; i < count; ++i) {
    out += render_sample_line(samples[i].demands, samples[i].gap);
    out += "\n";
  }
  if (count == 0) out += "(none)\n";
  return out;
}

}  // namespace

std::string PromptBundle::render() const {
  std::string out;
  for (const ChatMessage& m : messages) {
    out += "[" + m.role + "]\n";
    out += m.content;
    if (out.empty() || out.back() != '\n') out += "\n";
    out += "\n";
  }
  return out;
}

json PromptBundle::to_json() const {
  json msgs = json::array();
  for (const ChatMessage& m : messages)
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"template_id", template_id}, {"messages", msgs}};
}

std::string render_sample_line(const DemandMatrix& demands, double gap) {
  json entry;
  json volumes = json::object();
  for (const Demand& d : demands.demands) volumes[pair_label(d.pair())] = d.volume;
  entry["demands"] = volumes;
  entry["gap"] = gap;
  return entry.dump();
}

PromptBundle build_pattern_prompt(const Region& region,
                                  const std::vector<AdversarialSample>& adversarial,
                                  const std::vector<AdversarialSample>& normal, int n) {
  PromptBundle bundle;
  bundle.template_id = kPatternTemplateId;
  bundle.messages.push_back({"system", kProblemDescription});

  std::string user;
  user += "Instructions:\n";
  user +=
      "Please analyze these samples and identify patterns causing performance gaps between "
      "the heuristic and the optimal solution:\n\n";
  user += "Tasks:\n";
  user += "1. Compare the adversarial and non-adversarial sample sets (top " +
          std::to_string(n) +
          " each) and list patterns that correlate with a large heuristic-optimal gap.\n";
  user += "2. For each pattern, provide a concise natural-language description.\n";
  user += "3. Combine the findings with the region description.\n\n";
  user += "Region description:\n" + region.description + "\n\n";
  user += "Examples of adversarial samples:\n" + sample_block(adversarial, n) + "\n";
  user += "Examples of normal samples:\n" + sample_block(normal, n);

  bundle.messages.push_back({"user", user});
  bundle.rendered_chars = bundle.render().size();
  return bundle;
}

PromptBundle build_suggestion_prompt(const std::string& pattern_analysis_text,
                                     const Explanation& explanation,
                                     const HeuristicProgram& program, int n) {
  PromptBundle bundle;
  bundle.template_id = kSuggestTemplateId;
  bundle.messages.push_back({"system", kProblemDescription});

  std::string user;
  user +=
      "We have analyzed the performance of a heuristic and the optimal solution on a set "
      "of samples.\n\n";
  user += "Pattern Analysis:\n" + pattern_analysis_text + "\n\n";
  user += "Heuristic code:\n```json\n" + serialize_program(program) + "\n```\n\n";

  user += "Explanations:\n";
  user += "We also found out that the following decisions are the most likely to cause the "
          "gap:\n";
  if (explanation.differences.empty()) {
    user += "none observed\n";
  } else {
    // Largest optimal flows first, at most 10 differences.
    std::vector<Explanation::Difference> diffs = explanation.differences;
    std::stable_sort(diffs.begin(), diffs.end(),
                     [](const Explanation::Difference& a, const Explanation::Difference& b) {
                       return std::max(a.optimal_flow, a.heuristic_flow) >
                              std::max(b.optimal_flow, b.heuristic_flow);
                     });
    const size_t limit = 10;
    size_t shown = std::min(diffs.size(), limit);
    Explanation trimmed;
    trimmed.differences.assign(diffs.begin(), diffs.begin() + shown);
    user += render_explanation_text(trimmed) + "\n";
    if (diffs.size() > limit)
      user += "(" + std::to_string(diffs.size() - limit) +
              " further differences truncated)\n";
  }
  user += "\n";

  user += "Task:\n";
  user += "Please suggest ideas for improvements to the heuristic:\n";
  user += "1. What modifications could prevent these gaps?\n";
  user += "2. What additional network metrics should be considered?\n";
  user += "3. What alternative routing strategies might work better?\n";
  user += "4. How can we better handle congestion and load balancing?\n";
  user += "5. Is there a way to run optimal on a subset of the problem? For example, a "
          "subset of demands or graph?\n";
  user += "6. Propose ideas for improvements.\n\n";
  user += "Your task is to list up to " + std::to_string(n) +
          " concrete, different idea that would reduce the gap.\n\n";
  user += "In order to do your task:\n";
  user += "1. Examine the adversarial patterns and the decision differences.\n";
  user += "2. From those patterns, extract up to one improvement idea likely to improve "
          "the heuristic.\n";
  user += "3. For each idea, provide a detailed (at least 100 words), code-agnostic "
          "explanation and reasoning.\n\n";
  user += "-- Requirements --\n";
  user += "- Do not write code, only suggest ideas.\n";
  user += "- Do not suggest ML approaches requiring lots of training data.\n";
  user += std::string("- ") + kProgramSchema + " Ideas must be implementable in this form.\n";
  user += "- Provide a thorough explanation of each idea.\n";
  user += "- Explain so the reader can implement it themselves.\n\n";
  user += "-- Output Format --\n";
  user += "[\n  {\n  \"idea\": \"...\",\n  \"reasoning\": \"...\"\n  },\n  {\n  \"idea\": "
          "\"...\",\n  \"reasoning\": \"...\"\n  }\n]\n";

  bundle.messages.push_back({"user", user});
  bundle.rendered_chars = bundle.render().size();
  return bundle;
}

PromptBundle build_mutation_prompt(const std::vector<MutationParent>& parents,
                                   const std::vector<std::string>& suggestions, int m,
                                   const MutationPromptOptions& options) {
  PromptBundle bundle;
  bundle.template_id = kMutationTemplateId;
  bundle.messages.push_back({"system", kProblemDescription});

  std::string user;
  user += "Task:\n";
  user += "Your task is to design a new heuristic different than the Parent heuristics.\n\n";

  for (size_t i = 0; i < parents.size(); ++i) {
    const std::string label = "(" + std::to_string(i + 1) + ")";
    user += "Parent Heuristic " + label + ":\n";
    user += "Here is a parent heuristic:\n";
    user += "```json\n" + serialize_program(parents[i].program) + "\n```\n\n";
    if (options.include_samples) {
      user += "-- Worst Performing Samples for the Parent Heuristic " + label + " --\n";
      user += "The Parent heuristic performed poorly on the following samples compared to "
              "the optimal solution:\n";
      user += "Examples of adversarial samples for the parent " + label + ":\n";
      user += sample_block(parents[i].worst_samples, m) + "\n";
    }
    if (options.include_suggestions) {
      user += "-- Suggestions to improve the Parent Heuristic " + label + " --\n";
      user += "You can use the following observations/suggestions to improve the parent "
              "heuristic:\n";
      if (suggestions.empty()) {
        user += "(none)\n";
      } else {
        for (size_t s = 0; s < suggestions.size(); ++s)
          user += std::to_string(s + 1) + ". " + suggestions[s] + "\n";
      }
      user += "\n";
    }
  }

  if (!options.explanations_text.empty()) {
    user += "-- Decision Differences --\n";
    user += "The following decisions are the most likely to cause the gap:\n";
    user += options.explanations_text + "\n\n";
  }

  user += "-- Requirements --\n";
  user += "Based on the parent heuristics above, first analyze the pros and cons of each, "
          "and then design a new heuristic that performs better. You can use the "
          "suggestions to improve the parent heuristics if you want.\n";
  user += std::string(kProgramSchema) +
          " The new heuristic must be a complete program in that JSON schema.\n\n";
  user += "-- Output Format --\n";
  user += "[\n  {\n  \"code\": \"{...the complete heuristic program JSON...}\",\n  "
          "\"reasoning\": \"...\"\n  }\n]\n";

  bundle.messages.push_back({"user", user});
  bundle.rendered_chars = bundle.render().size();
  return bundle;
}

PromptBundle build_fix_prompt(const std::string& program_text, const std::string& error) {
  PromptBundle bundle;
  bundle.template_id = kFixTemplateId;
  bundle.messages.push_back(
      {"system",
       "You are an expert heuristic developer. You are given a code that is not working as "
       "expected.\nYou are given an error message. You need to fix the code.\n" +
           std::string(kProgramSchema)});

  std::string user;
  user += "Code to fix:\n";
  user += "```json\n" + program_text + "\n```\n\n";
  user += "Error:\n";
  user += "```\n" + (error.empty() ? std::string("unknown error") : error) + "\n```\n\n";
  user += "Task:\n";
  user += "Fix the code and return ONLY the complete fixed program JSON (no fences).\n";

  bundle.messages.push_back({"user", user});
  bundle.rendered_chars = bundle.render().size();
  return bundle;
}

}  // namespace teforge
