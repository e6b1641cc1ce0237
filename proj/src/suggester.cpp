#include "teforge/suggester.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace teforge {

std::string PatternReport::to_text() const {
  if (empty_marker || patterns.empty()) return "(no patterns identified)";
  std::string out;
  for (size_t i = 0; i < patterns.size(); ++i) {
    out += std::to_string(i + 1) + ". " + patterns[i].name;
    if (!patterns[i].description.empty()) out += ": " + patterns[i].description;
    out += "\n";
  }
  return out;
}

json Suggestion::to_json() const {
  return {{"idea", idea},
          {"reasoning", reasoning},
          {"region_id", region_id},
          {"backend_id", backend_id},
          {"template_id", template_id}};
}

Suggestion Suggestion::from_json(const json& j) {
  Suggestion s;
  s.idea = j.at("idea").get<std::string>();
  s.reasoning = j.value("reasoning", std::string{});
  s.region_id = j.value("region_id", std::string{});
  s.backend_id = j.value("backend_id", std::string{});
  s.template_id = j.value("template_id", std::string{});
  return s;
}

namespace {

std::string trim(const std::string& s) {
  size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string strip_markup(std::string s) {
  std::string out;
  for (char c : s)
    if (c != '*' && c != '#') out += c;
  return trim(out);
}

// "3. " / "3) " prefix -> length of the prefix, 0 otherwise.
size_t numbered_prefix(const std::string& line) {
  size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == 0 || i >= line.size()) return 0;
  if (line[i] != '.' && line[i] != ')') return 0;
  ++i;
  while (i < line.size() && line[i] == ' ') ++i;
  return i;
}

}  // namespace

PatternReport parse_pattern_text(const std::string& text) {
  PatternReport report;
  if (trim(text).empty()) {
    report.empty_marker = true;
    return report;
  }

  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }

  PatternReport::Pattern* current = nullptr;
  for (const std::string& raw : lines) {
    std::string line = trim(raw);
    if (size_t prefix = numbered_prefix(line); prefix > 0) {
      std::string rest = strip_markup(line.substr(prefix));
      PatternReport::Pattern p;
      size_t colon = rest.find(':');
      if (colon != std::string::npos) {
        p.name = trim(rest.substr(0, colon));
        p.description = trim(rest.substr(colon + 1));
      } else {
        p.name = rest;
      }
      report.patterns.push_back(std::move(p));
      current = &report.patterns.back();
    } else if (current && !line.empty()) {
      if (!current->description.empty()) current->description += " ";
      current->description += strip_markup(line);
    }
  }

  if (report.patterns.empty()) {
    // Malformed numbering: keep everything as one unnamed pattern.
    report.patterns.push_back({"pattern", trim(text)});
  }
  return report;
}

PatternReport analyze_patterns(LlmBackend& backend, const PromptBundle& prompt) {
  std::string text;
  try {
    text = backend.generate(prompt);
  } catch (const BackendError&) {
    PatternReport report;
    report.empty_marker = true;
    return report;
  }
  return parse_pattern_text(text);
}

namespace {

std::string strip_code_fences(const std::string& text) {
  std::string out = text;
  size_t fence = out.find("```");
  while (fence != std::string::npos) {
    size_t line_end = out.find('\n', fence);
    if (line_end == std::string::npos) {
      out.erase(fence);
      break;
    }
    out.erase(fence, line_end - fence + 1);
    fence = out.find("```");
  }
  return out;
}

}  // namespace

std::optional<std::vector<Suggestion>> parse_suggestions(const std::string& text) {
  std::string cleaned = strip_code_fences(text);
  size_t start = cleaned.find('[');
  if (start == std::string::npos) return std::nullopt;
  json parsed = json::parse(cleaned.substr(start), nullptr, false);
  if (parsed.is_discarded()) {
    // Trailing prose after the array: retry up to the matching bracket.
    int depth = 0;
    for (size_t i = start; i < cleaned.size(); ++i) {
      if (cleaned[i] == '[') ++depth;
      if (cleaned[i] == ']' && --depth == 0) {
        parsed = json::parse(cleaned.substr(start, i - start + 1), nullptr, false);
        break;
      }
    }
  }
  if (parsed.is_discarded() || !parsed.is_array()) return std::nullopt;

  std::vector<Suggestion> out;
  for (const auto& item : parsed) {
    if (!item.is_object() || !item.contains("idea")) return std::nullopt;
    Suggestion s;
    s.idea = item.at("idea").get<std::string>();
    s.reasoning = item.value("reasoning", std::string{});
    if (s.idea.empty()) continue;
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<std::vector<AdversarialSample>, std::vector<AdversarialSample>> balanced_batch(
    const Region& region, const std::vector<AdversarialSample>& samples,
    const std::vector<DemandMatrix>& normal_pool, int m) {
  std::vector<AdversarialSample> adversarial;
  for (int idx : region.member_indices) {
    if (idx < 0 || idx >= static_cast<int>(samples.size())) continue;
    adversarial.push_back(samples[idx]);
    if (static_cast<int>(adversarial.size()) >= m) break;  // members sorted by gap already
  }

  // Centroid of the adversarial batch in demand space.
  std::map<PairKey, double> centroid;
  for (const AdversarialSample& s : adversarial)
    for (const Demand& d : s.demands.demands) centroid[d.pair()] += d.volume;
  for (auto& [pair, sum] : centroid) sum /= std::max<size_t>(adversarial.size(), 1);

  std::vector<std::pair<double, int>> ranked;
  for (size_t i = 0; i < normal_pool.size(); ++i) {
    double dist2 = 0.0;
    for (const auto& [pair, mid] : centroid) {
      double delta = normal_pool[i].volume(pair) - mid;
      dist2 += delta * delta;
    }
    ranked.push_back({dist2, static_cast<int>(i)});
  }
  std::stable_sort(ranked.begin(), ranked.end());

  std::vector<AdversarialSample> normal;
  for (const auto& [dist2, idx] : ranked) {
    if (static_cast<int>(normal.size()) >= m) break;
    AdversarialSample s;
    s.demands = normal_pool[idx];
    s.gap = 0.0;
    normal.push_back(std::move(s));
  }
  return {std::move(adversarial), std::move(normal)};
}

std::vector<Suggestion> suggest(LlmBackend& backend, const Region& region,
                                const std::vector<AdversarialSample>& adversarial,
                                const std::vector<AdversarialSample>& normal,
                                const Explanation& explanation,
                                const HeuristicProgram& program, int n, int batch_per_class) {
  if (n < 1) throw ConfigError("suggest: n must be >= 1");

  PromptBundle pattern_prompt =
      build_pattern_prompt(region, adversarial, normal, batch_per_class);
  PatternReport report = analyze_patterns(backend, pattern_prompt);
  report.region_id = region.id;

  PromptBundle prompt = build_suggestion_prompt(report.to_text(), explanation, program, n);

  auto run = [&](const PromptBundle& p) -> std::optional<std::vector<Suggestion>> {
    try {
      return parse_suggestions(backend.generate(p));
    } catch (const BackendError&) {
      return std::nullopt;
    }
  };

  std::optional<std::vector<Suggestion>> parsed = run(prompt);
  if (!parsed) {
    PromptBundle retry = prompt;
    retry.messages.push_back(
        {"user",
         "Reminder: respond with only a JSON array of objects with \"idea\" and "
         "\"reasoning\" string fields."});
    retry.rendered_chars = retry.render().size();
    parsed = run(retry);
  }
  if (!parsed) return {};  // search continues without suggestions

  std::vector<Suggestion> out = std::move(*parsed);
  if (static_cast<int>(out.size()) > n) out.resize(n);
  for (Suggestion& s : out) {
    s.region_id = region.id;
    s.backend_id = backend.id();
    s.template_id = prompt.template_id;
  }
  return out;
}

}  // namespace teforge
