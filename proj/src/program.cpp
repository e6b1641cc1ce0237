#include "teforge/program.hpp"

#include <cmath>

namespace teforge {

std::string ordering_name(Ordering o) {
  switch (o) {
    case Ordering::volume_desc: return "volume_desc";
    case Ordering::volume_asc: return "volume_asc";
    case Ordering::pair_lex: return "pair_lex";
  }
  return "pair_lex";
}

static std::optional<Ordering> ordering_from_name(const std::string& name) {
  if (name == "volume_desc") return Ordering::volume_desc;
  if (name == "volume_asc") return Ordering::volume_asc;
  if (name == "pair_lex") return Ordering::pair_lex;
  return std::nullopt;
}

std::vector<std::string> validate(const HeuristicProgram& program) {
  std::vector<std::string> violations;
  if (program.stages.empty()) violations.push_back("program must have at least one stage");
  if (program.budget_ms <= 0) violations.push_back("budget_ms must be > 0");
  for (size_t i = 0; i < program.stages.size(); ++i) {
    const std::string where = "stage " + std::to_string(i) + ": ";
    const Stage& stage = program.stages[i];
    if (const auto* pin = std::get_if<PinSmall>(&stage)) {
      if (std::isnan(pin->threshold) || pin->threshold < 0.0)
        violations.push_back(where + "threshold must be >= 0");
    } else if (const auto* greedy = std::get_if<GreedyTopK>(&stage)) {
      if (greedy->k < 1) violations.push_back(where + "k must be >= 1");
    } else if (const auto* lp = std::get_if<LpResidual>(&stage)) {
      if (lp->heavy_count && *lp->heavy_count < 1)
        violations.push_back(where + "heavy_subset count must be >= 1");
    } else if (const auto* hot = std::get_if<HotspotReopt>(&stage)) {
      if (!(hot->util_threshold > 0.0) || hot->util_threshold > 1.0)
        violations.push_back(where + "util_threshold must be in (0, 1]");
      if (hot->max_hotspots < 1) violations.push_back(where + "max_hotspots must be >= 1");
      if (hot->radius < 1) violations.push_back(where + "radius must be >= 1");
    }
  }
  return violations;
}

HeuristicProgram base_heuristic(double threshold) {
  HeuristicProgram p;
  p.name = "H0";
  p.ordering = Ordering::pair_lex;
  p.stages.push_back(PinSmall{threshold});
  p.stages.push_back(LpResidual{std::nullopt});
  return p;
}

static json stage_to_json(const Stage& stage) {
  json j;
  if (const auto* pin = std::get_if<PinSmall>(&stage)) {
    j["type"] = "pin_small";
    j["threshold"] = pin->threshold;
  } else if (const auto* greedy = std::get_if<GreedyTopK>(&stage)) {
    j["type"] = "greedy_topk";
    j["k"] = greedy->k;
    j["split"] = greedy->split;
  } else if (const auto* lp = std::get_if<LpResidual>(&stage)) {
    j["type"] = "lp_residual";
    if (lp->heavy_count) {
      j["scope"] = "heavy_subset";
      j["count"] = *lp->heavy_count;
    } else {
      j["scope"] = "all_remaining";
    }
  } else if (const auto* hot = std::get_if<HotspotReopt>(&stage)) {
    j["type"] = "hotspot_reopt";
    j["util_threshold"] = hot->util_threshold;
    j["max_hotspots"] = hot->max_hotspots;
    j["radius"] = hot->radius;
  }
  return j;
}

static Stage stage_from_json(const json& j, size_t index) {
  const std::string where = "stage " + std::to_string(index) + ": ";
  if (!j.is_object() || !j.contains("type"))
    throw ProgramError(where + "expected an object with a type tag");
  const std::string type = j.at("type").get<std::string>();

  auto need = [&](const char* field) -> const json& {
    if (!j.contains(field))
      throw ProgramError(where + type + " is missing field '" + field + "'");
    return j.at(field);
  };

  try {
    if (type == "pin_small") return PinSmall{need("threshold").get<double>()};
    if (type == "greedy_topk")
      return GreedyTopK{need("k").get<int>(), need("split").get<bool>()};
    if (type == "lp_residual") {
      const std::string scope = need("scope").get<std::string>();
      if (scope == "all_remaining") return LpResidual{std::nullopt};
      if (scope == "heavy_subset") return LpResidual{need("count").get<int>()};
      throw ProgramError(where + "unknown lp_residual scope '" + scope + "'");
    }
    if (type == "hotspot_reopt")
      return HotspotReopt{need("util_threshold").get<double>(), need("max_hotspots").get<int>(),
                          need("radius").get<int>()};
  } catch (const json::exception& e) {
    throw ProgramError(where + type + " has a field of the wrong type: " + e.what());
  }
  throw ProgramError(where + "unknown stage type '" + type + "'");
}

json program_to_json(const HeuristicProgram& program) {
  json stages = json::array();
  for (const Stage& s : program.stages) stages.push_back(stage_to_json(s));
  return {{"name", program.name},
          {"ordering", ordering_name(program.ordering)},
          {"budget_ms", program.budget_ms},
          {"lineage", program.lineage},
          {"stages", stages}};
}

HeuristicProgram program_from_json(const json& j) {
  if (!j.is_object()) throw ProgramError("program JSON must be an object");
  HeuristicProgram p;
  try {
    p.name = j.value("name", std::string{});
    p.budget_ms = j.value("budget_ms", std::int64_t{2000});
    if (j.contains("lineage")) p.lineage = j.at("lineage").get<std::vector<std::string>>();
    const std::string ordering = j.value("ordering", std::string{"pair_lex"});
    auto parsed = ordering_from_name(ordering);
    if (!parsed) throw ProgramError("unknown ordering '" + ordering + "'");
    p.ordering = *parsed;
    if (!j.contains("stages") || !j.at("stages").is_array())
      throw ProgramError("program JSON must contain a stages array");
    size_t index = 0;
    for (const auto& s : j.at("stages")) p.stages.push_back(stage_from_json(s, index++));
  } catch (const json::exception& e) {
    throw ProgramError(std::string("malformed program JSON: ") + e.what());
  }
  return p;
}

std::string serialize_program(const HeuristicProgram& program) {
  return program_to_json(program).dump();
}

HeuristicProgram parse_program(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ProgramError("program text is not valid JSON");
  return program_from_json(j);
}

std::string canonical_semantic_json(const HeuristicProgram& program) {
  json j = program_to_json(program);
  j.erase("name");
  j.erase("lineage");
  return j.dump();
}

}  // namespace teforge
