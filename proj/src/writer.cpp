#include "teforge/writer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "teforge/interpreter.hpp"

namespace teforge {

namespace {
constexpr double kTieEps = 1e-9;
constexpr double kZeroGap = kEpsLp;
}  // namespace

void WriterConfig::validate() const {
  if (islands < 1 || max_iterations < 1 || worst_samples < 1 || fix_rounds < 1 ||
      archive_size < 1 || patience < 1 || parents < 1 || island_member_cap < 1)
    throw ConfigError("writer config counts must all be >= 1");
  if (patience > max_iterations)
    throw ConfigError("writer patience must be <= max_iterations");
}

json WriterConfig::to_json() const {
  return {{"islands", islands},
          {"max_iterations", max_iterations},
          {"worst_samples", worst_samples},
          {"fix_rounds", fix_rounds},
          {"archive_size", archive_size},
          {"patience", patience},
          {"parents", parents},
          {"island_member_cap", island_member_cap},
          {"seed", seed}};
}

WriterConfig WriterConfig::from_json(const json& j) {
  WriterConfig c;
  c.islands = j.value("islands", c.islands);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.worst_samples = j.value("worst_samples", c.worst_samples);
  c.fix_rounds = j.value("fix_rounds", c.fix_rounds);
  c.archive_size = j.value("archive_size", c.archive_size);
  c.patience = j.value("patience", c.patience);
  c.parents = j.value("parents", c.parents);
  c.island_member_cap = j.value("island_member_cap", c.island_member_cap);
  c.seed = j.value("seed", c.seed);
  return c;
}

json ScoredProgram::to_json() const {
  return {{"program", program_to_json(program)},
          {"worst_gap", worst_gap},
          {"per_sample_gaps", per_sample_gaps}};
}

ScoredProgram ScoredProgram::from_json(const json& j) {
  ScoredProgram s;
  s.program = program_from_json(j.at("program"));
  s.worst_gap = j.at("worst_gap").get<double>();
  s.per_sample_gaps = j.value("per_sample_gaps", std::vector<double>{});
  return s;
}

double Island::best_gap() const {
  double best = std::numeric_limits<double>::infinity();
  for (const ScoredProgram& m : members) best = std::min(best, m.worst_gap);
  return best;
}

const ScoredProgram& Island::best_member() const {
  if (members.empty()) throw SolverError("island has no members");
  const ScoredProgram* best = &members[0];
  for (const ScoredProgram& m : members)
    if (m.worst_gap < best->worst_gap) best = &m;
  return *best;
}

std::vector<int> tournament_select(const Island& island, std::mt19937_64& rng, int k) {
  if (island.members.empty()) throw SolverError("tournament on empty island");
  const std::uint64_t n = island.members.size();
  std::vector<int> out;
  for (int i = 0; i < k; ++i) {
    int a = static_cast<int>(rng() % n);
    int b = static_cast<int>(rng() % n);
    double gap_a = island.members[a].worst_gap;
    double gap_b = island.members[b].worst_gap;
    out.push_back(gap_a < gap_b || (gap_a == gap_b && a <= b) ? a : b);
  }
  return out;
}

bool is_diverse(const HeuristicProgram& candidate, const Island& island) {
  std::string canon = canonical_semantic_json(candidate);
  for (const ScoredProgram& m : island.members)
    if (canonical_semantic_json(m.program) == canon) return false;
  return true;
}

HeuristicProgram parse_candidate_text(const std::string& text) {
  std::string cleaned = text;
  // Drop fence lines wholesale; the payload is JSON either way.
  std::string no_fences;
  std::istringstream lines(cleaned);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind("```", 0) == 0) continue;
    no_fences += line;
    no_fences += "\n";
  }

  size_t first_bracket = no_fences.find_first_of("[{");
  if (first_bracket == std::string::npos)
    throw ProgramError("no JSON found in the response");
  size_t last_bracket = no_fences.find_last_of("]}");
  if (last_bracket == std::string::npos || last_bracket < first_bracket)
    throw ProgramError("unterminated JSON in the response");

  json parsed =
      json::parse(no_fences.substr(first_bracket, last_bracket - first_bracket + 1), nullptr,
                  false);
  if (parsed.is_discarded()) throw ProgramError("response is not valid JSON");

  json candidate = parsed;
  if (candidate.is_array()) {
    if (candidate.empty()) throw ProgramError("response array is empty");
    candidate = candidate[0];
  }
  if (candidate.is_object() && candidate.contains("code")) {
    const json& code = candidate.at("code");
    if (code.is_string()) return parse_program(code.get<std::string>());
    if (code.is_object()) return program_from_json(code);
    throw ProgramError("'code' field must hold the program JSON");
  }
  if (candidate.is_object()) return program_from_json(candidate);
  throw ProgramError("response JSON is neither a program nor a code/reasoning array");
}

json SearchState::to_json() const {
  json islands_json = json::array();
  for (const Island& island : islands) {
    json members = json::array();
    for (const ScoredProgram& m : island.members) members.push_back(m.to_json());
    islands_json.push_back({{"id", island.id}, {"members", members}});
  }
  json archive_json = json::array();
  for (const ScoredProgram& m : archive) archive_json.push_back(m.to_json());
  json curve_json = json::array();
  for (const CurvePoint& p : curve)
    curve_json.push_back({{"iteration", p.iteration},
                          {"best_train_gap", p.best_train_gap},
                          {"best_heldout_gap", p.best_heldout_gap}});
  json cand_json = json::array();
  for (const CandidateRecord& c : candidates)
    cand_json.push_back({{"iteration", c.iteration},
                         {"island", c.island},
                         {"name", c.name},
                         {"status", c.status},
                         {"worst_gap", c.worst_gap},
                         {"fix_rounds_used", c.fix_rounds_used}});
  return {{"config", config.to_json()},
          {"config_hash", config_hash},
          {"islands", islands_json},
          {"archive", archive_json},
          {"iteration", iteration},
          {"curve", curve_json},
          {"rng_state", rng_state},
          {"backend_state", backend_state},
          {"backend_calls", backend_calls},
          {"best", best.to_json()},
          {"best_heldout_gap", best_heldout_gap},
          {"no_improve_iters", no_improve_iters},
          {"candidates", cand_json},
          {"finished", finished},
          {"stop_reason", stop_reason}};
}

namespace {

template <typename F>
auto restore_section(const char* section, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw IoError(std::string("checkpoint restore failed in section '") + section +
                  "': " + e.what());
  }
}

}  // namespace

SearchState SearchState::from_json(const json& j) {
  SearchState s;
  restore_section("config", [&] {
    s.config = WriterConfig::from_json(j.at("config"));
    s.config_hash = j.value("config_hash", std::string{});
    return 0;
  });
  restore_section("islands", [&] {
    for (const auto& island_json : j.at("islands")) {
      Island island;
      island.id = island_json.at("id").get<int>();
      for (const auto& m : island_json.at("members"))
        island.members.push_back(ScoredProgram::from_json(m));
      s.islands.push_back(std::move(island));
    }
    return 0;
  });
  restore_section("archive", [&] {
    for (const auto& m : j.at("archive")) s.archive.push_back(ScoredProgram::from_json(m));
    return 0;
  });
  restore_section("curve", [&] {
    s.iteration = j.at("iteration").get<int>();
    for (const auto& p : j.at("curve"))
      s.curve.push_back({p.at("iteration").get<int>(), p.at("best_train_gap").get<double>(),
                         p.at("best_heldout_gap").get<double>()});
    return 0;
  });
  restore_section("rng", [&] {
    s.rng_state = j.at("rng_state").get<std::string>();
    s.backend_state = j.at("backend_state");
    s.backend_calls = j.value("backend_calls", 0);
    return 0;
  });
  restore_section("best", [&] {
    s.best = ScoredProgram::from_json(j.at("best"));
    s.best_heldout_gap = j.at("best_heldout_gap").get<double>();
    s.no_improve_iters = j.value("no_improve_iters", 0);
    return 0;
  });
  restore_section("candidates", [&] {
    for (const auto& c : j.at("candidates"))
      s.candidates.push_back({c.at("iteration").get<int>(), c.at("island").get<int>(),
                              c.at("name").get<std::string>(),
                              c.at("status").get<std::string>(),
                              c.at("worst_gap").get<double>(),
                              c.at("fix_rounds_used").get<int>()});
    s.finished = j.value("finished", false);
    s.stop_reason = j.value("stop_reason", std::string{});
    return 0;
  });
  return s;
}

std::string checkpoint(const SearchState& state, const std::string& dir) {
  ensure_dir(dir);
  char name[32];
  std::snprintf(name, sizeof(name), "iter_%04d.json", state.iteration);
  std::string path = dir + "/" + name;
  write_json_file(path, state.to_json());
  return path;
}

SearchState restore(const std::string& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded())
    throw IoError("checkpoint restore failed in section 'document': invalid JSON in " + path);
  return SearchState::from_json(j);
}

void write_curves_csv(const SearchState& state, const std::string& path) {
  std::string out = "# config_hash " + state.config_hash + "\n";
  out += "iteration,best_train_gap,best_heldout_gap\n";
  char line[128];
  for (const CurvePoint& p : state.curve) {
    std::snprintf(line, sizeof(line), "%d,%.9f,%.9f\n", p.iteration, p.best_train_gap,
                  p.best_heldout_gap);
    out += line;
  }
  write_file(path, out);
}

namespace {

struct EvalContext {
  const Topology* topo;
  const PathSet* paths;
  const std::vector<DemandMatrix>* train;
  const std::vector<DemandMatrix>* held_out;
  std::vector<double> train_opt;
  std::vector<double> held_opt;
};

EvalContext make_eval_context(const Topology& topo, const PathSet& paths,
                              const std::vector<DemandMatrix>& train,
                              const std::vector<DemandMatrix>& held_out) {
  EvalContext ctx{&topo, &paths, &train, &held_out, {}, {}};
  for (const DemandMatrix& m : train)
    ctx.train_opt.push_back(solve_optimal(topo, m, paths).total_met());
  for (const DemandMatrix& m : held_out)
    ctx.held_opt.push_back(solve_optimal(topo, m, paths).total_met());
  return ctx;
}

ScoredProgram score_on_train(const EvalContext& ctx, const HeuristicProgram& program) {
  ScoredProgram scored;
  scored.program = program;
  scored.worst_gap = 0.0;
  for (size_t i = 0; i < ctx.train->size(); ++i) {
    RoutingOutcome out = interpret(program, *ctx.topo, (*ctx.train)[i], *ctx.paths);
    double gap = std::max(0.0, ctx.train_opt[i] - out.total_met);
    scored.per_sample_gaps.push_back(gap);
    scored.worst_gap = std::max(scored.worst_gap, gap);
  }
  return scored;
}

double heldout_worst_gap(const EvalContext& ctx, const HeuristicProgram& program) {
  double worst = 0.0;
  for (size_t i = 0; i < ctx.held_out->size(); ++i) {
    RoutingOutcome out = interpret(program, *ctx.topo, (*ctx.held_out)[i], *ctx.paths);
    worst = std::max(worst, std::max(0.0, ctx.held_opt[i] - out.total_met));
  }
  return worst;
}

// Worst-m training samples for a parent, as samples with gaps for the prompt.
std::vector<AdversarialSample> worst_samples_of(const EvalContext& ctx,
                                                const ScoredProgram& parent, int m) {
  std::vector<int> order(parent.per_sample_gaps.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return parent.per_sample_gaps[a] > parent.per_sample_gaps[b];
  });
  std::vector<AdversarialSample> out;
  for (int idx : order) {
    if (static_cast<int>(out.size()) >= m) break;
    AdversarialSample s;
    s.demands = (*ctx.train)[idx];
    s.gap = parent.per_sample_gaps[idx];
    out.push_back(std::move(s));
  }
  return out;
}

void prune_and_reinitiate(SearchState& state) {
  // Pool: previous archive first (seniority), then island members in order.
  std::vector<ScoredProgram> pool = state.archive;
  for (const Island& island : state.islands)
    for (const ScoredProgram& m : island.members) pool.push_back(m);

  std::vector<ScoredProgram> unique;
  std::set<std::string> seen;
  for (ScoredProgram& p : pool) {
    if (seen.insert(canonical_semantic_json(p.program)).second)
      unique.push_back(std::move(p));
  }
  std::stable_sort(unique.begin(), unique.end(),
                   [](const ScoredProgram& a, const ScoredProgram& b) {
                     return a.worst_gap < b.worst_gap;
                   });
  if (static_cast<int>(unique.size()) > state.config.archive_size)
    unique.resize(state.config.archive_size);
  state.archive = std::move(unique);

  std::set<std::string> kept;
  for (const ScoredProgram& p : state.archive) kept.insert(canonical_semantic_json(p.program));
  for (Island& island : state.islands) {
    std::vector<ScoredProgram> members;
    for (ScoredProgram& m : island.members)
      if (kept.count(canonical_semantic_json(m.program))) members.push_back(std::move(m));
    // The globally best program seeds any emptied island.
    if (members.empty()) members.push_back(state.archive.front());
    island.members = std::move(members);
  }
}

}  // namespace

SearchState run_search(const WriterConfig& config, const HeuristicProgram& base,
                       const std::vector<DemandMatrix>& train,
                       const std::vector<DemandMatrix>& held_out,
                       const std::vector<Suggestion>& suggestions, LlmBackend& backend,
                       const Topology& topology, const PathSet& paths,
                       const std::string& run_dir, const std::string& config_hash,
                       std::optional<SearchState> resume) {
  config.validate();
  if (train.empty()) throw ConfigError("run_search: training batch is empty");
  {
    std::vector<std::string> violations = validate(base);
    if (!violations.empty())
      throw ProgramError("run_search: base program invalid: " + violations.front());
  }

  EvalContext ctx = make_eval_context(topology, paths, train, held_out);

  std::vector<std::string> suggestion_texts;
  for (const Suggestion& s : suggestions) suggestion_texts.push_back(s.idea);

  SearchState state;
  std::mt19937_64 rng(config.seed);
  int start_iteration = 1;

  if (resume) {
    state = std::move(*resume);
    state.config = config;  // resume requires the same config; callers hash-check
    std::istringstream rng_in(state.rng_state);
    rng_in >> rng;
    if (!state.backend_state.is_null()) backend.restore_state(state.backend_state);
    start_iteration = state.iteration + 1;
    if (state.finished) return state;
  } else {
    state.config = config;
    state.config_hash = config_hash;
    ScoredProgram seeded = score_on_train(ctx, base);
    for (int i = 0; i < config.islands; ++i) {
      Island island;
      island.id = i;
      island.members.push_back(seeded);
      state.islands.push_back(std::move(island));
    }
    state.archive.push_back(seeded);
    state.best = seeded;
    state.best_heldout_gap = heldout_worst_gap(ctx, base);
    state.curve.push_back({0, state.best.worst_gap, state.best_heldout_gap});
    state.iteration = 0;
  }

  std::string checkpoints_dir = run_dir.empty() ? std::string{} : run_dir + "/checkpoints";

  for (int t = start_iteration; t <= config.max_iterations; ++t) {
    state.iteration = t;

    for (Island& island : state.islands) {
      std::vector<int> parent_indices = tournament_select(island, rng, config.parents);
      std::vector<MutationParent> parents;
      std::vector<std::string> parent_names;
      for (int idx : parent_indices) {
        const ScoredProgram& parent = island.members[idx];
        parents.push_back(
            {parent.program, worst_samples_of(ctx, parent, config.worst_samples)});
        parent_names.push_back(parent.program.name);
      }

      PromptBundle prompt =
          build_mutation_prompt(parents, suggestion_texts, config.worst_samples);

      CandidateRecord record;
      record.iteration = t;
      record.island = island.id;

      std::string text;
      try {
        text = backend.generate(prompt);
        ++state.backend_calls;
      } catch (const BackendError&) {
        record.status = "backend_error";
        state.candidates.push_back(record);
        continue;
      }

      // Parse -> validate -> score, with up to R_fix fix rounds.
      std::optional<ScoredProgram> scored;
      int fixes = 0;
      std::string current_text = text;
      while (true) {
        std::string error;
        try {
          HeuristicProgram program = parse_candidate_text(current_text);
          std::vector<std::string> violations = validate(program);
          if (!violations.empty()) {
            std::string joined;
            for (const std::string& v : violations) joined += v + "; ";
            throw ProgramError(joined);
          }
          if (program.name.empty())
            program.name = "cand_t" + std::to_string(t) + "_i" + std::to_string(island.id);
          program.lineage = parent_names;
          scored = score_on_train(ctx, program);
          break;
        } catch (const std::exception& e) {
          error = e.what();
        }
        if (fixes >= config.fix_rounds) break;
        ++fixes;
        PromptBundle fix = build_fix_prompt(current_text, error);
        try {
          current_text = backend.generate(fix);
          ++state.backend_calls;
        } catch (const BackendError&) {
          break;
        }
      }
      record.fix_rounds_used = fixes;

      if (!scored) {
        record.status = "failed";
        state.candidates.push_back(record);
        continue;
      }
      record.name = scored->program.name;
      record.worst_gap = scored->worst_gap;

      double island_best = island.best_gap();
      bool improves = scored->worst_gap < island_best - kTieEps;
      bool ties = std::abs(scored->worst_gap - island_best) <= kTieEps;
      bool accepted = improves || (ties && is_diverse(scored->program, island));
      if (accepted) {
        island.members.push_back(std::move(*scored));
        if (static_cast<int>(island.members.size()) > config.island_member_cap) {
          auto worst = std::max_element(
              island.members.begin(), island.members.end(),
              [](const ScoredProgram& a, const ScoredProgram& b) {
                return a.worst_gap < b.worst_gap;
              });
          island.members.erase(worst);
        }
        record.status = fixes > 0 ? "fixed_then_accepted" : "accepted";
      } else {
        record.status = fixes > 0 ? "fixed_then_rejected" : "rejected";
      }
      state.candidates.push_back(record);
    }

    prune_and_reinitiate(state);

    const ScoredProgram& global_best = state.archive.front();
    bool improved = global_best.worst_gap < state.best.worst_gap - 1e-12;
    if (improved) {
      state.best = global_best;
      state.best_heldout_gap =
          std::min(state.best_heldout_gap, heldout_worst_gap(ctx, state.best.program));
      state.no_improve_iters = 0;
    } else {
      ++state.no_improve_iters;
    }

    double prev_train = state.curve.back().best_train_gap;
    double prev_held = state.curve.back().best_heldout_gap;
    state.curve.push_back({t, std::min(prev_train, state.best.worst_gap),
                           std::min(prev_held, state.best_heldout_gap)});

    std::ostringstream rng_out;
    rng_out << rng;
    state.rng_state = rng_out.str();
    state.backend_state = backend.state();

    if (!checkpoints_dir.empty()) checkpoint(state, checkpoints_dir);

    if (state.best.worst_gap <= kZeroGap) {
      state.finished = true;
      state.stop_reason = "zero_gap";
    } else if (state.no_improve_iters >= config.patience) {
      state.finished = true;
      state.stop_reason = "patience";
    } else if (t == config.max_iterations) {
      state.finished = true;
      state.stop_reason = "max_iterations";
    }
    if (state.finished) {
      if (!checkpoints_dir.empty()) checkpoint(state, checkpoints_dir);
      break;
    }
  }
  if (!state.finished) {
    state.finished = true;
    state.stop_reason = "max_iterations";
  }

  if (!run_dir.empty()) {
    write_curves_csv(state, run_dir + "/curves.csv");
    std::string lines = json({{"config_hash", state.config_hash}}).dump() + "\n";
    for (const CandidateRecord& c : state.candidates) {
      lines += json({{"iteration", c.iteration},
                     {"island", c.island},
                     {"name", c.name},
                     {"status", c.status},
                     {"worst_gap", c.worst_gap},
                     {"fix_rounds_used", c.fix_rounds_used}})
                   .dump() +
               "\n";
    }
    write_file(run_dir + "/candidates.jsonl", lines);
    write_json_file(run_dir + "/best_program.json", program_to_json(state.best.program));
  }
  return state;
}

}  // namespace teforge
