// Acceptance suite: one criterion per function, one pass/fail line each.
// Exit code = number of failed criteria.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "teforge/pipeline.hpp"
#include "teforge/stub_server.hpp"
#include "test_util.hpp"

using namespace teforge;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

struct Check {
  void require(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error("check failed: " + what);
  }
};

RunConfig acceptance_config(const std::string& out_dir) {
  RunConfig cfg;
  cfg.topology_path = fixture("fig1b_topology.json");
  cfg.space = fig1b_space();
  cfg.base_threshold = 60.0;
  cfg.path_k = 8;
  cfg.analyzer.budget = 2000;
  cfg.analyzer.seed = 11;
  cfg.analyzer.max_regions = 5;
  cfg.analyzer.normal_samples = 40;
  cfg.backend.type = "mock";
  cfg.backend.script = fixture("scripts/e2e_specialist.json");
  cfg.suggester.n_suggestions = 3;
  cfg.suggester.batch_per_class = 3;
  cfg.writer.islands = 2;
  cfg.writer.max_iterations = 5;
  cfg.writer.worst_samples = 3;
  cfg.writer.fix_rounds = 3;
  cfg.writer.archive_size = 8;
  cfg.writer.patience = 4;
  cfg.writer.seed = 7;
  cfg.heldout.size = 40;
  cfg.heldout.seed = 4242;
  cfg.heldout.adversarial_budget = 400;
  cfg.out_dir = out_dir;
  return cfg;
}

std::string fresh(const std::string& tag) {
  std::string dir = "acceptance_out/" + tag;
  fs::remove_all(dir);
  return dir;
}

// 1. Canonical counterexample: optimal 250 vs base 150, one decision
// difference, in under a second.
void criterion_1(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  Topology topo = fig1b_topology();
  DemandMatrix demands = fig1b_demands();
  PathSet paths = build_path_set(topo, fig1b_space().pair_keys(), 8);

  double optimal = solve_optimal(topo, demands, paths).total_met();
  c.require(std::abs(optimal - 250.0) <= 250.0 * kEpsLp, "optimal total_met == 250");

  RoutingOutcome base = interpret(base_heuristic(60.0), topo, demands, paths);
  c.require(std::abs(base.total_met - 150.0) <= 150.0 * kEpsLp, "base total_met == 150");

  FlowAssignment optimal_assignment = solve_optimal(topo, demands, paths);
  Explanation e = explain(base, optimal_assignment, topo, demands, paths);
  c.require(e.differences.size() == 1, "exactly one decision difference");
  c.require(e.differences[0].pair == PairKey{"1", "3"}, "difference on pair 1->3");
  c.require(e.differences[0].heuristic_label == "1-2-3", "heuristic path 1-2-3");
  c.require(e.differences[0].optimal_label == "1-4-5-3", "optimal path 1-4-5-3");

  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(seconds < 1.0, "runtime < 1 s");
}

// 2. LP oracle equivalence on 200 random grid instances.
void criterion_2(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  int done = 0;
  while (done < 200) {
    Topology topo = random_topology(rng, 4 + static_cast<int>(rng() % 3));  // 4..6 nodes
    DemandMatrix demands =
        random_grid_demands(rng, topo, 2 + static_cast<int>(rng() % 3), 4);  // <= 4 demands
    if (demands.demands.empty()) continue;
    PathSet paths = paths_for(topo, demands, 3);

    double lp = solve_optimal(topo, demands, paths).total_met();
    double grid = grid_max_flow(topo, demands, paths, 1.0);
    int path_count = 0;
    for (const auto& [pair, list] : paths.paths) path_count += static_cast<int>(list.size());

    c.require(lp >= grid - kEpsLp * std::max(1.0, grid), "LP >= grid maximum");
    c.require(lp <= grid + 1.0 * path_count + kEpsLp, "LP <= grid + g*paths");
    ++done;
  }
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(seconds < 300.0, "runtime < 5 min");
}

// 3. Adversarial-finder floor across 5 seeds.
void criterion_3(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  Topology topo = fig1b_topology();
  DemandSpace space = fig1b_space();
  HeuristicProgram h0 = base_heuristic(60.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::vector<AdversarialSample> samples = find_adversarial(h0, topo, space, 2000, seed);
    c.require(!samples.empty(), "finder returned samples");
    c.require(samples.front().gap >= 100.0 * (1.0 - kEpsLp),
              "best gap >= 100*(1-1e-6) for seed " + std::to_string(seed));
  }
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(seconds < 120.0, "runtime < 2 min");
}

// 4. Feasibility fuzz: 10,000 random (program, instance) interpretations.
void criterion_4(Check& c) {
  std::mt19937_64 rng(777);
  int interpretations = 0;
  while (interpretations < 10000) {
    Topology topo = random_topology(rng, 5 + static_cast<int>(rng() % 2));
    DemandMatrix demands = random_grid_demands(rng, topo, 4, 6);
    PathSet paths = paths_for(topo, demands, 3);
    for (int p = 0; p < 20 && interpretations < 10000; ++p) {
      HeuristicProgram program = random_program(rng);
      RoutingOutcome outcome = interpret(program, topo, demands, paths);
      std::string violation = feasibility_violation(topo, demands, paths, outcome.assignment);
      c.require(violation.empty(), "feasible outcome (" + violation + ")");
      c.require(std::abs(outcome.total_met + outcome.total_unmet - demands.total_volume()) <=
                    kEpsCap,
                "met/unmet conservation");
      ++interpretations;
    }
  }
}

// 5. Algorithm 1 conformance under the two scripted backends.
void criterion_5(Check& c) {
  Topology topo = fig1b_topology();
  PathSet paths = build_path_set(topo, fig1b_space().pair_keys(), 8);
  std::vector<DemandMatrix> train{fig1b_demands()};
  DemandMatrix mild;
  mild.demands = {{"1", "3", 30.0}, {"1", "2", 60.0}, {"2", "3", 70.0}};
  train.push_back(mild);

  WriterConfig config;
  config.islands = 2;
  config.max_iterations = 5;
  config.worst_samples = 3;
  config.fix_rounds = 3;
  config.archive_size = 8;
  config.patience = 5;
  config.seed = 3;

  ScriptedBackend specialist(Script::from_file(fixture("scripts/e2e_specialist.json")));
  SearchState zero = run_search(config, base_heuristic(60.0), train, {fig1b_demands()}, {},
                                specialist, topo, paths);
  c.require(zero.best.worst_gap <= kEpsLp, "best train gap <= eps after the specialist");
  c.require(zero.stop_reason == "zero_gap", "early stop on the zero-gap branch");
  c.require(zero.iteration == 1, "specialist lands at iteration 1");

  ScriptedBackend invalid(Script::from_file(fixture("scripts/invalid.json")));
  SearchState stuck = run_search(config, base_heuristic(60.0), train, {}, {}, invalid, topo,
                                 paths);
  double base_gap = 100.0;
  c.require(stuck.best.worst_gap == base_gap, "final best equals the base gap exactly");
  c.require(!stuck.candidates.empty(), "candidates were recorded");
  for (const CandidateRecord& record : stuck.candidates) {
    c.require(record.status == "failed", "every candidate failed");
    c.require(record.fix_rounds_used <= config.fix_rounds, "fix rounds bounded by R_fix");
  }

  for (const SearchState* state : {&zero, &stuck}) {
    for (size_t i = 1; i < state->curve.size(); ++i) {
      c.require(state->curve[i].best_train_gap <= state->curve[i - 1].best_train_gap,
                "train curve nonincreasing");
      c.require(state->curve[i].best_heldout_gap <= state->curve[i - 1].best_heldout_gap,
                "held-out curve nonincreasing");
    }
  }
}

// 6. End-to-end qualitative replication with mock scripts.
void criterion_6(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg = acceptance_config(fresh("e2e"));
  PipelineContext ctx = load_context(cfg);
  AnalysisArtifacts artifacts = cmd_analyze(ctx);
  c.require(artifacts.regions.size() >= 2, "partitioning produced >= 2 regions");

  for (const Region& region : artifacts.regions) cmd_search(ctx, region.id, false);
  HeldoutReport report = cmd_ensemble(ctx);
  c.require(report.normalized_max_pct < 100.0,
            "ensemble normalized max held-out suboptimality < 100% of base");

  // The elephant-mice region: rerouted pair (1,3) with the worst gap.
  const Region& elephant = artifacts.regions.front();
  c.require(elephant.rerouted_pairs == std::vector<PairKey>{{"1", "3"}},
            "worst region reroutes pair 1->3");
  HeuristicProgram specialist = program_from_json(
      load_json_file(cfg.out_dir + "/search_" + elephant.id + "/best_program.json"));
  for (int idx : elephant.member_indices) {
    const DemandMatrix& demands = artifacts.samples[idx].demands;
    double h0 = interpret(ctx.base, ctx.topology, demands, ctx.paths).total_met;
    double sp = interpret(specialist, ctx.topology, demands, ctx.paths).total_met;
    c.require(sp > h0 + kEpsLp, "specialist strictly beats the base on a region sample");
  }

  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(seconds < 600.0, "runtime < 10 min");
}

// 7. Reproducibility: byte-identical artifacts and checkpoint resume.
void criterion_7(Check& c) {
  RunConfig cfg_a = acceptance_config(fresh("repro_a"));
  RunConfig cfg_b = acceptance_config(fresh("repro_b"));

  auto run_all = [](const RunConfig& cfg) {
    PipelineContext ctx = load_context(cfg);
    AnalysisArtifacts artifacts = cmd_analyze(ctx);
    for (const Region& region : artifacts.regions) cmd_search(ctx, region.id, false);
    cmd_ensemble(ctx);
    return artifacts;
  };
  AnalysisArtifacts artifacts = run_all(cfg_a);
  run_all(cfg_b);

  c.require(read_file(cfg_a.out_dir + "/report.json") ==
                read_file(cfg_b.out_dir + "/report.json"),
            "report.json byte-identical across runs");
  for (const Region& region : artifacts.regions) {
    std::string rel = "/search_" + region.id;
    c.require(read_file(cfg_a.out_dir + rel + "/curves.csv") ==
                  read_file(cfg_b.out_dir + rel + "/curves.csv"),
              "curves.csv byte-identical for " + region.id);
    for (const auto& entry :
         fs::directory_iterator(cfg_a.out_dir + rel + "/checkpoints")) {
      std::string name = entry.path().filename().string();
      c.require(read_file(cfg_a.out_dir + rel + "/checkpoints/" + name) ==
                    read_file(cfg_b.out_dir + rel + "/checkpoints/" + name),
                "checkpoint " + name + " byte-identical for " + region.id);
    }
    // Mock transcripts carry no timestamps: pure functions of the config.
    c.require(read_file(cfg_a.out_dir + rel + "/transcripts/call_000000.json") ==
                  read_file(cfg_b.out_dir + rel + "/transcripts/call_000000.json"),
              "transcripts byte-identical for " + region.id);
  }

  // Interrupt region R0's search after iteration 1 and resume: identical
  // curves. The invalid script keeps the run going for several iterations.
  RunConfig cfg_full = acceptance_config(fresh("resume_full"));
  cfg_full.backend.script = fixture("scripts/invalid.json");
  PipelineContext ctx_full = load_context(cfg_full);
  AnalysisArtifacts full_artifacts = cmd_analyze(ctx_full);
  const std::string region = full_artifacts.regions[0].id;
  cmd_search(ctx_full, region, false);
  std::string reference = read_file(cfg_full.out_dir + "/search_" + region + "/curves.csv");

  RunConfig cfg_split = cfg_full;
  cfg_split.out_dir = fresh("resume_split");
  PipelineContext ctx_split = load_context(cfg_split);
  cmd_analyze(ctx_split);
  cmd_search(ctx_split, region, false);
  const std::string run_dir = cfg_split.out_dir + "/search_" + region;
  for (const auto& entry : fs::directory_iterator(run_dir + "/checkpoints")) {
    if (entry.path().filename().string() > "iter_0001.json") fs::remove(entry.path());
  }
  SearchState mid = restore(run_dir + "/checkpoints/iter_0001.json");
  mid.finished = false;
  mid.stop_reason.clear();
  checkpoint(mid, run_dir + "/checkpoints");
  cmd_search(ctx_split, region, true);
  c.require(read_file(run_dir + "/curves.csv") == reference,
            "resumed curves identical to the uninterrupted run");
}

// 8. Prompt fidelity against the committed goldens.
void criterion_8(Check& c) {
  Region region;
  region.id = "R0";
  region.rerouted_pairs = {{"1", "3"}};
  region.box = {{{"1", "2"}, 79.0, 101.0},
                {{"1", "3"}, 39.0, 61.0},
                {{"2", "3"}, 79.0, 101.0}};
  region.description =
      "demands rerouted vs optimal: 1->3; box: 1->2 in [79, 101] 1->3 in [39, 61] 2->3 in "
      "[79, 101]";

  AdversarialSample adv;
  adv.demands.demands = {{"1", "3", 50.0}, {"1", "2", 100.0}, {"2", "3", 100.0}};
  adv.gap = 100.0;
  AdversarialSample adv2;
  adv2.demands.demands = {{"1", "3", 55.0}, {"1", "2", 95.0}, {"2", "3", 90.0}};
  adv2.gap = 95.0;
  AdversarialSample normal;
  normal.demands.demands = {{"1", "3", 20.0}, {"1", "2", 30.0}, {"2", "3", 35.0}};
  AdversarialSample normal2;
  normal2.demands.demands = {{"1", "3", 70.0}, {"1", "2", 10.0}, {"2", "3", 25.0}};

  PromptBundle pattern = build_pattern_prompt(region, {adv, adv2}, {normal, normal2}, 2);
  c.require(matches_golden("pattern_prompt.txt", pattern.render()),
            "pattern prompt matches golden");

  Explanation e;
  Explanation::Difference d;
  d.pair = {"1", "3"};
  d.heuristic_path = 0;
  d.optimal_path = 1;
  d.heuristic_flow = 50.0;
  d.optimal_flow = 50.0;
  d.heuristic_label = "1-2-3";
  d.optimal_label = "1-4-5-3";
  e.differences.push_back(d);
  e.pairs_compared = 3;

  PatternReport report = parse_pattern_text(
      "1. Elephant-and-Mice Mix: A single \"mice\" demand 1->3 exists while there are "
      "\"elephant\" demands like 1->2.\n2. Hub-Cut Congestion: Multiple demands all pass "
      "through one \"hub\" node, overloading its capacity. The greedy method fills each cut "
      "edge in turn and then rejects further demand, while the optimum reroutes portions "
      "around less congested links.");
  PromptBundle suggestion =
      build_suggestion_prompt(report.to_text(), e, base_heuristic(60.0), 3);
  c.require(matches_golden("suggestion_prompt.txt", suggestion.render()),
            "suggestion prompt matches golden");

  std::vector<MutationParent> parents{{base_heuristic(60.0), {adv}}};
  std::vector<std::string> ideas{
      "Select a small subset of heavy demands that cross minimal cuts for an exact "
      "multi-commodity flow solver over the full graph; fix their routes, then route all "
      "other demands on the residual capacities greedily or via the K-best multi-path "
      "approach."};
  PromptBundle mutation = build_mutation_prompt(parents, ideas, 2);
  c.require(matches_golden("mutation_prompt.txt", mutation.render()),
            "mutation prompt matches golden");

  PromptBundle fix = build_fix_prompt("{\"stages\": []}", "stage list must not be empty");
  c.require(matches_golden("fix_prompt.txt", fix.render()), "fix prompt matches golden");

  const std::string output_marker = "\"idea\": \"...\"";
  c.require(suggestion.render().find(output_marker) != std::string::npos,
            "suggestion output format block present");
  c.require(mutation.render().find("\"code\"") != std::string::npos,
            "mutation output format block present");
}

// 9. Ensemble dominance on every held-out instance.
void criterion_9(Check& c) {
  RunConfig cfg = acceptance_config(fresh("dominance"));
  PipelineContext ctx = load_context(cfg);
  AnalysisArtifacts artifacts = cmd_analyze(ctx);
  for (const Region& region : artifacts.regions) cmd_search(ctx, region.id, false);

  // Assemble the spec the same way cmd_ensemble does.
  EnsembleSpec assembled;
  assembled.fallback = ctx.base;
  for (const Region& region : artifacts.regions) {
    assembled.entries.push_back(
        {region, program_from_json(load_json_file(cfg.out_dir + "/search_" + region.id +
                                                  "/best_program.json"))});
  }

  for (const DemandMatrix& demands : make_heldout(ctx)) {
    double parallel = route_parallel(assembled, ctx.topology, demands, ctx.paths)
                          .outcome.total_met;
    RouteResult dispatch = route(assembled, ctx.topology, demands, ctx.paths);
    double fallback = interpret(ctx.base, ctx.topology, demands, ctx.paths).total_met;
    c.require(parallel >= dispatch.outcome.total_met - kEpsCap,
              "parallel mode >= dispatch mode");
    c.require(dispatch.outcome.total_met >= fallback - kEpsCap,
              "dispatch >= fallback when a specialist is selected");
  }
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Check&)> run;
  };
  std::vector<Criterion> criteria = {
      {"1 canonical counterexample (250 vs 150, one decision difference)", criterion_1},
      {"2 LP oracle equivalence on 200 grid instances", criterion_2},
      {"3 adversarial-finder floor across 5 seeds", criterion_3},
      {"4 feasibility fuzz over 10000 interpretations", criterion_4},
      {"5 island search conformance (zero-gap stop, fix bounds, curves)", criterion_5},
      {"6 end-to-end mock replication (regions, ensemble beats base)", criterion_6},
      {"7 reproducibility (byte-identical artifacts, resume)", criterion_7},
      {"8 prompt fidelity against goldens", criterion_8},
      {"9 ensemble dominance on held-out instances", criterion_9},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    Check check;
    auto t0 = std::chrono::steady_clock::now();
    try {
      criterion.run(check);
      double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::printf("[PASS] criterion %s (%.1fs)\n", criterion.name, s);
    } catch (const std::exception& e) {
      ++failures;
      std::printf("[FAIL] criterion %s: %s\n", criterion.name, e.what());
    }
    std::fflush(stdout);
  }
  return failures;
}
