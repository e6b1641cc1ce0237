#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <thread>

#include "teforge/interpreter.hpp"
#include "test_util.hpp"

using namespace teforge;
using namespace testutil;

TEST_CASE("validate accepts the base program and reports range violations") {
  CHECK(validate(base_heuristic(60.0)).empty());

  HeuristicProgram bad_k = base_heuristic(60.0);
  bad_k.stages.push_back(GreedyTopK{0, true});
  std::vector<std::string> violations = validate(bad_k);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].find("k must be >= 1") != std::string::npos);

  HeuristicProgram empty;
  empty.stages.clear();
  CHECK(!validate(empty).empty());

  HeuristicProgram bad_budget = base_heuristic(60.0);
  bad_budget.budget_ms = 0;
  CHECK(!validate(bad_budget).empty());

  HeuristicProgram bad_util = base_heuristic(60.0);
  bad_util.stages.push_back(HotspotReopt{1.5, 1, 1});
  CHECK(!validate(bad_util).empty());
}

TEST_CASE("misspelled stage tags are named in the parse error") {
  const char* text = R"({"name":"x","ordering":"pair_lex","budget_ms":100,
                         "stages":[{"type":"grredy_topk","k":2,"split":true}]})";
  try {
    parse_program(text);
    FAIL("expected ProgramError");
  } catch (const ProgramError& e) {
    CHECK(std::string(e.what()).find("grredy_topk") != std::string::npos);
  }
}

TEST_CASE("base program reproduces the documented failure: 150 vs optimal 250") {
  Topology topo = fig1b_topology();
  DemandMatrix demands = fig1b_demands();
  PathSet paths = fig1b_paths(3);

  RoutingOutcome outcome = interpret(base_heuristic(60.0), topo, demands, paths);
  CHECK(outcome.total_met == doctest::Approx(150.0).epsilon(kEpsLp));
  CHECK(outcome.total_unmet == doctest::Approx(100.0).epsilon(kEpsLp));
  CHECK(!outcome.timed_out);
  CHECK(feasibility_violation(topo, demands, paths, outcome.assignment).empty());

  // The pinned demand sits on the two-hop northern path.
  int dominant = outcome.dominant_paths.at({"1", "3"});
  REQUIRE(dominant >= 0);
  CHECK(paths.at({"1", "3"})[dominant].node_sequence(topo) ==
        std::vector<NodeId>{"1", "2", "3"});
}

TEST_CASE("the specialist closes the gap on the canonical instance") {
  Topology topo = fig1b_topology();
  DemandMatrix demands = fig1b_demands();
  PathSet paths = fig1b_paths(3);

  RoutingOutcome outcome = interpret(fig1b_specialist(), topo, demands, paths);
  double optimal = solve_optimal(topo, demands, paths).total_met();
  CHECK(optimal == doctest::Approx(250.0).epsilon(kEpsLp));
  CHECK(outcome.total_met == doctest::Approx(optimal).epsilon(kEpsLp));
  CHECK(feasibility_violation(topo, demands, paths, outcome.assignment).empty());
}

TEST_CASE("any program on all-zero demands routes nothing") {
  Topology topo = fig1b_topology();
  DemandMatrix demands;
  for (const Demand& d : fig1b_demands().demands)
    demands.demands.push_back({d.src, d.dst, 0.0});
  PathSet paths = fig1b_paths(3);

  CHECK(interpret(base_heuristic(60.0), topo, demands, paths).total_met ==
        doctest::Approx(0.0));
  CHECK(interpret(fig1b_specialist(), topo, demands, paths).total_met ==
        doctest::Approx(0.0));
}

TEST_CASE("base_heuristic threshold edge cases") {
  Topology topo = fig1b_topology();
  DemandMatrix demands = fig1b_demands();
  PathSet paths = fig1b_paths(3);
  double optimal = solve_optimal(topo, demands, paths).total_met();

  // threshold 0 pins nothing: the program is the plain LP.
  RoutingOutcome zero = interpret(base_heuristic(0.0), topo, demands, paths);
  CHECK(zero.total_met == doctest::Approx(optimal).epsilon(kEpsLp));

  // An effectively infinite threshold pins everything; optimal still wins.
  RoutingOutcome pinned =
      interpret(base_heuristic(std::numeric_limits<double>::infinity()), topo, demands, paths);
  CHECK(pinned.total_met <= optimal + kEpsLp * optimal);

  // threshold 60 loses exactly 100 traffic units.
  RoutingOutcome base = interpret(base_heuristic(60.0), topo, demands, paths);
  CHECK(optimal - base.total_met == doctest::Approx(100.0).epsilon(kEpsLp));
}

TEST_CASE("program json round trip is lossless") {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 200; ++i) {
    HeuristicProgram p = random_program(rng);
    p.name = "p" + std::to_string(i);
    p.lineage = {"a", "b"};
    HeuristicProgram back = parse_program(serialize_program(p));
    CHECK(back == p);
  }

  HeuristicProgram base = base_heuristic(60.0);
  CHECK(parse_program(serialize_program(base)) == base);
}

TEST_CASE("gap nonnegativity and feasibility under random programs") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 60; ++trial) {
    Topology topo = random_topology(rng, 6);
    DemandMatrix demands = random_grid_demands(rng, topo, 4, 6);
    PathSet paths = paths_for(topo, demands, 3);
    double optimal = solve_optimal(topo, demands, paths).total_met();

    HeuristicProgram program = random_program(rng);
    RoutingOutcome outcome = interpret(program, topo, demands, paths);
    CHECK(feasibility_violation(topo, demands, paths, outcome.assignment).empty());
    CHECK(outcome.total_met <= optimal + kEpsLp * std::max(1.0, optimal));
    CHECK(outcome.total_met + outcome.total_unmet ==
          doctest::Approx(demands.total_volume()).epsilon(kEpsCap));
  }
}

TEST_CASE("interpreter is deterministic") {
  Topology topo = fig1b_topology();
  DemandMatrix demands = fig1b_demands();
  PathSet paths = fig1b_paths(3);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    HeuristicProgram p = random_program(rng);
    RoutingOutcome a = interpret(p, topo, demands, paths);
    RoutingOutcome b = interpret(p, topo, demands, paths);
    CHECK(a.total_met == b.total_met);
    CHECK(a.assignment.flows == b.assignment.flows);
  }
}

TEST_CASE("budget exhaustion yields a feasible flagged partial") {
  // A large instance plus a 1 ms budget forces the timeout path.
  std::mt19937_64 rng(31);
  Topology topo = random_topology(rng, 14, 12);
  DemandMatrix demands = random_grid_demands(rng, topo, 60, 8);
  PathSet paths = paths_for(topo, demands, 4);

  HeuristicProgram slow;
  slow.name = "slow";
  slow.budget_ms = 1;
  for (int i = 0; i < 40; ++i) {
    slow.stages.push_back(LpResidual{std::nullopt});
    slow.stages.push_back(HotspotReopt{0.5, 3, 2});
  }

  RoutingOutcome limited = interpret(slow, topo, demands, paths);
  CHECK(feasibility_violation(topo, demands, paths, limited.assignment).empty());

  HeuristicProgram relaxed = slow;
  relaxed.budget_ms = 60000;
  RoutingOutcome full = interpret(relaxed, topo, demands, paths);
  CHECK(limited.total_met <= full.total_met + kEpsCap);
  if (limited.timed_out) CHECK(limited.elapsed_ms >= 1);
}

TEST_CASE("interpret rejects invalid programs without crashing") {
  Topology topo = fig1b_topology();
  DemandMatrix demands = fig1b_demands();
  PathSet paths = fig1b_paths(3);
  HeuristicProgram bad;
  bad.stages.push_back(GreedyTopK{0, true});
  CHECK_THROWS_AS(interpret(bad, topo, demands, paths), ProgramError);
}

TEST_CASE("lp_residual heavy_subset only serves the largest remainders") {
  Topology topo = fig1b_topology();
  DemandMatrix demands = fig1b_demands();  // 1->3:50, 1->2:100, 2->3:100
  PathSet paths = fig1b_paths(3);

  HeuristicProgram heavy_one;
  heavy_one.name = "heavy1";
  heavy_one.stages.push_back(LpResidual{1});
  RoutingOutcome outcome = interpret(heavy_one, topo, demands, paths);
  // Largest remainder is 1->2 (volume tie with 2->3, pair-lex first).
  CHECK(outcome.total_met == doctest::Approx(100.0));
  CHECK(outcome.assignment.flows.at({"1", "2"})[0] == doctest::Approx(100.0));
  CHECK(outcome.assignment.dominant_path({"2", "3"}) == -1);

  HeuristicProgram heavy_many;
  heavy_many.name = "heavy9";
  heavy_many.stages.push_back(LpResidual{9});  // more than available: all demands
  CHECK(interpret(heavy_many, topo, demands, paths).total_met == doctest::Approx(250.0));
}

TEST_CASE("interpret is safe to call from many threads on shared inputs") {
  Topology topo = fig1b_topology();
  DemandMatrix demands = fig1b_demands();
  PathSet paths = fig1b_paths(3);
  HeuristicProgram program = fig1b_specialist();

  std::vector<std::thread> workers;
  std::array<double, 8> results{};
  for (size_t t = 0; t < results.size(); ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < 25; ++i)
        results[t] = interpret(program, topo, demands, paths).total_met;
    });
  }
  for (std::thread& w : workers) w.join();
  for (double r : results) CHECK(r == doctest::Approx(250.0));
}

TEST_CASE("greedy split=false routes fully or not at all") {
  Topology topo = fig1b_topology();
  DemandMatrix demands;
  demands.demands.push_back({"1", "3", 120.0});  // neither path alone fits 120
  PathSet paths = paths_for(topo, demands, 3);

  HeuristicProgram no_split;
  no_split.name = "ns";
  no_split.stages.push_back(GreedyTopK{2, false});
  CHECK(interpret(no_split, topo, demands, paths).total_met == doctest::Approx(0.0));

  HeuristicProgram with_split = no_split;
  with_split.stages[0] = GreedyTopK{2, true};
  CHECK(interpret(with_split, topo, demands, paths).total_met == doctest::Approx(120.0));
}
