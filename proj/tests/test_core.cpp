#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"

using namespace teforge;
using namespace testutil;

TEST_CASE("topology invariants are enforced") {
  Topology topo = fig1b_topology();
  CHECK(topo.nodes.size() == 5);
  CHECK(topo.edges.size() == 5);

  Topology dup_node = topo;
  dup_node.nodes.push_back("1");
  CHECK_THROWS_AS(dup_node.validate(), InstanceError);

  Topology bad_endpoint = topo;
  bad_endpoint.edges.push_back({"1", "99", 10.0});
  CHECK_THROWS_AS(bad_endpoint.validate(), InstanceError);

  Topology negative_cap = topo;
  negative_cap.edges[0].capacity = -1.0;
  CHECK_THROWS_AS(negative_cap.validate(), InstanceError);

  Topology dup_edge = topo;
  dup_edge.edges.push_back({"1", "2", 5.0});
  CHECK_THROWS_AS(dup_edge.validate(), InstanceError);
}

TEST_CASE("demand matrix invariants") {
  DemandMatrix demands = fig1b_demands();
  CHECK(demands.total_volume() == doctest::Approx(250.0));

  DemandMatrix self_loop;
  self_loop.demands.push_back({"1", "1", 5.0});
  CHECK_THROWS_AS(self_loop.validate(), InstanceError);

  DemandMatrix duplicate;
  duplicate.demands.push_back({"1", "2", 5.0});
  duplicate.demands.push_back({"1", "2", 6.0});
  CHECK_THROWS_AS(duplicate.validate(), InstanceError);

  DemandMatrix negative;
  negative.demands.push_back({"1", "2", -5.0});
  CHECK_THROWS_AS(negative.validate(), InstanceError);
}

TEST_CASE("graphml reader expands undirected edges and reads capacities") {
  const char* graphml = R"(<?xml version="1.0"?>
<graphml>
  <key id="d0" for="edge" attr.name="capacity" attr.type="double"><default>7.5</default></key>
  <graph edgedefault="undirected">
    <node id="a"/>
    <node id="b"/>
    <node id="c"/>
    <edge source="a" target="b"><data key="d0">10</data></edge>
    <edge source="b" target="c"/>
  </graph>
</graphml>)";
  write_file("graphml_fixture_tmp.graphml", graphml);
  Topology topo = load_topology_graphml("graphml_fixture_tmp.graphml");
  CHECK(topo.nodes.size() == 3);
  CHECK(topo.edges.size() == 4);  // two undirected edges -> four directed
  CHECK(topo.edges[topo.edge_index("a", "b")].capacity == doctest::Approx(10.0));
  CHECK(topo.edges[topo.edge_index("b", "a")].capacity == doctest::Approx(10.0));
  CHECK(topo.edges[topo.edge_index("b", "c")].capacity == doctest::Approx(7.5));
}

TEST_CASE("k_shortest_paths on the canonical instance") {
  Topology topo = fig1b_topology();
  std::vector<Path> paths = k_shortest_paths(topo, "1", "3", 2);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0].node_sequence(topo) == std::vector<NodeId>{"1", "2", "3"});
  CHECK(paths[1].node_sequence(topo) == std::vector<NodeId>{"1", "4", "5", "3"});

  CHECK_THROWS_AS(k_shortest_paths(topo, "1", "1", 2), InstanceError);
  CHECK_THROWS_AS(k_shortest_paths(topo, "1", "nope", 2), InstanceError);
  // No edges into node 1: disconnected pair.
  CHECK(k_shortest_paths(topo, "3", "1", 3).empty());
}

TEST_CASE("k_shortest_paths matches exhaustive enumeration on random graphs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    Topology topo = random_topology(rng, 8);
    const NodeId& src = topo.nodes[rng() % topo.nodes.size()];
    const NodeId& dst = topo.nodes[rng() % topo.nodes.size()];
    if (src == dst) continue;

    std::vector<std::vector<NodeId>> expected = enumerate_simple_paths(topo, src, dst);
    if (expected.size() > 4) expected.resize(4);

    std::vector<Path> actual = k_shortest_paths(topo, src, dst, 4);
    REQUIRE(actual.size() == expected.size());
    for (size_t i = 0; i < actual.size(); ++i)
      CHECK(actual[i].node_sequence(topo) == expected[i]);
  }
}

TEST_CASE("build_path_set covers all pairs and validates") {
  Topology topo = fig1b_topology();
  PathSet set = build_path_set(topo, fig1b_space().pair_keys(), 3);
  CHECK(set.at({"1", "2"}).size() == 1);
  CHECK(set.at({"1", "2"})[0].node_sequence(topo) == std::vector<NodeId>{"1", "2"});
  CHECK(set.at({"2", "3"}).size() == 1);
  CHECK(set.at({"1", "3"}).size() == 2);

  PathSet empty = build_path_set(topo, {}, 3);
  CHECK(empty.paths.empty());

  // Every stored path is simple and connects its pair.
  std::mt19937_64 rng(7);
  Topology random = random_topology(rng, 10);
  std::vector<PairKey> pairs;
  for (int i = 0; i < 12; ++i) {
    const NodeId& a = random.nodes[rng() % random.nodes.size()];
    const NodeId& b = random.nodes[rng() % random.nodes.size()];
    if (a != b) pairs.push_back({a, b});
  }
  PathSet random_set = build_path_set(random, pairs, 4);
  for (const auto& [pair, list] : random_set.paths) {
    for (const Path& p : list) {
      std::vector<NodeId> seq = p.node_sequence(random);
      REQUIRE(!seq.empty());
      CHECK(seq.front() == pair.src);
      CHECK(seq.back() == pair.dst);
      std::set<NodeId> unique(seq.begin(), seq.end());
      CHECK(unique.size() == seq.size());
      for (size_t i = 0; i + 1 < seq.size(); ++i)
        CHECK(random.edge_index(seq[i], seq[i + 1]) >= 0);
    }
  }
}

TEST_CASE("solve_optimal reproduces the canonical objective") {
  Topology topo = fig1b_topology();
  DemandMatrix demands = fig1b_demands();
  PathSet paths = fig1b_paths(3);

  FlowAssignment assignment = solve_optimal(topo, demands, paths);
  CHECK(assignment.total_met() == doctest::Approx(250.0).epsilon(kEpsLp));
  CHECK(feasibility_violation(topo, demands, paths, assignment).empty());

  // Exhaustive confirmation on this instance (grid 10 to keep it quick; the
  // optimum lies on that grid).
  CHECK(grid_max_flow(topo, demands, paths, 10.0) == doctest::Approx(250.0));

  // The optimum routes 1->3 entirely on the southern detour.
  int dominant = assignment.dominant_path({"1", "3"});
  REQUIRE(dominant >= 0);
  CHECK(paths.at({"1", "3"})[dominant].node_sequence(topo) ==
        std::vector<NodeId>{"1", "4", "5", "3"});
}

TEST_CASE("solve_optimal: all-zero demands give an empty assignment") {
  Topology topo = fig1b_topology();
  DemandMatrix demands;
  demands.demands.push_back({"1", "3", 0.0});
  demands.demands.push_back({"1", "2", 0.0});
  PathSet paths = paths_for(topo, demands, 3);
  FlowAssignment assignment = solve_optimal(topo, demands, paths);
  CHECK(assignment.total_met() == doctest::Approx(0.0));
}

TEST_CASE("solve_optimal rejects demands missing from the path set") {
  Topology topo = fig1b_topology();
  DemandMatrix demands = fig1b_demands();
  PathSet paths = build_path_set(topo, {{"1", "3"}}, 3);
  CHECK_THROWS_AS(solve_optimal(topo, demands, paths), InstanceError);
}

TEST_CASE("solve_optimal equals exhaustive grid search on random instances") {
  std::mt19937_64 rng(99);
  int done = 0;
  while (done < 25) {
    Topology topo = random_topology(rng, 5 + static_cast<int>(rng() % 2));
    DemandMatrix demands = random_grid_demands(rng, topo, 3);
    if (demands.demands.size() < 2) continue;
    PathSet paths = paths_for(topo, demands, 3);

    double lp = solve_optimal(topo, demands, paths).total_met();
    double grid = grid_max_flow(topo, demands, paths, 1.0);
    int path_count = 0;
    for (const auto& [pair, list] : paths.paths) path_count += static_cast<int>(list.size());

    CHECK(lp >= grid - 1e-6);                        // grid points are feasible LP points
    CHECK(lp <= grid + 1.0 * path_count + 1e-6);     // rounding down loses <= g per path
    ++done;
  }
}

TEST_CASE("optimal dominates feasible greedy assignments") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    Topology topo = random_topology(rng, 6);
    DemandMatrix demands = random_grid_demands(rng, topo, 4, 6);
    PathSet paths = paths_for(topo, demands, 3);
    double optimal = solve_optimal(topo, demands, paths).total_met();

    // A shuffled greedy fill is always feasible and never better.
    std::vector<double> residual(topo.edges.size());
    for (size_t e = 0; e < topo.edges.size(); ++e) residual[e] = topo.edges[e].capacity;
    double greedy_total = 0.0;
    std::vector<Demand> order = demands.demands;
    std::shuffle(order.begin(), order.end(), rng);
    for (const Demand& d : order) {
      for (const Path& p : paths.at(d.pair())) {
        double fit = d.volume;
        for (int e : p.edges) fit = std::min(fit, residual[e]);
        if (fit > 0) {
          for (int e : p.edges) residual[e] -= fit;
          greedy_total += fit;
          break;
        }
      }
    }
    CHECK(optimal >= greedy_total - 1e-6);
  }
}

TEST_CASE("solve_optimal is deterministic") {
  Topology topo = fig1b_topology();
  DemandMatrix demands = fig1b_demands();
  PathSet paths = fig1b_paths(3);
  FlowAssignment a = solve_optimal(topo, demands, paths);
  FlowAssignment b = solve_optimal(topo, demands, paths);
  CHECK(a.total_met() == b.total_met());
  CHECK(a.flows == b.flows);
}

TEST_CASE("base assignment pinned by hand reaches 150 on the canonical instance") {
  // Pin 1->3 onto 1-2-3, then LP on the residual: the documented failure.
  Topology topo = fig1b_topology();
  DemandMatrix demands = fig1b_demands();
  PathSet paths = fig1b_paths(3);

  std::vector<double> residual(topo.edges.size());
  for (size_t e = 0; e < topo.edges.size(); ++e) residual[e] = topo.edges[e].capacity;
  const Path& north = paths.at({"1", "3"})[0];
  for (int e : north.edges) residual[e] -= 50.0;

  std::map<PairKey, double> remaining{{{"1", "2"}, 100.0}, {{"2", "3"}, 100.0}};
  std::map<PairKey, std::vector<std::pair<int, Path>>> candidates;
  for (const PairKey& pair : {PairKey{"1", "2"}, PairKey{"2", "3"}}) {
    const auto& list = paths.at(pair);
    for (size_t i = 0; i < list.size(); ++i)
      candidates[pair].push_back({static_cast<int>(i), list[i]});
  }
  FlowAssignment rest = solve_residual_lp(residual, remaining, candidates);
  CHECK(50.0 + rest.total_met() == doctest::Approx(150.0).epsilon(kEpsLp));
}

TEST_CASE("zero-capacity edges are retained but unusable") {
  Topology topo = fig1b_topology();
  topo.edges[topo.edge_index("1", "2")].capacity = 0.0;
  topo.validate();

  // The dead edge still shapes the path set (shortest by hops), it just
  // cannot carry flow.
  std::vector<Path> paths = k_shortest_paths(topo, "1", "3", 2);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0].node_sequence(topo) == std::vector<NodeId>{"1", "2", "3"});

  DemandMatrix demands = fig1b_demands();
  PathSet set = paths_for(topo, demands, 3);
  FlowAssignment assignment = solve_optimal(topo, demands, set);
  CHECK(assignment.edge_loads(topo, set)[topo.edge_index("1", "2")] ==
        doctest::Approx(0.0));
  // 1->3 uses the southern detour, 2->3 its direct edge, 1->2 is starved.
  CHECK(assignment.total_met() == doctest::Approx(150.0));
  CHECK(feasibility_violation(topo, demands, set, assignment).empty());
}

TEST_CASE("k_shortest_paths matches enumeration at k=8 on denser graphs") {
  std::mt19937_64 rng(555);
  for (int trial = 0; trial < 10; ++trial) {
    Topology topo = random_topology(rng, 9);
    const NodeId& src = topo.nodes[rng() % topo.nodes.size()];
    const NodeId& dst = topo.nodes[rng() % topo.nodes.size()];
    if (src == dst) continue;
    std::vector<std::vector<NodeId>> expected = enumerate_simple_paths(topo, src, dst);
    if (expected.size() > 8) expected.resize(8);
    std::vector<Path> actual = k_shortest_paths(topo, src, dst, 8);
    REQUIRE(actual.size() == expected.size());
    for (size_t i = 0; i < actual.size(); ++i)
      CHECK(actual[i].node_sequence(topo) == expected[i]);
  }

  // Wide-area scale: a sparse 20-node graph stays fast and ordered.
  Topology wide;
  for (int i = 0; i < 20; ++i) wide.nodes.push_back("w" + std::to_string(i < 10 ? 0 : 1) + std::to_string(i % 10));
  std::mt19937_64 rng2(9001);
  for (int a = 0; a < 20; ++a)
    for (int b = 0; b < 20; ++b)
      if (a != b && rng2() % 100 < 15) wide.edges.push_back({wide.nodes[a], wide.nodes[b], 10.0});
  wide.validate();
  std::vector<Path> paths = k_shortest_paths(wide, wide.nodes[0], wide.nodes[19], 8);
  for (size_t i = 1; i < paths.size(); ++i)
    CHECK(paths[i - 1].hop_count() <= paths[i].hop_count());
}

TEST_CASE("json round trips for topology and demands") {
  Topology topo = fig1b_topology();
  Topology again = Topology::from_json(topo.to_json());
  CHECK(again.to_json() == topo.to_json());

  DemandMatrix demands = fig1b_demands();
  DemandMatrix demands_again = DemandMatrix::from_json(demands.to_json());
  CHECK(demands_again.to_json() == demands.to_json());
}
