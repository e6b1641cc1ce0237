#include "teforge/interpreter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <tuple>

namespace teforge {

namespace {

using Clock = std::chrono::steady_clock;

struct RunState {
  const Topology* topo;
  const DemandMatrix* demands;
  const PathSet* paths;
  std::vector<double> residual;            // per edge
  std::map<PairKey, std::vector<double>> flows;  // aligned with PathSet lists
  std::map<PairKey, double> remaining;     // unrouted volume per pair
  Clock::time_point start;
  std::int64_t budget_ms = 0;
  bool timed_out = false;

  bool out_of_budget() {
    if (timed_out) return true;
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
    if (elapsed.count() >= budget_ms) timed_out = true;
    return timed_out;
  }

  double bottleneck(const Path& path) const {
    double lo = std::numeric_limits<double>::infinity();
    for (int e : path.edges) lo = std::min(lo, residual[e]);
    return lo;
  }

  void add_flow(const PairKey& pair, int path_index, double volume) {
    if (volume <= kEpsNum) return;
    const Path& path = paths->at(pair)[path_index];
    for (int e : path.edges) residual[e] -= volume;
    flows[pair][path_index] += volume;
    remaining[pair] -= volume;
  }

  void remove_flow(const PairKey& pair, int path_index) {
    double volume = flows[pair][path_index];
    if (volume <= 0.0) return;
    const Path& path = paths->at(pair)[path_index];
    for (int e : path.edges) residual[e] += volume;
    flows[pair][path_index] = 0.0;
    remaining[pair] += volume;
  }

  double total_met() const {
    double sum = 0.0;
    for (const auto& [pair, list] : flows)
      for (double f : list) sum += f;
    return sum;
  }
};

// Demand iteration order for a program: the configured ordering with
// pair-lexicographic tie-breaks.
std::vector<Demand> ordered_demands(const DemandMatrix& demands, Ordering ordering) {
  std::vector<Demand> out = demands.demands;
  std::stable_sort(out.begin(), out.end(), [&](const Demand& a, const Demand& b) {
    switch (ordering) {
      case Ordering::volume_desc:
        if (a.volume != b.volume) return a.volume > b.volume;
        break;
      case Ordering::volume_asc:
        if (a.volume != b.volume) return a.volume < b.volume;
        break;
      case Ordering::pair_lex:
        break;
    }
    return a.pair() < b.pair();
  });
  return out;
}

void run_pin_small(RunState& state, const PinSmall& stage, const std::vector<Demand>& order) {
  for (const Demand& d : order) {
    if (state.out_of_budget()) return;
    if (!(d.volume < stage.threshold)) continue;
    double want = state.remaining[d.pair()];
    if (want <= kEpsNum) continue;
    const std::vector<Path>& candidates = state.paths->at(d.pair());
    if (candidates.empty()) continue;
    // All-or-nothing on the single shortest path.
    if (state.bottleneck(candidates[0]) >= want - kEpsNum)
      state.add_flow(d.pair(), 0, want);
  }
}

void run_greedy_topk(RunState& state, const GreedyTopK& stage, const std::vector<Demand>& order) {
  for (const Demand& d : order) {
    if (state.out_of_budget()) return;
    double want = state.remaining[d.pair()];
    if (want <= kEpsNum) continue;
    const std::vector<Path>& candidates = state.paths->at(d.pair());
    int limit = std::min<int>(stage.k, static_cast<int>(candidates.size()));
    if (stage.split) {
      for (int i = 0; i < limit && want > kEpsNum; ++i) {
        double fit = std::min(want, state.bottleneck(candidates[i]));
        if (fit > kEpsNum) {
          state.add_flow(d.pair(), i, fit);
          want -= fit;
        }
      }
    } else {
      for (int i = 0; i < limit; ++i) {
        if (state.bottleneck(candidates[i]) >= want - kEpsNum) {
          state.add_flow(d.pair(), i, want);
          break;
        }
      }
    }
  }
}

void run_lp_residual(RunState& state, const LpResidual& stage, const std::vector<Demand>& order) {
  if (state.out_of_budget()) return;
  std::vector<PairKey> selected;
  if (stage.heavy_count) {
    std::vector<std::pair<double, PairKey>> by_remaining;
    for (const Demand& d : order) {
      double rem = state.remaining[d.pair()];
      if (rem > kEpsNum) by_remaining.push_back({rem, d.pair()});
    }
    std::sort(by_remaining.begin(), by_remaining.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    int take = std::min<int>(*stage.heavy_count, static_cast<int>(by_remaining.size()));
    for (int i = 0; i < take; ++i) selected.push_back(by_remaining[i].second);
  } else {
    for (const Demand& d : order)
      if (state.remaining[d.pair()] > kEpsNum) selected.push_back(d.pair());
  }
  if (selected.empty()) return;

  std::map<PairKey, double> remaining;
  std::map<PairKey, std::vector<std::pair<int, Path>>> candidates;
  for (const PairKey& pair : selected) {
    remaining[pair] = state.remaining[pair];
    const std::vector<Path>& list = state.paths->at(pair);
    auto& entry = candidates[pair];
    for (size_t i = 0; i < list.size(); ++i) entry.push_back({static_cast<int>(i), list[i]});
  }
  FlowAssignment extra = solve_residual_lp(state.residual, remaining, candidates);
  for (const auto& [pair, flows] : extra.flows)
    for (size_t i = 0; i < flows.size(); ++i)
      if (flows[i] > kEpsNum) state.add_flow(pair, static_cast<int>(i), flows[i]);
}

void run_hotspot_reopt(RunState& state, const HotspotReopt& stage) {
  const Topology& topo = *state.topo;

  // Hot edges by utilization at stage entry.
  std::vector<std::pair<double, int>> hot;
  for (size_t e = 0; e < topo.edges.size(); ++e) {
    double cap = topo.edges[e].capacity;
    if (cap <= kEpsNum) continue;
    double util = (cap - state.residual[e]) / cap;
    if (util > stage.util_threshold) hot.push_back({util, static_cast<int>(e)});
  }
  std::sort(hot.begin(), hot.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    const Edge& ea = topo.edges[a.second];
    const Edge& eb = topo.edges[b.second];
    return std::tie(ea.src, ea.dst) < std::tie(eb.src, eb.dst);
  });
  if (static_cast<int>(hot.size()) > stage.max_hotspots) hot.resize(stage.max_hotspots);

  std::vector<std::vector<int>> neighbors = topo.undirected_neighbors();

  for (const auto& [util, hot_edge] : hot) {
    if (state.out_of_budget()) return;

    // Region: nodes within `radius` undirected hops of either endpoint.
    std::set<int> region;
    std::deque<std::pair<int, int>> frontier;
    int a = topo.node_index(topo.edges[hot_edge].src);
    int b = topo.node_index(topo.edges[hot_edge].dst);
    frontier.push_back({a, 0});
    frontier.push_back({b, 0});
    region.insert(a);
    region.insert(b);
    while (!frontier.empty()) {
      auto [node, depth] = frontier.front();
      frontier.pop_front();
      if (depth == stage.radius) continue;
      for (int next : neighbors[node]) {
        if (region.insert(next).second) frontier.push_back({next, depth + 1});
      }
    }
    std::set<int> region_edges;
    for (size_t e = 0; e < topo.edges.size(); ++e) {
      if (region.count(topo.node_index(topo.edges[e].src)) &&
          region.count(topo.node_index(topo.edges[e].dst)))
        region_edges.insert(static_cast<int>(e));
    }

    // Snapshot so a losing re-route can be rolled back.
    auto saved_residual = state.residual;
    auto saved_flows = state.flows;
    auto saved_remaining = state.remaining;
    double before = state.total_met();

    // Clear every flow whose path touches a region edge; flows fully outside
    // the region stay put.
    for (auto& [pair, flows] : state.flows) {
      const std::vector<Path>& candidates = state.paths->at(pair);
      for (size_t i = 0; i < flows.size(); ++i) {
        if (flows[i] <= kEpsNum) continue;
        bool touches = std::any_of(candidates[i].edges.begin(), candidates[i].edges.end(),
                                   [&](int e) { return region_edges.count(e) > 0; });
        if (touches) state.remove_flow(pair, static_cast<int>(i));
      }
    }

    // Re-route region demands over candidates fully inside the region.
    std::map<PairKey, double> remaining;
    std::map<PairKey, std::vector<std::pair<int, Path>>> candidates;
    for (const Demand& d : state.demands->demands) {
      if (!region.count(topo.node_index(d.src)) || !region.count(topo.node_index(d.dst)))
        continue;
      double rem = state.remaining[d.pair()];
      if (rem <= kEpsNum) continue;
      const std::vector<Path>& list = state.paths->at(d.pair());
      std::vector<std::pair<int, Path>> inside;
      for (size_t i = 0; i < list.size(); ++i) {
        bool contained = std::all_of(list[i].edges.begin(), list[i].edges.end(),
                                     [&](int e) { return region_edges.count(e) > 0; });
        if (contained) inside.push_back({static_cast<int>(i), list[i]});
      }
      if (inside.empty()) continue;
      remaining[d.pair()] = rem;
      candidates[d.pair()] = std::move(inside);
    }
    if (!candidates.empty()) {
      FlowAssignment extra = solve_residual_lp(state.residual, remaining, candidates);
      for (const auto& [pair, flows] : extra.flows)
        for (size_t i = 0; i < flows.size(); ++i)
          if (flows[i] > kEpsNum) state.add_flow(pair, static_cast<int>(i), flows[i]);
    }

    // Keep the re-route only when it strictly gains traffic.
    if (state.total_met() <= before + kEpsNum) {
      state.residual = std::move(saved_residual);
      state.flows = std::move(saved_flows);
      state.remaining = std::move(saved_remaining);
    }
  }
}

}  // namespace

RoutingOutcome interpret(const HeuristicProgram& program, const Topology& topology,
                         const DemandMatrix& demands, const PathSet& paths) {
  std::vector<std::string> violations = validate(program);
  if (!violations.empty()) {
    std::string message = "invalid program:";
    for (const std::string& v : violations) message += " " + v + ";";
    throw ProgramError(message);
  }
  demands.validate(&topology);

  RunState state;
  state.topo = &topology;
  state.demands = &demands;
  state.paths = &paths;
  state.residual.resize(topology.edges.size());
  for (size_t e = 0; e < topology.edges.size(); ++e)
    state.residual[e] = topology.edges[e].capacity;
  for (const Demand& d : demands.demands) {
    state.remaining[d.pair()] = d.volume;
    state.flows[d.pair()].assign(paths.at(d.pair()).size(), 0.0);
  }
  state.start = Clock::now();
  state.budget_ms = program.budget_ms;

  std::vector<Demand> order = ordered_demands(demands, program.ordering);
  for (const Stage& stage : program.stages) {
    if (state.out_of_budget()) break;
    if (const auto* pin = std::get_if<PinSmall>(&stage)) {
      run_pin_small(state, *pin, order);
    } else if (const auto* greedy = std::get_if<GreedyTopK>(&stage)) {
      run_greedy_topk(state, *greedy, order);
    } else if (const auto* lp = std::get_if<LpResidual>(&stage)) {
      run_lp_residual(state, *lp, order);
    } else if (const auto* hot = std::get_if<HotspotReopt>(&stage)) {
      run_hotspot_reopt(state, *hot);
    }
  }

  RoutingOutcome outcome;
  outcome.assignment.flows = state.flows;
  outcome.total_met = outcome.assignment.total_met();
  outcome.total_unmet = demands.total_volume() - outcome.total_met;
  outcome.timed_out = state.timed_out;
  outcome.elapsed_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - state.start).count();
  for (const Demand& d : demands.demands)
    outcome.dominant_paths[d.pair()] = outcome.assignment.dominant_path(d.pair());
  return outcome;
}

double evaluate_gap(const HeuristicProgram& program, const Topology& topology,
                    const DemandMatrix& demands, const PathSet& paths, double optimal_total) {
  RoutingOutcome outcome = interpret(program, topology, demands, paths);
  return std::max(0.0, optimal_total - outcome.total_met);
}

}  // namespace teforge
