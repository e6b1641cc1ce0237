#include "teforge/paths.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>

namespace teforge {

namespace {

constexpr int kUnreachable = std::numeric_limits<int>::max();

struct Graph {
  const Topology* topo;
  std::vector<std::vector<int>> out;  // node -> edge indices, sorted by dst id
  std::vector<std::vector<int>> in;   // node -> edge indices
  std::vector<int> edge_src, edge_dst;
};

Graph build_graph(const Topology& topo) {
  Graph g;
  g.topo = &topo;
  g.out.resize(topo.nodes.size());
  g.in.resize(topo.nodes.size());
  g.edge_src.resize(topo.edges.size());
  g.edge_dst.resize(topo.edges.size());
  for (size_t e = 0; e < topo.edges.size(); ++e) {
    int s = topo.node_index(topo.edges[e].src);
    int t = topo.node_index(topo.edges[e].dst);
    g.edge_src[e] = s;
    g.edge_dst[e] = t;
    g.out[s].push_back(static_cast<int>(e));
    g.in[t].push_back(static_cast<int>(e));
  }
  for (auto& list : g.out)
    std::sort(list.begin(), list.end(),
              [&](int a, int b) { return topo.nodes[g.edge_dst[a]] < topo.nodes[g.edge_dst[b]]; });
  return g;
}

// Hop distances to `target` over edges not banned, ignoring banned nodes.
std::vector<int> dists_to_target(const Graph& g, int target,
                                 const std::set<int>& banned_edges,
                                 const std::set<int>& banned_nodes) {
  std::vector<int> dist(g.out.size(), kUnreachable);
  if (banned_nodes.count(target)) return dist;
  dist[target] = 0;
  std::deque<int> queue{target};
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int e : g.in[v]) {
      if (banned_edges.count(e)) continue;
      int u = g.edge_src[e];
      if (banned_nodes.count(u)) continue;
      if (dist[u] == kUnreachable) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
    }
  }
  return dist;
}

// Lexicographically smallest shortest path from `src` to `target` in the
// filtered graph, or nullopt. Greedy walk along nonincreasing distance
// levels, taking the smallest next node id at each step; out-lists are
// pre-sorted by target id so the first admissible edge wins.
std::optional<Path> lex_min_shortest(const Graph& g, int src, int target,
                                     const std::set<int>& banned_edges,
                                     const std::set<int>& banned_nodes) {
  if (banned_nodes.count(src)) return std::nullopt;
  std::vector<int> dist = dists_to_target(g, target, banned_edges, banned_nodes);
  if (dist[src] == kUnreachable) return std::nullopt;
  Path path;
  int cur = src;
  while (cur != target) {
    int chosen = -1;
    for (int e : g.out[cur]) {
      if (banned_edges.count(e)) continue;
      int v = g.edge_dst[e];
      if (banned_nodes.count(v)) continue;
      if (dist[v] == dist[cur] - 1) {
        chosen = e;
        break;
      }
    }
    path.edges.push_back(chosen);
    cur = g.edge_dst[chosen];
  }
  return path;
}

struct PathOrder {
  const Graph* g;
  bool operator()(const Path& a, const Path& b) const {
    if (a.hop_count() != b.hop_count()) return a.hop_count() < b.hop_count();
    size_t n = std::min(a.edges.size(), b.edges.size());
    const Topology& topo = *g->topo;
    // Equal hop count: compare node sequences; first node is the shared src.
    for (size_t i = 0; i < n; ++i) {
      const NodeId& na = topo.nodes[g->edge_dst[a.edges[i]]];
      const NodeId& nb = topo.nodes[g->edge_dst[b.edges[i]]];
      if (na != nb) return na < nb;
    }
    return a.edges < b.edges;
  }
};

}  // namespace

std::vector<Path> k_shortest_paths(const Topology& topology, const NodeId& src,
                                   const NodeId& dst, int k) {
  int s = topology.node_index(src);
  int t = topology.node_index(dst);
  if (s < 0) throw InstanceError("unknown node id: " + src);
  if (t < 0) throw InstanceError("unknown node id: " + dst);
  if (src == dst) throw InstanceError("source equals target: " + src);
  if (k < 1) throw InstanceError("k must be >= 1");

  Graph g = build_graph(topology);
  PathOrder less{&g};

  std::vector<Path> result;
  std::optional<Path> first = lex_min_shortest(g, s, t, {}, {});
  if (!first) return result;
  result.push_back(*first);

  // Yen's deviation loop over the last accepted path.
  std::set<Path, PathOrder> candidates(less);
  while (static_cast<int>(result.size()) < k) {
    const Path& prev = result.back();
    std::set<int> banned_nodes;
    Path root;  // grows edge by edge along prev

    for (size_t spur_idx = 0; spur_idx < prev.edges.size(); ++spur_idx) {
      int spur_node = g.edge_src[prev.edges[spur_idx]];

      std::set<int> banned_edges;
      for (const Path& accepted : result) {
        if (accepted.edges.size() < spur_idx) continue;
        if (std::equal(root.edges.begin(), root.edges.end(), accepted.edges.begin(),
                       accepted.edges.begin() + spur_idx) &&
            accepted.edges.size() > spur_idx) {
          banned_edges.insert(accepted.edges[spur_idx]);
        }
      }

      std::optional<Path> spur = lex_min_shortest(g, spur_node, t, banned_edges, banned_nodes);
      if (spur) {
        Path full = root;
        full.edges.insert(full.edges.end(), spur->edges.begin(), spur->edges.end());
        bool known = std::any_of(result.begin(), result.end(),
                                 [&](const Path& p) { return p.edges == full.edges; });
        if (!known) candidates.insert(full);
      }

      banned_nodes.insert(spur_node);
      root.edges.push_back(prev.edges[spur_idx]);
    }

    if (candidates.empty()) break;
    result.push_back(*candidates.begin());
    candidates.erase(candidates.begin());
  }
  return result;
}

PathSet build_path_set(const Topology& topology, const std::vector<PairKey>& pairs, int k) {
  if (k < 1) throw InstanceError("k must be >= 1");
  PathSet set;
  for (const PairKey& pair : pairs) {
    if (set.paths.count(pair)) continue;
    set.paths[pair] = k_shortest_paths(topology, pair.src, pair.dst, k);
  }
  return set;
}

}  // namespace teforge
