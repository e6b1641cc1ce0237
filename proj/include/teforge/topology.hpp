#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

#include "teforge/common.hpp"

namespace teforge {

using NodeId = std::string;

struct Edge {
  NodeId src;
  NodeId dst;
  double capacity = 0.0;
};

/// A capacitated directed graph. Node ids are unique strings; at most one
/// directed edge per ordered pair (parallel edges are merged on load by
/// summing capacities).
struct Topology {
  std::vector<NodeId> nodes;
  std::vector<Edge> edges;

  int node_index(const NodeId& id) const;
  /// Index of the edge src->dst, or -1.
  int edge_index(const NodeId& src, const NodeId& dst) const;
  /// Outgoing edge indices per node index, each list sorted by target id.
  std::vector<std::vector<int>> out_edges_by_node() const;
  /// Undirected adjacency (node indices), for neighborhood computations.
  std::vector<std::vector<int>> undirected_neighbors() const;

  /// Throws InstanceError on duplicate nodes/edges, unknown endpoints or
  /// negative capacities.
  void validate() const;

  static Topology from_json(const json& j);
  json to_json() const;
};

Topology load_topology_json(const std::string& path);

/// Minimal GraphML reader: node ids, directed or undirected edges, one
/// numeric capacity attribute (named `capacity_key`). Undirected edges are
/// expanded into two directed edges of equal capacity; parallel edges are
/// merged by summing capacities. Edges without the attribute get
/// `default_capacity`.
Topology load_topology_graphml(const std::string& path,
                               const std::string& capacity_key = "capacity",
                               double default_capacity = 1.0);

/// Dispatches on file extension (.graphml vs everything else = JSON).
Topology load_topology(const std::string& path);

struct PairKey {
  NodeId src;
  NodeId dst;
  auto operator<=>(const PairKey&) const = default;
};

inline std::string pair_label(const PairKey& p) { return p.src + "->" + p.dst; }

struct Demand {
  NodeId src;
  NodeId dst;
  double volume = 0.0;

  PairKey pair() const { return {src, dst}; }
};

/// A set of demands with at most one entry per (src, dst) pair.
struct DemandMatrix {
  std::vector<Demand> demands;

  double total_volume() const;
  double volume(const PairKey& pair) const;  // 0 when absent
  /// Throws InstanceError on src==dst, negative volume, duplicate pairs or
  /// (when topology given) unknown endpoints.
  void validate(const Topology* topology = nullptr) const;

  static DemandMatrix from_json(const json& j);
  json to_json() const;
};

DemandMatrix load_demands_json(const std::string& path);

/// A simple directed path stored as edge indices into a Topology.
struct Path {
  std::vector<int> edges;

  bool empty() const { return edges.empty(); }
  int hop_count() const { return static_cast<int>(edges.size()); }
  std::vector<NodeId> node_sequence(const Topology& topology) const;
  bool uses_edge(int edge_index) const;
};

std::string path_label(const Path& path, const Topology& topology);

/// Candidate paths per demand pair, sorted by (hop count, lexicographic node
/// sequence), at most K per pair. Built once per instance and shared by every
/// solver so the heuristic and the optimal choose from identical candidates.
struct PathSet {
  std::map<PairKey, std::vector<Path>> paths;

  bool has_pair(const PairKey& pair) const { return paths.count(pair) > 0; }
  const std::vector<Path>& at(const PairKey& pair) const;
};

}  // namespace teforge
