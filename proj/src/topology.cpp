#include "teforge/topology.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace teforge {

int Topology::node_index(const NodeId& id) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == id) return static_cast<int>(i);
  return -1;
}

int Topology::edge_index(const NodeId& src, const NodeId& dst) const {
  for (size_t i = 0; i < edges.size(); ++i)
    if (edges[i].src == src && edges[i].dst == dst) return static_cast<int>(i);
  return -1;
}

std::vector<std::vector<int>> Topology::out_edges_by_node() const {
  std::vector<std::vector<int>> out(nodes.size());
  for (size_t e = 0; e < edges.size(); ++e) {
    int s = node_index(edges[e].src);
    out[s].push_back(static_cast<int>(e));
  }
  for (auto& list : out) {
    std::sort(list.begin(), list.end(), [&](int a, int b) {
      return edges[a].dst < edges[b].dst;
    });
  }
  return out;
}

std::vector<std::vector<int>> Topology::undirected_neighbors() const {
  std::vector<std::set<int>> adj(nodes.size());
  for (const Edge& e : edges) {
    int s = node_index(e.src);
    int t = node_index(e.dst);
    adj[s].insert(t);
    adj[t].insert(s);
  }
  std::vector<std::vector<int>> out(nodes.size());
  for (size_t i = 0; i < adj.size(); ++i) out[i].assign(adj[i].begin(), adj[i].end());
  return out;
}

void Topology::validate() const {
  std::set<NodeId> seen;
  for (const NodeId& n : nodes) {
    if (!seen.insert(n).second) throw InstanceError("duplicate node id: " + n);
  }
  std::set<std::pair<NodeId, NodeId>> pairs;
  for (const Edge& e : edges) {
    if (!seen.count(e.src)) throw InstanceError("edge source not in node list: " + e.src);
    if (!seen.count(e.dst)) throw InstanceError("edge target not in node list: " + e.dst);
    if (!(e.capacity >= 0.0) || !std::isfinite(e.capacity))
      throw InstanceError("edge " + e.src + "->" + e.dst + " has invalid capacity");
    if (!pairs.insert({e.src, e.dst}).second)
      throw InstanceError("duplicate directed edge: " + e.src + "->" + e.dst);
  }
}

Topology Topology::from_json(const json& j) {
  Topology t;
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges"))
    throw InstanceError("topology JSON must be an object with nodes and edges");
  for (const auto& n : j.at("nodes")) t.nodes.push_back(n.get<NodeId>());
  for (const auto& e : j.at("edges")) {
    t.edges.push_back({e.at("src").get<NodeId>(), e.at("dst").get<NodeId>(),
                       e.at("capacity").get<double>()});
  }
  t.validate();
  return t;
}

json Topology::to_json() const {
  json edges_json = json::array();
  for (const Edge& e : edges)
    edges_json.push_back({{"src", e.src}, {"dst", e.dst}, {"capacity", e.capacity}});
  return {{"nodes", nodes}, {"edges", edges_json}};
}

Topology load_topology_json(const std::string& path) {
  return Topology::from_json(load_json_file(path));
}

namespace {

// Pulls `name="value"` out of an XML tag body.
std::string xml_attr(const std::string& tag, const std::string& name) {
  const std::string needle = name + "=\"";
  size_t pos = tag.find(needle);
  if (pos == std::string::npos) return {};
  pos += needle.size();
  size_t end = tag.find('"', pos);
  if (end == std::string::npos) return {};
  return tag.substr(pos, end - pos);
}

struct RawEdge {
  NodeId src, dst;
  double capacity;
  bool directed;
};

void merge_edge(std::map<std::pair<NodeId, NodeId>, double>& merged,
                const NodeId& src, const NodeId& dst, double cap) {
  merged[{src, dst}] += cap;
}

}  // namespace

Topology load_topology_graphml(const std::string& path, const std::string& capacity_key,
                               double default_capacity) {
  const std::string text = read_file(path);

  // Key declaration for the capacity attribute, with optional <default>.
  std::string capacity_key_id;
  double declared_default = default_capacity;
  size_t pos = 0;
  while ((pos = text.find("<key ", pos)) != std::string::npos) {
    size_t end = text.find('>', pos);
    if (end == std::string::npos) break;
    std::string tag = text.substr(pos, end - pos + 1);
    if (xml_attr(tag, "attr.name") == capacity_key &&
        (xml_attr(tag, "for").empty() || xml_attr(tag, "for") == "edge")) {
      capacity_key_id = xml_attr(tag, "id");
      if (tag.back() != '/' && text.compare(end + 1, 9, "<default>") == 0) {
        size_t dend = text.find("</default>", end);
        if (dend != std::string::npos)
          declared_default = std::stod(text.substr(end + 10, dend - end - 10));
      }
    }
    pos = end;
  }

  bool default_directed = true;
  size_t gpos = 0;
  while ((gpos = text.find("<graph", gpos)) != std::string::npos) {
    if (text.compare(gpos, 7, "<graphm") == 0) {  // skip the <graphml> root
      gpos += 7;
      continue;
    }
    size_t gend = text.find('>', gpos);
    std::string gtag = text.substr(gpos, gend - gpos + 1);
    if (xml_attr(gtag, "edgedefault") == "undirected") default_directed = false;
    break;
  }

  Topology t;
  pos = 0;
  while ((pos = text.find("<node ", pos)) != std::string::npos) {
    size_t end = text.find('>', pos);
    std::string tag = text.substr(pos, end - pos + 1);
    std::string id = xml_attr(tag, "id");
    if (!id.empty()) t.nodes.push_back(id);
    pos = end;
  }

  std::vector<RawEdge> raw;
  pos = 0;
  while ((pos = text.find("<edge", pos)) != std::string::npos) {
    size_t tag_end = text.find('>', pos);
    if (tag_end == std::string::npos) break;
    std::string tag = text.substr(pos, tag_end - pos + 1);
    RawEdge e;
    e.src = xml_attr(tag, "source");
    e.dst = xml_attr(tag, "target");
    e.capacity = declared_default;
    std::string dir = xml_attr(tag, "directed");
    e.directed = dir.empty() ? default_directed : dir == "true";

    bool self_closing = tag.size() >= 2 && tag[tag.size() - 2] == '/';
    if (!self_closing && !capacity_key_id.empty()) {
      size_t close = text.find("</edge>", tag_end);
      std::string body = text.substr(tag_end + 1, close - tag_end - 1);
      size_t dpos = 0;
      while ((dpos = body.find("<data ", dpos)) != std::string::npos) {
        size_t dtag_end = body.find('>', dpos);
        std::string dtag = body.substr(dpos, dtag_end - dpos + 1);
        if (xml_attr(dtag, "key") == capacity_key_id) {
          size_t vend = body.find("</data>", dtag_end);
          e.capacity = std::stod(body.substr(dtag_end + 1, vend - dtag_end - 1));
        }
        dpos = dtag_end;
      }
      pos = close == std::string::npos ? tag_end : close;
    } else {
      pos = tag_end;
    }
    raw.push_back(e);
  }

  std::map<std::pair<NodeId, NodeId>, double> merged;
  for (const RawEdge& e : raw) {
    if (e.src == e.dst) continue;
    merge_edge(merged, e.src, e.dst, e.capacity);
    if (!e.directed) merge_edge(merged, e.dst, e.src, e.capacity);
  }
  for (const auto& [pair, cap] : merged) t.edges.push_back({pair.first, pair.second, cap});

  t.validate();
  return t;
}

Topology load_topology(const std::string& path) {
  if (path.size() > 8 && path.substr(path.size() - 8) == ".graphml")
    return load_topology_graphml(path);
  return load_topology_json(path);
}

double DemandMatrix::total_volume() const {
  double sum = 0.0;
  for (const Demand& d : demands) sum += d.volume;
  return sum;
}

double DemandMatrix::volume(const PairKey& pair) const {
  for (const Demand& d : demands)
    if (d.src == pair.src && d.dst == pair.dst) return d.volume;
  return 0.0;
}

void DemandMatrix::validate(const Topology* topology) const {
  std::set<std::pair<NodeId, NodeId>> pairs;
  for (const Demand& d : demands) {
    if (d.src == d.dst) throw InstanceError("demand with equal endpoints: " + d.src);
    if (!(d.volume >= 0.0) || !std::isfinite(d.volume))
      throw InstanceError("demand " + pair_label(d.pair()) + " has invalid volume");
    if (!pairs.insert({d.src, d.dst}).second)
      throw InstanceError("duplicate demand pair: " + pair_label(d.pair()));
    if (topology) {
      if (topology->node_index(d.src) < 0)
        throw InstanceError("demand source not in topology: " + d.src);
      if (topology->node_index(d.dst) < 0)
        throw InstanceError("demand target not in topology: " + d.dst);
    }
  }
}

DemandMatrix DemandMatrix::from_json(const json& j) {
  DemandMatrix m;
  if (!j.is_array()) throw InstanceError("demand matrix JSON must be a list");
  for (const auto& d : j) {
    m.demands.push_back({d.at("src").get<NodeId>(), d.at("dst").get<NodeId>(),
                         d.at("volume").get<double>()});
  }
  m.validate();
  return m;
}

json DemandMatrix::to_json() const {
  json out = json::array();
  for (const Demand& d : demands)
    out.push_back({{"src", d.src}, {"dst", d.dst}, {"volume", d.volume}});
  return out;
}

DemandMatrix load_demands_json(const std::string& path) {
  return DemandMatrix::from_json(load_json_file(path));
}

std::vector<NodeId> Path::node_sequence(const Topology& topology) const {
  std::vector<NodeId> seq;
  if (edges.empty()) return seq;
  seq.push_back(topology.edges[edges.front()].src);
  for (int e : edges) seq.push_back(topology.edges[e].dst);
  return seq;
}

bool Path::uses_edge(int edge_index) const {
  return std::find(edges.begin(), edges.end(), edge_index) != edges.end();
}

std::string path_label(const Path& path, const Topology& topology) {
  std::string out;
  for (const NodeId& n : path.node_sequence(topology)) {
    if (!out.empty()) out += "-";
    out += n;
  }
  return out;
}

const std::vector<Path>& PathSet::at(const PairKey& pair) const {
  auto it = paths.find(pair);
  if (it == paths.end()) throw InstanceError("pair missing from path set: " + pair_label(pair));
  return it->second;
}

}  // namespace teforge
