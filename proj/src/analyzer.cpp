#include "teforge/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

namespace teforge {

std::vector<PairKey> DemandSpace::pair_keys() const {
  std::vector<PairKey> keys;
  for (const PairBounds& p : pairs) keys.push_back(p.pair);
  return keys;
}

DemandMatrix DemandSpace::clamp(const DemandMatrix& demands) const {
  DemandMatrix out;
  for (const PairBounds& p : pairs) {
    double v = std::clamp(demands.volume(p.pair), p.lo, p.hi);
    out.demands.push_back({p.pair.src, p.pair.dst, v});
  }
  if (total_cap) {
    double sum = out.total_volume();
    if (sum > *total_cap && sum > 0.0) {
      double scale = *total_cap / sum;
      for (Demand& d : out.demands) d.volume = std::max(d.volume * scale, 0.0);
    }
  }
  return out;
}

bool DemandSpace::contains(const DemandMatrix& demands, double eps) const {
  for (const PairBounds& p : pairs) {
    double v = demands.volume(p.pair);
    if (v < p.lo - eps || v > p.hi + eps) return false;
  }
  if (total_cap && demands.total_volume() > *total_cap + eps) return false;
  return true;
}

void DemandSpace::validate(const Topology* topology) const {
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const PairBounds& p : pairs) {
    if (p.pair.src == p.pair.dst)
      throw InstanceError("demand-space pair with equal endpoints: " + p.pair.src);
    if (!seen.insert({p.pair.src, p.pair.dst}).second)
      throw InstanceError("duplicate demand-space pair: " + pair_label(p.pair));
    if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || p.lo > p.hi || p.lo < 0.0)
      throw InstanceError("invalid bounds for pair " + pair_label(p.pair));
    if (topology) {
      if (topology->node_index(p.pair.src) < 0 || topology->node_index(p.pair.dst) < 0)
        throw InstanceError("demand-space pair not in topology: " + pair_label(p.pair));
    }
  }
}

DemandSpace DemandSpace::from_json(const json& j) {
  DemandSpace space;
  for (const auto& p : j.at("pairs")) {
    space.pairs.push_back({{p.at("src").get<NodeId>(), p.at("dst").get<NodeId>()},
                           p.at("lo").get<double>(),
                           p.at("hi").get<double>()});
  }
  if (j.contains("total_cap") && !j.at("total_cap").is_null())
    space.total_cap = j.at("total_cap").get<double>();
  space.validate();
  return space;
}

json DemandSpace::to_json() const {
  json pairs_json = json::array();
  for (const PairBounds& p : pairs)
    pairs_json.push_back(
        {{"src", p.pair.src}, {"dst", p.pair.dst}, {"lo", p.lo}, {"hi", p.hi}});
  json out = {{"pairs", pairs_json}};
  if (total_cap) out["total_cap"] = *total_cap;
  return out;
}

json AdversarialSample::to_json() const {
  json signature_json = json::array();
  for (const PairKey& p : signature) signature_json.push_back(pair_label(p));
  return {{"demands", demands.to_json()},
          {"gap", gap},
          {"normalized_gap", normalized_gap},
          {"signature", signature_json}};
}

AdversarialSample AdversarialSample::from_json(const json& j) {
  AdversarialSample s;
  s.demands = DemandMatrix::from_json(j.at("demands"));
  s.gap = j.at("gap").get<double>();
  s.normalized_gap = j.value("normalized_gap", 0.0);
  for (const auto& label : j.value("signature", json::array())) {
    std::string text = label.get<std::string>();
    size_t sep = text.find("->");
    s.signature.push_back({text.substr(0, sep), text.substr(sep + 2)});
  }
  return s;
}

double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  // 53 random mantissa bits -> [0, 1).
  double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

std::vector<DemandMatrix> sample_normal(const DemandSpace& space, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DemandMatrix> out;
  out.reserve(std::max(n, 0));
  for (int i = 0; i < n; ++i) {
    DemandMatrix m;
    for (const auto& p : space.pairs)
      m.demands.push_back({p.pair.src, p.pair.dst, uniform_in(rng, p.lo, p.hi)});
    out.push_back(space.clamp(m));
  }
  return out;
}

namespace {

std::vector<long> grid_key(const DemandMatrix& demands, const DemandSpace& space) {
  std::vector<long> key;
  for (const auto& p : space.pairs)
    key.push_back(std::lround(demands.volume(p.pair) / kGridGranularity));
  return key;
}

std::vector<PairKey> difference_signature(const Explanation& e) {
  std::vector<PairKey> sig;
  for (const auto& d : e.differences) sig.push_back(d.pair);
  std::sort(sig.begin(), sig.end());
  return sig;
}

}  // namespace

std::vector<AdversarialSample> find_adversarial(const HeuristicProgram& program,
                                                const Topology& topology,
                                                const DemandSpace& space, int budget,
                                                std::uint64_t seed, int path_k) {
  if (budget < 1) throw ConfigError("adversarial budget must be >= 1");
  space.validate(&topology);
  PathSet paths = build_path_set(topology, space.pair_keys(), path_k);

  std::mt19937_64 rng(seed);
  std::map<std::vector<long>, AdversarialSample> seen;
  int evals = 0;

  auto evaluate = [&](const DemandMatrix& raw) -> double {
    DemandMatrix demands = space.clamp(raw);
    ++evals;
    FlowAssignment optimal = solve_optimal(topology, demands, paths);
    RoutingOutcome heuristic = interpret(program, topology, demands, paths);
    double gap = std::max(0.0, optimal.total_met() - heuristic.total_met);
    auto key = grid_key(demands, space);
    if (!seen.count(key)) {
      AdversarialSample sample;
      sample.demands = demands;
      sample.gap = gap;
      sample.signature =
          difference_signature(explain(heuristic, optimal, topology, demands, paths));
      seen.emplace(std::move(key), std::move(sample));
    }
    return gap;
  };

  const int dims = static_cast<int>(space.pairs.size());
  const int stall_limit = std::max(8, 4 * dims);

  while (evals < budget) {
    DemandMatrix current;
    for (const auto& p : space.pairs)
      current.demands.push_back({p.pair.src, p.pair.dst, uniform_in(rng, p.lo, p.hi)});
    current = space.clamp(current);
    double current_gap = evaluate(current);

    int stalled = 0;
    while (evals < budget && stalled < stall_limit) {
      int dim = static_cast<int>(rng() % static_cast<std::uint64_t>(dims));
      const auto& bounds = space.pairs[dim];
      double delta = 0.1 * (bounds.hi - bounds.lo);
      if ((rng() & 1) == 0) delta = -delta;

      DemandMatrix proposal = current;
      proposal.demands[dim].volume =
          std::clamp(proposal.demands[dim].volume + delta, bounds.lo, bounds.hi);
      if (proposal.demands[dim].volume == current.demands[dim].volume) {
        ++stalled;
        continue;
      }
      double gap = evaluate(proposal);
      if (gap > current_gap + 1e-12) {
        current = space.clamp(proposal);
        current_gap = gap;
        stalled = 0;
      } else {
        ++stalled;
      }
    }
  }

  std::vector<AdversarialSample> out;
  out.reserve(seen.size());
  for (auto& [key, sample] : seen) out.push_back(std::move(sample));
  std::stable_sort(out.begin(), out.end(), [](const AdversarialSample& a, const AdversarialSample& b) {
    return a.gap > b.gap;
  });
  double best = out.empty() ? 0.0 : out.front().gap;
  for (AdversarialSample& s : out) s.normalized_gap = best > 0.0 ? s.gap / best : 0.0;
  return out;
}

bool Region::contains(const DemandMatrix& demands, double eps) const {
  for (const auto& b : box) {
    double v = demands.volume(b.pair);
    if (v < b.lo - eps || v > b.hi + eps) return false;
  }
  return true;
}

json Region::to_json() const {
  json rerouted = json::array();
  for (const PairKey& p : rerouted_pairs) rerouted.push_back(pair_label(p));
  json box_json = json::array();
  for (const auto& b : box)
    box_json.push_back({{"src", b.pair.src}, {"dst", b.pair.dst}, {"lo", b.lo}, {"hi", b.hi}});
  return {{"id", id},
          {"rerouted_pairs", rerouted},
          {"box", box_json},
          {"description", description},
          {"member_indices", member_indices},
          {"max_gap", max_gap}};
}

Region Region::from_json(const json& j) {
  Region r;
  r.id = j.at("id").get<std::string>();
  for (const auto& label : j.at("rerouted_pairs")) {
    std::string text = label.get<std::string>();
    size_t sep = text.find("->");
    r.rerouted_pairs.push_back({text.substr(0, sep), text.substr(sep + 2)});
  }
  for (const auto& b : j.at("box"))
    r.box.push_back({{b.at("src").get<NodeId>(), b.at("dst").get<NodeId>()},
                     b.at("lo").get<double>(),
                     b.at("hi").get<double>()});
  r.description = j.value("description", std::string{});
  r.member_indices = j.value("member_indices", std::vector<int>{});
  r.max_gap = j.value("max_gap", 0.0);
  return r;
}

namespace {

std::string format_volume(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string describe_region(const std::vector<PairKey>& rerouted,
                            const std::vector<DemandSpace::PairBounds>& box) {
  std::string text;
  if (rerouted.empty()) {
    text = "no demands rerouted vs optimal";
  } else {
    text = "demands rerouted vs optimal: ";
    for (size_t i = 0; i < rerouted.size(); ++i) {
      if (i) text += ", ";
      text += pair_label(rerouted[i]);
    }
  }
  text += "; box:";
  for (const auto& b : box) {
    text += " " + pair_label(b.pair) + " in [" + format_volume(b.lo) + ", " +
            format_volume(b.hi) + "]";
  }
  return text;
}

}  // namespace

std::vector<Region> partition_regions(const std::vector<AdversarialSample>& samples,
                                      int max_regions) {
  if (samples.empty()) throw InstanceError("partition_regions requires at least one sample");
  if (max_regions < 1) throw ConfigError("max_regions must be >= 1");

  struct Group {
    std::vector<PairKey> signature;
    std::vector<int> members;
  };
  std::map<std::vector<PairKey>, std::vector<int>> by_signature;
  for (size_t i = 0; i < samples.size(); ++i)
    by_signature[samples[i].signature].push_back(static_cast<int>(i));

  std::vector<Group> groups;
  for (auto& [sig, members] : by_signature) groups.push_back({sig, std::move(members)});

  // Merge the two smallest groups until we fit the budget; the merged
  // signature is the union of rerouted pairs.
  auto smaller = [](const Group& a, const Group& b) {
    if (a.members.size() != b.members.size()) return a.members.size() < b.members.size();
    return a.signature < b.signature;
  };
  while (static_cast<int>(groups.size()) > max_regions) {
    std::sort(groups.begin(), groups.end(), smaller);
    Group merged;
    std::set<PairKey> sig(groups[0].signature.begin(), groups[0].signature.end());
    sig.insert(groups[1].signature.begin(), groups[1].signature.end());
    merged.signature.assign(sig.begin(), sig.end());
    merged.members = groups[0].members;
    merged.members.insert(merged.members.end(), groups[1].members.begin(),
                          groups[1].members.end());
    std::sort(merged.members.begin(), merged.members.end());
    groups.erase(groups.begin(), groups.begin() + 2);
    groups.push_back(std::move(merged));
  }

  std::vector<Region> regions;
  for (Group& g : groups) {
    Region r;
    r.rerouted_pairs = g.signature;
    r.member_indices = g.members;
    // Bounding box over members, padded by the dedup granularity so near-by
    // held-out points still classify into the region.
    std::map<PairKey, std::pair<double, double>> bounds;
    for (int idx : g.members) {
      for (const Demand& d : samples[idx].demands.demands) {
        auto [it, fresh] = bounds.try_emplace(d.pair(), d.volume, d.volume);
        if (!fresh) {
          it->second.first = std::min(it->second.first, d.volume);
          it->second.second = std::max(it->second.second, d.volume);
        }
      }
      r.max_gap = std::max(r.max_gap, samples[idx].gap);
    }
    for (const auto& [pair, lohi] : bounds)
      r.box.push_back({pair, std::max(0.0, lohi.first - kGridGranularity),
                       lohi.second + kGridGranularity});
    r.description = describe_region(r.rerouted_pairs, r.box);
    regions.push_back(std::move(r));
  }

  std::sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) {
    if (a.max_gap != b.max_gap) return a.max_gap > b.max_gap;
    if (a.member_indices.size() != b.member_indices.size())
      return a.member_indices.size() > b.member_indices.size();
    return a.rerouted_pairs < b.rerouted_pairs;
  });
  for (size_t i = 0; i < regions.size(); ++i) regions[i].id = "R" + std::to_string(i);
  return regions;
}

Explanation explain(const RoutingOutcome& heuristic_out, const FlowAssignment& optimal_out,
                    const Topology& topology, const DemandMatrix& demands,
                    const PathSet& paths) {
  Explanation out;
  std::vector<PairKey> pairs;
  for (const Demand& d : demands.demands) pairs.push_back(d.pair());
  std::sort(pairs.begin(), pairs.end());
  out.pairs_compared = static_cast<int>(pairs.size());

  for (const PairKey& pair : pairs) {
    int h = heuristic_out.assignment.dominant_path(pair);
    int o = optimal_out.dominant_path(pair);
    if (h == o) continue;
    Explanation::Difference diff;
    diff.pair = pair;
    diff.heuristic_path = h;
    diff.optimal_path = o;
    const std::vector<Path>& candidates = paths.at(pair);
    if (h >= 0) {
      diff.heuristic_flow = heuristic_out.assignment.flows.at(pair)[h];
      diff.heuristic_label = path_label(candidates[h], topology);
    }
    if (o >= 0) {
      diff.optimal_flow = optimal_out.flows.at(pair)[o];
      diff.optimal_label = path_label(candidates[o], topology);
    }
    out.differences.push_back(std::move(diff));
  }
  return out;
}

json Explanation::to_json() const {
  json diffs = json::array();
  for (const Difference& d : differences) {
    diffs.push_back({{"pair", pair_label(d.pair)},
                     {"heuristic_path", d.heuristic_label},
                     {"optimal_path", d.optimal_label},
                     {"heuristic_flow", d.heuristic_flow},
                     {"optimal_flow", d.optimal_flow}});
  }
  return {{"differences", diffs}, {"pairs_compared", pairs_compared}};
}

std::string render_explanation_text(const Explanation& explanation) {
  if (explanation.differences.empty()) return "none observed";
  std::string text;
  for (const auto& d : explanation.differences) {
    if (!text.empty()) text += "\n";
    if (d.heuristic_path >= 0 && d.optimal_path >= 0) {
      text += "the heuristic routes " + pair_label(d.pair) + " via " + d.heuristic_label +
              ", but the optimal uses " + d.optimal_label;
    } else if (d.heuristic_path < 0 && d.optimal_path >= 0) {
      text += "the heuristic routes none of " + pair_label(d.pair) +
              ", but the optimal uses " + d.optimal_label;
    } else {
      text += "the heuristic routes " + pair_label(d.pair) + " via " + d.heuristic_label +
              ", but the optimal routes none of it";
    }
  }
  return text;
}

}  // namespace teforge
