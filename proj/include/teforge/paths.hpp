#pragma once

#include "teforge/topology.hpp"

namespace teforge {

/// Up to k loop-free paths from src to dst in nondecreasing hop count;
/// equal-hop ties are broken by lexicographic node-id sequence. Empty when no
/// path exists. Throws InstanceError on unknown node ids or src == dst.
std::vector<Path> k_shortest_paths(const Topology& topology, const NodeId& src,
                                   const NodeId& dst, int k);

/// k_shortest_paths per pair; duplicate pairs collapse to one entry.
PathSet build_path_set(const Topology& topology, const std::vector<PairKey>& pairs, int k);

}  // namespace teforge
