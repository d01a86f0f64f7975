#pragma once

#include <vector>

#include "ctsgrid/network.hpp"

namespace ctsgrid {

// Hop counts from any of `source_bus_indices` to every bus, breadth-first
// over in-service branches; -1 for unreachable buses.
std::vector<int> bus_hops_from(const Network& net, const std::vector<int>& source_bus_indices);

// Minimum bus-hop separation between two elements: each element is
// represented by its buses (a branch by both endpoints, a generator by its
// bus), and the distance is the minimum over representative pairs. Elements
// sharing a bus, and identical elements, are at distance 0. Returns -1 when
// no in-service path exists. Unknown ids raise SemanticError.
int graph_distance(const Network& net, const ElementRef& a, const ElementRef& b);

struct IslandingReport {
  bool connected = true;
  // Bus-id partition when disconnected (also filled when connected: a single
  // island). Islands are sorted by their smallest bus id, ids ascending.
  std::vector<std::vector<int>> islands;
};

// Connectivity of the in-service graph with `removed_branch` taken out.
IslandingReport islanding_check(const Network& net, int removed_branch);

// Bus-index flags: true when the bus is connected to a slack bus through
// in-service branches (the island a power-flow solve can energize).
std::vector<bool> energized_buses(const Network& net);

} // namespace ctsgrid
