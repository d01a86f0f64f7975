#include "ctsgrid/topology.hpp"

#include <algorithm>
#include <queue>

namespace ctsgrid {

namespace {

// BFS over in-service branches, optionally pretending one branch is open.
std::vector<int> hops(const Network& net, const std::vector<int>& sources, int skip_branch_index) {
  std::vector<int> dist(net.buses().size(), -1);
  std::queue<int> q;
  for (int s : sources) {
    if (dist[static_cast<std::size_t>(s)] < 0) {
      dist[static_cast<std::size_t>(s)] = 0;
      q.push(s);
    }
  }
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int bi : net.branches_at(u)) {
      if (bi == skip_branch_index) continue;
      const Branch& br = net.branches()[static_cast<std::size_t>(bi)];
      if (!br.in_service) continue;
      const int fu = net.bus_index(br.from_bus);
      const int tu = net.bus_index(br.to_bus);
      const int v = (fu == u) ? tu : fu;
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        q.push(v);
      }
    }
  }
  return dist;
}

std::vector<int> representative_buses(const Network& net, const ElementRef& e) {
  switch (e.kind) {
    case ElementKind::bus:
      return {net.bus_index(e.id)};
    case ElementKind::branch: {
      const Branch& br = net.branch(e.id);
      return {net.bus_index(br.from_bus), net.bus_index(br.to_bus)};
    }
    case ElementKind::generator:
      return {net.bus_index(net.generator(e.id).bus)};
  }
  return {};
}

} // namespace

std::vector<int> bus_hops_from(const Network& net, const std::vector<int>& source_bus_indices) {
  return hops(net, source_bus_indices, -1);
}

int graph_distance(const Network& net, const ElementRef& a, const ElementRef& b) {
  if (a == b) return 0;
  const auto src = representative_buses(net, a);
  const auto dst = representative_buses(net, b);
  const auto dist = hops(net, src, -1);
  int best = -1;
  for (int d : dst) {
    const int h = dist[static_cast<std::size_t>(d)];
    if (h >= 0 && (best < 0 || h < best)) best = h;
  }
  return best;
}

IslandingReport islanding_check(const Network& net, int removed_branch) {
  const int skip = net.branch_index(removed_branch);
  if (!net.branches()[static_cast<std::size_t>(skip)].in_service)
    throw SemanticError("branch " + std::to_string(removed_branch) + " is not in service");

  IslandingReport rep;
  std::vector<bool> seen(net.buses().size(), false);
  for (std::size_t s = 0; s < net.buses().size(); ++s) {
    if (seen[s]) continue;
    const auto dist = hops(net, {static_cast<int>(s)}, skip);
    std::vector<int> island;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if (dist[i] >= 0) {
        seen[i] = true;
        island.push_back(net.buses()[i].id);
      }
    }
    std::sort(island.begin(), island.end());
    rep.islands.push_back(std::move(island));
  }
  std::sort(rep.islands.begin(), rep.islands.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  rep.connected = rep.islands.size() == 1;
  return rep;
}

std::vector<bool> energized_buses(const Network& net) {
  std::vector<int> slacks;
  for (std::size_t i = 0; i < net.buses().size(); ++i)
    if (net.buses()[i].kind == BusKind::slack) slacks.push_back(static_cast<int>(i));
  const auto dist = hops(net, slacks, -1);
  std::vector<bool> on(net.buses().size(), false);
  for (std::size_t i = 0; i < dist.size(); ++i) on[i] = dist[i] >= 0;
  return on;
}

} // namespace ctsgrid
