#include "ctsgrid/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace ctsgrid {

namespace {

template <typename T>
void sort_by_id(std::vector<T>& v) {
  std::sort(v.begin(), v.end(), [](const T& a, const T& b) { return a.id < b.id; });
}

} // namespace

Network::Network(double base_mva, std::vector<Bus> buses, std::vector<Branch> branches,
                 std::vector<Generator> generators)
    : base_mva_(base_mva),
      buses_(std::move(buses)),
      branches_(std::move(branches)),
      generators_(std::move(generators)) {
  sort_by_id(buses_);
  sort_by_id(branches_);
  sort_by_id(generators_);
  build_index();
  validate();
}

int Network::bus_index(int id) const {
  auto it = bus_idx_.find(id);
  if (it == bus_idx_.end()) throw SemanticError("unknown bus id " + std::to_string(id));
  return it->second;
}

int Network::branch_index(int id) const {
  auto it = branch_idx_.find(id);
  if (it == branch_idx_.end()) throw SemanticError("unknown branch id " + std::to_string(id));
  return it->second;
}

int Network::generator_index(int id) const {
  auto it = gen_idx_.find(id);
  if (it == gen_idx_.end()) throw SemanticError("unknown generator id " + std::to_string(id));
  return it->second;
}

std::span<const int> Network::branches_at(int bus_index) const {
  return adjacency_[static_cast<std::size_t>(bus_index)];
}

std::vector<int> Network::generators_at(int bus_index) const {
  std::vector<int> out;
  const int bus_id = buses_[static_cast<std::size_t>(bus_index)].id;
  for (std::size_t g = 0; g < generators_.size(); ++g) {
    if (generators_[g].bus == bus_id && generators_[g].in_service)
      out.push_back(static_cast<int>(g));
  }
  return out;
}

Network Network::with_branch_status(int branch_id, bool in_service) const {
  std::vector<Branch> br = branches_;
  br[static_cast<std::size_t>(branch_index(branch_id))].in_service = in_service;
  return Network(base_mva_, buses_, std::move(br), generators_);
}

Network Network::with_generators(std::vector<Generator> generators) const {
  return Network(base_mva_, buses_, branches_, std::move(generators));
}

Network Network::with_buses(std::vector<Bus> buses) const {
  return Network(base_mva_, std::move(buses), branches_, generators_);
}

void Network::build_index() {
  bus_idx_.clear();
  branch_idx_.clear();
  gen_idx_.clear();
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (!bus_idx_.emplace(buses_[i].id, static_cast<int>(i)).second)
      throw SemanticError("duplicate bus id " + std::to_string(buses_[i].id));
  }
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    if (!branch_idx_.emplace(branches_[i].id, static_cast<int>(i)).second)
      throw SemanticError("duplicate branch id " + std::to_string(branches_[i].id));
  }
  for (std::size_t i = 0; i < generators_.size(); ++i) {
    if (!gen_idx_.emplace(generators_[i].id, static_cast<int>(i)).second)
      throw SemanticError("duplicate generator id " + std::to_string(generators_[i].id));
  }
  adjacency_.assign(buses_.size(), {});
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    const Branch& br = branches_[i];
    auto f = bus_idx_.find(br.from_bus);
    auto t = bus_idx_.find(br.to_bus);
    if (f == bus_idx_.end())
      throw SemanticError("branch " + std::to_string(br.id) + " references unknown bus " +
                          std::to_string(br.from_bus));
    if (t == bus_idx_.end())
      throw SemanticError("branch " + std::to_string(br.id) + " references unknown bus " +
                          std::to_string(br.to_bus));
    adjacency_[static_cast<std::size_t>(f->second)].push_back(static_cast<int>(i));
    adjacency_[static_cast<std::size_t>(t->second)].push_back(static_cast<int>(i));
  }
}

void Network::validate() const {
  if (!(base_mva_ > 0.0)) throw SemanticError("base MVA must be positive");
  if (buses_.empty()) throw SemanticError("network has no buses");

  for (const Bus& b : buses_) {
    if (!(b.base_kv > 0.0))
      throw SemanticError("bus " + std::to_string(b.id) + " has non-positive base kV");
    if (!(b.v_min < b.v_max))
      throw SemanticError("bus " + std::to_string(b.id) + " voltage band is empty");
  }
  for (const Branch& br : branches_) {
    if (br.x == 0.0)
      throw SemanticError("branch " + std::to_string(br.id) + " has zero reactance");
    if (br.from_bus == br.to_bus)
      throw SemanticError("branch " + std::to_string(br.id) + " connects a bus to itself");
    if (br.rate_a < 0.0 || br.rate_c < 0.0 ||
        (br.rate_a > 0.0 && br.rate_c > 0.0 && br.rate_c < br.rate_a))
      throw SemanticError("branch " + std::to_string(br.id) + " has inconsistent ratings");
    if (!(br.tap_ratio > 0.0))
      throw SemanticError("branch " + std::to_string(br.id) + " has non-positive tap ratio");
  }
  for (const Generator& g : generators_) {
    if (bus_idx_.find(g.bus) == bus_idx_.end())
      throw SemanticError("generator " + std::to_string(g.id) + " references unknown bus " +
                          std::to_string(g.bus));
    if (g.q_min > g.q_max)
      throw SemanticError("generator " + std::to_string(g.id) + " has q_min > q_max");
    constexpr double kTol = 1e-9;
    if (g.in_service && (g.p_out < g.p_min - kTol || g.p_out > g.p_max + kTol))
      throw SemanticError("generator " + std::to_string(g.id) + " output violates MW limits");
  }

  // Exactly one slack per connected island of the in-service graph; islands
  // without any slack are tolerated here (they are flagged at solve time).
  int slack_count = 0;
  for (const Bus& b : buses_)
    if (b.kind == BusKind::slack) ++slack_count;
  if (slack_count == 0) throw SemanticError("network has no slack bus");

  std::vector<int> comp(buses_.size(), -1);
  int ncomp = 0;
  for (std::size_t s = 0; s < buses_.size(); ++s) {
    if (comp[s] >= 0) continue;
    const int c = ncomp++;
    std::queue<int> q;
    q.push(static_cast<int>(s));
    comp[s] = c;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int bi : adjacency_[static_cast<std::size_t>(u)]) {
        const Branch& br = branches_[static_cast<std::size_t>(bi)];
        if (!br.in_service) continue;
        const int v = (bus_idx_.at(br.from_bus) == u) ? bus_idx_.at(br.to_bus)
                                                      : bus_idx_.at(br.from_bus);
        if (comp[static_cast<std::size_t>(v)] < 0) {
          comp[static_cast<std::size_t>(v)] = c;
          q.push(v);
        }
      }
    }
  }
  std::vector<int> slack_per_comp(static_cast<std::size_t>(ncomp), 0);
  for (std::size_t i = 0; i < buses_.size(); ++i)
    if (buses_[i].kind == BusKind::slack) ++slack_per_comp[static_cast<std::size_t>(comp[i])];
  for (int c = 0; c < ncomp; ++c) {
    if (slack_per_comp[static_cast<std::size_t>(c)] > 1)
      throw SemanticError("more than one slack bus in a connected island");
  }

  // PV and slack buses need a consistent regulation setpoint when several
  // in-service units share the bus.
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    double vset = -1.0;
    for (const Generator& g : generators_) {
      if (!g.in_service || bus_idx_.at(g.bus) != static_cast<int>(i)) continue;
      if (vset < 0.0) {
        vset = g.v_set;
      } else if (std::abs(vset - g.v_set) > 1e-9) {
        throw SemanticError("conflicting voltage setpoints at bus " + std::to_string(buses_[i].id));
      }
    }
  }
}

} // namespace ctsgrid
