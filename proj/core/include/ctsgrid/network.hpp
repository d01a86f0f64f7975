#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ctsgrid {

enum class BusKind { slack, pv, pq };

struct Bus {
  int id = 0;
  double base_kv = 0.0;
  BusKind kind = BusKind::pq;
  double v_mag = 1.0;   // p.u.
  double v_ang = 0.0;   // radians
  double v_min = 0.9;   // p.u.
  double v_max = 1.1;   // p.u.
  double p_load = 0.0;  // MW
  double q_load = 0.0;  // MVAr
  double shunt_g = 0.0; // p.u.
  double shunt_b = 0.0; // p.u.

  bool operator==(const Bus&) const = default;
};

struct Branch {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;          // p.u. on system base
  double x = 0.0;          // p.u.
  double b_charging = 0.0; // total line charging, p.u.
  double tap_ratio = 1.0;  // 1.0 = no transformer
  double phase_shift = 0.0; // radians
  double rate_a = 0.0;     // normal rating, MVA (0 = unlimited)
  double rate_c = 0.0;     // emergency rating, MVA (0 = unlimited)
  bool in_service = true;
  bool switchable = true;  // eligible as a corrective switching action

  bool is_transformer() const { return tap_ratio != 1.0 || phase_shift != 0.0; }
  bool operator==(const Branch&) const = default;
};

struct Generator {
  int id = 0;
  int bus = 0;
  double p_out = 0.0; // MW
  double q_out = 0.0; // MVAr
  double p_min = 0.0; // MW
  double p_max = 0.0; // MW
  double q_min = 0.0; // MVAr
  double q_max = 0.0; // MVAr
  double v_set = 1.0; // p.u.
  bool in_service = true;

  double headroom_mw() const { return p_max - p_out; }
  bool operator==(const Generator&) const = default;
};

enum class ElementKind { bus, branch, generator };

// Reference to a grid element for distance queries and contingency anchoring.
struct ElementRef {
  ElementKind kind = ElementKind::bus;
  int id = 0;

  static ElementRef of_bus(int id) { return {ElementKind::bus, id}; }
  static ElementRef of_branch(int id) { return {ElementKind::branch, id}; }
  static ElementRef of_generator(int id) { return {ElementKind::generator, id}; }
  bool operator==(const ElementRef&) const = default;
};

// Raised on semantic violations while assembling a Network (dangling bus
// reference, duplicate id, zero reactance, no slack, ...).
class SemanticError : public std::runtime_error {
 public:
  explicit SemanticError(const std::string& what) : std::runtime_error(what) {}
};

// Immutable grid model. Element collections are canonically sorted by id at
// construction; adjacency maps each bus to its incident branch indices.
// Safe to share across concurrent readers.
class Network {
 public:
  Network(double base_mva, std::vector<Bus> buses, std::vector<Branch> branches,
          std::vector<Generator> generators);

  double base_mva() const { return base_mva_; }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<Generator>& generators() const { return generators_; }

  bool has_bus(int id) const { return bus_idx_.count(id) != 0; }
  bool has_branch(int id) const { return branch_idx_.count(id) != 0; }
  bool has_generator(int id) const { return gen_idx_.count(id) != 0; }

  // Index lookups throw SemanticError on unknown ids.
  int bus_index(int id) const;
  int branch_index(int id) const;
  int generator_index(int id) const;

  const Bus& bus(int id) const { return buses_[bus_index(id)]; }
  const Branch& branch(int id) const { return branches_[branch_index(id)]; }
  const Generator& generator(int id) const { return generators_[generator_index(id)]; }

  // Incident branch indices (into branches()) of the bus at `bus_index`,
  // including out-of-service branches.
  std::span<const int> branches_at(int bus_index) const;

  // In-service generator indices at the bus at `bus_index`.
  std::vector<int> generators_at(int bus_index) const;

  // Modified copies (the only mutation path; revalidates adjacency-free edits).
  Network with_branch_status(int branch_id, bool in_service) const;
  Network with_generators(std::vector<Generator> generators) const;
  Network with_buses(std::vector<Bus> buses) const;

  bool operator==(const Network& other) const {
    return base_mva_ == other.base_mva_ && buses_ == other.buses_ &&
           branches_ == other.branches_ && generators_ == other.generators_;
  }

 private:
  void validate() const;
  void build_index();

  double base_mva_ = 100.0;
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::vector<Generator> generators_;
  std::unordered_map<int, int> bus_idx_, branch_idx_, gen_idx_;
  std::vector<std::vector<int>> adjacency_; // bus index -> incident branch indices
};

} // namespace ctsgrid
