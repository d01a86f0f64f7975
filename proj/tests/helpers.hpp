#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctsgrid/network.hpp"

namespace testutil {

inline std::string fixture(const std::string& name) {
  return std::string(CTSGRID_FIXTURE_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RefBus {
  double v_mag = 0.0;
  double v_ang = 0.0;
};

// Reference voltage profiles: comment lines, then `bus_id v_mag v_ang` rows.
inline std::map<int, RefBus> load_ref(const std::string& path) {
  std::map<int, RefBus> out;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    int id = 0;
    RefBus rb;
    if (row >> id >> rb.v_mag >> rb.v_ang) out[id] = rb;
  }
  return out;
}

struct ExpectedScreen {
  std::string label;
  bool solvable = false;
  double agg_flow = 0.0;
  double agg_volt = 0.0;
  bool significant = false;
};

// `label solvable agg_flow_mva agg_voltage_pu significant` rows.
inline std::vector<ExpectedScreen> load_screen_expect(const std::string& path) {
  std::vector<ExpectedScreen> out;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    ExpectedScreen e;
    int solv = 0, sig = 0;
    if (row >> e.label >> solv >> e.agg_flow >> e.agg_volt >> sig) {
      e.solvable = solv != 0;
      e.significant = sig != 0;
      out.push_back(e);
    }
  }
  return out;
}

// Fresh empty directory under the system temp root.
inline std::string temp_dir(const std::string& tag) {
  static std::mt19937_64 rng{std::random_device{}()};
  auto base = std::filesystem::temp_directory_path() / ("ctsgrid_test_" + tag);
  std::filesystem::path dir;
  do {
    dir = base;
    dir += "_" + std::to_string(rng());
  } while (std::filesystem::exists(dir));
  std::filesystem::create_directories(dir);
  return dir.string();
}

// Minimal two-bus net: slack feeding one PQ load over a lossless line.
inline ctsgrid::Network two_bus(double p_load_mw = 20.0, double x = 0.5) {
  using namespace ctsgrid;
  Bus b1;
  b1.id = 1;
  b1.base_kv = 100.0;
  b1.kind = BusKind::slack;
  Bus b2;
  b2.id = 2;
  b2.base_kv = 100.0;
  b2.kind = BusKind::pq;
  b2.p_load = p_load_mw;
  Branch br;
  br.id = 1;
  br.from_bus = 1;
  br.to_bus = 2;
  br.x = x;
  return Network(100.0, {b1, b2}, {br}, {});
}

} // namespace testutil
