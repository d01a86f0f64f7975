#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctsgrid/network.hpp"
#include "ctsgrid/powerflow.hpp"

namespace ctsgrid {

enum class ContingencyKind { branch_outage, generator_outage };

struct Contingency {
  ContingencyKind kind = ContingencyKind::branch_outage;
  int element = 0;

  ElementRef element_ref() const {
    return kind == ContingencyKind::branch_outage ? ElementRef::of_branch(element)
                                                  : ElementRef::of_generator(element);
  }
  // Report label: "B<branch-id>" or "G<gen-id>".
  std::string label() const;
  bool operator==(const Contingency&) const = default;
};

struct ScreeningConfig {
  double flow_sig_mva = 5.0;     // aggregate flow significance threshold
  double voltage_sig_pu = 0.005; // aggregate voltage significance threshold
  double monitoring_floor_kv = 70.0;
  // Uniform voltage band override; when unset each bus is measured against
  // its own [v_min, v_max].
  std::optional<std::pair<double, double>> v_band;
};

// Monitored post-contingency violations. Entries are strictly positive;
// aggregates are the entry sums.
struct ViolationSet {
  std::map<int, double> flow_mva;   // branch id -> MVA above rate_c, max end
  std::map<int, double> voltage_pu; // bus id -> excursion outside the band
  double agg_flow_mva = 0.0;
  double agg_voltage_pu = 0.0;

  bool empty() const { return flow_mva.empty() && voltage_pu.empty(); }
  bool significant(const ScreeningConfig& cfg) const {
    return agg_flow_mva > cfg.flow_sig_mva || agg_voltage_pu > cfg.voltage_sig_pu;
  }
  std::vector<ElementRef> violated_elements() const;
  bool operator==(const ViolationSet&) const = default;
};

// Outage applied to a copy of the base network. Unsolvable outages (load or
// generation cut off from every slack) are reported in-band, never thrown.
struct AppliedContingency {
  Network net;
  bool solvable = true;
  std::string note;
  double slack_residual_mw = 0.0; // redispatch shortfall pushed onto the slack
};

struct RedispatchResult {
  std::vector<double> adjustment_mw; // per generator, canonical order
  double slack_residual_mw = 0.0;
  bool zero_headroom = false;
};

// Proportional-to-headroom pickup of lost_mw across in-service units away
// from slack buses; whatever the caps cannot cover lands on the slack.
RedispatchResult redispatch(const Network& net, double lost_mw);

// Branch outage: status flip. Generator outage: unit off, its MW redispatched.
// Throws SemanticError when the element is unknown or already out of service.
AppliedContingency apply_contingency(const Network& net, const Contingency& c);

// Violations of a converged solution under the monitoring rules: only
// branches with a nonzero emergency rating and elements at or above the
// kV floor are monitored. Throws std::invalid_argument on an unconverged sol.
ViolationSet compute_violations(const Network& net, const PowerFlowSolution& sol,
                                const ScreeningConfig& cfg);

struct ScreenedContingency {
  Contingency c;
  ViolationSet viol;
  Network net;               // post-outage network
  PowerFlowSolution sol;     // converged post-outage state
  double slack_residual_mw = 0.0;
};

struct ScreeningOutcome {
  std::vector<ScreenedContingency> retained; // significance-exceeding, sorted
  int simulated = 0;
  int with_violations = 0; // any violation before the significance filter
  std::vector<std::pair<Contingency, std::string>> unsolvable;
  double wall_seconds = 0.0;
  std::vector<double> case_seconds; // per simulated contingency
};

// Solves every contingency warm-started from the base solution, distributed
// over `workers` threads; analytical outputs are worker-count invariant.
ScreeningOutcome screen_all(const Network& net, const PowerFlowSolution& base,
                            const std::vector<Contingency>& set, const ScreeningConfig& cfg,
                            const SolverOptions& opts = {}, int workers = 1);

// All in-service branches at or above the monitoring floor plus all
// in-service generators.
std::vector<Contingency> default_contingency_set(const Network& net,
                                                 const ScreeningConfig& cfg);

// Critical-contingency list: one `B <branch-id>` or `G <gen-id>` per line,
// `#` comments allowed. Unknown ids raise SemanticError; bad syntax raises
// ParseError (see case_io.hpp).
std::vector<Contingency> parse_contingency_list(const std::string& text, const Network& net);

} // namespace ctsgrid
