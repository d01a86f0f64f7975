#pragma once

#include <vector>

#include "ctsgrid/network.hpp"

namespace ctsgrid {

enum class SolveStatus { converged, not_converged, singular };

struct SolverOptions {
  double tolerance = 1e-6; // max bus power mismatch, p.u.
  int max_iterations = 30;
  bool enforce_q_limits = true;
  int q_switch_cycles = 5; // PV/PQ re-solve rounds before flagging failure
};

// Apparent-power flow at both ends of a branch, physical units.
struct BranchFlow {
  double p_from_mw = 0.0;
  double q_from_mvar = 0.0;
  double p_to_mw = 0.0;
  double q_to_mvar = 0.0;
  double mva_from = 0.0;
  double mva_to = 0.0;

  double loading_mva() const { return mva_from > mva_to ? mva_from : mva_to; }
};

// Full AC state in the network's canonical element order. Buses in islands
// without a slack are held at 0 V and flagged de-energized; a de-energized
// bus carrying load or an in-service generator makes the case singular.
struct PowerFlowSolution {
  SolveStatus status = SolveStatus::not_converged;
  int iterations = 0;        // cumulative Newton corrections
  double max_mismatch = 0.0; // p.u., after the last correction
  std::vector<double> v_mag;
  std::vector<double> v_ang; // radians
  std::vector<bool> energized;
  std::vector<signed char> q_pinned; // +1 bus held at aggregate q_max, -1 at q_min
  std::vector<double> p_gen;         // per generator, MW
  std::vector<double> q_gen;         // per generator, MVAr
  double implicit_slack_p_mw = 0.0;  // slack injection with no unit to carry it
  double implicit_slack_q_mvar = 0.0;
  std::vector<BranchFlow> flows;

  bool converged() const { return status == SolveStatus::converged; }
};

// Newton-Raphson AC solve from a flat start (setpoint magnitudes, island
// reference angles). PV buses whose aggregate reactive requirement leaves
// [q_min, q_max] are pinned to the binding limit and re-solved; a pinned bus
// whose magnitude crosses back over its setpoint reverts.
PowerFlowSolution solve(const Network& net, const SolverOptions& opts = {});

// Same solve warm-started from a previous solution's voltages. The bus set
// must match; magnitudes at PV buses are reset to their setpoints.
PowerFlowSolution solve(const Network& net, const SolverOptions& opts,
                        const PowerFlowSolution& warm);

// Recompute flows from a voltage solution. Open branches and branches in
// de-energized islands report zero.
std::vector<BranchFlow> branch_flows(const Network& net, const PowerFlowSolution& sol);

} // namespace ctsgrid
