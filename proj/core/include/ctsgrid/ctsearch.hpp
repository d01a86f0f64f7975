#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctsgrid/contingency.hpp"
#include "ctsgrid/network.hpp"
#include "ctsgrid/powerflow.hpp"

namespace ctsgrid {

struct SwitchingCandidate {
  int branch = 0;
  int depth = 0;    // 1-based position in its candidate list
  int distance = 0; // hops to the contingency element (-1 when disconnected)
};

struct CtsResult {
  SwitchingCandidate candidate;
  bool feasible = false;
  std::string infeasible_reason;
  ViolationSet post_viol;
  std::optional<double> flow_reduction_pct;    // absent when the base class is clean
  std::optional<double> voltage_reduction_pct;
  double score = 0.0; // summed normalized reductions over applicable classes
  bool pareto = false;
};

struct CtsConfig {
  ScreeningConfig screening;
  SolverOptions solver;
  int list_size = 100;
  int top_k = 5;
  bool require_pareto = false;
};

enum class DmVariant { dm1, dm2, dm3 };

std::string to_string(DmVariant v);
std::optional<DmVariant> dm_variant_from(const std::string& name);

// Branches that historically relieved violations, with occurrence counts.
struct DmModel {
  DmVariant variant = DmVariant::dm1;
  std::vector<std::pair<int, int>> scores; // (branch id, count), count descending

  bool empty() const { return scores.empty(); }
};

struct TrainingRecord {
  Contingency contingency;
  std::vector<CtsResult> ranked; // full feasible ranking, best first
};

// Eligible candidates (in service, switchable, not the contingency element)
// ordered by hop distance to the contingency element, ties by id, k kept.
std::vector<SwitchingCandidate> build_cbce(const Network& net, const Contingency& c, int k);

// Same, keyed by the minimum hop distance over all violated elements. The
// optional anchor fills the reported distance column; without it the ordering
// key is reported.
std::vector<SwitchingCandidate> build_cbve(const Network& net, const ViolationSet& viol,
                                           int k, const Contingency* anchor = nullptr);

// Occurrence counting over past rankings: dm1 counts every candidate with a
// positive aggregate reduction, dm2 only such candidates ranked in the top
// five, dm3 only rank-1 candidates.
DmModel train_dm(const std::vector<TrainingRecord>& history, DmVariant variant);

// Top-k currently eligible branches of the model, score order preserved.
// An empty result means the caller should fall back to a proximity list.
std::vector<SwitchingCandidate> build_dm(const DmModel& model, const Network& net,
                                         const Contingency& c, int k);

// Opens the candidate branch on the post-contingency network and grades the
// outcome. Islanding any energized bus or losing convergence makes the
// candidate infeasible; that is data, not an error.
CtsResult evaluate_candidate(const Network& post_ctg_net, const PowerFlowSolution& post_ctg_sol,
                             const ViolationSet& base_viol, const SwitchingCandidate& cand,
                             const CtsConfig& cfg);

// All candidates evaluated across `workers` threads, results in list order.
std::vector<CtsResult> evaluate_list(const Network& post_ctg_net,
                                     const PowerFlowSolution& post_ctg_sol,
                                     const ViolationSet& base_viol,
                                     const std::vector<SwitchingCandidate>& list,
                                     const CtsConfig& cfg, int workers = 1);

// Per-class aggregate reduction, 100 * (base - post) / base; a class with a
// clean base reports no value.
std::pair<std::optional<double>, std::optional<double>> reduction_metric(
    const ViolationSet& base, const ViolationSet& post);

// True when no element-wise violation grew and none appeared.
bool is_pareto(const ViolationSet& base, const ViolationSet& post);

// Drops infeasible (and, on request, non-Pareto) results, sorts by score
// descending with depth then id as tie-breaks, truncates to top_k.
std::vector<CtsResult> rank(std::vector<CtsResult> results, int top_k, bool require_pareto);

// Evaluates every eligible branch (violation-proximity order) and ranks per
// cfg; the benefit upper bound for any heuristic list.
std::vector<CtsResult> complete_enumeration(const Network& post_ctg_net,
                                            const PowerFlowSolution& post_ctg_sol,
                                            const ViolationSet& base_viol, const CtsConfig& cfg,
                                            const Contingency* anchor = nullptr,
                                            int workers = 1);

// Text persistence: a variant header line, then `branch_id score` lines.
std::string serialize_dm_model(const DmModel& model);
DmModel parse_dm_model(const std::string& text);
DmModel load_dm_model(const std::string& path);
void save_dm_model(const DmModel& model, const std::string& path);

} // namespace ctsgrid
