#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctsgrid/contingency.hpp"
#include "ctsgrid/ctsearch.hpp"
#include "ctsgrid/network.hpp"
#include "ctsgrid/parallel.hpp"

namespace ctsgrid {

enum class Heuristic { cbce, cbve, dm1, dm2, dm3, ce };

std::string to_string(Heuristic h);
std::optional<Heuristic> heuristic_from(const std::string& name);

enum class ReportFormat { csv, json };

struct RunConfig {
  std::string case_path;
  Heuristic heuristic = Heuristic::cbve;
  int list_size = 100;
  int top_k = 5;
  bool require_pareto = false;
  ScreeningConfig screening;
  SolverOptions solver;
  int threads = 1;
  std::string contingency_list_path; // empty: full N-1 default set
  std::string dm_model_path;         // required for the dm heuristics
  ReportFormat format = ReportFormat::csv;
  std::string out_dir;
};

// One proposed (or historically ranked) switching action.
struct DetailRecord {
  std::string contingency;
  int rank = 0;
  int branch = 0;
  int depth = 0;
  int distance = 0;
  std::optional<double> flow_reduction_pct;
  std::optional<double> voltage_reduction_pct;
  double score = 0.0;
  bool pareto = false;
};

struct TimingInfo {
  double rtca_wall_s = 0.0;
  double cts_wall_s = 0.0;
  double case_min_s = 0.0;
  double case_avg_s = 0.0;
  double case_max_s = 0.0;
};

struct RunSummary {
  int contingencies_simulated = 0;
  int with_violations = 0;
  int beyond_threshold = 0;
  int unsolvable = 0;
  int fully_eliminated = 0;  // post-switching aggregates under both thresholds
  int partially_reduced = 0;
  int not_reduced = 0;       // no feasible candidate or best score <= 0
  std::optional<double> avg_flow_reduction_pct;    // best candidate, no PI filter
  std::optional<double> avg_voltage_reduction_pct;
  std::optional<double> avg_flow_reduction_pct_pi; // best Pareto candidate
  std::optional<double> avg_voltage_reduction_pct_pi;
};

struct RunOutput {
  RunSummary summary;
  std::vector<DetailRecord> details; // configured ranking, top_k per contingency
  std::vector<DetailRecord> history; // full feasible ranking per contingency
  std::vector<std::pair<std::string, std::string>> unsolvable; // label, reason
  TimingInfo timing;
  std::vector<std::string> load_warnings;
};

// Native format by default; paths ending in .raw go through the importer.
Network load_case_auto(const std::string& path, std::vector<std::string>* warnings = nullptr);

// Screens every contingency, searches switching actions for the retained
// ones, and aggregates the statistics. Violations are findings, not errors;
// only unusable inputs throw.
RunOutput run(const RunConfig& config);

// Writes summary.(csv|json) and details.(csv|json) per config.format, plus
// history.csv, unsolvable.csv and timing.csv, into config.out_dir. Floating
// values are rounded to 4 decimals before either format is emitted; timing
// is kept out of the deterministic files.
void emit_report(const RunOutput& out, const RunConfig& config);

// Reads the history-format *.csv files under dir in lexicographic order.
// Files with a different header and files named details.csv are skipped, so
// a run's output directory can be used directly.
std::vector<TrainingRecord> load_history_dir(const std::string& dir);

// `workers,phase,wall_s,speedup,efficiency` rows, one block per phase.
void write_scaling_csv(const std::vector<ScalingReport>& reports, const std::string& path);

} // namespace ctsgrid
