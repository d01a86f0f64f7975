#include "ctsgrid/ctsearch.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "ctsgrid/case_io.hpp"
#include "ctsgrid/parallel.hpp"
#include "ctsgrid/topology.hpp"

namespace ctsgrid {

namespace {

constexpr double kParetoEps = 1e-9;

bool eligible(const Branch& br, const Contingency* c) {
  if (!br.in_service || !br.switchable) return false;
  if (c && c->kind == ContingencyKind::branch_outage && br.id == c->element) return false;
  return true;
}

// Sorts by key ascending (disconnected last), ties by id, keeps k, assigns
// depth and the reported distance.
std::vector<SwitchingCandidate> take_k(std::vector<std::tuple<long, int, int>> keyed, int k) {
  std::sort(keyed.begin(), keyed.end());
  if (k >= 0 && static_cast<int>(keyed.size()) > k) keyed.resize(static_cast<std::size_t>(k));
  std::vector<SwitchingCandidate> out;
  out.reserve(keyed.size());
  for (const auto& [key, id, dist] : keyed) {
    SwitchingCandidate cand;
    cand.branch = id;
    cand.depth = static_cast<int>(out.size()) + 1;
    cand.distance = dist;
    out.push_back(cand);
  }
  return out;
}

long order_key(int dist) { return dist < 0 ? std::numeric_limits<long>::max() : dist; }

} // namespace

std::string to_string(DmVariant v) {
  switch (v) {
    case DmVariant::dm1: return "dm1";
    case DmVariant::dm2: return "dm2";
    default: return "dm3";
  }
}

std::optional<DmVariant> dm_variant_from(const std::string& name) {
  if (name == "dm1") return DmVariant::dm1;
  if (name == "dm2") return DmVariant::dm2;
  if (name == "dm3") return DmVariant::dm3;
  return std::nullopt;
}

std::vector<SwitchingCandidate> build_cbce(const Network& net, const Contingency& c, int k) {
  const ElementRef anchor = c.element_ref();
  std::vector<std::tuple<long, int, int>> keyed;
  for (const Branch& br : net.branches()) {
    if (!eligible(br, &c)) continue;
    const int d = graph_distance(net, ElementRef::of_branch(br.id), anchor);
    keyed.emplace_back(order_key(d), br.id, d);
  }
  return take_k(std::move(keyed), k);
}

std::vector<SwitchingCandidate> build_cbve(const Network& net, const ViolationSet& viol,
                                           int k, const Contingency* anchor) {
  const auto elems = viol.violated_elements();
  std::vector<std::tuple<long, int, int>> keyed;
  for (const Branch& br : net.branches()) {
    if (!eligible(br, anchor)) continue;
    const ElementRef self = ElementRef::of_branch(br.id);
    int best = -1;
    for (const ElementRef& e : elems) {
      const int d = graph_distance(net, self, e);
      if (d < 0) continue;
      if (best < 0 || d < best) best = d;
    }
    const int reported =
        anchor ? graph_distance(net, self, anchor->element_ref()) : best;
    keyed.emplace_back(order_key(best), br.id, reported);
  }
  return take_k(std::move(keyed), k);
}

DmModel train_dm(const std::vector<TrainingRecord>& history, DmVariant variant) {
  std::map<int, int> counts;
  for (const TrainingRecord& rec : history) {
    for (std::size_t pos = 0; pos < rec.ranked.size(); ++pos) {
      const CtsResult& r = rec.ranked[pos];
      if (!r.feasible || r.score <= 0.0) continue;
      if (variant == DmVariant::dm2 && pos >= 5) continue;
      if (variant == DmVariant::dm3 && pos != 0) continue;
      ++counts[r.candidate.branch];
    }
  }
  DmModel model;
  model.variant = variant;
  model.scores.assign(counts.begin(), counts.end());
  std::sort(model.scores.begin(), model.scores.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return model;
}

std::vector<SwitchingCandidate> build_dm(const DmModel& model, const Network& net,
                                         const Contingency& c, int k) {
  std::vector<SwitchingCandidate> out;
  for (const auto& [id, count] : model.scores) {
    if (static_cast<int>(out.size()) >= k) break;
    if (!net.has_branch(id)) continue;
    const Branch& br = net.branch(id);
    if (!eligible(br, &c)) continue;
    SwitchingCandidate cand;
    cand.branch = id;
    cand.depth = static_cast<int>(out.size()) + 1;
    cand.distance = graph_distance(net, ElementRef::of_branch(id), c.element_ref());
    out.push_back(cand);
  }
  return out;
}

std::pair<std::optional<double>, std::optional<double>> reduction_metric(
    const ViolationSet& base, const ViolationSet& post) {
  std::pair<std::optional<double>, std::optional<double>> out;
  if (base.agg_flow_mva > 0.0)
    out.first = 100.0 * (base.agg_flow_mva - post.agg_flow_mva) / base.agg_flow_mva;
  if (base.agg_voltage_pu > 0.0)
    out.second = 100.0 * (base.agg_voltage_pu - post.agg_voltage_pu) / base.agg_voltage_pu;
  return out;
}

bool is_pareto(const ViolationSet& base, const ViolationSet& post) {
  for (const auto& [id, mva] : post.flow_mva) {
    const auto it = base.flow_mva.find(id);
    if (it == base.flow_mva.end()) {
      if (mva > kParetoEps) return false;
    } else if (mva > it->second + kParetoEps) {
      return false;
    }
  }
  for (const auto& [id, pu] : post.voltage_pu) {
    const auto it = base.voltage_pu.find(id);
    if (it == base.voltage_pu.end()) {
      if (pu > kParetoEps) return false;
    } else if (pu > it->second + kParetoEps) {
      return false;
    }
  }
  return true;
}

CtsResult evaluate_candidate(const Network& post_ctg_net, const PowerFlowSolution& post_ctg_sol,
                             const ViolationSet& base_viol, const SwitchingCandidate& cand,
                             const CtsConfig& cfg) {
  CtsResult res;
  res.candidate = cand;
  const Branch& br = post_ctg_net.branch(cand.branch);
  if (!br.in_service || !br.switchable) {
    res.infeasible_reason = "branch not eligible for switching";
    return res;
  }
  const Network switched = post_ctg_net.with_branch_status(cand.branch, false);
  const auto alive = energized_buses(switched);
  for (std::size_t i = 0; i < alive.size(); ++i) {
    if (post_ctg_sol.energized[i] && !alive[i]) {
      res.infeasible_reason =
          "opening islands bus " + std::to_string(switched.buses()[i].id);
      return res;
    }
  }
  const PowerFlowSolution sol = solve(switched, cfg.solver, post_ctg_sol);
  if (!sol.converged()) {
    res.infeasible_reason = sol.status == SolveStatus::singular ? "power flow singular"
                                                                : "power flow diverged";
    return res;
  }
  res.feasible = true;
  res.post_viol = compute_violations(switched, sol, cfg.screening);
  const auto [flow, volt] = reduction_metric(base_viol, res.post_viol);
  res.flow_reduction_pct = flow;
  res.voltage_reduction_pct = volt;
  res.score = (flow ? *flow / 100.0 : 0.0) + (volt ? *volt / 100.0 : 0.0);
  res.pareto = is_pareto(base_viol, res.post_viol);
  return res;
}

std::vector<CtsResult> evaluate_list(const Network& post_ctg_net,
                                     const PowerFlowSolution& post_ctg_sol,
                                     const ViolationSet& base_viol,
                                     const std::vector<SwitchingCandidate>& list,
                                     const CtsConfig& cfg, int workers) {
  return run_parallel<CtsResult>(static_cast<int>(list.size()), workers, [&](int i) {
    return evaluate_candidate(post_ctg_net, post_ctg_sol, base_viol, list[i], cfg);
  });
}

std::vector<CtsResult> rank(std::vector<CtsResult> results, int top_k, bool require_pareto) {
  std::erase_if(results, [&](const CtsResult& r) {
    return !r.feasible || (require_pareto && !r.pareto);
  });
  std::sort(results.begin(), results.end(), [](const CtsResult& a, const CtsResult& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.candidate.depth != b.candidate.depth) return a.candidate.depth < b.candidate.depth;
    return a.candidate.branch < b.candidate.branch;
  });
  if (top_k >= 0 && static_cast<int>(results.size()) > top_k)
    results.resize(static_cast<std::size_t>(top_k));
  return results;
}

std::vector<CtsResult> complete_enumeration(const Network& post_ctg_net,
                                            const PowerFlowSolution& post_ctg_sol,
                                            const ViolationSet& base_viol, const CtsConfig& cfg,
                                            const Contingency* anchor, int workers) {
  const auto list = build_cbve(post_ctg_net, base_viol,
                               std::numeric_limits<int>::max(), anchor);
  auto results = evaluate_list(post_ctg_net, post_ctg_sol, base_viol, list, cfg, workers);
  return rank(std::move(results), cfg.top_k, cfg.require_pareto);
}

std::string serialize_dm_model(const DmModel& model) {
  std::ostringstream os;
  os << to_string(model.variant) << "\n";
  for (const auto& [id, count] : model.scores) os << id << " " << count << "\n";
  return os.str();
}

DmModel parse_dm_model(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  DmModel model;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue; // blank or comment-only line
    std::string extra;
    if (!have_header) {
      const auto v = dm_variant_from(first);
      if (!v) throw ParseError(lineno, "expected model variant dm1, dm2 or dm3");
      if (ls >> extra) throw ParseError(lineno, "unexpected token after the variant");
      model.variant = *v;
      have_header = true;
      continue;
    }
    std::istringstream row(line);
    int id = 0, count = 0;
    if (!(row >> id >> count) || count < 1 || (row >> extra))
      throw ParseError(lineno, "expected `branch_id score` with score >= 1");
    model.scores.emplace_back(id, count);
  }
  if (!have_header) throw ParseError(lineno, "missing model variant header");
  std::sort(model.scores.begin(), model.scores.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return model;
}

DmModel load_dm_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dm_model(buf.str());
}

void save_dm_model(const DmModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write model file: " + path);
  out << serialize_dm_model(model);
  if (!out) throw std::ios_base::failure("write failed: " + path);
}

} // namespace ctsgrid
