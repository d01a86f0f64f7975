#include "ctsgrid/contingency.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "ctsgrid/case_io.hpp"
#include "ctsgrid/parallel.hpp"
#include "ctsgrid/topology.hpp"

namespace ctsgrid {

std::string Contingency::label() const {
  return (kind == ContingencyKind::branch_outage ? "B" : "G") + std::to_string(element);
}

std::vector<ElementRef> ViolationSet::violated_elements() const {
  std::vector<ElementRef> out;
  out.reserve(flow_mva.size() + voltage_pu.size());
  for (const auto& [id, mva] : flow_mva) out.push_back(ElementRef::of_branch(id));
  for (const auto& [id, pu] : voltage_pu) out.push_back(ElementRef::of_bus(id));
  return out;
}

RedispatchResult redispatch(const Network& net, double lost_mw) {
  RedispatchResult res;
  res.adjustment_mw.assign(net.generators().size(), 0.0);
  if (lost_mw == 0.0) return res;

  // Slack-bus units stay scheduled; the slack bus absorbs any residual anyway.
  const bool up = lost_mw > 0.0;
  std::vector<int> part;
  double cap = 0.0;
  for (std::size_t g = 0; g < net.generators().size(); ++g) {
    const Generator& gen = net.generators()[g];
    if (!gen.in_service) continue;
    if (net.bus(gen.bus).kind == BusKind::slack) continue;
    const double head = up ? gen.p_max - gen.p_out : gen.p_out - gen.p_min;
    if (head <= 0.0) continue;
    part.push_back(static_cast<int>(g));
    cap += head;
  }
  if (cap <= 0.0) {
    res.zero_headroom = true;
    res.slack_residual_mw = lost_mw;
    return res;
  }
  const double need = std::abs(lost_mw);
  double assigned = 0.0;
  for (int g : part) {
    const Generator& gen = net.generators()[g];
    const double head = up ? gen.p_max - gen.p_out : gen.p_out - gen.p_min;
    const double adj = need >= cap ? (up ? head : -head) : lost_mw * head / cap;
    res.adjustment_mw[g] = adj;
    assigned += adj;
  }
  res.slack_residual_mw = lost_mw - assigned;
  return res;
}

AppliedContingency apply_contingency(const Network& net, const Contingency& c) {
  if (c.kind == ContingencyKind::branch_outage) {
    const Branch& br = net.branch(c.element);
    if (!br.in_service)
      throw SemanticError("contingency branch " + std::to_string(c.element) +
                          " is not in service");
    AppliedContingency out{net.with_branch_status(c.element, false)};
    const auto alive = energized_buses(out.net);
    for (std::size_t i = 0; i < out.net.buses().size(); ++i) {
      const Bus& b = out.net.buses()[i];
      if (!alive[i] && (b.p_load != 0.0 || b.q_load != 0.0)) {
        out.solvable = false;
        out.note = "outage islands load at bus " + std::to_string(b.id);
        return out;
      }
    }
    for (const Generator& g : out.net.generators()) {
      if (g.in_service && !alive[out.net.bus_index(g.bus)]) {
        out.solvable = false;
        out.note = "outage islands generator " + std::to_string(g.id);
        return out;
      }
    }
    return out;
  }

  const Generator& gen = net.generator(c.element);
  if (!gen.in_service)
    throw SemanticError("contingency generator " + std::to_string(c.element) +
                        " is not in service");
  std::vector<Generator> gens = net.generators();
  gens[net.generator_index(c.element)].in_service = false;
  const Network without = net.with_generators(gens);
  const RedispatchResult rd = redispatch(without, gen.p_out);
  for (std::size_t g = 0; g < gens.size(); ++g) gens[g].p_out += rd.adjustment_mw[g];
  AppliedContingency out{net.with_generators(std::move(gens))};
  out.slack_residual_mw = rd.slack_residual_mw;
  if (rd.zero_headroom) out.note = "no redispatch headroom; full pickup on slack";
  return out;
}

ViolationSet compute_violations(const Network& net, const PowerFlowSolution& sol,
                                const ScreeningConfig& cfg) {
  if (!sol.converged()) throw std::invalid_argument("violations require a converged solution");
  if (sol.v_mag.size() != net.buses().size() || sol.flows.size() != net.branches().size())
    throw std::invalid_argument("solution does not cover this network");
  ViolationSet v;
  for (std::size_t k = 0; k < net.branches().size(); ++k) {
    const Branch& br = net.branches()[k];
    if (!br.in_service || br.rate_c <= 0.0) continue;
    const double kv = std::max(net.bus(br.from_bus).base_kv, net.bus(br.to_bus).base_kv);
    if (kv < cfg.monitoring_floor_kv) continue;
    const double over = sol.flows[k].loading_mva() - br.rate_c;
    if (over > 0.0) {
      v.flow_mva[br.id] = over;
      v.agg_flow_mva += over;
    }
  }
  for (std::size_t i = 0; i < net.buses().size(); ++i) {
    const Bus& b = net.buses()[i];
    if (!sol.energized[i] || b.base_kv < cfg.monitoring_floor_kv) continue;
    const double lo = cfg.v_band ? cfg.v_band->first : b.v_min;
    const double hi = cfg.v_band ? cfg.v_band->second : b.v_max;
    double exc = 0.0;
    if (sol.v_mag[i] < lo)
      exc = lo - sol.v_mag[i];
    else if (sol.v_mag[i] > hi)
      exc = sol.v_mag[i] - hi;
    if (exc > 0.0) {
      v.voltage_pu[b.id] = exc;
      v.agg_voltage_pu += exc;
    }
  }
  return v;
}

namespace {

struct CaseResult {
  bool done = false;
  bool solvable = false;
  std::string note;
  ViolationSet viol;
  bool significant = false;
  std::optional<ScreenedContingency> rec;
  double seconds = 0.0;
};

} // namespace

ScreeningOutcome screen_all(const Network& net, const PowerFlowSolution& base,
                            const std::vector<Contingency>& set, const ScreeningConfig& cfg,
                            const SolverOptions& opts, int workers) {
  using clock = std::chrono::steady_clock;
  if (!base.converged()) throw std::invalid_argument("screening requires a converged base case");
  for (const Contingency& c : set) {
    if (c.kind == ContingencyKind::branch_outage) {
      if (!net.branch(c.element).in_service)
        throw SemanticError("contingency branch " + std::to_string(c.element) +
                            " is not in service");
    } else if (!net.generator(c.element).in_service) {
      throw SemanticError("contingency generator " + std::to_string(c.element) +
                          " is not in service");
    }
  }

  const auto t_start = clock::now();
  auto results = run_parallel<CaseResult>(
      static_cast<int>(set.size()), workers, [&](int i) {
        const auto t0 = clock::now();
        CaseResult r;
        r.done = true;
        AppliedContingency ap = apply_contingency(net, set[i]);
        if (!ap.solvable) {
          r.note = ap.note;
        } else {
          PowerFlowSolution sol = solve(ap.net, opts, base);
          if (!sol.converged()) {
            r.note = sol.status == SolveStatus::singular ? "power flow singular"
                                                         : "power flow did not converge";
          } else {
            r.solvable = true;
            r.viol = compute_violations(ap.net, sol, cfg);
            r.significant = r.viol.significant(cfg);
            if (r.significant) {
              r.rec.emplace(ScreenedContingency{set[i], r.viol, std::move(ap.net),
                                                std::move(sol), ap.slack_residual_mw});
            }
          }
        }
        r.seconds = std::chrono::duration<double>(clock::now() - t0).count();
        return r;
      });

  ScreeningOutcome out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    CaseResult& r = results[i];
    ++out.simulated;
    out.case_seconds.push_back(r.seconds);
    if (!r.solvable) {
      out.unsolvable.emplace_back(set[i], r.done ? r.note : "evaluation failed");
      continue;
    }
    if (!r.viol.empty()) ++out.with_violations;
    if (r.rec) out.retained.push_back(std::move(*r.rec));
  }
  std::stable_sort(out.retained.begin(), out.retained.end(),
                   [](const ScreenedContingency& a, const ScreenedContingency& b) {
                     if (a.c.kind != b.c.kind)
                       return a.c.kind == ContingencyKind::branch_outage;
                     return a.c.element < b.c.element;
                   });
  out.wall_seconds = std::chrono::duration<double>(clock::now() - t_start).count();
  return out;
}

std::vector<Contingency> default_contingency_set(const Network& net,
                                                 const ScreeningConfig& cfg) {
  std::vector<Contingency> set;
  for (const Branch& br : net.branches()) {
    if (!br.in_service) continue;
    const double kv = std::max(net.bus(br.from_bus).base_kv, net.bus(br.to_bus).base_kv);
    if (kv < cfg.monitoring_floor_kv) continue;
    set.push_back({ContingencyKind::branch_outage, br.id});
  }
  for (const Generator& g : net.generators()) {
    if (g.in_service) set.push_back({ContingencyKind::generator_outage, g.id});
  }
  return set;
}

std::vector<Contingency> parse_contingency_list(const std::string& text, const Network& net) {
  std::vector<Contingency> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    int id = 0;
    if ((kind != "B" && kind != "G") || !(ls >> id))
      throw ParseError(lineno, "expected `B <branch-id>` or `G <gen-id>`");
    std::string extra;
    if (ls >> extra) throw ParseError(lineno, "trailing content after contingency entry");
    if (kind == "B") {
      if (!net.has_branch(id))
        throw SemanticError("contingency list names unknown branch " + std::to_string(id));
      out.push_back({ContingencyKind::branch_outage, id});
    } else {
      if (!net.has_generator(id))
        throw SemanticError("contingency list names unknown generator " + std::to_string(id));
      out.push_back({ContingencyKind::generator_outage, id});
    }
  }
  return out;
}

} // namespace ctsgrid
