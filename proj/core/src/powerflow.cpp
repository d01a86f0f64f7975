#include "ctsgrid/powerflow.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <stdexcept>

#include "ctsgrid/topology.hpp"

namespace ctsgrid {

namespace {

using Cplx = std::complex<double>;

constexpr double kQLimitEps = 1e-7; // p.u. slack on reactive-limit comparisons
constexpr double kVSetEps = 1e-9;
constexpr double kDivergedMismatch = 1e6;

struct BranchAdm {
  Cplx yff, yft, ytf, ytt;
};

BranchAdm branch_admittance(const Branch& br) {
  const Cplx ys = 1.0 / Cplx(br.r, br.x);
  const Cplx half_b(0.0, br.b_charging / 2.0);
  const Cplx tap = std::polar(br.tap_ratio, br.phase_shift);
  BranchAdm a;
  a.yff = (ys + half_b) / (tap * std::conj(tap));
  a.yft = -ys / std::conj(tap);
  a.ytf = -ys / tap;
  a.ytt = ys + half_b;
  return a;
}

std::vector<BranchFlow> flows_from_state(const Network& net, const std::vector<double>& vm,
                                         const std::vector<double>& va) {
  std::vector<BranchFlow> out(net.branches().size());
  for (std::size_t k = 0; k < net.branches().size(); ++k) {
    const Branch& br = net.branches()[k];
    if (!br.in_service) continue;
    const int f = net.bus_index(br.from_bus);
    const int t = net.bus_index(br.to_bus);
    if (vm[f] <= 0.0 || vm[t] <= 0.0) continue;
    const BranchAdm a = branch_admittance(br);
    const Cplx vf = std::polar(vm[f], va[f]);
    const Cplx vt = std::polar(vm[t], va[t]);
    const Cplx sf = vf * std::conj(a.yff * vf + a.yft * vt) * net.base_mva();
    const Cplx st = vt * std::conj(a.ytf * vf + a.ytt * vt) * net.base_mva();
    out[k].p_from_mw = sf.real();
    out[k].q_from_mvar = sf.imag();
    out[k].p_to_mw = st.real();
    out[k].q_to_mvar = st.imag();
    out[k].mva_from = std::abs(sf);
    out[k].mva_to = std::abs(st);
  }
  return out;
}

enum class Role : unsigned char { slack, pv, pq, dead };

struct Solver {
  const Network& net;
  const SolverOptions& opts;
  int n;
  double base;
  Eigen::SparseMatrix<Cplx> ybus;
  std::vector<double> vm, va;
  std::vector<bool> energized;
  std::vector<Role> role;
  std::vector<signed char> pinned;
  std::vector<double> v_set;              // pv and slack buses
  std::vector<double> q_min_agg, q_max_agg; // p.u., pv-capable buses
  std::vector<double> p_spec, q_spec;     // p.u. net injection targets
  std::vector<double> p_calc, q_calc;
  int iterations = 0;
  double mismatch = 0.0;

  Solver(const Network& network, const SolverOptions& options)
      : net(network), opts(options), n(static_cast<int>(network.buses().size())),
        base(network.base_mva()) {
    energized = energized_buses(net);
    vm.assign(n, 0.0);
    va.assign(n, 0.0);
    role.assign(n, Role::dead);
    pinned.assign(n, 0);
    v_set.assign(n, 1.0);
    q_min_agg.assign(n, 0.0);
    q_max_agg.assign(n, 0.0);
    p_spec.assign(n, 0.0);
    q_spec.assign(n, 0.0);
    p_calc.assign(n, 0.0);
    q_calc.assign(n, 0.0);

    for (int i = 0; i < n; ++i) {
      const Bus& b = net.buses()[i];
      if (!energized[i]) continue;
      const auto gens = net.generators_at(i);
      if (b.kind == BusKind::slack) {
        role[i] = Role::slack;
      } else if (b.kind == BusKind::pv && !gens.empty()) {
        role[i] = Role::pv;
      } else {
        role[i] = Role::pq;
      }
      v_set[i] = gens.empty() ? b.v_mag : net.generators()[gens[0]].v_set;
      p_spec[i] = -b.p_load / base;
      q_spec[i] = -b.q_load / base;
      for (int g : gens) {
        const Generator& gen = net.generators()[g];
        p_spec[i] += gen.p_out / base;
        if (role[i] == Role::pq) q_spec[i] += gen.q_out / base;
        q_min_agg[i] += gen.q_min / base;
        q_max_agg[i] += gen.q_max / base;
      }
    }
    build_ybus();
  }

  void build_ybus() {
    std::vector<Eigen::Triplet<Cplx>> trip;
    trip.reserve(net.branches().size() * 4 + n);
    for (const Branch& br : net.branches()) {
      if (!br.in_service) continue;
      const int f = net.bus_index(br.from_bus);
      const int t = net.bus_index(br.to_bus);
      const BranchAdm a = branch_admittance(br);
      trip.emplace_back(f, f, a.yff);
      trip.emplace_back(f, t, a.yft);
      trip.emplace_back(t, f, a.ytf);
      trip.emplace_back(t, t, a.ytt);
    }
    for (int i = 0; i < n; ++i) {
      const Bus& b = net.buses()[i];
      if (b.shunt_g != 0.0 || b.shunt_b != 0.0)
        trip.emplace_back(i, i, Cplx(b.shunt_g, b.shunt_b));
    }
    ybus.resize(n, n);
    ybus.setFromTriplets(trip.begin(), trip.end());
  }

  // True when some de-energized bus still carries load or an in-service unit.
  bool dead_injection() const {
    for (int i = 0; i < n; ++i) {
      if (energized[i]) continue;
      const Bus& b = net.buses()[i];
      if (b.p_load != 0.0 || b.q_load != 0.0) return true;
    }
    for (const Generator& g : net.generators()) {
      if (g.in_service && !energized[net.bus_index(g.bus)]) return true;
    }
    return false;
  }

  void init_flat() {
    // Reference angle of each island is its slack's angle.
    std::vector<double> ref(n, 0.0);
    std::vector<bool> seen(n, false);
    std::vector<int> queue;
    for (int i = 0; i < n; ++i) {
      if (net.buses()[i].kind == BusKind::slack) {
        seen[i] = true;
        ref[i] = net.buses()[i].v_ang;
        queue.push_back(i);
      }
    }
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const int u = queue[h];
      for (int bi : net.branches_at(u)) {
        const Branch& br = net.branches()[bi];
        if (!br.in_service) continue;
        const int v = net.bus_index(br.from_bus) == u ? net.bus_index(br.to_bus)
                                                      : net.bus_index(br.from_bus);
        if (seen[v]) continue;
        seen[v] = true;
        ref[v] = ref[u];
        queue.push_back(v);
      }
    }
    for (int i = 0; i < n; ++i) {
      if (role[i] == Role::dead) continue;
      va[i] = ref[i];
      vm[i] = role[i] == Role::pq ? 1.0 : v_set[i];
    }
  }

  void init_warm(const PowerFlowSolution& warm) {
    if (static_cast<int>(warm.v_mag.size()) != n || static_cast<int>(warm.v_ang.size()) != n)
      throw std::invalid_argument("warm-start solution does not cover this bus set");
    for (int i = 0; i < n; ++i) {
      if (role[i] == Role::dead) continue;
      va[i] = warm.v_ang[i];
      vm[i] = warm.v_mag[i];
      if (role[i] != Role::pq) vm[i] = v_set[i];
      if (role[i] == Role::slack) va[i] = net.buses()[i].v_ang;
      if (vm[i] <= 0.0) vm[i] = 1.0; // bus was de-energized in the warm state
    }
  }

  void compute_injections() {
    std::fill(p_calc.begin(), p_calc.end(), 0.0);
    std::fill(q_calc.begin(), q_calc.end(), 0.0);
    for (int k = 0; k < ybus.outerSize(); ++k) {
      for (Eigen::SparseMatrix<Cplx>::InnerIterator it(ybus, k); it; ++it) {
        const int i = static_cast<int>(it.row());
        const int j = static_cast<int>(it.col());
        if (vm[i] == 0.0 || vm[j] == 0.0) continue;
        const double g = it.value().real();
        const double b = it.value().imag();
        const double th = va[i] - va[j];
        const double a = vm[i] * vm[j];
        p_calc[i] += a * (g * std::cos(th) + b * std::sin(th));
        q_calc[i] += a * (g * std::sin(th) - b * std::cos(th));
      }
    }
  }

  // One Newton pass to tolerance. Returns the resulting status.
  SolveStatus newton() {
    std::vector<int> ang_of(n, -1), vm_of(n, -1);
    std::vector<int> ang_bus, vm_bus;
    for (int i = 0; i < n; ++i) {
      if (role[i] == Role::pv || role[i] == Role::pq) {
        ang_of[i] = static_cast<int>(ang_bus.size());
        ang_bus.push_back(i);
      }
      if (role[i] == Role::pq) {
        vm_of[i] = static_cast<int>(vm_bus.size());
        vm_bus.push_back(i);
      }
    }
    const int na = static_cast<int>(ang_bus.size());
    const int nv = static_cast<int>(vm_bus.size());
    const int nu = na + nv;

    Eigen::VectorXd f(nu);
    auto refresh = [&]() {
      compute_injections();
      for (int k = 0; k < na; ++k) f(k) = p_spec[ang_bus[k]] - p_calc[ang_bus[k]];
      for (int k = 0; k < nv; ++k) f(na + k) = q_spec[vm_bus[k]] - q_calc[vm_bus[k]];
      mismatch = nu == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
    };
    refresh();
    if (!std::isfinite(mismatch)) return SolveStatus::not_converged;
    if (mismatch <= opts.tolerance) return SolveStatus::converged;

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    std::vector<Eigen::Triplet<double>> jt;
    for (int pass = 0; pass < opts.max_iterations; ++pass) {
      jt.clear();
      for (int k = 0; k < ybus.outerSize(); ++k) {
        for (Eigen::SparseMatrix<Cplx>::InnerIterator it(ybus, k); it; ++it) {
          const int i = static_cast<int>(it.row());
          const int j = static_cast<int>(it.col());
          if (ang_of[i] < 0 && vm_of[i] < 0) continue;
          const double g = it.value().real();
          const double b = it.value().imag();
          if (i == j) {
            if (ang_of[i] >= 0) {
              jt.emplace_back(ang_of[i], ang_of[i], -q_calc[i] - b * vm[i] * vm[i]);
              if (vm_of[i] >= 0)
                jt.emplace_back(ang_of[i], na + vm_of[i], p_calc[i] / vm[i] + g * vm[i]);
            }
            if (vm_of[i] >= 0) {
              jt.emplace_back(na + vm_of[i], ang_of[i], p_calc[i] - g * vm[i] * vm[i]);
              jt.emplace_back(na + vm_of[i], na + vm_of[i], q_calc[i] / vm[i] - b * vm[i]);
            }
          } else {
            if (ang_of[j] < 0 && vm_of[j] < 0) continue;
            const double th = va[i] - va[j];
            const double c = std::cos(th), s = std::sin(th);
            const double a = vm[i] * vm[j];
            if (ang_of[i] >= 0 && ang_of[j] >= 0)
              jt.emplace_back(ang_of[i], ang_of[j], a * (g * s - b * c));
            if (ang_of[i] >= 0 && vm_of[j] >= 0)
              jt.emplace_back(ang_of[i], na + vm_of[j], vm[i] * (g * c + b * s));
            if (vm_of[i] >= 0 && ang_of[j] >= 0)
              jt.emplace_back(na + vm_of[i], ang_of[j], -a * (g * c + b * s));
            if (vm_of[i] >= 0 && vm_of[j] >= 0)
              jt.emplace_back(na + vm_of[i], na + vm_of[j], vm[i] * (g * s - b * c));
          }
        }
      }
      Eigen::SparseMatrix<double> jac(nu, nu);
      jac.setFromTriplets(jt.begin(), jt.end());
      lu.compute(jac);
      if (lu.info() != Eigen::Success) return SolveStatus::singular;
      const Eigen::VectorXd dx = lu.solve(f);
      if (lu.info() != Eigen::Success || !dx.allFinite()) return SolveStatus::singular;

      for (int k = 0; k < na; ++k) va[ang_bus[k]] += dx(k);
      for (int k = 0; k < nv; ++k) vm[vm_bus[k]] += dx(na + k);
      ++iterations;
      for (int k = 0; k < nv; ++k) {
        if (vm[vm_bus[k]] <= 0.0 || !std::isfinite(vm[vm_bus[k]]))
          return SolveStatus::not_converged;
      }
      refresh();
      if (!std::isfinite(mismatch) || mismatch > kDivergedMismatch)
        return SolveStatus::not_converged;
      if (mismatch <= opts.tolerance) return SolveStatus::converged;
    }
    return SolveStatus::not_converged;
  }

  // Pin PV buses whose aggregate reactive requirement leaves its band; revert
  // pinned buses whose magnitude crossed back over the setpoint. Returns the
  // number of role changes.
  int apply_q_limits() {
    int changed = 0;
    for (int i = 0; i < n; ++i) {
      const Bus& b = net.buses()[i];
      if (b.kind != BusKind::pv || !energized[i]) continue;
      if (role[i] == Role::pv) {
        const double q_req = q_calc[i] + b.q_load / base; // total unit output, p.u.
        if (q_req > q_max_agg[i] + kQLimitEps) {
          role[i] = Role::pq;
          pinned[i] = 1;
          q_spec[i] = q_max_agg[i] - b.q_load / base;
          ++changed;
        } else if (q_req < q_min_agg[i] - kQLimitEps) {
          role[i] = Role::pq;
          pinned[i] = -1;
          q_spec[i] = q_min_agg[i] - b.q_load / base;
          ++changed;
        }
      } else if (pinned[i] == 1 && vm[i] > v_set[i] + kVSetEps) {
        role[i] = Role::pv;
        pinned[i] = 0;
        vm[i] = v_set[i];
        ++changed;
      } else if (pinned[i] == -1 && vm[i] < v_set[i] - kVSetEps) {
        role[i] = Role::pv;
        pinned[i] = 0;
        vm[i] = v_set[i];
        ++changed;
      }
    }
    return changed;
  }

  // Distribute solved injections onto units and fill the solution record.
  void finalize(PowerFlowSolution& sol) {
    sol.iterations = iterations;
    sol.max_mismatch = mismatch;
    sol.v_mag = vm;
    sol.v_ang = va;
    sol.energized = energized;
    sol.q_pinned = pinned;
    sol.p_gen.assign(net.generators().size(), 0.0);
    sol.q_gen.assign(net.generators().size(), 0.0);
    if (sol.status != SolveStatus::converged) {
      sol.flows.assign(net.branches().size(), BranchFlow{});
      return;
    }
    for (int i = 0; i < n; ++i) {
      if (role[i] == Role::dead) continue;
      const Bus& b = net.buses()[i];
      const auto gens = net.generators_at(i);
      if (role[i] == Role::slack) {
        const double p_req = p_calc[i] * base + b.p_load;
        const double q_req = q_calc[i] * base + b.q_load;
        if (gens.empty()) {
          sol.implicit_slack_p_mw += p_req;
          sol.implicit_slack_q_mvar += q_req;
        } else {
          double scheduled = 0.0;
          for (int g : gens) scheduled += net.generators()[g].p_out;
          for (int g : gens) sol.p_gen[g] = net.generators()[g].p_out;
          sol.p_gen[gens[0]] += p_req - scheduled;
          allocate_q(gens, q_req, sol);
        }
      } else if (role[i] == Role::pv) {
        const double q_req = q_calc[i] * base + b.q_load;
        for (int g : gens) sol.p_gen[g] = net.generators()[g].p_out;
        allocate_q(gens, q_req, sol);
      } else if (pinned[i] != 0) {
        for (int g : gens) {
          const Generator& gen = net.generators()[g];
          sol.p_gen[g] = gen.p_out;
          sol.q_gen[g] = pinned[i] > 0 ? gen.q_max : gen.q_min;
        }
      } else {
        for (int g : gens) {
          sol.p_gen[g] = net.generators()[g].p_out;
          sol.q_gen[g] = net.generators()[g].q_out;
        }
      }
    }
    sol.flows = flows_from_state(net, vm, va);
  }

  // Shared normalized position inside each unit's band; sums exactly to the
  // requirement for any position, including outside [0,1] at the slack.
  void allocate_q(const std::vector<int>& gens, double q_req_mvar, PowerFlowSolution& sol) {
    double lo = 0.0, hi = 0.0;
    for (int g : gens) {
      lo += net.generators()[g].q_min;
      hi += net.generators()[g].q_max;
    }
    const double range = hi - lo;
    if (range > 0.0) {
      const double t = (q_req_mvar - lo) / range;
      for (int g : gens) {
        const Generator& gen = net.generators()[g];
        sol.q_gen[g] = gen.q_min + t * (gen.q_max - gen.q_min);
      }
    } else {
      const double share = (q_req_mvar - lo) / static_cast<double>(gens.size());
      for (int g : gens) sol.q_gen[g] = net.generators()[g].q_min + share;
    }
  }

  PowerFlowSolution run(const PowerFlowSolution* warm) {
    PowerFlowSolution sol;
    if (dead_injection()) {
      sol.status = SolveStatus::singular;
      finalize(sol);
      return sol;
    }
    if (warm)
      init_warm(*warm);
    else
      init_flat();

    sol.status = newton();
    int cycles = 0;
    while (sol.status == SolveStatus::converged && opts.enforce_q_limits) {
      if (apply_q_limits() == 0) break;
      if (cycles == opts.q_switch_cycles) {
        sol.status = SolveStatus::not_converged;
        break;
      }
      ++cycles;
      sol.status = newton();
    }
    finalize(sol);
    return sol;
  }
};

} // namespace

PowerFlowSolution solve(const Network& net, const SolverOptions& opts) {
  return Solver(net, opts).run(nullptr);
}

PowerFlowSolution solve(const Network& net, const SolverOptions& opts,
                        const PowerFlowSolution& warm) {
  return Solver(net, opts).run(&warm);
}

std::vector<BranchFlow> branch_flows(const Network& net, const PowerFlowSolution& sol) {
  if (sol.v_mag.size() != net.buses().size() || sol.v_ang.size() != net.buses().size())
    throw std::invalid_argument("solution does not cover this bus set");
  return flows_from_state(net, sol.v_mag, sol.v_ang);
}

} // namespace ctsgrid
