#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

namespace ctsgrid {

// Runs task(0..count-1) across `workers` threads with dynamic scheduling.
// Results land in slots indexed by task id, so the output is identical to the
// single-worker run regardless of worker count or interleaving. A task that
// throws leaves its default-constructed slot in place (failure stays data);
// tasks must not touch shared mutable state.
template <typename Result, typename Task>
std::vector<Result> run_parallel(int count, int workers, Task&& task) {
  static_assert(std::is_default_constructible_v<Result>);
  std::vector<Result> out(static_cast<std::size_t>(count > 0 ? count : 0));
  if (count <= 0) return out;
  if (workers < 1) workers = 1;
  if (workers > count) workers = count;

  std::atomic<int> next{0};
  auto body = [&]() {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        out[static_cast<std::size_t>(i)] = task(i);
      } catch (...) {
      }
    }
  };
  if (workers == 1) {
    body();
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (std::thread& t : pool) t.join();
  return out;
}

struct ScalingRow {
  int workers = 1;
  double wall_seconds = 0.0;
  double speedup = 1.0;    // T1 / Tp
  double efficiency = 1.0; // T1 / (p * Tp)
};

struct ScalingReport {
  std::string phase; // "rtca" or "cts"
  std::vector<ScalingRow> rows;
};

// Times workload(workers) for each requested count. The single-worker
// baseline is always measured (first) and reused for a requested 1-row.
template <typename Workload>
ScalingReport scaling_study(std::string phase, const std::vector<int>& worker_counts,
                            Workload&& workload) {
  using clock = std::chrono::steady_clock;
  auto time_of = [&](int w) {
    const auto t0 = clock::now();
    workload(w);
    return std::chrono::duration<double>(clock::now() - t0).count();
  };
  ScalingReport rep;
  rep.phase = std::move(phase);
  const double t1 = time_of(1);
  for (int w : worker_counts) {
    ScalingRow row;
    row.workers = w < 1 ? 1 : w;
    row.wall_seconds = row.workers == 1 ? t1 : time_of(row.workers);
    row.speedup = row.wall_seconds > 0.0 ? t1 / row.wall_seconds : 1.0;
    row.efficiency = row.speedup / static_cast<double>(row.workers);
    rep.rows.push_back(row);
  }
  return rep;
}

} // namespace ctsgrid
