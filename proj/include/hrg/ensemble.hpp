#pragma once

// Parallel realization runner. Work is claimed from an atomic counter and
// results land in index order, so reductions never depend on scheduling.

#include <atomic>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "hrg/disorder.hpp"
#include "hrg/errors.hpp"
#include "hrg/stats.hpp"

namespace hrg {

/// HRG_THREADS if set and positive, else hardware concurrency (at least 1).
int default_threads();

/// Calls f(i) for i in [0, count) on `threads` workers. f must not throw.
template <class F>
void parallel_for(std::size_t count, int threads, F&& f) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct RealizationFailure {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  std::string message;
};

template <class T>
struct EnsembleRun {
  std::vector<std::optional<T>> results;  // by realization index
  std::vector<RealizationFailure> failures;
  std::size_t resamples = 0;

  std::size_t succeeded() const { return results.size() - failures.size(); }
};

/// Sub-seed used for the a-th redraw of a realization after a singular event.
inline std::uint64_t resample_seed(std::uint64_t seed, std::uint64_t attempt) {
  return derive_seed(SeedSchedule{seed, 0x5eedULL}, attempt);
}

inline constexpr int kMaxResamples = 8;

/// Runs f(seed) for each realization with seed derive_seed(schedule, i).
/// SingularError triggers a redraw with a derived sub-seed; any other
/// exception (or exhausted redraws) records a failure and excludes the
/// realization.
template <class F>
auto run_ensemble(const SeedSchedule& schedule, std::size_t count, int threads, F&& f)
    -> EnsembleRun<std::invoke_result_t<F&, std::uint64_t>> {
  using T = std::invoke_result_t<F&, std::uint64_t>;
  EnsembleRun<T> run;
  run.results.resize(count);
  std::vector<std::optional<RealizationFailure>> failed(count);
  std::vector<std::size_t> redraws(count, 0);
  parallel_for(count, threads, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(schedule, i);
    std::uint64_t current = seed;
    for (int attempt = 0;; ++attempt) {
      try {
        run.results[i] = f(current);
        return;
      } catch (const SingularError& e) {
        if (attempt + 1 >= kMaxResamples) {
          failed[i] = RealizationFailure{i, seed, e.what()};
          return;
        }
        ++redraws[i];
        current = resample_seed(seed, static_cast<std::uint64_t>(attempt) + 1);
      } catch (const std::exception& e) {
        failed[i] = RealizationFailure{i, seed, e.what()};
        return;
      }
    }
  });
  for (std::size_t i = 0; i < count; ++i) {
    if (failed[i]) run.failures.push_back(*failed[i]);
    run.resamples += redraws[i];
  }
  return run;
}

/// Named accumulators plus the provenance needed to reproduce them.
struct EnsembleSummary {
  SeedSchedule schedule;
  std::string config_digest;
  std::map<std::string, RunningStats> observables;
  std::uint64_t realizations = 0;
  std::uint64_t failures = 0;

  void add(const std::string& name, double x) { observables[name].add(x); }
  /// Merge in a fixed (key-sorted) order.
  void merge(const EnsembleSummary& other);
};

}  // namespace hrg
