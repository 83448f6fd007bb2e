#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "seismic/csv.hpp"
#include "seismic/density.hpp"
#include "seismic/model.hpp"
#include "seismic/partition.hpp"
#include "seismic/proposals.hpp"
#include "seismic/rng.hpp"

namespace seismic {

enum class Algorithm { Serial, NaiveParallel, ChromaticStatic, ChromaticDynamic };

inline Algorithm parse_algorithm(const std::string& name) {
  if (name == "serial") return Algorithm::Serial;
  if (name == "naive") return Algorithm::NaiveParallel;
  if (name == "chromatic-static") return Algorithm::ChromaticStatic;
  if (name == "chromatic-dynamic") return Algorithm::ChromaticDynamic;
  throw std::invalid_argument(
      "unknown sampler '" + name +
      "' (expected serial, naive, chromatic-static or chromatic-dynamic)");
}

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Serial: return "serial";
    case Algorithm::NaiveParallel: return "naive";
    case Algorithm::ChromaticStatic: return "chromatic-static";
    case Algorithm::ChromaticDynamic: return "chromatic-dynamic";
  }
  return "?";
}

struct SamplerConfig {
  Algorithm algorithm = Algorithm::Serial;
  std::int64_t steps_per_epoch = 500;  // per region between barriers
  std::int64_t epochs = 100;
  int n_regions = 4;
  int workers = 1;
  std::uint64_t seed = 1;
  double burn_in_fraction = 0.5;
  std::int64_t record_every = 1000;
  MoveDistribution moves;
  ProposalStepSizes step_sizes;

  void validate() const {
    if (steps_per_epoch < 1)
      throw std::invalid_argument("SamplerConfig: steps_per_epoch must be >= 1");
    if (epochs < 1) throw std::invalid_argument("SamplerConfig: epochs must be >= 1");
    if (n_regions < 1) throw std::invalid_argument("SamplerConfig: n_regions must be >= 1");
    if (workers < 1) throw std::invalid_argument("SamplerConfig: workers must be >= 1");
    if (burn_in_fraction < 0 || burn_in_fraction >= 1)
      throw std::invalid_argument("SamplerConfig: burn_in_fraction must be in [0, 1)");
    if (record_every < 1)
      throw std::invalid_argument("SamplerConfig: record_every must be >= 1");
    moves.validate();
  }
};

struct TraceRow {
  double wall_seconds = 0.0;
  std::int64_t step = 0;
  double log_joint = 0.0;
  std::int64_t event_count = 0;
};

struct Snapshot {
  std::int64_t id = 0;
  double wall_seconds = 0.0;
  std::int64_t step = 0;
  std::vector<Event> events;
};

// Commit bookkeeping for the parallel samplers: one entry per region
// segment, appended in commit order, so barrier ordering is checkable
// after the fact.
struct PhaseRecord {
  std::int64_t epoch = 0;
  int color = 0;
  std::size_t region = 0;
  std::int64_t steps = 0;
};

struct Trace {
  std::vector<TraceRow> rows;
  std::vector<Snapshot> snapshots;
  std::vector<PhaseRecord> phases;
  std::int64_t total_steps = 0;
  std::int64_t total_accepted = 0;
};

struct RegionStepResult {
  std::int64_t accepted = 0;
  std::int64_t births = 0;
};

// The inner MH loop every driver shares: `steps` moves restricted to one
// region, scored against the local world. Birth candidates take ids
// id_base, id_base+1, ... as they are accepted, so id sequences are
// deterministic for any worker layout. `on_accept(proposal, delta)` fires
// after each accepted move.
template <class OnAccept>
RegionStepResult run_region_steps(World& world, const TimeRegion& region, bool constrain,
                                  const ScoreOptions& opts, const MoveDistribution& moves,
                                  const ProposalStepSizes& sizes, std::int64_t steps,
                                  std::uint64_t id_base, Rng& rng, OnAccept&& on_accept) {
  RegionStepResult result;
  for (std::int64_t i = 0; i < steps; ++i) {
    const MoveType type = moves.sample(rng);
    const Proposal p = propose_move(type, region, world.events, world.config, moves,
                                    sizes, id_base + static_cast<std::uint64_t>(result.births),
                                    rng);
    double delta_seen = kLogZero;
    auto scorer = [&](const Change& change) {
      delta_seen = delta_log_joint(world, change, opts);
      return delta_seen;
    };
    if (mh_step(world, p, scorer, constrain ? &region : nullptr, rng)) {
      ++result.accepted;
      if (p.type == MoveType::Birth) ++result.births;
      on_accept(p, delta_seen);
    }
  }
  return result;
}

inline RegionStepResult run_region_steps(World& world, const TimeRegion& region,
                                         bool constrain, const ScoreOptions& opts,
                                         const MoveDistribution& moves,
                                         const ProposalStepSizes& sizes, std::int64_t steps,
                                         std::uint64_t id_base, Rng& rng) {
  return run_region_steps(world, region, constrain, opts, moves, sizes, steps, id_base,
                          rng, [](const Proposal&, double) {});
}

namespace detail {

class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Persistent barrier-synchronized worker pool. run() hands slot indices
// to the workers and returns once every slot has finished; that return is
// the barrier. Slots must write only slot-local state. Which thread
// executes which slot is unspecified and must not affect results.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t n_threads) {
    threads_.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i)
      threads_.emplace_back([this] { worker_loop(); });
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::unique_lock lock(mutex_);
      stop_ = true;
    }
    work_ready_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void run(std::size_t n_slots, const std::function<void(std::size_t)>& job) {
    std::unique_lock lock(mutex_);
    job_ = &job;
    n_slots_ = n_slots;
    next_slot_.store(0, std::memory_order_relaxed);
    active_ = threads_.size();
    ++generation_;
    work_ready_.notify_all();
    phase_done_.wait(lock, [this] { return active_ == 0; });
    job_ = nullptr;
    if (error_) {
      std::exception_ptr err = error_;
      error_ = nullptr;
      std::rethrow_exception(err);
    }
  }

 private:
  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t)>* job = nullptr;
      std::size_t n_slots = 0;
      {
        std::unique_lock lock(mutex_);
        work_ready_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        job = job_;
        n_slots = n_slots_;
      }
      try {
        for (;;) {
          const std::size_t s = next_slot_.fetch_add(1, std::memory_order_relaxed);
          if (s >= n_slots) break;
          (*job)(s);
        }
      } catch (...) {
        std::unique_lock lock(mutex_);
        if (!error_) error_ = std::current_exception();
      }
      {
        std::unique_lock lock(mutex_);
        if (--active_ == 0) phase_done_.notify_all();
      }
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable work_ready_;
  std::condition_variable phase_done_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t n_slots_ = 0;
  std::atomic<std::size_t> next_slot_{0};
  std::size_t active_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

inline void sort_by_id(std::vector<Event>& events) {
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.id < b.id; });
}

// Runs fn(slot) for slot in [0, n) on up to `workers` OS threads with a
// static slot assignment. Results must be slot-local; the join is the
// barrier. The first worker exception is rethrown on the calling thread.
template <class Fn>
void parallel_slots(std::size_t n, int workers, Fn&& fn) {
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (w <= 1) {
    for (std::size_t s = 0; s < n; ++s) fn(s);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(w);
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t s = t; s < n; s += w) fn(s);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace detail

// Plain Metropolis-Hastings over the whole span, from the empty
// hypothesis. epochs * steps_per_epoch moves in total.
inline Trace run_serial(const ModelConfig& config, const ObservedSignals& signals,
                        const SamplerConfig& sc) {
  config.validate();
  sc.validate();
  World world{config, {}, signals};
  const TimeRegion region = config.full_region();
  const ScoreOptions opts = default_score_options(config);
  const std::int64_t total = sc.epochs * sc.steps_per_epoch;
  const auto burn = static_cast<std::int64_t>(sc.burn_in_fraction * static_cast<double>(total));
  Rng rng = derive_stream(sc.seed, streams::kChain, 0, 0, 0);
  detail::WallClock clock;

  Trace trace;
  trace.total_steps = total;
  trace.rows.push_back({clock.seconds(), 0, log_joint(world), 0});
  std::uint64_t id_base = 0;
  std::int64_t done = 0;
  while (done < total) {
    const std::int64_t chunk = std::min(sc.record_every, total - done);
    const RegionStepResult r = run_region_steps(world, region, false, opts, sc.moves,
                                                sc.step_sizes, chunk, id_base, rng);
    id_base += static_cast<std::uint64_t>(r.births);
    trace.total_accepted += r.accepted;
    done += chunk;
    const double wall = clock.seconds();
    trace.rows.push_back({wall, done, log_joint(world),
                          static_cast<std::int64_t>(world.events.size())});
    if (done >= burn) {
      trace.snapshots.push_back({static_cast<std::int64_t>(trace.snapshots.size()), wall,
                                 done, world.events});
    }
  }
  return trace;
}

// Independent per-region chains with no conditioning: region m explains
// only its own signal window, prior restricted to the region, and the
// final hypothesis is the union. Fast, but each signal block is explained
// twice, so it does not target the model posterior.
inline Trace run_naive_parallel(const ModelConfig& config, const ObservedSignals& signals,
                                const SamplerConfig& sc) {
  config.validate();
  sc.validate();
  const double tau = config.x_max / config.v;
  const Partition partition =
      build_partition(config.T, config.T / sc.n_regions, 0.0);
  const std::size_t n_regions = partition.n_regions();
  const std::int64_t steps_per_region = sc.epochs * sc.steps_per_epoch;
  const std::int64_t total = steps_per_region * static_cast<std::int64_t>(n_regions);
  const auto burn = static_cast<std::int64_t>(sc.burn_in_fraction * static_cast<double>(total));

  struct Checkpoint {
    std::int64_t local_steps = 0;
    double wall = 0.0;
    std::vector<Event> events;
  };
  std::vector<std::vector<Checkpoint>> checkpoints(n_regions);
  std::vector<std::int64_t> accepted(n_regions, 0);
  detail::WallClock clock;

  detail::parallel_slots(n_regions, sc.workers, [&](std::size_t m) {
    World local{config, {}, signals};
    const TimeRegion region = partition.region(m);
    ScoreOptions opts;
    opts.window = signal_window(partition.regions[m], tau, config.T, config.sample_rate);
    opts.prior_support = region;
    Rng rng = derive_stream(sc.seed, streams::kChain, 0, 0, m);
    std::uint64_t id_base = (static_cast<std::uint64_t>(m) + 1) << 32;
    auto& log = checkpoints[m];
    log.push_back({0, clock.seconds(), local.events});
    std::int64_t done = 0;
    while (done < steps_per_region) {
      const std::int64_t chunk = std::min(sc.record_every, steps_per_region - done);
      const RegionStepResult r = run_region_steps(local, region, true, opts, sc.moves,
                                                  sc.step_sizes, chunk, id_base, rng);
      id_base += static_cast<std::uint64_t>(r.births);
      accepted[m] += r.accepted;
      done += chunk;
      log.push_back({done, clock.seconds(), local.events});
    }
  });

  // Assemble the union trace. Checkpoints align across regions because
  // every region records on the same local cadence.
  Trace trace;
  trace.total_steps = total;
  for (std::size_t m = 0; m < n_regions; ++m) {
    trace.total_accepted += accepted[m];
    trace.phases.push_back({0, 0, m, steps_per_region});
  }
  const std::size_t n_checkpoints = checkpoints[0].size();
  World scratch{config, {}, signals};
  for (std::size_t c = 0; c < n_checkpoints; ++c) {
    std::vector<Event> merged;
    std::int64_t step = 0;
    double wall = 0.0;
    for (std::size_t m = 0; m < n_regions; ++m) {
      const Checkpoint& cp = checkpoints[m][c];
      merged.insert(merged.end(), cp.events.begin(), cp.events.end());
      step += cp.local_steps;
      wall = std::max(wall, cp.wall);
    }
    detail::sort_by_id(merged);
    scratch.events = merged;
    trace.rows.push_back({wall, step, log_joint(scratch),
                          static_cast<std::int64_t>(merged.size())});
    if (c > 0 && step >= burn) {
      trace.snapshots.push_back({static_cast<std::int64_t>(trace.snapshots.size()), wall,
                                 step, std::move(merged)});
    }
  }
  return trace;
}

// Chromatic scheduling: regions of one color run k constrained steps in
// parallel against a frozen snapshot of everything else, a barrier
// commits them, then the next color goes. With dynamic coloring the
// boundary offset is redrawn after every epoch and events are reassigned
// to regions by their time.
inline Trace run_chromatic(const ModelConfig& config, const ObservedSignals& signals,
                           const SamplerConfig& sc, bool dynamic) {
  config.validate();
  sc.validate();
  const double tau = config.x_max / config.v;
  const double l = config.T / sc.n_regions;
  Partition partition = color_partition(build_partition(config.T, l, 0.0), tau);

  World global{config, {}, signals};
  const ScoreOptions opts = default_score_options(config);
  const std::int64_t planned =
      sc.epochs * sc.steps_per_epoch * static_cast<std::int64_t>(sc.n_regions);
  const auto burn = static_cast<std::int64_t>(sc.burn_in_fraction * static_cast<double>(planned));
  std::optional<detail::WorkerPool> pool;
  if (sc.workers > 1) pool.emplace(static_cast<std::size_t>(sc.workers));
  detail::WallClock clock;

  Trace trace;
  trace.rows.push_back({clock.seconds(), 0, log_joint(global), 0});
  std::uint64_t next_base = 0;
  std::int64_t executed = 0;
  std::int64_t last_recorded = 0;

  const auto record = [&](bool force) {
    if (!force && executed - last_recorded < sc.record_every) return;
    last_recorded = executed;
    const double wall = clock.seconds();
    trace.rows.push_back({wall, executed, log_joint(global),
                          static_cast<std::int64_t>(global.events.size())});
    if (executed >= burn) {
      trace.snapshots.push_back({static_cast<std::int64_t>(trace.snapshots.size()), wall,
                                 executed, global.events});
    }
  };

  for (std::int64_t epoch = 0; epoch < sc.epochs; ++epoch) {
    for (int color = 0; color < partition.n_colors; ++color) {
      std::vector<std::size_t> color_regions;
      for (std::size_t i = 0; i < partition.n_regions(); ++i)
        if (partition.colors[i] == color) color_regions.push_back(i);
      if (color_regions.empty()) continue;

      std::vector<std::vector<Event>> results(color_regions.size());
      std::vector<std::int64_t> accepted(color_regions.size(), 0);
      const std::function<void(std::size_t)> run_region = [&](std::size_t slot) {
        const std::size_t region_index = color_regions[slot];
        const TimeRegion region = partition.region(region_index);
        World local{config, global.events, signals};
        Rng rng = derive_stream(sc.seed, streams::kChain,
                                static_cast<std::uint64_t>(epoch),
                                static_cast<std::uint64_t>(color), region_index);
        const std::uint64_t id_base =
            next_base + static_cast<std::uint64_t>(slot) *
                            static_cast<std::uint64_t>(sc.steps_per_epoch);
        const RegionStepResult r =
            run_region_steps(local, region, true, opts, sc.moves, sc.step_sizes,
                             sc.steps_per_epoch, id_base, rng);
        accepted[slot] = r.accepted;
        std::vector<Event> mine;
        for (const Event& e : local.events)
          if (region.contains(e.t)) mine.push_back(e);
        results[slot] = std::move(mine);
      };
      if (pool && color_regions.size() > 1) {
        pool->run(color_regions.size(), run_region);
      } else {
        for (std::size_t slot = 0; slot < color_regions.size(); ++slot) run_region(slot);
      }

      // Barrier: merge committed regions back into the global hypothesis.
      std::vector<Event> merged;
      for (const Event& e : global.events) {
        const std::size_t r = partition.region_of(e.t);
        if (partition.colors[r] != color) merged.push_back(e);
      }
      for (std::size_t slot = 0; slot < color_regions.size(); ++slot) {
        merged.insert(merged.end(), results[slot].begin(), results[slot].end());
        trace.total_accepted += accepted[slot];
        trace.phases.push_back({epoch, color, color_regions[slot], sc.steps_per_epoch});
      }
      detail::sort_by_id(merged);
      global.events = std::move(merged);
      next_base += static_cast<std::uint64_t>(color_regions.size()) *
                   static_cast<std::uint64_t>(sc.steps_per_epoch);
      executed += static_cast<std::int64_t>(color_regions.size()) * sc.steps_per_epoch;
      record(false);
    }
    if (dynamic && epoch + 1 < sc.epochs) {
      Rng offset_rng = derive_stream(sc.seed, streams::kPartitionOffset,
                                     static_cast<std::uint64_t>(epoch) + 1);
      const double u = offset_rng.uniform(0.0, l);
      partition = color_partition(build_partition(config.T, l, u), tau);
    }
  }
  if (last_recorded != executed) record(true);
  trace.total_steps = executed;
  return trace;
}

inline Trace run_sampler(const ModelConfig& config, const ObservedSignals& signals,
                         const SamplerConfig& sc) {
  switch (sc.algorithm) {
    case Algorithm::Serial: return run_serial(config, signals, sc);
    case Algorithm::NaiveParallel: return run_naive_parallel(config, signals, sc);
    case Algorithm::ChromaticStatic: return run_chromatic(config, signals, sc, false);
    case Algorithm::ChromaticDynamic: return run_chromatic(config, signals, sc, true);
  }
  throw std::logic_error("run_sampler: unknown algorithm");
}

inline void write_trace_csv(const Trace& trace, const std::string& path) {
  CsvWriter out(path, "wall_seconds,step,log_joint,event_count");
  for (const TraceRow& r : trace.rows)
    out.row({format_double(r.wall_seconds), std::to_string(r.step),
             format_double(r.log_joint), std::to_string(r.event_count)});
}

inline void write_samples_csv(const Trace& trace, const std::string& path) {
  CsvWriter out(path, "snapshot_id,event_id,x,t");
  for (const Snapshot& snap : trace.snapshots)
    for (const Event& e : snap.events)
      out.row({std::to_string(snap.id), std::to_string(e.id), format_double(e.x),
               format_double(e.t)});
}

inline std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::vector<TraceRow> rows;
  for (const auto& row : read_csv(path, "wall_seconds,step,log_joint,event_count")) {
    TraceRow r;
    r.wall_seconds = parse_double(row[0], path);
    r.step = parse_int(row[1], path);
    r.log_joint = parse_double(row[2], path);
    r.event_count = parse_int(row[3], path);
    rows.push_back(r);
  }
  return rows;
}

// Snapshot event sets as written by write_samples_csv. Arrival times are
// not stored there; events come back with empty arrival vectors. A
// snapshot that recorded zero events leaves no rows, so absent ids
// between present ones are reconstructed as empty snapshots.
inline std::vector<Snapshot> read_samples_csv(const std::string& path) {
  std::vector<Snapshot> snapshots;
  std::int64_t max_id = -1;
  std::vector<std::pair<std::int64_t, Event>> entries;
  for (const auto& row : read_csv(path, "snapshot_id,event_id,x,t")) {
    const std::int64_t sid = parse_int(row[0], path);
    Event e;
    e.id = static_cast<std::uint64_t>(parse_int(row[1], path));
    e.x = parse_double(row[2], path);
    e.t = parse_double(row[3], path);
    entries.emplace_back(sid, std::move(e));
    max_id = std::max(max_id, sid);
  }
  snapshots.resize(static_cast<std::size_t>(max_id + 1));
  for (std::size_t i = 0; i < snapshots.size(); ++i)
    snapshots[i].id = static_cast<std::int64_t>(i);
  for (auto& [sid, e] : entries)
    snapshots[static_cast<std::size_t>(sid)].events.push_back(std::move(e));
  return snapshots;
}

}  // namespace seismic
