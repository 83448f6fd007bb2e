#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "seismic/evaluation.hpp"
#include "seismic/samplers.hpp"
#include "seismic/worldgen.hpp"

namespace seismic {

// A multi-world, multi-run comparison of samplers under one per-run step
// budget, with bootstrap confidence intervals over the final metrics.
struct ExperimentSpec {
  int n_worlds = 10;
  int runs_per_world = 3;
  std::vector<Algorithm> algorithms{Algorithm::Serial, Algorithm::NaiveParallel,
                                    Algorithm::ChromaticStatic,
                                    Algorithm::ChromaticDynamic};
  std::int64_t total_steps = 100000;  // MH steps per run, every algorithm
  std::int64_t steps_per_epoch = 500;
  int n_regions = 4;
  int workers = 1;
  std::int64_t record_every = 2000;
  double burn_in_fraction = 0.5;
  double threshold = 12.0;
  int bootstrap_resamples = 2000;
  double bootstrap_level = 0.95;
  std::uint64_t world_seed_base = 1;
  std::uint64_t run_seed_base = 1000;
  std::string out_dir = "experiment-out";
  ModelConfig model;

  void validate() const {
    if (n_worlds < 1) throw std::invalid_argument("ExperimentSpec: n_worlds must be >= 1");
    if (runs_per_world < 1)
      throw std::invalid_argument("ExperimentSpec: runs_per_world must be >= 1");
    if (algorithms.empty())
      throw std::invalid_argument("ExperimentSpec: need at least one algorithm");
    if (total_steps < 1)
      throw std::invalid_argument("ExperimentSpec: total_steps must be >= 1");
    if (!(threshold > 0)) throw std::invalid_argument("ExperimentSpec: threshold must be > 0");
    if (!(bootstrap_level > 0 && bootstrap_level < 1))
      throw std::invalid_argument("ExperimentSpec: bootstrap_level must be in (0, 1)");
    if (bootstrap_resamples < 1)
      throw std::invalid_argument("ExperimentSpec: bootstrap_resamples must be >= 1");
    model.validate();
  }
};

inline ExperimentSpec parse_experiment_spec(const std::string& path) {
  ExperimentSpec spec;
  for (const auto& [key, value] : read_key_values(path)) {
    const std::string ctx = path + " key '" + key + "'";
    if (key == "n_worlds") spec.n_worlds = static_cast<int>(parse_int(value, ctx));
    else if (key == "runs_per_world")
      spec.runs_per_world = static_cast<int>(parse_int(value, ctx));
    else if (key == "algorithms") {
      spec.algorithms.clear();
      for (const std::string& name : split(value, ','))
        spec.algorithms.push_back(parse_algorithm(name));
    } else if (key == "total_steps") spec.total_steps = parse_int(value, ctx);
    else if (key == "steps_per_epoch") spec.steps_per_epoch = parse_int(value, ctx);
    else if (key == "n_regions") spec.n_regions = static_cast<int>(parse_int(value, ctx));
    else if (key == "workers") spec.workers = static_cast<int>(parse_int(value, ctx));
    else if (key == "record_every") spec.record_every = parse_int(value, ctx);
    else if (key == "burn_in_fraction") spec.burn_in_fraction = parse_double(value, ctx);
    else if (key == "threshold") spec.threshold = parse_double(value, ctx);
    else if (key == "bootstrap_resamples")
      spec.bootstrap_resamples = static_cast<int>(parse_int(value, ctx));
    else if (key == "bootstrap_level") spec.bootstrap_level = parse_double(value, ctx);
    else if (key == "world_seed_base")
      spec.world_seed_base = static_cast<std::uint64_t>(parse_int(value, ctx));
    else if (key == "run_seed_base")
      spec.run_seed_base = static_cast<std::uint64_t>(parse_int(value, ctx));
    else if (key == "out_dir") spec.out_dir = value;
    else apply_config_pair(spec.model, key, value, path);  // model keys pass through
  }
  spec.validate();
  return spec;
}

// Epoch counts that spend close to the same number of MH steps per run
// for every algorithm. Serial runs epochs*k steps; naive and static run
// n_regions concurrent segments per epoch; dynamic gains one extra edge
// region per epoch once the offset is nonzero.
inline SamplerConfig sampler_config_for(const ExperimentSpec& spec, Algorithm alg,
                                        std::uint64_t seed) {
  SamplerConfig sc;
  sc.algorithm = alg;
  sc.steps_per_epoch = spec.steps_per_epoch;
  sc.n_regions = spec.n_regions;
  sc.workers = spec.workers;
  sc.seed = seed;
  sc.burn_in_fraction = spec.burn_in_fraction;
  sc.record_every = spec.record_every;
  const double budget = static_cast<double>(spec.total_steps);
  const double k = static_cast<double>(spec.steps_per_epoch);
  const double n = static_cast<double>(spec.n_regions);
  double epochs = 1.0;
  switch (alg) {
    case Algorithm::Serial:
      epochs = budget / k;
      break;
    case Algorithm::NaiveParallel:
    case Algorithm::ChromaticStatic:
      epochs = budget / (k * n);
      break;
    case Algorithm::ChromaticDynamic:
      epochs = 1.0 + (budget / k - n) / (n + 1.0);
      break;
  }
  sc.epochs = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(epochs)));
  return sc;
}

struct ExperimentCell {
  std::string algorithm;
  std::uint64_t world_seed = 0;
  std::uint64_t run_seed = 0;
  bool ok = false;
  std::string error;
  double wall_seconds = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double location_error = 0.0;
  double log_joint = 0.0;
};

struct ExperimentResults {
  std::vector<ExperimentCell> cells;
  // (algorithm, metric) -> CI over completed runs
  std::map<std::pair<std::string, std::string>, BootstrapCI> summary;
  int failures = 0;
};

inline const double* cell_metric(const ExperimentCell& cell, const std::string& metric) {
  if (metric == "precision") return &cell.precision;
  if (metric == "recall") return &cell.recall;
  if (metric == "location_error") return &cell.location_error;
  if (metric == "log_joint") return &cell.log_joint;
  return nullptr;
}

inline ExperimentResults run_experiment(const ExperimentSpec& spec, bool quiet = false) {
  spec.validate();
  namespace fs = std::filesystem;
  const fs::path out(spec.out_dir);
  fs::create_directories(out);

  ExperimentResults results;
  CsvWriter metrics(
      (out / "metrics.csv").string(),
      "sampler,world_seed,run_seed,wall_seconds,precision,recall,location_error,log_joint");
  CsvWriter plot((out / "plot.csv").string(), "algorithm,metric,wall_seconds,value");

  for (int w = 0; w < spec.n_worlds; ++w) {
    const std::uint64_t world_seed = spec.world_seed_base + static_cast<std::uint64_t>(w);
    const World world = sample_world(spec.model, world_seed);
    const fs::path world_dir = out / "worlds" / ("world_" + std::to_string(world_seed));
    write_world(world, world_dir.string());
    const std::vector<EventPoint> truth = event_points(world.events);

    for (int r = 0; r < spec.runs_per_world; ++r) {
      const std::uint64_t run_seed =
          spec.run_seed_base +
          static_cast<std::uint64_t>(w * spec.runs_per_world + r);
      for (Algorithm alg : spec.algorithms) {
        ExperimentCell cell;
        cell.algorithm = algorithm_name(alg);
        cell.world_seed = world_seed;
        cell.run_seed = run_seed;
        try {
          const SamplerConfig sc = sampler_config_for(spec, alg, run_seed);
          const Trace trace = run_sampler(spec.model, world.signals, sc);
          const fs::path run_dir = out / "runs" / cell.algorithm /
                                   ("world_" + std::to_string(world_seed)) /
                                   ("run_" + std::to_string(run_seed));
          fs::create_directories(run_dir);
          write_trace_csv(trace, (run_dir / "trace.csv").string());
          write_samples_csv(trace, (run_dir / "samples.csv").string());

          const MatchReport final_report = match_events(
              truth, event_points(trace.snapshots.back().events), spec.threshold);
          cell.ok = true;
          cell.wall_seconds = trace.rows.back().wall_seconds;
          cell.precision = final_report.precision;
          cell.recall = final_report.recall;
          cell.location_error = final_report.location_error;
          cell.log_joint = trace.rows.back().log_joint;

          for (const MetricRow& m : metric_trace(trace.snapshots, truth, spec.threshold)) {
            plot.row({cell.algorithm, "precision", format_double(m.wall_seconds),
                      format_double(m.precision)});
            plot.row({cell.algorithm, "recall", format_double(m.wall_seconds),
                      format_double(m.recall)});
            plot.row({cell.algorithm, "location_error", format_double(m.wall_seconds),
                      format_double(m.location_error)});
          }
          for (const TraceRow& row : trace.rows)
            plot.row({cell.algorithm, "log_joint", format_double(row.wall_seconds),
                      format_double(row.log_joint)});
        } catch (const std::exception& err) {
          cell.ok = false;
          cell.error = err.what();
          ++results.failures;
          if (!quiet)
            std::cerr << "run failed (" << cell.algorithm << ", world " << world_seed
                      << ", run " << run_seed << "): " << err.what() << '\n';
        }
        if (cell.ok) {
          metrics.row({cell.algorithm, std::to_string(cell.world_seed),
                       std::to_string(cell.run_seed), format_double(cell.wall_seconds),
                       format_double(cell.precision), format_double(cell.recall),
                       format_double(cell.location_error), format_double(cell.log_joint)});
        }
        results.cells.push_back(std::move(cell));
      }
    }
  }

  CsvWriter summary((out / "summary.csv").string(), "sampler,metric,mean,ci_lo,ci_hi");
  const std::vector<std::string> metric_names{"precision", "recall", "location_error",
                                              "log_joint"};
  for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
    const std::string name = algorithm_name(spec.algorithms[a]);
    for (std::size_t m = 0; m < metric_names.size(); ++m) {
      std::vector<double> values;
      for (const ExperimentCell& cell : results.cells)
        if (cell.ok && cell.algorithm == name)
          values.push_back(*cell_metric(cell, metric_names[m]));
      if (values.empty()) continue;
      const BootstrapCI ci =
          bootstrap_ci(values, spec.bootstrap_level, spec.bootstrap_resamples,
                       spec.world_seed_base + 7700 + a * 16 + m);
      results.summary[{name, metric_names[m]}] = ci;
      summary.row({name, metric_names[m], format_double(ci.mean), format_double(ci.lo),
                   format_double(ci.hi)});
    }
  }
  if (results.failures > 0 && !quiet)
    std::cerr << "warning: " << results.failures
              << " run(s) failed; summary covers completed runs only\n";
  return results;
}

}  // namespace seismic
