// Command-line front end: generate synthetic worlds, run inference,
// evaluate hypotheses against truth, and drive multi-world experiments.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

#include "seismic/evaluation.hpp"
#include "seismic/experiment.hpp"
#include "seismic/samplers.hpp"
#include "seismic/worldgen.hpp"

namespace fs = std::filesystem;
using namespace seismic;

namespace {

struct InferOptions {
  std::string world_dir;
  std::string out_dir;
  std::string sampler = "serial";
  std::int64_t steps_per_epoch = 500;
  std::int64_t epochs = 100;
  int regions = 4;
  int workers = 1;
  std::uint64_t seed = 1;
  double burn_in = 0.5;
  std::int64_t record_every = 1000;
  std::vector<double> move_weights;
  std::vector<double> step_sizes;
};

int cmd_generate(const std::string& config_path, std::uint64_t seed,
                 const std::string& out_dir,
                 const std::vector<std::pair<std::string, std::string>>& overrides) {
  ModelConfig config;
  if (!config_path.empty()) {
    // validation waits until flag overrides are merged in
    for (const auto& [key, value] : read_key_values(config_path))
      apply_config_pair(config, key, value, config_path);
  }
  for (const auto& [key, value] : overrides)
    apply_config_pair(config, key, value, "--" + key);
  config.validate();
  const World world = sample_world(config, seed);
  write_world(world, out_dir);
  std::cout << "events=" << world.events.size()
            << " tau_max=" << format_double(config.x_max / config.v) << '\n';
  return 0;
}

int cmd_infer(const InferOptions& opt) {
  auto [config, signals] = read_observation(opt.world_dir);
  SamplerConfig sc;
  sc.algorithm = parse_algorithm(opt.sampler);
  sc.steps_per_epoch = opt.steps_per_epoch;
  sc.epochs = opt.epochs;
  sc.n_regions = opt.regions;
  sc.workers = opt.workers;
  sc.seed = opt.seed;
  sc.burn_in_fraction = opt.burn_in;
  sc.record_every = opt.record_every;
  if (!opt.move_weights.empty()) {
    if (opt.move_weights.size() != 5)
      throw std::invalid_argument(
          "--move-weights needs 5 values: birth,death,location,arrival,joint");
    for (std::size_t i = 0; i < 5; ++i) sc.moves.weights[i] = opt.move_weights[i];
  }
  if (!opt.step_sizes.empty()) {
    if (opt.step_sizes.size() != 4)
      throw std::invalid_argument(
          "--step-sizes needs 4 values: location_x,location_t,arrival,joint");
    sc.step_sizes.location_x = opt.step_sizes[0];
    sc.step_sizes.location_t = opt.step_sizes[1];
    sc.step_sizes.arrival = opt.step_sizes[2];
    sc.step_sizes.joint = opt.step_sizes[3];
  }
  sc.validate();

  const Trace trace = run_sampler(config, signals, sc);
  fs::create_directories(opt.out_dir);
  write_trace_csv(trace, opt.out_dir + "/trace.csv");
  write_samples_csv(trace, opt.out_dir + "/samples.csv");
  std::cout << "steps=" << trace.total_steps << " accepted=" << trace.total_accepted
            << " final_log_joint=" << format_double(trace.rows.back().log_joint)
            << " final_events=" << trace.rows.back().event_count << '\n';
  return 0;
}

int cmd_evaluate(const std::string& truth_dir, const std::string& samples_path,
                 const std::string& trace_path, double threshold,
                 const std::string& out_dir) {
  const ModelConfig config = read_model_config(truth_dir + "/config.txt");
  const std::vector<EventPoint> truth =
      event_points(read_events_files(truth_dir, config));

  std::vector<Snapshot> snapshots = read_samples_csv(samples_path);
  // a run that never inferred an event leaves only the header behind;
  // that is one empty hypothesis, not an error
  if (snapshots.empty()) snapshots.push_back(Snapshot{});

  // samples.csv does not carry timing; snapshots align with the trailing
  // trace rows (one snapshot per post-burn-in record point)
  std::string trace_file = trace_path;
  if (trace_file.empty())
    trace_file = (fs::path(samples_path).parent_path() / "trace.csv").string();
  const auto trace_rows = read_trace_csv(trace_file);
  if (trace_rows.size() < snapshots.size())
    throw std::runtime_error(trace_file + ": fewer rows than snapshots in " + samples_path);
  const std::size_t offset = trace_rows.size() - snapshots.size();
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    snapshots[i].wall_seconds = trace_rows[offset + i].wall_seconds;
    snapshots[i].step = trace_rows[offset + i].step;
  }

  fs::create_directories(out_dir);
  CsvWriter metric_out(out_dir + "/metric_trace.csv",
                       "snapshot_id,wall_seconds,precision,recall,location_error");
  for (const MetricRow& m : metric_trace(snapshots, truth, threshold))
    metric_out.row({std::to_string(m.snapshot_id), format_double(m.wall_seconds),
                    format_double(m.precision), format_double(m.recall),
                    format_double(m.location_error)});

  const MatchReport final_report =
      match_events(truth, event_points(snapshots.back().events), threshold);
  CsvWriter match_out(out_dir + "/final_match.csv", "true_id,inferred_id,distance");
  for (const MatchedPair& p : final_report.pairs)
    match_out.row({std::to_string(p.true_id), std::to_string(p.inferred_id),
                   format_double(p.distance)});
  std::cout << "matched=" << final_report.n_matched << "/" << final_report.n_true
            << " precision=" << format_double(final_report.precision)
            << " recall=" << format_double(final_report.recall)
            << " location_error=" << format_double(final_report.location_error) << '\n';
  return 0;
}

int cmd_experiment(const std::string& spec_path, const std::string& out_override) {
  ExperimentSpec spec = parse_experiment_spec(spec_path);
  if (!out_override.empty()) spec.out_dir = out_override;
  const ExperimentResults results = run_experiment(spec);
  for (const auto& [key, ci] : results.summary)
    std::cout << key.first << " " << key.second << ": mean=" << format_double(ci.mean)
              << " ci=[" << format_double(ci.lo) << ", " << format_double(ci.hi) << "]\n";
  std::cout << "completed=" << (results.cells.size() - static_cast<std::size_t>(results.failures))
            << "/" << results.cells.size() << " runs, outputs in " << spec.out_dir << '\n';
  return results.failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"1-D seismic event detection: parallel MCMC samplers over a "
               "partitioned latent space"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "sample a synthetic world to a directory");
  std::string gen_config, gen_out;
  std::uint64_t gen_seed = 1;
  gen->add_option("--config", gen_config, "model config file (key=value); defaults if omitted");
  gen->add_option("--seed", gen_seed, "world seed");
  gen->add_option("--out", gen_out, "output directory")->required();
  // every model-config key is also a flag and wins over the file
  std::vector<std::pair<std::string, std::string>> gen_overrides;
  for (const char* key : {"lambda_rate", "T", "x_max", "v", "sigma_arrival", "t_s",
                          "var_noise", "var_event", "sample_rate", "stations"}) {
    gen->add_option_function<std::string>(
        std::string("--") + key,
        [&gen_overrides, key](const std::string& value) {
          gen_overrides.emplace_back(key, value);
        },
        std::string("model config override for ") + key);
  }

  // infer
  auto* inf = app.add_subcommand("infer", "run a sampler against observed signals");
  InferOptions io;
  inf->add_option("--world", io.world_dir, "world directory (config.txt + signals.csv)")
      ->required();
  inf->add_option("--out", io.out_dir, "output directory for trace.csv and samples.csv")
      ->required();
  inf->add_option("--sampler", io.sampler,
                  "serial | naive | chromatic-static | chromatic-dynamic");
  inf->add_option("--steps-per-epoch", io.steps_per_epoch, "MH steps per region per color");
  inf->add_option("--epochs", io.epochs, "epochs (color sweeps)");
  inf->add_option("--regions", io.regions, "number of time regions");
  inf->add_option("--workers", io.workers, "parallel workers");
  inf->add_option("--seed", io.seed, "chain seed");
  inf->add_option("--burn-in", io.burn_in, "burn-in fraction before snapshots");
  inf->add_option("--record-every", io.record_every, "steps between recorded rows");
  inf->add_option("--move-weights", io.move_weights,
                  "birth,death,location,arrival,joint weights")
      ->delimiter(',');
  inf->add_option("--step-sizes", io.step_sizes,
                  "location_x,location_t,arrival,joint proposal stds")
      ->delimiter(',');

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score inferred samples against truth");
  std::string ev_truth, ev_samples, ev_trace, ev_out;
  double ev_threshold = 12.0;
  ev->add_option("--truth", ev_truth, "directory with true events.csv + config.txt")
      ->required();
  ev->add_option("--samples", ev_samples, "samples.csv from infer")->required();
  ev->add_option("--trace", ev_trace, "trace.csv (default: next to samples.csv)");
  ev->add_option("--threshold", ev_threshold, "matching threshold in time and distance");
  ev->add_option("--out", ev_out, "output directory")->required();

  // experiment
  auto* ex = app.add_subcommand("experiment", "generate/infer/evaluate over many worlds");
  std::string ex_spec, ex_out;
  ex->add_option("--spec", ex_spec, "experiment spec file (key=value)")->required();
  ex->add_option("--out", ex_out, "override the spec's out_dir");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_generate(gen_config, gen_seed, gen_out, gen_overrides);
    if (inf->parsed()) return cmd_infer(io);
    if (ev->parsed()) return cmd_evaluate(ev_truth, ev_samples, ev_trace, ev_threshold, ev_out);
    if (ex->parsed()) return cmd_experiment(ex_spec, ex_out);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
