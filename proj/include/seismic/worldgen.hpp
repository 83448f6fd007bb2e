#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "seismic/csv.hpp"
#include "seismic/density.hpp"
#include "seismic/model.hpp"
#include "seismic/rng.hpp"

namespace seismic {

// Forward sample of the generative model. Deterministic given
// (config, seed); stream derivation is by purpose and event/station index
// so the draw for entity i never depends on how many entities precede it.
inline World sample_world(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  World world;
  world.config = config;

  Rng count_rng = derive_stream(seed, streams::kEventCount);
  const std::uint64_t n = count_rng.poisson(config.lambda_rate * config.T);

  for (std::uint64_t i = 0; i < n; ++i) {
    Rng coord_rng = derive_stream(seed, streams::kEventCoords, i);
    Event e;
    e.id = i;
    e.x = coord_rng.uniform(0.0, config.x_max);
    e.t = coord_rng.uniform(0.0, config.T);
    Rng arrival_rng = derive_stream(seed, streams::kEventArrivals, i);
    e.arrivals.resize(config.n_stations());
    for (std::size_t j = 0; j < config.n_stations(); ++j)
      e.arrivals[j] = arrival_rng.normal(config.arrival_mean(e.x, e.t, j),
                                         config.sigma_arrival);
    world.events.push_back(std::move(e));
  }

  const VarianceProfile profile =
      variance_profile(world.events, config, full_sample_range(config));
  world.signals.station.resize(config.n_stations());
  for (std::size_t j = 0; j < config.n_stations(); ++j) {
    Rng noise_rng = derive_stream(seed, streams::kSignalNoise, j);
    auto& samples = world.signals.station[j];
    samples.resize(static_cast<std::size_t>(config.n_samples()));
    for (std::size_t s = 0; s < samples.size(); ++s)
      samples[s] = noise_rng.normal(0.0, std::sqrt(profile.station[j][s]));
  }
  return world;
}

// Same generative process but with event coordinates fixed by the caller;
// arrivals and signals are still sampled. Used to plant known worlds.
inline World make_world_with_events(const ModelConfig& config,
                                    const std::vector<std::pair<double, double>>& coords,
                                    std::uint64_t seed) {
  config.validate();
  World world;
  world.config = config;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    Event e;
    e.id = i;
    e.x = coords[i].first;
    e.t = coords[i].second;
    Rng arrival_rng = derive_stream(seed, streams::kEventArrivals, i);
    e.arrivals.resize(config.n_stations());
    for (std::size_t j = 0; j < config.n_stations(); ++j)
      e.arrivals[j] = arrival_rng.normal(config.arrival_mean(e.x, e.t, j),
                                         config.sigma_arrival);
    world.events.push_back(std::move(e));
  }
  const VarianceProfile profile =
      variance_profile(world.events, config, full_sample_range(config));
  world.signals.station.resize(config.n_stations());
  for (std::size_t j = 0; j < config.n_stations(); ++j) {
    Rng noise_rng = derive_stream(seed, streams::kSignalNoise, j);
    auto& samples = world.signals.station[j];
    samples.resize(static_cast<std::size_t>(config.n_samples()));
    for (std::size_t s = 0; s < samples.size(); ++s)
      samples[s] = noise_rng.normal(0.0, std::sqrt(profile.station[j][s]));
  }
  return world;
}

inline void write_model_config(const ModelConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "lambda_rate=" << format_double(config.lambda_rate) << '\n'
      << "T=" << format_double(config.T) << '\n'
      << "x_max=" << format_double(config.x_max) << '\n'
      << "v=" << format_double(config.v) << '\n'
      << "sigma_arrival=" << format_double(config.sigma_arrival) << '\n'
      << "t_s=" << format_double(config.t_s) << '\n'
      << "var_noise=" << format_double(config.var_noise) << '\n'
      << "var_event=" << format_double(config.var_event) << '\n'
      << "sample_rate=" << format_double(config.sample_rate) << '\n';
  out << "stations=";
  for (std::size_t j = 0; j < config.stations.size(); ++j) {
    if (j) out << ',';
    out << format_double(config.stations[j]);
  }
  out << '\n';
}

// Applies key=value pairs onto a config. Unknown keys raise; `where`
// names the source (file) for error messages.
inline void apply_config_pair(ModelConfig& config, const std::string& key,
                              const std::string& value, const std::string& where) {
  const std::string ctx = where + " key '" + key + "'";
  if (key == "lambda_rate") config.lambda_rate = parse_double(value, ctx);
  else if (key == "T") config.T = parse_double(value, ctx);
  else if (key == "x_max") config.x_max = parse_double(value, ctx);
  else if (key == "v") config.v = parse_double(value, ctx);
  else if (key == "sigma_arrival") config.sigma_arrival = parse_double(value, ctx);
  else if (key == "t_s") config.t_s = parse_double(value, ctx);
  else if (key == "var_noise") config.var_noise = parse_double(value, ctx);
  else if (key == "var_event") config.var_event = parse_double(value, ctx);
  else if (key == "sample_rate") config.sample_rate = parse_double(value, ctx);
  else if (key == "stations") {
    config.stations.clear();
    for (const std::string& cell : split(value, ','))
      config.stations.push_back(parse_double(cell, ctx));
  } else {
    throw std::runtime_error(where + ": unknown config key '" + key + "'");
  }
}

inline ModelConfig read_model_config(const std::string& path) {
  ModelConfig config;
  for (const auto& [key, value] : read_key_values(path))
    apply_config_pair(config, key, value, path);
  config.validate();
  return config;
}

// World file layout inside a directory:
//   config.txt    key=value, keys matching ModelConfig field names
//   events.csv    id,x,t
//   arrivals.csv  event_id,station,arrival
//   signals.csv   station,sample,value
inline void write_world(const World& world, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_model_config(world.config, dir + "/config.txt");

  CsvWriter events(dir + "/events.csv", "id,x,t");
  for (const Event& e : world.events)
    events.row({std::to_string(e.id), format_double(e.x), format_double(e.t)});

  CsvWriter arrivals(dir + "/arrivals.csv", "event_id,station,arrival");
  for (const Event& e : world.events)
    for (std::size_t j = 0; j < e.arrivals.size(); ++j)
      arrivals.row({std::to_string(e.id), std::to_string(j), format_double(e.arrivals[j])});

  CsvWriter signals(dir + "/signals.csv", "station,sample,value");
  for (std::size_t j = 0; j < world.signals.station.size(); ++j)
    for (std::size_t s = 0; s < world.signals.station[j].size(); ++s)
      signals.row({std::to_string(j), std::to_string(s),
                   format_double(world.signals.station[j][s])});
}

inline ObservedSignals read_signals_file(const std::string& path, const ModelConfig& config) {
  const auto n_samples = static_cast<std::size_t>(config.n_samples());
  const std::size_t n_stations = config.n_stations();
  const auto rows = read_csv(path, "station,sample,value");
  const std::size_t expected = n_stations * n_samples;
  if (rows.size() != expected)
    throw std::runtime_error(path + ": expected " + std::to_string(expected) +
                             " signal rows (" + std::to_string(n_stations) +
                             " stations x " + std::to_string(n_samples) +
                             " samples), found " + std::to_string(rows.size()));
  ObservedSignals signals;
  signals.station.assign(n_stations, std::vector<double>(n_samples));
  std::vector<std::vector<bool>> seen(n_stations, std::vector<bool>(n_samples, false));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string where = path + " row " + std::to_string(i + 2);
    const auto station = static_cast<std::size_t>(parse_int(rows[i][0], where));
    const auto sample = static_cast<std::size_t>(parse_int(rows[i][1], where));
    if (station >= n_stations)
      throw std::runtime_error(where + ": station index out of range");
    if (sample >= n_samples)
      throw std::runtime_error(where + ": sample index out of range");
    if (seen[station][sample])
      throw std::runtime_error(where + ": duplicate (station, sample) entry");
    seen[station][sample] = true;
    signals.station[station][sample] = parse_double(rows[i][2], where);
  }
  return signals;
}

inline std::vector<Event> read_events_files(const std::string& dir, const ModelConfig& config) {
  const std::string events_path = dir + "/events.csv";
  const std::string arrivals_path = dir + "/arrivals.csv";
  std::vector<Event> events;
  std::map<std::uint64_t, std::size_t> index_of;
  for (const auto& row : read_csv(events_path, "id,x,t")) {
    Event e;
    e.id = static_cast<std::uint64_t>(parse_int(row[0], events_path));
    e.x = parse_double(row[1], events_path);
    e.t = parse_double(row[2], events_path);
    e.arrivals.assign(config.n_stations(), 0.0);
    if (index_of.count(e.id))
      throw std::runtime_error(events_path + ": duplicate event id " + row[0]);
    index_of[e.id] = events.size();
    events.push_back(std::move(e));
  }
  std::vector<std::vector<bool>> filled(events.size(),
                                        std::vector<bool>(config.n_stations(), false));
  const auto rows = read_csv(arrivals_path, "event_id,station,arrival");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string where = arrivals_path + " row " + std::to_string(i + 2);
    const auto id = static_cast<std::uint64_t>(parse_int(rows[i][0], where));
    auto it = index_of.find(id);
    if (it == index_of.end())
      throw std::runtime_error(where + ": references unknown event id " + rows[i][0]);
    const auto station = static_cast<std::size_t>(parse_int(rows[i][1], where));
    if (station >= config.n_stations())
      throw std::runtime_error(where + ": station index out of range");
    if (filled[it->second][station])
      throw std::runtime_error(where + ": duplicate arrival for event " + rows[i][0] +
                               " station " + rows[i][1]);
    filled[it->second][station] = true;
    events[it->second].arrivals[station] = parse_double(rows[i][2], where);
  }
  for (std::size_t i = 0; i < events.size(); ++i)
    for (std::size_t j = 0; j < config.n_stations(); ++j)
      if (!filled[i][j])
        throw std::runtime_error(arrivals_path + ": missing arrival for event " +
                                 std::to_string(events[i].id) + " station " +
                                 std::to_string(j));
  return events;
}

inline World read_world(const std::string& dir) {
  World world;
  world.config = read_model_config(dir + "/config.txt");
  world.events = read_events_files(dir, world.config);
  world.signals = read_signals_file(dir + "/signals.csv", world.config);
  return world;
}

// Config + signals only; inference does not look at truth events.
inline std::pair<ModelConfig, ObservedSignals> read_observation(const std::string& dir) {
  ModelConfig config = read_model_config(dir + "/config.txt");
  ObservedSignals signals = read_signals_file(dir + "/signals.csv", config);
  return {std::move(config), std::move(signals)};
}

}  // namespace seismic
