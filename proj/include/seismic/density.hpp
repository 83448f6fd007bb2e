#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "seismic/model.hpp"

namespace seismic {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double log_gaussian(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - d * d / (2.0 * var);
}

// sum_{i=2..n} log i, exact for n = 0, 1
inline double log_factorial(std::int64_t n) {
  double acc = 0.0;
  for (std::int64_t i = 2; i <= n; ++i) acc += std::log(static_cast<double>(i));
  return acc;
}

// Samples covered by one arrival's signal: a <= tau/rate < a + t_s,
// clipped to the observed range.
inline SampleRange arrival_sample_range(const ModelConfig& config, double arrival) {
  const double n = static_cast<double>(config.n_samples());
  double lo = std::ceil(arrival * config.sample_rate);
  double hi = std::ceil((arrival + config.t_s) * config.sample_rate);
  lo = std::clamp(lo, 0.0, n);
  hi = std::clamp(hi, 0.0, n);
  return SampleRange{static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)};
}

inline SampleRange full_sample_range(const ModelConfig& config) {
  return SampleRange{0, config.n_samples()};
}

// Poisson-process prior over an event set, restricted to `support` on the
// time axis ([0, T] for the full model). Includes the count pmf (with its
// -log n! term) and the per-event uniform location/time densities.
inline double log_event_prior(const std::vector<Event>& events,
                              const ModelConfig& config,
                              const TimeRegion& support) {
  const double area_t = support.length();
  const double lambda_area = config.lambda_rate * area_t;
  const auto n = static_cast<std::int64_t>(events.size());
  for (const Event& e : events) {
    if (e.x < 0.0 || e.x > config.x_max || !support.contains(e.t)) return kLogZero;
  }
  return -lambda_area + n * std::log(lambda_area) - log_factorial(n) +
         n * (-std::log(config.x_max) - std::log(area_t));
}

inline double log_event_prior(const std::vector<Event>& events,
                              const ModelConfig& config) {
  return log_event_prior(events, config, config.full_region());
}

inline double log_arrival_density(const Event& event, std::size_t station,
                                  const ModelConfig& config) {
  const double mean = config.arrival_mean(event.x, event.t, station);
  const double sigma = config.sigma_arrival;
  return log_gaussian(event.arrivals[station], mean, sigma * sigma);
}

inline double log_arrival_densities(const Event& event, const ModelConfig& config) {
  double acc = 0.0;
  for (std::size_t j = 0; j < config.n_stations(); ++j)
    acc += log_arrival_density(event, j, config);
  return acc;
}

namespace detail {

inline void add_coverage(std::vector<std::int32_t>& counts, const SampleRange& window,
                         const SampleRange& signal, std::int32_t delta) {
  const std::int64_t lo = std::max(window.begin, signal.begin);
  const std::int64_t hi = std::min(window.end, signal.end);
  for (std::int64_t s = lo; s < hi; ++s) counts[s - window.begin] += delta;
}

// Per-sample log-likelihood terms for one station over a window, given
// signal-coverage counts. Consecutive samples usually share a count, so
// the log is recomputed only when the count changes.
inline double station_loglik(const std::vector<double>& samples,
                             const SampleRange& window,
                             const std::vector<std::int32_t>& counts,
                             const ModelConfig& config) {
  double acc = 0.0;
  std::int32_t last_count = -1;
  double log_term = 0.0, inv_2var = 0.0;
  for (std::int64_t s = window.begin; s < window.end; ++s) {
    const std::int32_t c = counts[s - window.begin];
    if (c != last_count) {
      const double var = config.var_noise + c * config.var_event;
      log_term = -0.5 * (kLog2Pi + std::log(var));
      inv_2var = 0.5 / var;
      last_count = c;
    }
    const double y = samples[s];
    acc += log_term - y * y * inv_2var;
  }
  return acc;
}

}  // namespace detail

inline VarianceProfile variance_profile(const std::vector<Event>& events,
                                        const ModelConfig& config,
                                        const SampleRange& window) {
  VarianceProfile profile;
  profile.window = window;
  profile.station.resize(config.n_stations());
  std::vector<std::int32_t> counts;
  for (std::size_t j = 0; j < config.n_stations(); ++j) {
    counts.assign(static_cast<std::size_t>(window.size()), 0);
    for (const Event& e : events)
      detail::add_coverage(counts, window, arrival_sample_range(config, e.arrivals[j]), 1);
    auto& out = profile.station[j];
    out.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
      out[i] = config.var_noise + counts[i] * config.var_event;
  }
  return profile;
}

inline double log_signal_likelihood(const ObservedSignals& signals,
                                    const std::vector<Event>& events,
                                    const ModelConfig& config,
                                    const SampleRange& window) {
  double acc = 0.0;
  std::vector<std::int32_t> counts;
  for (std::size_t j = 0; j < config.n_stations(); ++j) {
    counts.assign(static_cast<std::size_t>(window.size()), 0);
    for (const Event& e : events)
      detail::add_coverage(counts, window, arrival_sample_range(config, e.arrivals[j]), 1);
    acc += detail::station_loglik(signals.station[j], window, counts, config);
  }
  return acc;
}

inline double log_joint(const World& world) {
  const double prior = log_event_prior(world.events, world.config);
  if (prior == kLogZero) return kLogZero;
  double arrivals = 0.0;
  for (const Event& e : world.events) arrivals += log_arrival_densities(e, world.config);
  return prior + arrivals +
         log_signal_likelihood(world.signals, world.events, world.config,
                               full_sample_range(world.config));
}

// One proposed edit of the hypothesis. An insertion has only `added`, a
// removal only `removed`; modifications carry the old event in `removed`
// and its replacement (same id) in `added`. The removed entries must be
// copies of current world events.
struct Change {
  std::vector<Event> removed;
  std::vector<Event> added;
};

inline Change make_insert(Event e) { return Change{{}, {std::move(e)}}; }
inline Change make_remove(Event e) { return Change{{std::move(e)}, {}}; }
inline Change make_modify(Event before, Event after) {
  return Change{{std::move(before)}, {std::move(after)}};
}

inline void apply_change(World& world, const Change& change) {
  for (const Event& r : change.removed) {
    auto it = std::find_if(world.events.begin(), world.events.end(),
                           [&](const Event& e) { return e.id == r.id; });
    if (it == world.events.end())
      throw std::logic_error("apply_change: removed event not present");
    world.events.erase(it);
  }
  for (const Event& a : change.added) world.events.push_back(a);
}

struct ScoreOptions {
  SampleRange window;       // samples the likelihood may touch
  TimeRegion prior_support; // support of the event prior on the time axis
};

inline ScoreOptions default_score_options(const ModelConfig& config) {
  return ScoreOptions{full_sample_range(config), config.full_region()};
}

namespace detail {

inline void merge_ranges(std::vector<SampleRange>& ranges) {
  std::sort(ranges.begin(), ranges.end(),
            [](const SampleRange& a, const SampleRange& b) { return a.begin < b.begin; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (ranges[i].empty()) continue;
    if (out > 0 && ranges[i].begin <= ranges[out - 1].end) {
      ranges[out - 1].end = std::max(ranges[out - 1].end, ranges[i].end);
    } else {
      ranges[out++] = ranges[i];
    }
  }
  ranges.resize(out);
}

}  // namespace detail

// log_joint(world after change) - log_joint(world before change), touching
// only the samples whose variance profile can differ (the union of old and
// new arrival windows) plus the affected prior and arrival terms. The world
// itself must be in-support; an out-of-support candidate yields kLogZero.
inline double delta_log_joint(const World& world, const Change& change,
                              const ScoreOptions& opts) {
  const ModelConfig& config = world.config;

  for (const Event& e : change.added) {
    if (e.x < 0.0 || e.x > config.x_max || !opts.prior_support.contains(e.t))
      return kLogZero;
  }

  const auto n0 = static_cast<std::int64_t>(world.events.size());
  const auto n1 = n0 - static_cast<std::int64_t>(change.removed.size()) +
                  static_cast<std::int64_t>(change.added.size());
  const double area_t = opts.prior_support.length();
  const double log_lambda_area = std::log(config.lambda_rate * area_t);
  double delta = 0.0;
  if (n1 > n0) {
    for (std::int64_t i = n0 + 1; i <= n1; ++i)
      delta += log_lambda_area - std::log(static_cast<double>(i));
  } else if (n1 < n0) {
    for (std::int64_t i = n1 + 1; i <= n0; ++i)
      delta -= log_lambda_area - std::log(static_cast<double>(i));
  }
  delta += static_cast<double>(n1 - n0) *
           (-std::log(config.x_max) - std::log(area_t));

  for (const Event& e : change.added) delta += log_arrival_densities(e, config);
  for (const Event& e : change.removed) delta -= log_arrival_densities(e, config);

  // Likelihood: rescore merged affected ranges per station under the old
  // and new coverage counts.
  std::vector<SampleRange> ranges;
  std::vector<std::int32_t> old_counts, new_counts;
  for (std::size_t j = 0; j < config.n_stations(); ++j) {
    ranges.clear();
    for (const Event& e : change.removed) {
      SampleRange r = arrival_sample_range(config, e.arrivals[j]);
      r.begin = std::max(r.begin, opts.window.begin);
      r.end = std::min(r.end, opts.window.end);
      if (!r.empty()) ranges.push_back(r);
    }
    for (const Event& e : change.added) {
      SampleRange r = arrival_sample_range(config, e.arrivals[j]);
      r.begin = std::max(r.begin, opts.window.begin);
      r.end = std::min(r.end, opts.window.end);
      if (!r.empty()) ranges.push_back(r);
    }
    detail::merge_ranges(ranges);
    for (const SampleRange& range : ranges) {
      const auto size = static_cast<std::size_t>(range.size());
      old_counts.assign(size, 0);
      for (const Event& e : world.events) {
        bool removed = false;
        for (const Event& r : change.removed)
          if (r.id == e.id) { removed = true; break; }
        if (!removed)
          detail::add_coverage(old_counts, range,
                               arrival_sample_range(config, e.arrivals[j]), 1);
      }
      new_counts = old_counts;
      for (const Event& e : change.removed)
        detail::add_coverage(old_counts, range,
                             arrival_sample_range(config, e.arrivals[j]), 1);
      for (const Event& e : change.added)
        detail::add_coverage(new_counts, range,
                             arrival_sample_range(config, e.arrivals[j]), 1);

      const std::vector<double>& samples = world.signals.station[j];
      std::int32_t last_old = -1, last_new = -1;
      double old_log = 0, old_inv = 0, new_log = 0, new_inv = 0;
      for (std::int64_t s = range.begin; s < range.end; ++s) {
        const std::size_t i = static_cast<std::size_t>(s - range.begin);
        const std::int32_t co = old_counts[i], cn = new_counts[i];
        if (co == cn) continue;
        if (co != last_old) {
          const double var = config.var_noise + co * config.var_event;
          old_log = -0.5 * (kLog2Pi + std::log(var));
          old_inv = 0.5 / var;
          last_old = co;
        }
        if (cn != last_new) {
          const double var = config.var_noise + cn * config.var_event;
          new_log = -0.5 * (kLog2Pi + std::log(var));
          new_inv = 0.5 / var;
          last_new = cn;
        }
        const double y2 = samples[s] * samples[s];
        delta += (new_log - y2 * new_inv) - (old_log - y2 * old_inv);
      }
    }
  }
  return delta;
}

inline double delta_log_joint(const World& world, const Change& change) {
  return delta_log_joint(world, change, default_score_options(world.config));
}

}  // namespace seismic
