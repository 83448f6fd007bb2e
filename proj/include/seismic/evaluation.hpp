#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "seismic/model.hpp"
#include "seismic/rng.hpp"
#include "seismic/samplers.hpp"

namespace seismic {

struct EventPoint {
  std::uint64_t id = 0;
  double x = 0.0;
  double t = 0.0;
};

inline std::vector<EventPoint> event_points(const std::vector<Event>& events) {
  std::vector<EventPoint> points;
  points.reserve(events.size());
  for (const Event& e : events) points.push_back({e.id, e.x, e.t});
  return points;
}

struct MatchedPair {
  std::uint64_t true_id = 0;
  std::uint64_t inferred_id = 0;
  double distance = 0.0;
};

struct MatchReport {
  std::vector<MatchedPair> pairs;
  double precision = 1.0;
  double recall = 1.0;
  double location_error = 0.0;  // mean distance over matched pairs
  std::size_t n_true = 0;
  std::size_t n_inferred = 0;
  std::size_t n_matched = 0;
};

// Greedy bipartite matching: true events in ascending (t, x) order each
// grab the closest still-unmatched inferred event (Euclidean distance in
// the (x, t) plane; ties go to the earlier event in (t, x) order), and
// the pair counts only if it is within the threshold in both time and
// distance separately. Matched events drop out, so degrees stay <= 1.
// Vacuous conventions: precision is 1 with nothing inferred, recall is 1
// with no truth, error is 0 with no matches.
inline MatchReport match_events(const std::vector<EventPoint>& true_events,
                                const std::vector<EventPoint>& inferred_events,
                                double threshold = 12.0) {
  if (!(threshold > 0)) throw std::invalid_argument("match_events: threshold must be > 0");
  const auto by_tx = [](const EventPoint& a, const EventPoint& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.x != b.x) return a.x < b.x;
    return a.id < b.id;
  };
  std::vector<EventPoint> truth = true_events;
  std::vector<EventPoint> inferred = inferred_events;
  std::sort(truth.begin(), truth.end(), by_tx);
  std::sort(inferred.begin(), inferred.end(), by_tx);

  MatchReport report;
  report.n_true = truth.size();
  report.n_inferred = inferred.size();
  std::vector<bool> taken(inferred.size(), false);
  for (const EventPoint& t : truth) {
    std::size_t best = inferred.size();
    double best_dist = 0.0;
    for (std::size_t i = 0; i < inferred.size(); ++i) {
      if (taken[i]) continue;
      const double dx = t.x - inferred[i].x;
      const double dt = t.t - inferred[i].t;
      const double dist = std::sqrt(dx * dx + dt * dt);
      if (best == inferred.size() || dist < best_dist) {
        best = i;
        best_dist = dist;
      }
    }
    if (best == inferred.size()) continue;
    if (std::abs(t.t - inferred[best].t) < threshold &&
        std::abs(t.x - inferred[best].x) < threshold) {
      taken[best] = true;
      report.pairs.push_back({t.id, inferred[best].id, best_dist});
    }
  }
  report.n_matched = report.pairs.size();
  report.precision = report.n_inferred == 0
                         ? 1.0
                         : static_cast<double>(report.n_matched) /
                               static_cast<double>(report.n_inferred);
  report.recall = report.n_true == 0 ? 1.0
                                     : static_cast<double>(report.n_matched) /
                                           static_cast<double>(report.n_true);
  if (!report.pairs.empty()) {
    double sum = 0.0;
    for (const MatchedPair& p : report.pairs) sum += p.distance;
    report.location_error = sum / static_cast<double>(report.pairs.size());
  }
  return report;
}

struct MetricRow {
  std::int64_t snapshot_id = 0;
  double wall_seconds = 0.0;
  double precision = 1.0;
  double recall = 1.0;
  double location_error = 0.0;
};

inline std::vector<MetricRow> metric_trace(const std::vector<Snapshot>& snapshots,
                                           const std::vector<EventPoint>& true_events,
                                           double threshold = 12.0) {
  if (snapshots.empty()) throw std::invalid_argument("metric_trace: no snapshots");
  std::vector<MetricRow> rows;
  rows.reserve(snapshots.size());
  for (const Snapshot& snap : snapshots) {
    const MatchReport report =
        match_events(true_events, event_points(snap.events), threshold);
    rows.push_back({snap.id, snap.wall_seconds, report.precision, report.recall,
                    report.location_error});
  }
  return rows;
}

struct BootstrapCI {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  int resamples = 0;
};

// Percentile bootstrap of the mean.
inline BootstrapCI bootstrap_ci(const std::vector<double>& values, double level,
                                int resamples, std::uint64_t seed) {
  if (values.empty()) throw std::invalid_argument("bootstrap_ci: no values");
  if (!(level > 0 && level < 1))
    throw std::invalid_argument("bootstrap_ci: level must be in (0, 1)");
  if (resamples < 1) throw std::invalid_argument("bootstrap_ci: resamples must be >= 1");

  const std::size_t n = values.size();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);

  Rng rng = derive_stream(seed, streams::kBootstrap);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += values[rng.uniform_index(n)];
    m = acc / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= means.size()) return means.back();
    const double frac = pos - static_cast<double>(i);
    return means[i] * (1.0 - frac) + means[i + 1] * frac;
  };
  BootstrapCI ci;
  ci.mean = mean;
  ci.lo = quantile((1.0 - level) / 2.0);
  ci.hi = quantile(1.0 - (1.0 - level) / 2.0);
  ci.level = level;
  ci.resamples = resamples;
  return ci;
}

}  // namespace seismic
