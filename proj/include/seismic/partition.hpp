#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "seismic/model.hpp"

namespace seismic {

// Tiling of [0, T] into time regions. With a nonzero offset the first
// region [0, u) and possibly the last are shorter than the nominal
// length l; all interior regions have length exactly l, which is what
// keeps same-colored regions at least tau_max apart after coloring.
struct Partition {
  double T = 0.0;
  double l = 0.0;       // nominal region length
  double offset = 0.0;  // boundary shift u in [0, l)
  std::vector<double> boundaries;   // 0 = b0 < b1 < ... < bn = T
  std::vector<TimeInterval> regions;
  std::vector<int> colors;          // empty until colored
  int n_colors = 0;

  std::size_t n_regions() const { return regions.size(); }

  TimeRegion region(std::size_t i) const {
    return TimeRegion{regions[i], i + 1 == regions.size()};
  }

  // Total function on [0, T]: boundary points belong to the region on
  // the right, T to the last region.
  std::size_t region_of(double t) const {
    for (std::size_t i = 0; i + 1 < regions.size(); ++i)
      if (t < regions[i].hi) return i;
    return regions.size() - 1;
  }
};

inline Partition build_partition(double T, double l, double offset) {
  if (!(T > 0)) throw std::invalid_argument("build_partition: T must be > 0");
  if (!(l > 0) || l > T)
    throw std::invalid_argument("build_partition: need 0 < l <= T");
  if (offset < 0 || offset >= l)
    throw std::invalid_argument("build_partition: need 0 <= offset < l");

  Partition p;
  p.T = T;
  p.l = l;
  p.offset = offset;
  p.boundaries.push_back(0.0);
  double b = offset > 0 ? offset : l;
  while (b < T - 1e-9) {
    p.boundaries.push_back(b);
    b += l;
  }
  p.boundaries.push_back(T);
  for (std::size_t i = 0; i + 1 < p.boundaries.size(); ++i)
    p.regions.push_back(TimeInterval{p.boundaries[i], p.boundaries[i + 1]});
  return p;
}

// Cyclic color assignment: 2 colors when l >= tau_max, 3 when
// tau_max/2 <= l < tau_max. The separation invariant (same-colored
// regions >= tau_max apart) is verified explicitly afterwards.
inline Partition color_partition(Partition partition, double tau) {
  if (!(tau >= 0)) throw std::invalid_argument("color_partition: tau_max must be >= 0");
  int k;
  if (partition.l >= tau) {
    k = 2;
  } else if (partition.l >= tau / 2) {
    k = 3;
  } else {
    throw std::invalid_argument(
        "color_partition: region length " + std::to_string(partition.l) +
        " is below tau_max/2 = " + std::to_string(tau / 2) +
        "; would need more than 3 colors");
  }
  partition.n_colors = k;
  partition.colors.resize(partition.n_regions());
  for (std::size_t i = 0; i < partition.n_regions(); ++i)
    partition.colors[i] = static_cast<int>(i % static_cast<std::size_t>(k));

  for (std::size_t i = 0; i < partition.n_regions(); ++i)
    for (std::size_t j = i + 1; j < partition.n_regions(); ++j)
      if (partition.colors[i] == partition.colors[j] &&
          partition.regions[j].lo - partition.regions[i].hi < tau - 1e-9)
        throw std::logic_error("color_partition: separation invariant violated");
  return partition;
}

// Samples a region's events can influence: the region itself plus the
// maximum travel time after it, clipped to the observed span.
inline SampleRange signal_window(const TimeInterval& region, double tau, double T,
                                 double sample_rate) {
  const double lo = region.lo;
  const double hi = std::min(region.hi + tau, T);
  auto snap_ceil = [](double x) {
    return static_cast<std::int64_t>(std::ceil(x - 1e-9));
  };
  return SampleRange{snap_ceil(lo * sample_rate), snap_ceil(hi * sample_rate)};
}

struct MarkovBlanket {
  std::vector<std::size_t> regions;        // neighboring region indices
  std::vector<std::size_t> signal_blocks;  // per-region signal block indices
};

// Conditioning set of one region: its neighbors on the time axis plus
// every signal block its window overlaps.
inline MarkovBlanket markov_blanket(std::size_t region_index, const Partition& partition,
                                    double tau) {
  if (region_index >= partition.n_regions())
    throw std::invalid_argument("markov_blanket: region index out of range");
  MarkovBlanket blanket;
  if (region_index > 0) blanket.regions.push_back(region_index - 1);
  if (region_index + 1 < partition.n_regions())
    blanket.regions.push_back(region_index + 1);

  const TimeInterval& r = partition.regions[region_index];
  const double win_lo = r.lo;
  const double win_hi = std::min(r.hi + tau, partition.T);
  for (std::size_t b = 0; b < partition.n_regions(); ++b) {
    const TimeInterval& block = partition.regions[b];
    if (block.lo < win_hi && block.hi > win_lo) blanket.signal_blocks.push_back(b);
  }
  return blanket;
}

}  // namespace seismic
