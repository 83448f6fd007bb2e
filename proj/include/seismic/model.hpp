#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace seismic {

// Log-density of an impossible state. Real -inf: exp() of it is 0 and
// addition with finite terms stays -inf, so acceptance ratios reject
// cleanly. Code must never subtract two of these (checked at the few
// places deltas are formed).
constexpr double kLogZero = -std::numeric_limits<double>::infinity();

struct TimeInterval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

// A region of the time axis. Regions are half-open [lo, hi) except the
// one ending at the world boundary T, which closes at hi so every
// t in [0, T] belongs to exactly one region.
struct TimeRegion {
  TimeInterval iv;
  bool closed_hi = false;
  bool contains(double t) const {
    return t >= iv.lo && (t < iv.hi || (closed_hi && t == iv.hi));
  }
  double length() const { return iv.length(); }
};

// Half-open range of signal sample indices.
struct SampleRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  std::int64_t size() const { return end > begin ? end - begin : 0; }
  bool empty() const { return end <= begin; }
};

struct Event {
  std::uint64_t id = 0;
  double x = 0.0;                 // location in [0, x_max]
  double t = 0.0;                 // origin time in [0, T]
  std::vector<double> arrivals;   // one arrival time per station

  friend bool operator==(const Event& a, const Event& b) {
    return a.id == b.id && a.x == b.x && a.t == b.t && a.arrivals == b.arrivals;
  }
};

struct ModelConfig {
  double lambda_rate = 0.02;  // events per time unit
  double T = 240.0;           // observed time span
  double x_max = 100.0;       // spatial extent
  double v = 2.0;             // wave velocity
  double sigma_arrival = 2.0; // arrival-time noise std
  double t_s = 20.0;          // event signal duration
  double var_noise = 1.0;     // background noise variance
  double var_event = 4.0;     // per-event signal variance
  double sample_rate = 1.0;   // samples per time unit
  std::vector<double> stations{0.0, 33.0, 66.0, 100.0};

  std::int64_t n_samples() const {
    return static_cast<std::int64_t>(std::llround(sample_rate * T));
  }

  std::size_t n_stations() const { return stations.size(); }

  double arrival_mean(double x, double t, std::size_t station) const {
    return t + std::abs(x - stations[station]) / v;
  }

  TimeRegion full_region() const { return TimeRegion{{0.0, T}, true}; }

  void validate() const {
    auto fail = [](const std::string& msg) {
      throw std::invalid_argument("ModelConfig: " + msg);
    };
    if (!(lambda_rate > 0)) fail("lambda_rate must be > 0");
    if (!(T > 0)) fail("T must be > 0");
    if (!(x_max > 0)) fail("x_max must be > 0");
    if (!(v > 0)) fail("v must be > 0");
    if (!(sigma_arrival > 0)) fail("sigma_arrival must be > 0");
    if (!(t_s > 0)) fail("t_s must be > 0");
    if (!(var_noise > 0)) fail("var_noise must be > 0");
    if (!(var_event > var_noise))
      fail("var_event must exceed var_noise");
    if (!(sample_rate > 0)) fail("sample_rate must be > 0");
    const double n = sample_rate * T;
    if (std::abs(n - std::llround(n)) > 1e-9)
      fail("sample_rate * T must be an integer sample count");
    if (stations.size() < 2) fail("need at least 2 stations");
    for (std::size_t j = 0; j < stations.size(); ++j) {
      if (stations[j] < 0 || stations[j] > x_max)
        fail("station " + std::to_string(j) + " outside [0, x_max]");
      if (j > 0 && !(stations[j - 1] < stations[j]))
        fail("stations must be sorted strictly ascending");
    }
  }
};

inline double tau_max(const ModelConfig& config) {
  config.validate();
  return config.x_max / config.v;
}

struct ObservedSignals {
  // station[j][tau] is the sample at time tau / sample_rate
  std::vector<std::vector<double>> station;
};

// A hypothesis: an event set explaining fixed observed signals.
struct World {
  ModelConfig config;
  std::vector<Event> events;
  ObservedSignals signals;
};

// Per-sample signal variances, same shape as ObservedSignals but only
// over the window it was computed for.
struct VarianceProfile {
  SampleRange window;
  std::vector<std::vector<double>> station;
};

inline bool event_in_bounds(const Event& e, const ModelConfig& config) {
  return e.x >= 0.0 && e.x <= config.x_max && e.t >= 0.0 && e.t <= config.T &&
         e.arrivals.size() == config.n_stations();
}

}  // namespace seismic
