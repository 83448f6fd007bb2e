#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "seismic/density.hpp"
#include "seismic/model.hpp"
#include "seismic/rng.hpp"

namespace seismic {

enum class MoveType : int { Birth = 0, Death = 1, Location = 2, Arrival = 3, JointPair = 4 };
constexpr int kNumMoveTypes = 5;

struct MoveDistribution {
  // birth, death, location, arrival, joint
  std::array<double, 5> weights{0.2, 0.2, 0.3, 0.2, 0.1};

  void validate() const {
    double sum = 0.0;
    for (double w : weights) {
      if (w < 0) throw std::invalid_argument("MoveDistribution: negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("MoveDistribution: weights must sum to 1");
  }

  MoveType sample(Rng& rng) const {
    const double u = rng.uniform();
    double cum = 0.0;
    for (int i = 0; i < kNumMoveTypes; ++i) {
      cum += weights[static_cast<std::size_t>(i)];
      if (u < cum) return static_cast<MoveType>(i);
    }
    return MoveType::JointPair;
  }

  double log_prob(MoveType type) const {
    return std::log(weights[static_cast<std::size_t>(static_cast<int>(type))]);
  }
};

struct ProposalStepSizes {
  double location_x = 4.0;
  double location_t = 4.0;
  double arrival = 1.0;
  double joint = 1.0;
};

// One candidate move. `null` marks a no-op (move drawn on an event set
// too small to support it); null proposals are counted as rejected steps.
struct Proposal {
  MoveType type = MoveType::Birth;
  bool null = false;
  Change change;
  double log_q_forward = 0.0;
  double log_q_reverse = 0.0;
};

inline std::vector<std::size_t> events_in_region(const std::vector<Event>& events,
                                                 const TimeRegion& region) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < events.size(); ++i)
    if (region.contains(events[i].t)) idx.push_back(i);
  return idx;
}

inline Proposal null_proposal(MoveType type) {
  Proposal p;
  p.type = type;
  p.null = true;
  return p;
}

// New event drawn uniformly over the region and space, arrivals from the
// model's own conditional (those terms cancel against the arrival prior
// in the acceptance ratio). The reverse move is the death that selects
// this event among the k+1 then in the region.
inline Proposal propose_birth(const TimeRegion& region, const std::vector<Event>& events,
                              const ModelConfig& config, const MoveDistribution& moves,
                              std::uint64_t new_id, Rng& rng) {
  const auto k = static_cast<double>(events_in_region(events, region).size());
  Event e;
  e.id = new_id;
  e.t = rng.uniform(region.iv.lo, region.iv.hi);
  e.x = rng.uniform(0.0, config.x_max);
  e.arrivals.resize(config.n_stations());
  double arrival_logq = 0.0;
  for (std::size_t j = 0; j < config.n_stations(); ++j) {
    const double mean = config.arrival_mean(e.x, e.t, j);
    e.arrivals[j] = rng.normal(mean, config.sigma_arrival);
    arrival_logq += log_gaussian(e.arrivals[j], mean,
                                 config.sigma_arrival * config.sigma_arrival);
  }
  Proposal p;
  p.type = MoveType::Birth;
  p.log_q_forward = moves.log_prob(MoveType::Birth) - std::log(region.length()) -
                    std::log(config.x_max) + arrival_logq;
  p.log_q_reverse = moves.log_prob(MoveType::Death) - std::log(k + 1.0);
  p.change = make_insert(std::move(e));
  return p;
}

// Death of a specific event; exposed separately so the birth/death
// involution pairing is checkable against an explicitly chosen victim.
inline Proposal make_death_proposal(const TimeRegion& region, const Event& victim,
                                    std::size_t k_in_region, const ModelConfig& config,
                                    const MoveDistribution& moves) {
  double arrival_logq = 0.0;
  for (std::size_t j = 0; j < config.n_stations(); ++j) {
    const double mean = config.arrival_mean(victim.x, victim.t, j);
    arrival_logq += log_gaussian(victim.arrivals[j], mean,
                                 config.sigma_arrival * config.sigma_arrival);
  }
  Proposal p;
  p.type = MoveType::Death;
  p.log_q_forward = moves.log_prob(MoveType::Death) -
                    std::log(static_cast<double>(k_in_region));
  p.log_q_reverse = moves.log_prob(MoveType::Birth) - std::log(region.length()) -
                    std::log(config.x_max) + arrival_logq;
  p.change = make_remove(victim);
  return p;
}

inline Proposal propose_death(const TimeRegion& region, const std::vector<Event>& events,
                              const ModelConfig& config, const MoveDistribution& moves,
                              Rng& rng) {
  const auto in_region = events_in_region(events, region);
  if (in_region.empty()) return null_proposal(MoveType::Death);
  const std::size_t pick = rng.uniform_index(in_region.size());
  return make_death_proposal(region, events[in_region[pick]], in_region.size(), config,
                             moves);
}

// Gaussian offset in space and time. Stored arrivals shift with the
// change in predicted means, keeping arrival residuals fixed; the move is
// symmetric with unit Jacobian.
inline Proposal propose_location(const TimeRegion& region, const std::vector<Event>& events,
                                 const ModelConfig& config, const ProposalStepSizes& sizes,
                                 Rng& rng) {
  const auto in_region = events_in_region(events, region);
  if (in_region.empty()) return null_proposal(MoveType::Location);
  const Event& before = events[in_region[rng.uniform_index(in_region.size())]];
  Event after = before;
  after.x += rng.normal(0.0, sizes.location_x);
  after.t += rng.normal(0.0, sizes.location_t);
  for (std::size_t j = 0; j < config.n_stations(); ++j)
    after.arrivals[j] += config.arrival_mean(after.x, after.t, j) -
                         config.arrival_mean(before.x, before.t, j);
  Proposal p;
  p.type = MoveType::Location;
  p.change = make_modify(before, std::move(after));
  return p;
}

inline Proposal propose_arrival(const TimeRegion& region, const std::vector<Event>& events,
                                const ModelConfig& config, const ProposalStepSizes& sizes,
                                Rng& rng) {
  const auto in_region = events_in_region(events, region);
  if (in_region.empty()) return null_proposal(MoveType::Arrival);
  const Event& before = events[in_region[rng.uniform_index(in_region.size())]];
  const std::size_t station = rng.uniform_index(config.n_stations());
  Event after = before;
  after.arrivals[station] += rng.normal(0.0, sizes.arrival);
  Proposal p;
  p.type = MoveType::Arrival;
  p.change = make_modify(before, std::move(after));
  return p;
}

// Cross-swap of the arrival times two events imply at a neighboring
// station pair: each event keeps its left-station arrival and takes the
// other's right-station arrival, then (x, t) are re-solved from the
// swapped pair. For events between the stations this is a self-inverse
// linear map with unit Jacobian; it jumps between aliased two-event
// explanations of the same arrival pattern.
inline std::pair<std::pair<double, double>, std::pair<double, double>> cross_swap(
    double x1, double t1, double x2, double t2, double xl, double xr, double v) {
  const double al1 = t1 + std::abs(x1 - xl) / v;
  const double ar1 = t1 + std::abs(x1 - xr) / v;
  const double al2 = t2 + std::abs(x2 - xl) / v;
  const double ar2 = t2 + std::abs(x2 - xr) / v;
  auto solve = [&](double al, double ar) {
    const double x = 0.5 * (xl + xr) + 0.5 * v * (al - ar);
    const double t = 0.5 * (al + ar) - (xr - xl) / (2.0 * v);
    return std::make_pair(x, t);
  };
  return {solve(al1, ar2), solve(al2, ar1)};
}

// Joint pair move. Time jitter uses std sizes.joint / v so the jittered
// map stays symmetric: the cross-swap is an isometry of the (x, v t)
// metric. Out-of-support or out-of-region results are still emitted and
// die in the acceptance step.
inline Proposal propose_joint_pair(const TimeRegion& region, const std::vector<Event>& events,
                                   const ModelConfig& config, const ProposalStepSizes& sizes,
                                   Rng& rng) {
  const auto in_region = events_in_region(events, region);
  if (in_region.size() < 2) return null_proposal(MoveType::JointPair);
  const std::size_t i1 = rng.uniform_index(in_region.size());
  std::size_t i2 = rng.uniform_index(in_region.size() - 1);
  if (i2 >= i1) ++i2;
  const Event& e1 = events[in_region[i1]];
  const Event& e2 = events[in_region[i2]];
  const std::size_t pair_index = rng.uniform_index(config.n_stations() - 1);
  const double xl = config.stations[pair_index];
  const double xr = config.stations[pair_index + 1];

  auto [n1, n2] = cross_swap(e1.x, e1.t, e2.x, e2.t, xl, xr, config.v);
  n1.first += rng.normal(0.0, sizes.joint);
  n1.second += rng.normal(0.0, sizes.joint / config.v);
  n2.first += rng.normal(0.0, sizes.joint);
  n2.second += rng.normal(0.0, sizes.joint / config.v);

  auto shifted = [&](const Event& before, const std::pair<double, double>& to) {
    Event after = before;
    after.x = to.first;
    after.t = to.second;
    for (std::size_t j = 0; j < config.n_stations(); ++j)
      after.arrivals[j] += config.arrival_mean(after.x, after.t, j) -
                           config.arrival_mean(before.x, before.t, j);
    return after;
  };
  Proposal p;
  p.type = MoveType::JointPair;
  p.change.removed = {e1, e2};
  p.change.added = {shifted(e1, n1), shifted(e2, n2)};
  return p;
}

inline Proposal propose_move(MoveType type, const TimeRegion& region,
                             const std::vector<Event>& events, const ModelConfig& config,
                             const MoveDistribution& moves, const ProposalStepSizes& sizes,
                             std::uint64_t new_id, Rng& rng) {
  switch (type) {
    case MoveType::Birth:
      return propose_birth(region, events, config, moves, new_id, rng);
    case MoveType::Death:
      return propose_death(region, events, config, moves, rng);
    case MoveType::Location:
      return propose_location(region, events, config, sizes, rng);
    case MoveType::Arrival:
      return propose_arrival(region, events, config, sizes, rng);
    case MoveType::JointPair:
      return propose_joint_pair(region, events, config, sizes, rng);
  }
  throw std::logic_error("propose_move: unknown move type");
}

inline double log_accept_ratio(double delta_log_joint_value, const Proposal& p) {
  if (delta_log_joint_value == kLogZero) return kLogZero;
  return delta_log_joint_value + p.log_q_reverse - p.log_q_forward;
}

// One Metropolis-Hastings step. `constraint`, when set, rejects any
// proposal whose modified events leave the active region (the proposal is
// evaluated, not clipped). The uniform draw happens on every non-null
// proposal with log ratio < 0, so trajectories are reproducible whether
// rejection came from the ratio, the support, or the constraint.
template <class Scorer>
bool mh_step(World& world, const Proposal& p, Scorer&& scorer,
             const TimeRegion* constraint, Rng& rng) {
  if (p.null) return false;
  double log_r;
  bool constrained_out = false;
  if (constraint) {
    for (const Event& e : p.change.added)
      if (!constraint->contains(e.t)) {
        constrained_out = true;
        break;
      }
  }
  if (constrained_out) {
    log_r = kLogZero;
  } else {
    log_r = log_accept_ratio(scorer(p.change), p);
  }
  if (log_r >= 0.0) {
    apply_change(world, p.change);
    return true;
  }
  const double u = rng.uniform();
  if (std::log(u) < log_r) {
    apply_change(world, p.change);
    return true;
  }
  return false;
}

}  // namespace seismic
