#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "seismic/proposals.hpp"
#include "seismic/worldgen.hpp"

using namespace seismic;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.T = 60.0;
  c.lambda_rate = 0.05;
  return c;
}

World world_with_n_events(const ModelConfig& c, std::size_t n, std::uint64_t seed) {
  std::vector<std::pair<double, double>> coords;
  Rng rng = derive_stream(seed, streams::kEventCoords, 999);
  for (std::size_t i = 0; i < n; ++i)
    coords.emplace_back(rng.uniform(0, c.x_max), rng.uniform(0, c.T));
  return make_world_with_events(c, coords, seed);
}

}  // namespace

TEST_CASE("move distribution validation and sampling") {
  MoveDistribution moves;
  CHECK_NOTHROW(moves.validate());
  SUBCASE("must sum to one") {
    moves.weights = {0.2, 0.2, 0.2, 0.2, 0.1};
    CHECK_THROWS_AS(moves.validate(), std::invalid_argument);
  }
  SUBCASE("no negative weights") {
    moves.weights = {0.5, -0.1, 0.3, 0.2, 0.1};
    CHECK_THROWS_AS(moves.validate(), std::invalid_argument);
  }
  SUBCASE("sampling respects zero weights") {
    moves.weights = {0.0, 0.0, 1.0, 0.0, 0.0};
    Rng rng = derive_stream(1, streams::kChain);
    for (int i = 0; i < 100; ++i) CHECK(moves.sample(rng) == MoveType::Location);
  }
}

TEST_CASE("birth proposals stay in bounds and carry finite densities") {
  ModelConfig c = small_config();
  World w = world_with_n_events(c, 2, 5);
  MoveDistribution moves;
  Rng rng = derive_stream(2, streams::kChain);
  const TimeRegion region{{10.0, 40.0}, false};
  for (int i = 0; i < 200; ++i) {
    Proposal p = propose_birth(region, w.events, c, moves, 100 + i, rng);
    REQUIRE(p.change.added.size() == 1);
    const Event& e = p.change.added[0];
    CHECK(e.t >= 10.0);
    CHECK(e.t < 40.0);
    CHECK(e.x >= 0.0);
    CHECK(e.x <= c.x_max);
    CHECK(std::isfinite(p.log_q_forward));
    CHECK(std::isfinite(p.log_q_reverse));
  }
}

TEST_CASE("birth into an empty region has unit death-selection term") {
  ModelConfig c = small_config();
  World w;
  w.config = c;
  w.signals.station.assign(c.n_stations(),
                           std::vector<double>(static_cast<std::size_t>(c.n_samples()), 0.0));
  MoveDistribution moves;
  Rng rng = derive_stream(3, streams::kChain);
  Proposal p = propose_birth(c.full_region(), w.events, c, moves, 0, rng);
  CHECK(p.log_q_reverse == moves.log_prob(MoveType::Death));  // -log(0 + 1) = 0
}

TEST_CASE("birth/death involution pairing") {
  ModelConfig c = small_config();
  MoveDistribution moves;
  Rng rng = derive_stream(4, streams::kChain);
  const TimeRegion region = c.full_region();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    World w = world_with_n_events(c, seed % 4, seed);
    const std::size_t k = events_in_region(w.events, region).size();
    Proposal birth = propose_birth(region, w.events, c, moves, 777, rng);
    World after = w;
    apply_change(after, birth.change);
    Proposal death =
        make_death_proposal(region, birth.change.added[0], k + 1, c, moves);
    CHECK(death.log_q_forward == birth.log_q_reverse);
    CHECK(death.log_q_reverse == doctest::Approx(birth.log_q_forward).epsilon(1e-12));
    CHECK(death.log_q_forward - death.log_q_reverse ==
          doctest::Approx(-(birth.log_q_forward - birth.log_q_reverse)).epsilon(1e-12));
  }
}

TEST_CASE("death selection term counts region occupants") {
  ModelConfig c = small_config();
  World w = world_with_n_events(c, 2, 9);
  MoveDistribution moves;
  Rng rng = derive_stream(5, streams::kChain);
  Proposal p = propose_death(c.full_region(), w.events, c, moves, rng);
  CHECK(p.log_q_forward ==
        doctest::Approx(moves.log_prob(MoveType::Death) - std::log(2.0)).epsilon(1e-12));

  World empty;
  empty.config = c;
  Proposal null_p = propose_death(TimeRegion{{0.0, 10.0}, false}, empty.events, c, moves, rng);
  CHECK(null_p.null);
}

TEST_CASE("non-jump moves are exactly symmetric") {
  ModelConfig c = small_config();
  World w = world_with_n_events(c, 3, 6);
  ProposalStepSizes sizes;
  Rng rng = derive_stream(6, streams::kChain);
  for (int i = 0; i < 100; ++i) {
    Proposal loc = propose_location(c.full_region(), w.events, c, sizes, rng);
    Proposal arr = propose_arrival(c.full_region(), w.events, c, sizes, rng);
    Proposal joint = propose_joint_pair(c.full_region(), w.events, c, sizes, rng);
    CHECK(loc.log_q_forward == loc.log_q_reverse);
    CHECK(arr.log_q_forward == arr.log_q_reverse);
    CHECK(joint.log_q_forward == joint.log_q_reverse);
  }
}

TEST_CASE("zero step size degenerates to the identity move") {
  ModelConfig c = small_config();
  World w = world_with_n_events(c, 2, 8);
  ProposalStepSizes sizes;
  sizes.location_x = sizes.location_t = 0.0;
  sizes.arrival = 0.0;
  Rng rng = derive_stream(7, streams::kChain);
  auto scorer = [&](const Change& ch) { return delta_log_joint(w, ch); };

  Proposal loc = propose_location(c.full_region(), w.events, c, sizes, rng);
  CHECK(loc.change.added[0].x == loc.change.removed[0].x);
  CHECK(loc.change.added[0].t == loc.change.removed[0].t);
  World w1 = w;
  CHECK(mh_step(w1, loc, scorer, nullptr, rng));  // always accepted

  Proposal arr = propose_arrival(c.full_region(), w.events, c, sizes, rng);
  CHECK(arr.change.added[0].arrivals == arr.change.removed[0].arrivals);
  World w2 = w;
  CHECK(mh_step(w2, arr, scorer, nullptr, rng));
}

TEST_CASE("arrival move acceptance equals the joint density ratio") {
  ModelConfig c = small_config();
  World w = sample_world(c, 31);
  while (w.events.empty()) w = sample_world(c, 32);
  ProposalStepSizes sizes;
  Rng rng = derive_stream(8, streams::kChain);
  for (int i = 0; i < 50; ++i) {
    Proposal p = propose_arrival(c.full_region(), w.events, c, sizes, rng);
    REQUIRE_FALSE(p.null);
    const double delta = delta_log_joint(w, p.change);
    World after = w;
    apply_change(after, p.change);
    const double direct = log_joint(after) - log_joint(w);
    CHECK(std::abs(log_accept_ratio(delta, p) - direct) < 1e-8);
  }
}

TEST_CASE("birth acceptance matches a hand-composed ratio") {
  ModelConfig c = small_config();
  World w;  // noise-only observation
  w.config = c;
  Rng noise = derive_stream(77, streams::kSignalNoise, 0);
  w.signals.station.assign(c.n_stations(), {});
  for (auto& st : w.signals.station) {
    st.resize(static_cast<std::size_t>(c.n_samples()));
    for (auto& s : st) s = noise.normal(0.0, std::sqrt(c.var_noise));
  }
  MoveDistribution moves;
  Rng rng = derive_stream(9, streams::kChain);
  int covered_checked = 0;
  for (int i = 0; i < 50; ++i) {
    Proposal p = propose_birth(c.full_region(), w.events, c, moves, 50, rng);
    World after = w;
    apply_change(after, p.change);
    const double hand =
        (log_joint(after) - log_joint(w)) + p.log_q_reverse - p.log_q_forward;
    const double lib = log_accept_ratio(delta_log_joint(w, p.change), p);
    CHECK(std::abs(hand - lib) < 1e-8);
    // when the new event's signals land on observed samples, explaining
    // pure noise with inflated variance is a clearly losing bet
    std::int64_t covered = 0;
    for (std::size_t j = 0; j < c.n_stations(); ++j)
      covered += arrival_sample_range(c, p.change.added[0].arrivals[j]).size();
    if (covered >= 40) {
      CHECK(hand < 0);
      ++covered_checked;
    }
  }
  CHECK(covered_checked > 0);
}

TEST_CASE("cross-swap is a self-inverse map between stations") {
  // Identity of the double application needs both the original and the
  // swapped pair inside [xl, xr] (the aliasing geometry the move targets),
  // so positions sit well inside and the time gap stays small.
  const double v = 2.0, xl = 33.0, xr = 66.0;
  Rng rng = derive_stream(10, streams::kChain);
  for (int i = 0; i < 500; ++i) {
    const double x1 = rng.uniform(40, 59), t1 = rng.uniform(0, 240);
    const double x2 = rng.uniform(40, 59), t2 = t1 + rng.uniform(-6.0 / v, 6.0 / v);
    auto [n1, n2] = cross_swap(x1, t1, x2, t2, xl, xr, v);
    CHECK(n1.first >= xl);
    CHECK(n1.first <= xr);
    CHECK(n2.first >= xl);
    CHECK(n2.first <= xr);
    auto [b1, b2] = cross_swap(n1.first, n1.second, n2.first, n2.second, xl, xr, v);
    CHECK(std::abs(b1.first - x1) < 1e-9);
    CHECK(std::abs(b1.second - t1) < 1e-9);
    CHECK(std::abs(b2.first - x2) < 1e-9);
    CHECK(std::abs(b2.second - t2) < 1e-9);
  }
}

TEST_CASE("cross-swap exchanges the implied right-station arrivals") {
  const double v = 2.0, xl = 33.0, xr = 66.0;
  const double x1 = 40.0, t1 = 100.0, x2 = 60.0, t2 = 110.0;
  auto implied = [&](double x, double t, double xs) { return t + std::abs(x - xs) / v; };
  auto [n1, n2] = cross_swap(x1, t1, x2, t2, xl, xr, v);
  CHECK(implied(n1.first, n1.second, xl) ==
        doctest::Approx(implied(x1, t1, xl)).epsilon(1e-12));
  CHECK(implied(n1.first, n1.second, xr) ==
        doctest::Approx(implied(x2, t2, xr)).epsilon(1e-12));
  CHECK(implied(n2.first, n2.second, xl) ==
        doctest::Approx(implied(x2, t2, xl)).epsilon(1e-12));
  CHECK(implied(n2.first, n2.second, xr) ==
        doctest::Approx(implied(x1, t1, xr)).epsilon(1e-12));
}

TEST_CASE("midway pair with equal times is a fixed point") {
  auto [n1, n2] = cross_swap(49.5, 100.0, 49.5, 100.0, 33.0, 66.0, 2.0);
  CHECK(n1.first == doctest::Approx(49.5).epsilon(1e-12));
  CHECK(n1.second == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(n2.first == doctest::Approx(49.5).epsilon(1e-12));
  CHECK(n2.second == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("joint kernel with zero jitter is an involution on stored state") {
  ModelConfig c = small_config();
  c.stations = {33.0, 66.0};  // single adjacent pair keeps the draw fixed
  World w = make_world_with_events(c, {{40.0, 20.0}, {60.0, 35.0}}, 3);
  ProposalStepSizes sizes;
  sizes.joint = 0.0;
  Rng rng = derive_stream(11, streams::kChain);

  World once = w;
  Proposal p1 = propose_joint_pair(c.full_region(), once.events, c, sizes, rng);
  REQUIRE_FALSE(p1.null);
  apply_change(once, p1.change);
  World twice = once;
  Proposal p2 = propose_joint_pair(c.full_region(), twice.events, c, sizes, rng);
  REQUIRE_FALSE(p2.null);
  apply_change(twice, p2.change);

  for (const Event& orig : w.events) {
    const Event* match = nullptr;
    for (const Event& e : twice.events)
      if (e.id == orig.id) match = &e;
    REQUIRE(match != nullptr);
    CHECK(std::abs(match->x - orig.x) < 1e-9);
    CHECK(std::abs(match->t - orig.t) < 1e-9);
    for (std::size_t j = 0; j < c.n_stations(); ++j)
      CHECK(std::abs(match->arrivals[j] - orig.arrivals[j]) < 1e-9);
  }
}

TEST_CASE("joint kernel needs two events in the region") {
  ModelConfig c = small_config();
  World w = world_with_n_events(c, 1, 12);
  ProposalStepSizes sizes;
  Rng rng = derive_stream(12, streams::kChain);
  CHECK(propose_joint_pair(c.full_region(), w.events, c, sizes, rng).null);
}

TEST_CASE("mh_step acceptance frequencies") {
  ModelConfig c = small_config();
  World w = world_with_n_events(c, 1, 13);
  const Event& e = w.events[0];
  Event moved = e;
  moved.t += 1.0;
  Proposal p;
  p.type = MoveType::Location;
  p.change = make_modify(e, moved);

  SUBCASE("pi ratio one half accepts half the time") {
    const double target = 0.5;
    auto scorer = [&](const Change&) { return std::log(target); };
    int accepted = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      World w2 = w;
      Rng rng = derive_stream(1000, streams::kChain, static_cast<std::uint64_t>(i));
      if (mh_step(w2, p, scorer, nullptr, rng)) ++accepted;
    }
    const double freq = static_cast<double>(accepted) / n;
    const double se = std::sqrt(target * (1 - target) / n);
    CHECK(std::abs(freq - target) < 3 * se);
  }

  SUBCASE("ratio at least one always accepts") {
    auto scorer = [&](const Change&) { return 0.3; };
    for (int i = 0; i < 1000; ++i) {
      World w2 = w;
      Rng rng = derive_stream(2000, streams::kChain, static_cast<std::uint64_t>(i));
      CHECK(mh_step(w2, p, scorer, nullptr, rng));
    }
  }

  SUBCASE("replaying a real proposal matches its computed alpha") {
    World base = sample_world(c, 71);
    while (base.events.empty()) base = sample_world(c, 72);
    Rng prop_rng = derive_stream(3000, streams::kChain);
    ProposalStepSizes sizes;
    sizes.arrival = 3.0;  // roomy steps so alpha is usually interior
    Proposal real;
    double alpha = 1.0;
    for (int tries = 0; tries < 200; ++tries) {
      real = propose_arrival(c.full_region(), base.events, c, sizes, prop_rng);
      const double lr = log_accept_ratio(delta_log_joint(base, real.change), real);
      alpha = std::exp(std::min(0.0, lr));
      if (alpha > 0.05 && alpha < 0.95) break;
    }
    REQUIRE(alpha < 0.95);
    auto scorer = [&](const Change& ch) { return delta_log_joint(base, ch); };
    int accepted = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      World w2 = base;
      Rng rng = derive_stream(4000, streams::kChain, static_cast<std::uint64_t>(i));
      if (mh_step(w2, real, scorer, nullptr, rng)) ++accepted;
    }
    const double freq = static_cast<double>(accepted) / n;
    const double se = std::sqrt(alpha * (1 - alpha) / n);
    CHECK(std::abs(freq - alpha) < 3 * se);
  }

  SUBCASE("null proposals never change state") {
    auto scorer = [&](const Change&) { return 100.0; };
    World w2 = w;
    Rng rng = derive_stream(5000, streams::kChain);
    Proposal null_p = null_proposal(MoveType::Death);
    CHECK_FALSE(mh_step(w2, null_p, scorer, nullptr, rng));
    CHECK(w2.events == w.events);
  }
}

TEST_CASE("region constraint rejects moves that leave the region") {
  ModelConfig c = small_config();
  World w = make_world_with_events(c, {{50.0, 25.0}}, 44);
  const TimeRegion region{{20.0, 30.0}, false};
  const Event& e = w.events[0];
  Event out = e;
  out.t = 45.0;  // inside [0, T] but outside the active region
  Proposal p;
  p.type = MoveType::Location;
  p.change = make_modify(e, out);
  auto scorer = [&](const Change&) { return 10.0; };  // would otherwise accept
  Rng rng = derive_stream(13, streams::kChain);
  World w2 = w;
  CHECK_FALSE(mh_step(w2, p, scorer, &region, rng));
  CHECK(w2.events == w.events);
  World w3 = w;
  CHECK(mh_step(w3, p, scorer, nullptr, rng));
}
