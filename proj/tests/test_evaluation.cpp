#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "seismic/evaluation.hpp"
#include "seismic/rng.hpp"

using namespace seismic;

namespace {

// Reference matcher, written as a direct transcription of the procedure:
// walk true events in (t, x) order, scan every unmatched inferred event
// for the smallest Euclidean distance (first wins ties), accept the pair
// only within the per-axis threshold. No shared code with the library.
std::vector<MatchedPair> brute_force_match(std::vector<EventPoint> truth,
                                           std::vector<EventPoint> inferred,
                                           double threshold) {
  auto key = [](const EventPoint& e) { return std::make_tuple(e.t, e.x, e.id); };
  std::sort(truth.begin(), truth.end(),
            [&](const EventPoint& a, const EventPoint& b) { return key(a) < key(b); });
  std::sort(inferred.begin(), inferred.end(),
            [&](const EventPoint& a, const EventPoint& b) { return key(a) < key(b); });
  std::vector<bool> used(inferred.size(), false);
  std::vector<MatchedPair> pairs;
  for (const EventPoint& t : truth) {
    double best = -1;
    std::size_t best_i = inferred.size();
    for (std::size_t i = 0; i < inferred.size(); ++i) {
      if (used[i]) continue;
      const double d = std::hypot(t.x - inferred[i].x, t.t - inferred[i].t);
      if (best < 0 || d < best) {
        best = d;
        best_i = i;
      }
    }
    if (best_i == inferred.size()) continue;
    if (std::abs(t.x - inferred[best_i].x) < threshold &&
        std::abs(t.t - inferred[best_i].t) < threshold) {
      used[best_i] = true;
      pairs.push_back({t.id, inferred[best_i].id, best});
    }
  }
  return pairs;
}

}  // namespace

TEST_CASE("matching basics") {
  SUBCASE("close pair matches with the right distance") {
    MatchReport r = match_events({{1, 50, 100}}, {{2, 55, 108}});
    REQUIRE(r.n_matched == 1);
    CHECK(r.pairs[0].true_id == 1);
    CHECK(r.pairs[0].inferred_id == 2);
    CHECK(r.pairs[0].distance == doctest::Approx(std::sqrt(89.0)).epsilon(1e-12));
    CHECK(r.location_error == doctest::Approx(std::sqrt(89.0)).epsilon(1e-12));
  }
  SUBCASE("the threshold applies per axis, strictly") {
    CHECK(match_events({{1, 50, 100}}, {{2, 50, 113}}).n_matched == 0);
    CHECK(match_events({{1, 50, 100}}, {{2, 50, 112}}).n_matched == 0);  // 12 is not < 12
    CHECK(match_events({{1, 50, 100}}, {{2, 50, 111.999}}).n_matched == 1);
  }
  SUBCASE("precision and recall counting") {
    const std::vector<EventPoint> truth{{1, 20, 50}, {2, 80, 200}};
    const std::vector<EventPoint> inferred{{10, 21, 52}, {11, 79, 198}, {12, 50, 120}};
    MatchReport r = match_events(truth, inferred);
    CHECK(r.n_matched == 2);
    CHECK(r.precision == doctest::Approx(2.0 / 3.0));
    CHECK(r.recall == doctest::Approx(1.0));
  }
  SUBCASE("vacuous conventions") {
    MatchReport empty_inferred = match_events({{1, 10, 10}}, {});
    CHECK(empty_inferred.precision == 1.0);
    CHECK(empty_inferred.recall == 0.0);
    CHECK(empty_inferred.location_error == 0.0);
    MatchReport empty_truth = match_events({}, {{1, 10, 10}});
    CHECK(empty_truth.recall == 1.0);
    CHECK(empty_truth.precision == 0.0);
  }
  SUBCASE("closest-first can burn a match (greedy, not optimal)") {
    // the true event grabs its nearest neighbour even if a farther one
    // would also have been within threshold
    MatchReport r = match_events({{1, 0, 100}, {2, 0, 104}}, {{5, 0, 102}});
    CHECK(r.n_matched == 1);
    CHECK(r.pairs[0].true_id == 1);
  }
}

TEST_CASE("matching is stable under permutations of the inferred list") {
  Rng rng = derive_stream(8, streams::kChain);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<EventPoint> truth, inferred;
    const std::size_t nt = 1 + rng.uniform_index(5);
    const std::size_t ni = 1 + rng.uniform_index(5);
    for (std::size_t i = 0; i < nt; ++i)
      truth.push_back({i, rng.uniform(0, 100), rng.uniform(0, 240)});
    for (std::size_t i = 0; i < ni; ++i)
      inferred.push_back({100 + i, rng.uniform(0, 100), rng.uniform(0, 240)});
    MatchReport base = match_events(truth, inferred);
    for (int shuffle = 0; shuffle < 5; ++shuffle) {
      for (std::size_t i = inferred.size(); i > 1; --i)
        std::swap(inferred[i - 1], inferred[rng.uniform_index(i)]);
      MatchReport again = match_events(truth, inferred);
      REQUIRE(again.n_matched == base.n_matched);
      for (std::size_t i = 0; i < base.pairs.size(); ++i) {
        CHECK(again.pairs[i].true_id == base.pairs[i].true_id);
        CHECK(again.pairs[i].inferred_id == base.pairs[i].inferred_id);
      }
    }
  }
}

TEST_CASE("greedy matcher agrees with the brute-force reference") {
  Rng rng = derive_stream(9, streams::kChain);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<EventPoint> truth, inferred;
    const std::size_t nt = rng.uniform_index(7);
    const std::size_t ni = rng.uniform_index(7);
    // cluster points so thresholds actually bite
    for (std::size_t i = 0; i < nt; ++i)
      truth.push_back({i, rng.uniform(0, 60), rng.uniform(0, 80)});
    for (std::size_t i = 0; i < ni; ++i)
      inferred.push_back({100 + i, rng.uniform(0, 60), rng.uniform(0, 80)});
    const auto expected = brute_force_match(truth, inferred, 12.0);
    const MatchReport got = match_events(truth, inferred, 12.0);
    REQUIRE(got.n_matched == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(got.pairs[i].true_id == expected[i].true_id);
      CHECK(got.pairs[i].inferred_id == expected[i].inferred_id);
      CHECK(got.pairs[i].distance == doctest::Approx(expected[i].distance).epsilon(1e-12));
    }
    CHECK(got.n_matched <= std::min(nt, ni));
    CHECK(got.precision >= 0.0);
    CHECK(got.precision <= 1.0);
    CHECK(got.recall >= 0.0);
    CHECK(got.recall <= 1.0);
  }
}

TEST_CASE("metric traces") {
  std::vector<EventPoint> truth{{1, 30, 40}, {2, 70, 90}};
  Snapshot exact{0, 1.0, 100, {}};
  for (const EventPoint& p : truth) {
    Event e;
    e.id = p.id + 100;
    e.x = p.x;
    e.t = p.t;
    exact.events.push_back(e);
  }
  Snapshot empty{1, 2.0, 200, {}};
  Snapshot single{2, 3.0, 300, {}};
  {
    Event e;
    e.id = 300;
    e.x = 33.0;
    e.t = 44.0;
    single.events.push_back(e);
  }
  const auto rows = metric_trace({exact, empty, single}, truth);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].precision == 1.0);
  CHECK(rows[0].recall == 1.0);
  CHECK(rows[0].location_error == 0.0);
  CHECK(rows[0].wall_seconds == 1.0);
  CHECK(rows[1].precision == 1.0);  // vacuous: nothing inferred
  CHECK(rows[1].recall == 0.0);
  CHECK(rows[2].precision == 1.0);
  CHECK(rows[2].recall == 0.5);
  CHECK(rows[2].location_error == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(metric_trace({}, truth), std::invalid_argument);
}

TEST_CASE("bootstrap on constant values collapses to a point") {
  BootstrapCI ci = bootstrap_ci(std::vector<double>(20, 3.5), 0.95, 1000, 1);
  CHECK(ci.mean == 3.5);
  CHECK(ci.lo == 3.5);
  CHECK(ci.hi == 3.5);
}

TEST_CASE("bootstrap of a two-point sample spans its support") {
  BootstrapCI ci = bootstrap_ci({0.0, 1.0}, 0.95, 10000, 2);
  CHECK(ci.mean == 0.5);
  CHECK(ci.lo == 0.0);
  CHECK(ci.hi == 1.0);
}

TEST_CASE("bootstrap is deterministic in its seed") {
  std::vector<double> values;
  Rng rng = derive_stream(10, streams::kChain);
  for (int i = 0; i < 40; ++i) values.push_back(rng.normal());
  BootstrapCI a = bootstrap_ci(values, 0.95, 5000, 7);
  BootstrapCI b = bootstrap_ci(values, 0.95, 5000, 7);
  CHECK(a.lo == b.lo);
  CHECK(a.hi == b.hi);
  BootstrapCI c = bootstrap_ci(values, 0.95, 5000, 8);
  CHECK(a.lo != c.lo);
  CHECK(std::abs(a.lo - c.lo) < 0.2);  // same data, so still close
}

TEST_CASE("bootstrap interval width shrinks like one over sqrt n") {
  Rng rng = derive_stream(11, streams::kChain);
  auto width_at = [&](std::size_t n) {
    double total = 0.0;
    const int reps = 30;
    for (int r = 0; r < reps; ++r) {
      std::vector<double> values(n);
      for (auto& v : values) v = rng.normal();
      BootstrapCI ci = bootstrap_ci(values, 0.95, 1500, 100 + static_cast<std::uint64_t>(r));
      total += ci.hi - ci.lo;
    }
    return total / reps;
  };
  const double w100 = width_at(100);
  const double w400 = width_at(400);
  CHECK(w100 / w400 > 1.6);  // ideal ratio 2
  CHECK(w100 / w400 < 2.6);
}

TEST_CASE("bootstrap coverage is near nominal") {
  // 600 repetitions of: draw 50 iid N(0,1), check whether the 95% CI of
  // the mean covers 0. Percentile bootstrap at n=50 undercovers a touch,
  // so the band is [0.90, 0.98].
  Rng rng = derive_stream(12, streams::kChain);
  int covered = 0;
  const int reps = 600;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> values(50);
    for (auto& v : values) v = rng.normal();
    BootstrapCI ci = bootstrap_ci(values, 0.95, 2000, 500 + static_cast<std::uint64_t>(r));
    if (ci.lo <= 0.0 && 0.0 <= ci.hi) ++covered;
  }
  const double coverage = static_cast<double>(covered) / reps;
  CHECK(coverage >= 0.90);
  CHECK(coverage <= 0.98);
}

TEST_CASE("bootstrap input validation") {
  CHECK_THROWS_AS(bootstrap_ci({}, 0.95, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(bootstrap_ci({1.0}, 1.5, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(bootstrap_ci({1.0}, 0.95, 0, 1), std::invalid_argument);
}
