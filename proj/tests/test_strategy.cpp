#include <doctest.h>

#include <algorithm>
#include <vector>

#include "crdrn/errors.hpp"
#include "crdrn/strategy.hpp"

using namespace crdrn;

TEST_CASE("surf selection follows availability times receivers") {
  SUBCASE("one channel is the only option") {
    double util[] = {0.7};
    int recv[] = {0};
    CHECK(select_channel_surf(util, recv) == 0);
  }
  SUBCASE("more receivers dominate at equal availability") {
    double util[] = {0.1, 0.1};
    int recv[] = {3, 1};
    CHECK(select_channel_surf(util, recv) == 0);
  }
  SUBCASE("weight 2.0 beats weight 1.8") {
    // (1 - 0.5) * 4 = 2.0 against (1 - 0.1) * 2 = 1.8.
    double util[] = {0.5, 0.1};
    int recv[] = {4, 2};
    CHECK(select_channel_surf(util, recv) == 0);
    auto w = compute_channel_weights(util, recv);
    CHECK(w[0].weight == doctest::Approx(2.0));
    CHECK(w[1].weight == doctest::Approx(1.8));
  }
  SUBCASE("ties break to the lowest channel id") {
    double util[] = {0.2, 0.2, 0.2};
    int recv[] = {2, 2, 2};
    CHECK(select_channel_surf(util, recv) == 0);
  }
  SUBCASE("no known receivers falls back to the freest channel") {
    double util[] = {0.6, 0.2, 0.9};
    int recv[] = {0, 0, 0};
    CHECK(select_channel_surf(util, recv) == 1);
  }
  SUBCASE("empty channel set is rejected") {
    CHECK_THROWS_AS(select_channel_surf({}, {}), std::invalid_argument);
  }
}

TEST_CASE("random selection is uniform and replayable") {
  SUBCASE("one channel") {
    RngStream rng(1);
    CHECK(select_channel_random(1, rng) == 0);
  }
  SUBCASE("frequency within 0.01 of 1/C over 1e5 draws") {
    RngStream rng(42);
    int counts[5] = {0};
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ++counts[select_channel_random(5, rng)];
    for (int c = 0; c < 5; ++c)
      CHECK(static_cast<double>(counts[c]) / draws == doctest::Approx(0.2).epsilon(0.05));
  }
  SUBCASE("identical streams give identical sequences") {
    RngStream a(7), b(7);
    for (int i = 0; i < 1000; ++i) CHECK(select_channel_random(9, a) == select_channel_random(9, b));
  }
  SUBCASE("empty channel set is rejected") {
    RngStream rng(1);
    CHECK_THROWS_AS(select_channel_random(0, rng), std::invalid_argument);
  }
}

namespace {

SpectrumObservation obs(int observer, int channel, double util, std::int64_t begin,
                        std::int64_t end) {
  SpectrumObservation o;
  o.observer_id = observer;
  o.channel_id = channel;
  o.utilization = util;
  o.window_begin = begin;
  o.window_end = end;
  return o;
}

}  // namespace

TEST_CASE("opportunity map starts unknown and averages busy time") {
  OpportunityMap map(3, 10, MapMode::Standalone);
  for (int c = 0; c < 3; ++c) {
    CHECK(map.occupancy_estimate(c) == 0.0);
    CHECK(map.sample_count(c) == 0);
    CHECK_FALSE(map.known(c));
  }
  // 30 busy slots out of 100 observed on channel 2.
  map.ingest(obs(10, 2, 0.5, 0, 39), NodeRole::Cmr);   // 20 busy / 40
  map.ingest(obs(10, 2, 1.0 / 6, 40, 99), NodeRole::Cmr);  // 10 busy / 60
  CHECK(map.occupancy_estimate(2) == doctest::Approx(0.30));
  CHECK(map.sample_count(2) == 100);
  CHECK(map.known(2));
  CHECK(map.last_updated(2) == 99);
}

TEST_CASE("map contents are independent of ingestion order") {
  std::vector<SpectrumObservation> batch = {
      obs(1, 0, 0.25, 0, 7),  obs(1, 1, 0.5, 0, 7),   obs(1, 0, 1.0, 8, 15),
      obs(1, 1, 0.125, 8, 15), obs(1, 0, 0.0, 16, 23), obs(1, 2, 0.75, 0, 3),
  };
  OpportunityMap forward = fluctuation_monitor_update(OpportunityMap(3, 1, MapMode::Coordinated),
                                                      batch, NodeRole::CrDevice);
  std::reverse(batch.begin(), batch.end());
  OpportunityMap reverse = fluctuation_monitor_update(OpportunityMap(3, 1, MapMode::Coordinated),
                                                      batch, NodeRole::CrDevice);
  for (int c = 0; c < 3; ++c) {
    CHECK(forward.occupancy_estimate(c) == reverse.occupancy_estimate(c));
    CHECK(forward.sample_count(c) == reverse.sample_count(c));
  }
}

TEST_CASE("standalone maps refuse CR-device feedback") {
  OpportunityMap map(2, 5, MapMode::Standalone);
  CHECK_NOTHROW(map.ingest(obs(5, 0, 0.5, 0, 9), NodeRole::Cmr));
  CHECK_THROWS_AS(map.ingest(obs(8, 0, 0.5, 0, 9), NodeRole::CrDevice), ModeViolation);
  OpportunityMap coord(2, 5, MapMode::Coordinated);
  CHECK_NOTHROW(coord.ingest(obs(8, 0, 0.5, 0, 9), NodeRole::CrDevice));
}

TEST_CASE("channel assignment balances load over eligible channels") {
  SUBCASE("single CR, single eligible channel") {
    OpportunityMap map(2, 0, MapMode::Standalone);
    map.ingest(obs(0, 0, 1.0, 0, 9), NodeRole::Cmr);  // channel 0 saturated
    map.ingest(obs(0, 1, 0.1, 0, 9), NodeRole::Cmr);
    int crs[] = {7};
    auto assigned = cmr_assign_channels(map, crs, 0.5);
    REQUIRE(assigned.has_value());
    CHECK(*assigned == std::vector<std::pair<int, int>>{{7, 1}});
  }
  SUBCASE("three CRs over two eligible channels load (2,1), freer first") {
    OpportunityMap map(3, 0, MapMode::Standalone);
    map.ingest(obs(0, 0, 0.3, 0, 9), NodeRole::Cmr);
    map.ingest(obs(0, 1, 0.1, 0, 9), NodeRole::Cmr);
    map.ingest(obs(0, 2, 0.9, 0, 9), NodeRole::Cmr);
    int crs[] = {4, 5, 6};
    auto assigned = cmr_assign_channels(map, crs, 0.5);
    REQUIRE(assigned.has_value());
    // Oracle: exhaustive check that no assignment over {0,1} has a smaller
    // maximum per-channel load than 2.
    int best_max = 3;
    for (int mask = 0; mask < 8; ++mask) {
      int load0 = 0, load1 = 0;
      for (int i = 0; i < 3; ++i) (mask >> i & 1) ? ++load1 : ++load0;
      best_max = std::min(best_max, std::max(load0, load1));
    }
    CHECK(best_max == 2);
    int load0 = 0, load1 = 0;
    for (auto [cr, ch] : *assigned) {
      CHECK((ch == 0 || ch == 1));
      (ch == 1) ? ++load1 : ++load0;
    }
    CHECK(std::max(load0, load1) == best_max);
    CHECK(load1 == 2);  // channel 1 is freer, round-robin starts there
  }
  SUBCASE("saturated spectrum yields no assignment") {
    OpportunityMap map(2, 0, MapMode::Standalone);
    map.ingest(obs(0, 0, 0.9, 0, 9), NodeRole::Cmr);
    map.ingest(obs(0, 1, 0.8, 0, 9), NodeRole::Cmr);
    int crs[] = {1, 2};
    CHECK_FALSE(cmr_assign_channels(map, crs, 0.5).has_value());
  }
}

TEST_CASE("assignment load spread never exceeds one") {
  RngStream rng(31337);
  for (int i = 0; i < 500; ++i) {
    int channels = 1 + static_cast<int>(rng.next_below(6));
    OpportunityMap map(channels, 0, MapMode::Standalone);
    for (int c = 0; c < channels; ++c) {
      std::int64_t busy = static_cast<std::int64_t>(rng.next_below(11));
      map.ingest(obs(0, c, busy / 10.0, 0, 9), NodeRole::Cmr);
    }
    std::vector<int> crs(1 + rng.next_below(9));
    for (size_t j = 0; j < crs.size(); ++j) crs[j] = static_cast<int>(j + 10);
    auto assigned = cmr_assign_channels(map, crs, 0.5);
    if (!assigned) continue;
    std::vector<int> load(channels, 0);
    int eligible = 0;
    for (int c = 0; c < channels; ++c)
      if (map.occupancy_estimate(c) < 0.5) ++eligible;
    for (auto [cr, ch] : *assigned) {
      REQUIRE(map.occupancy_estimate(ch) < 0.5);
      ++load[ch];
    }
    int max_load = 0, min_load = static_cast<int>(crs.size());
    for (int c = 0; c < channels; ++c) {
      if (map.occupancy_estimate(c) >= 0.5) continue;
      max_load = std::max(max_load, load[c]);
      min_load = std::min(min_load, load[c]);
    }
    REQUIRE(eligible > 0);
    REQUIRE(max_load - min_load <= 1);
  }
}

TEST_CASE("estimates converge to the true occupancy") {
  // Feed per-slot single-slot observations with Bernoulli busy labels driven
  // by our own counting; with exact integer totals the estimate equals the
  // empirical frequency.
  for (double p : {0.1, 0.5, 0.9}) {
    OpportunityMap map(1, 0, MapMode::Standalone);
    long busy = 0;
    const int slots = 10000;
    for (int t = 0; t < slots; ++t) {
      bool b = u01(hash4(12345, stream::kPrActivity, t, 0)) < p;
      busy += b;
      map.ingest(obs(0, 0, b ? 1.0 : 0.0, t, t), NodeRole::Cmr);
    }
    CHECK(map.occupancy_estimate(0) == doctest::Approx(static_cast<double>(busy) / slots));
    CHECK(std::abs(map.occupancy_estimate(0) - p) <= 0.02);
  }
}
