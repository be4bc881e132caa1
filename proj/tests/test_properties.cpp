#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "crdrn/engine.hpp"
#include "crdrn/errors.hpp"
#include "crdrn/rng.hpp"
#include "crdrn/strategy.hpp"

using namespace crdrn;

// Randomized property suites. Each suite draws at least 1000 cases from a
// seeded generator; the slotted-dynamics suites share one pool of small
// random runs.

namespace {

struct SmallRun {
  Deployment deployment;
  std::vector<Event> events;
  std::vector<Message> messages;
  RunMetrics::Point point;
  std::vector<double> occupancy;
  std::uint64_t seed;
  int ttl_init;
};

ExperimentConfig random_small_config(RngStream& rng) {
  ExperimentConfig cfg;
  cfg.channels = 1 + static_cast<int>(rng.next_below(3));
  cfg.cr_count = 4 + static_cast<int>(rng.next_below(8));
  cfg.pr_count = static_cast<int>(rng.next_below(4));
  cfg.cmr_count = static_cast<int>(rng.next_below(3));
  cfg.area_width = cfg.area_height = 200 + rng.next_double() * 200;
  cfg.cr_range = cfg.pr_range = cfg.cmr_range = 60 + rng.next_double() * 80;
  cfg.portal_range = cfg.cmr_range * 1.5;
  cfg.occupancy_prob = {rng.next_double()};
  cfg.strategy = rng.next_below(2) ? Strategy::Surf : Strategy::Rd;
  cfg.ttl_init = 1 + static_cast<int>(rng.next_below(5));
  cfg.slots = 40 + static_cast<int>(rng.next_below(30));
  cfg.warmup_slots = 4 + static_cast<int>(rng.next_below(8));
  cfg.messages = 1 + static_cast<int>(rng.next_below(4));
  cfg.inject_interval = 1 + static_cast<int>(rng.next_below(5));
  cfg.pr_data_rate = 0.3 + rng.next_double() * 0.7;
  cfg.holdoff_max = static_cast<int>(rng.next_below(3));
  cfg.replications = 1;
  cfg.seed = rng.next_u64();
  return cfg;
}

const std::vector<SmallRun>& run_pool() {
  static std::vector<SmallRun> pool = [] {
    std::vector<SmallRun> out;
    RngStream rng(20240817);
    while (out.size() < 1000) {
      ExperimentConfig cfg = random_small_config(rng);
      std::uint64_t rep_seed = replication_seed(cfg.seed, 0);
      ExperimentConfig c0 = cfg;
      c0.seed = rep_seed;
      Deployment d = deploy_random(deployment_config(c0));
      SimWorld world(d, expanded_occupancy(c0), sim_options(c0));
      world.set_message_pipeline(c0.messages, c0.inject_interval);
      world.run_until_done(c0.slots);
      RunMetrics::Point p = run_single(cfg, rep_seed);
      out.push_back({std::move(d), world.events(), world.messages(), p,
                     expanded_occupancy(c0), rep_seed, c0.ttl_init});
    }
    return out;
  }();
  return pool;
}

}  // namespace

TEST_CASE("property: ttl never increases along any hop chain") {
  int checked = 0;
  for (const SmallRun& r : run_pool()) {
    std::map<std::pair<int, int>, int> held;  // (msg, node) -> ttl
    for (const Event& e : r.events) {
      if (e.kind == EventKind::Inject || e.kind == EventKind::Pickup ||
          e.kind == EventKind::Rx)
        held[{e.msg, e.node}] = e.ttl;
      if (e.kind == EventKind::Tx) {
        ++checked;
        REQUIRE(held.count({e.msg, e.node}) == 1);
        REQUIRE(held[{e.msg, e.node}] == e.ttl);
        REQUIRE(e.ttl >= 1);
      }
      if (e.kind == EventKind::Rx) {
        // Matched against its transmission: some in-range TX of this message
        // in this slot on this channel sits exactly one hop above.
        bool matched = false;
        const Node& recv = r.deployment.node(e.node);
        for (const Event& tx : r.events)
          if (tx.kind == EventKind::Tx && tx.slot == e.slot && tx.msg == e.msg &&
              tx.channel == e.channel && in_range(recv, r.deployment.node(tx.node)) &&
              tx.ttl == e.ttl + 1)
            matched = true;
        REQUIRE(matched);
      }
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("property: each node transmits a message at most once") {
  for (const SmallRun& r : run_pool()) {
    std::set<std::pair<int, int>> seen;
    for (const Event& e : r.events) {
      if (e.kind != EventKind::Tx) continue;
      REQUIRE(seen.insert({e.msg, e.node}).second);
    }
  }
}

TEST_CASE("property: no reception succeeds while the channel is PR-busy") {
  long receptions = 0;
  for (const SmallRun& r : run_pool()) {
    std::vector<ChannelModel> ch(r.occupancy.size());
    for (size_t c = 0; c < ch.size(); ++c)
      ch[c] = {static_cast<int>(c), r.occupancy[c], 0};
    std::vector<PrTransmitter> prs;
    for (const Node& n : r.deployment.nodes())
      if (n.role == NodeRole::PrDevice) prs.push_back({n.node_id, n.x, n.y, n.range, n.pr_channel});
    SpectrumEnvironment env(ch, prs, r.seed);
    for (const Event& e : r.events) {
      if (e.kind != EventKind::Rx) continue;
      ++receptions;
      const Node& recv = r.deployment.node(e.node);
      REQUIRE_FALSE(env.channel_busy(e.channel, e.slot, recv.x, recv.y, recv.range));
    }
  }
  CHECK(receptions > 1000);
}

TEST_CASE("property: delivery ratios are ordered portal <= cmr <= neighborhood") {
  for (const SmallRun& r : run_pool()) {
    REQUIRE(r.point.delivery_ratio_portal <= r.point.delivery_ratio_cmr + 1e-12);
    REQUIRE(r.point.delivery_ratio_cmr <= r.point.delivery_ratio_cmr_neighbor + 1e-12);
  }
}

TEST_CASE("property: every injected message reaches exactly one terminal state") {
  for (const SmallRun& r : run_pool()) {
    int injected = 0, terminal = 0;
    for (const Message& m : r.messages) {
      if (m.injected) {
        ++injected;
        REQUIRE(m.terminal != Terminal::None);
      } else {
        REQUIRE(m.terminal == Terminal::None);
      }
    }
    for (const Event& e : r.events)
      if (e.kind == EventKind::TermPortal || e.kind == EventKind::TermStuck ||
          e.kind == EventKind::TermDead)
        ++terminal;
    REQUIRE(terminal == injected);
  }
}

TEST_CASE("property: surf selection is an argmax and receiver-scale invariant") {
  RngStream rng(555);
  for (int i = 0; i < 1000; ++i) {
    int c = 1 + static_cast<int>(rng.next_below(16));
    std::vector<double> util(c);
    std::vector<int> recv(c);
    for (int j = 0; j < c; ++j) {
      util[j] = rng.next_double();
      recv[j] = static_cast<int>(rng.next_below(6));
    }
    int picked = select_channel_surf(util, recv);
    auto weights = compute_channel_weights(util, recv);
    bool any_positive = false;
    for (const auto& w : weights)
      if (w.weight > 0) any_positive = true;
    for (const auto& w : weights) {
      if (any_positive)
        REQUIRE(weights[picked].weight >= w.weight);  // linear-scan argmax
      else
        REQUIRE(weights[picked].availability >= w.availability);
    }
    // Scaling all receiver counts by a positive constant moves nothing.
    int k = 2 + static_cast<int>(rng.next_below(5));
    std::vector<int> scaled(recv);
    for (int& v : scaled) v *= k;
    REQUIRE(select_channel_surf(util, scaled) == picked);
  }
}

TEST_CASE("property: opportunity maps ignore ingestion order") {
  RngStream rng(777);
  for (int i = 0; i < 1000; ++i) {
    int channels = 1 + static_cast<int>(rng.next_below(4));
    int n = 1 + static_cast<int>(rng.next_below(12));
    std::vector<SpectrumObservation> batch;
    for (int j = 0; j < n; ++j) {
      SpectrumObservation o;
      o.observer_id = 1;
      o.channel_id = static_cast<int>(rng.next_below(channels));
      std::int64_t len = 1 + static_cast<int>(rng.next_below(20));
      o.window_begin = static_cast<std::int64_t>(rng.next_below(100));
      o.window_end = o.window_begin + len - 1;
      o.utilization = static_cast<double>(rng.next_below(len + 1)) / len;
      batch.push_back(o);
    }
    OpportunityMap a = fluctuation_monitor_update(OpportunityMap(channels, 1, MapMode::Coordinated),
                                                  batch, NodeRole::CrDevice);
    // Deterministic shuffle.
    for (size_t j = batch.size(); j > 1; --j)
      std::swap(batch[j - 1], batch[rng.next_below(j)]);
    OpportunityMap b = fluctuation_monitor_update(OpportunityMap(channels, 1, MapMode::Coordinated),
                                                  batch, NodeRole::CrDevice);
    for (int ch = 0; ch < channels; ++ch) {
      REQUIRE(a.occupancy_estimate(ch) == b.occupancy_estimate(ch));
      REQUIRE(a.sample_count(ch) == b.sample_count(ch));
    }
  }
}

TEST_CASE("property: deployments are deterministic under a fixed seed") {
  RngStream rng(888);
  for (int i = 0; i < 1000; ++i) {
    DeploymentConfig cfg;
    cfg.area_width = cfg.area_height = 300 + rng.next_double() * 500;
    cfg.cr_count = static_cast<int>(rng.next_below(30));
    cfg.pr_count = static_cast<int>(rng.next_below(10));
    cfg.cmr_count = static_cast<int>(rng.next_below(5));
    cfg.cr_range = cfg.pr_range = 50 + rng.next_double() * 100;
    cfg.cmr_range = 0.45 * cfg.area_width;
    cfg.portal_range = 0.5 * cfg.area_width;
    cfg.channels = 1 + static_cast<int>(rng.next_below(5));
    cfg.seed = rng.next_u64();
    REQUIRE(serialize(deploy_random(cfg)) == serialize(deploy_random(cfg)));
  }
}

TEST_CASE("property: metric tables are byte-deterministic under a fixed seed") {
  RngStream rng(999);
  for (int i = 0; i < 1000; ++i) {
    ExperimentConfig cfg = random_small_config(rng);
    cfg.slots = 30;
    cfg.messages = 2;
    SweepRow row;
    row.axis = "none";
    row.strategy = cfg.strategy;
    row.channels = cfg.channels;
    row.replications = 1;
    row.metrics.per_replication.push_back(run_single(cfg, replication_seed(cfg.seed, 0)));
    SweepRow again = row;
    again.metrics.per_replication[0] = run_single(cfg, replication_seed(cfg.seed, 0));
    SweepRow rows_a[] = {row};
    SweepRow rows_b[] = {again};
    REQUIRE(metrics_csv(rows_a) == metrics_csv(rows_b));
  }
}
