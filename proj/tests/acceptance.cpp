// Acceptance gate: runs every criterion end to end and prints one PASS/FAIL
// line each. Exits with the number of failed criteria.
//
//   [1] delivery-ratio trends of the four strategy/channel series
//   [2] terminal-state equivalence against the brute-force simulator
//   [3] randomized property suites (>= 1000 cases each)
//   [4] opportunity-map estimator convergence
//   [5] collision-free single-hop polling
//   [6] uniformity of random channel selection

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "crdrn/config_io.hpp"
#include "crdrn/engine.hpp"
#include "crdrn/replay.hpp"
#include "crdrn/rng.hpp"
#include "oracle_cases.hpp"

using namespace crdrn;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%d] %-4s %s (%s)\n", criterion, pass ? "PASS" : "FAIL", what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double series_mean(ExperimentConfig cfg, Strategy strategy, int channels) {
  cfg.strategy = strategy;
  cfg.channels = channels;
  double acc = 0;
  for (int m = 1; m <= 10; ++m) {
    cfg.cmr_count = m;
    acc += run(cfg).cmr_neighbor().mean;
  }
  return acc / 10.0;
}

void criterion_1(const std::string& config_path) {
  ExperimentConfig cfg = load_config_file(config_path);
  validate(cfg);
  double surf5 = series_mean(cfg, Strategy::Surf, 5);
  double surf15 = series_mean(cfg, Strategy::Surf, 15);
  double rd5 = series_mean(cfg, Strategy::Rd, 5);
  double rd15 = series_mean(cfg, Strategy::Rd, 15);
  char detail[256];
  std::snprintf(detail, sizeof(detail), "surf5=%.3f surf15=%.3f rd5=%.3f rd15=%.3f", surf5,
                surf15, rd5, rd15);
  bool pass = surf15 - rd15 >= 0.25          // (a) surf wins at 15 channels
              && surf15 >= surf5             // (b)
              && rd15 < rd5                  // (c)
              && std::abs(surf5 - 0.65) <= 0.15 && std::abs(surf15 - 0.80) <= 0.15
              && std::abs(rd5 - 0.65) <= 0.15 && std::abs(rd15 - 0.40) <= 0.15;
  report(1, pass, "delivery-ratio trend over cmr_count 1..10, 30 replications", detail);
}

void criterion_2() {
  int mismatches = 0;
  std::string first;
  const int cases = 500;
  for (std::uint64_t seed = 0; seed < cases; ++seed) {
    std::string diff = oracle_cases::compare_case(seed);
    if (!diff.empty()) {
      if (first.empty()) first = diff;
      ++mismatches;
    }
  }
  report(2, mismatches == 0, "brute-force oracle equivalence on 500 tiny scenarios",
         mismatches == 0 ? "0 mismatches" : first);
}

// -- criterion 3: property suites ------------------------------------------

struct SmallRun {
  Deployment deployment;
  std::vector<Event> events;
  std::vector<Message> messages;
  RunMetrics::Point point;
  std::vector<double> occupancy;
  std::uint64_t seed;
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

void criterion_3() {
  RngStream rng(20240817);
  std::vector<SmallRun> pool;
  while (pool.size() < 1000) {
    ExperimentConfig cfg = random_small_config(rng);
    std::uint64_t rep_seed = replication_seed(cfg.seed, 0);
    ExperimentConfig c0 = cfg;
    c0.seed = rep_seed;
    Deployment d = deploy_random(deployment_config(c0));
    SimWorld world(d, expanded_occupancy(c0), sim_options(c0));
    world.set_message_pipeline(c0.messages, c0.inject_interval);
    world.run_until_done(c0.slots);
    pool.push_back({std::move(d), world.events(), world.messages(),
                    run_single(cfg, rep_seed), expanded_occupancy(c0), rep_seed});
  }

  long ttl_bad = 0, dup_bad = 0, pr_bad = 0, order_bad = 0;
  for (const SmallRun& r : pool) {
    std::map<std::pair<int, int>, int> held;
    std::set<std::pair<int, int>> sent;
    std::vector<ChannelModel> ch(r.occupancy.size());
    for (size_t c = 0; c < ch.size(); ++c) ch[c] = {static_cast<int>(c), r.occupancy[c], 0};
    std::vector<PrTransmitter> prs;
    for (const Node& n : r.deployment.nodes())
      if (n.role == NodeRole::PrDevice) prs.push_back({n.node_id, n.x, n.y, n.range, n.pr_channel});
    SpectrumEnvironment env(ch, prs, r.seed);
    for (const Event& e : r.events) {
      if (e.kind == EventKind::Inject || e.kind == EventKind::Pickup || e.kind == EventKind::Rx)
        held[{e.msg, e.node}] = e.ttl;
      if (e.kind == EventKind::Tx) {
        if (!held.count({e.msg, e.node}) || held[{e.msg, e.node}] != e.ttl || e.ttl < 1) ++ttl_bad;
        if (!sent.insert({e.msg, e.node}).second) ++dup_bad;
      }
      if (e.kind == EventKind::Rx) {
        const Node& recv = r.deployment.node(e.node);
        if (env.channel_busy(e.channel, e.slot, recv.x, recv.y, recv.range)) ++pr_bad;
      }
    }
    if (r.point.delivery_ratio_portal > r.point.delivery_ratio_cmr + 1e-12 ||
        r.point.delivery_ratio_cmr > r.point.delivery_ratio_cmr_neighbor + 1e-12)
      ++order_bad;
  }
  report(3, ttl_bad == 0, "property: ttl safety over 1000 random runs",
         std::to_string(ttl_bad) + " violations");
  report(3, dup_bad == 0, "property: duplicate suppression over 1000 random runs",
         std::to_string(dup_bad) + " violations");
  report(3, pr_bad == 0, "property: PR-priority reception rule over 1000 random runs",
         std::to_string(pr_bad) + " violations");
  report(3, order_bad == 0, "property: metric ordering portal <= cmr <= neighborhood",
         std::to_string(order_bad) + " violations");

  RngStream srng(555);
  long argmax_bad = 0, scale_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    int c = 1 + static_cast<int>(srng.next_below(16));
    std::vector<double> util(c);
    std::vector<int> recv(c);
    for (int j = 0; j < c; ++j) {
      util[j] = srng.next_double();
      recv[j] = static_cast<int>(srng.next_below(6));
    }
    int picked = select_channel_surf(util, recv);
    auto weights = compute_channel_weights(util, recv);
    bool any_positive = false;
    for (const auto& w : weights)
      if (w.weight > 0) any_positive = true;
    for (const auto& w : weights) {
      if (any_positive && weights[picked].weight < w.weight) ++argmax_bad;
      if (!any_positive && weights[picked].availability < w.availability) ++argmax_bad;
    }
    std::vector<int> scaled(recv);
    int k = 2 + static_cast<int>(srng.next_below(5));
    for (int& v : scaled) v *= k;
    if (select_channel_surf(util, scaled) != picked) ++scale_bad;
  }
  report(3, argmax_bad == 0, "property: surf argmax correctness, 1000 cases",
         std::to_string(argmax_bad) + " violations");
  report(3, scale_bad == 0, "property: surf receiver-scale invariance, 1000 cases",
         std::to_string(scale_bad) + " violations");

  RngStream mrng(777);
  long map_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    int channels = 1 + static_cast<int>(mrng.next_below(4));
    int n = 1 + static_cast<int>(mrng.next_below(12));
    std::vector<SpectrumObservation> batch;
    for (int j = 0; j < n; ++j) {
      SpectrumObservation o;
      o.observer_id = 1;
      o.channel_id = static_cast<int>(mrng.next_below(channels));
      std::int64_t len = 1 + static_cast<int>(mrng.next_below(20));
      o.window_begin = static_cast<std::int64_t>(mrng.next_below(100));
      o.window_end = o.window_begin + len - 1;
      o.utilization = static_cast<double>(mrng.next_below(len + 1)) / len;
      batch.push_back(o);
    }
    OpportunityMap a = fluctuation_monitor_update(OpportunityMap(channels, 1, MapMode::Coordinated),
                                                  batch, NodeRole::CrDevice);
    for (size_t j = batch.size(); j > 1; --j) std::swap(batch[j - 1], batch[mrng.next_below(j)]);
    OpportunityMap b = fluctuation_monitor_update(OpportunityMap(channels, 1, MapMode::Coordinated),
                                                  batch, NodeRole::CrDevice);
    for (int c = 0; c < channels; ++c)
      if (a.occupancy_estimate(c) != b.occupancy_estimate(c) ||
          a.sample_count(c) != b.sample_count(c))
        ++map_bad;
  }
  report(3, map_bad == 0, "property: opportunity-map order independence, 1000 cases",
         std::to_string(map_bad) + " violations");

  RngStream drng(888);
  long deploy_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    DeploymentConfig cfg;
    cfg.area_width = cfg.area_height = 300 + drng.next_double() * 500;
    cfg.cr_count = static_cast<int>(drng.next_below(30));
    cfg.pr_count = static_cast<int>(drng.next_below(10));
    cfg.cmr_count = static_cast<int>(drng.next_below(5));
    cfg.cr_range = cfg.pr_range = 50 + drng.next_double() * 100;
    cfg.cmr_range = 0.45 * cfg.area_width;
    cfg.portal_range = 0.5 * cfg.area_width;
    cfg.channels = 1 + static_cast<int>(drng.next_below(5));
    cfg.seed = drng.next_u64();
    if (serialize(deploy_random(cfg)) != serialize(deploy_random(cfg))) ++deploy_bad;
  }
  report(3, deploy_bad == 0, "property: deployment determinism, 1000 cases",
         std::to_string(deploy_bad) + " violations");

  RngStream crng(999);
  long csv_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    ExperimentConfig cfg = random_small_config(crng);
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
    SweepRow ra[] = {row}, rb[] = {again};
    if (metrics_csv(ra) != metrics_csv(rb)) ++csv_bad;
  }
  report(3, csv_bad == 0, "property: csv byte-determinism under fixed seed, 1000 cases",
         std::to_string(csv_bad) + " violations");
}

void criterion_4() {
  bool pass = true;
  char detail[160];
  std::string all;
  for (double p : {0.1, 0.5, 0.9}) {
    SpectrumEnvironment env({{0, p, 2400.0}}, {{1, 0, 0, 100, 0}}, 97531);
    OpportunityMap map(1, 2, MapMode::Standalone);
    for (int t = 0; t < 10000; ++t)
      for (const SpectrumObservation& o : env.sense_spectrum(2, 10, 0, 100, t, 1))
        map.ingest(o, NodeRole::Cmr);
    double err = std::abs(map.occupancy_estimate(0) - p);
    std::snprintf(detail, sizeof(detail), "p=%.1f err=%.4f ", p, err);
    all += detail;
    if (err > 0.02) pass = false;
  }
  report(4, pass, "estimator within 0.02 of occupancy after 1e4 slots", all);
}

void criterion_5() {
  ExperimentConfig cfg;
  cfg.mode = SimMode::SingleHop;
  cfg.channels = 4;
  cfg.cr_count = 24;
  cfg.pr_count = 6;
  cfg.cmr_count = 4;
  cfg.area_width = cfg.area_height = 500;
  cfg.cr_range = cfg.pr_range = cfg.cmr_range = 150;
  cfg.portal_range = 200;
  cfg.cmr_radios = 3;
  cfg.occupancy_prob = {0.3};
  cfg.slots = 10000;
  cfg.warmup_slots = 40;
  cfg.messages = 400;
  cfg.inject_interval = 20;
  cfg.pr_data_rate = 0.2;
  cfg.seed = 13;
  cfg.replications = 1;
  ExperimentConfig c0 = cfg;
  c0.seed = replication_seed(cfg.seed, 0);
  Deployment d = deploy_random(deployment_config(c0));
  SimWorld world(d, expanded_occupancy(c0), sim_options(c0));
  world.set_message_pipeline(c0.messages, c0.inject_interval);
  world.run_for(c0.slots);

  // Exact recount from the event log: no two CR transmissions may share a
  // slot and channel at all, and no reception was dropped by collision.
  std::set<std::pair<std::int64_t, int>> seen;
  long tx_count = 0, shared = 0;
  for (const Event& e : world.events()) {
    if (e.kind != EventKind::Tx) continue;
    ++tx_count;
    if (!seen.insert({e.slot, e.channel}).second) ++shared;
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail), "%ld transmissions, %ld shared slot+channel, %lld drops",
                tx_count, shared, static_cast<long long>(world.collision_drop_count()));
  report(5, tx_count > 0 && shared == 0 && world.collision_drop_count() == 0,
         "zero CR-CR collisions in a 1e4-slot single-hop run", detail);
}

void criterion_6() {
  RngStream rng(2024);
  const int draws = 100000;
  int counts[5] = {0};
  for (int i = 0; i < draws; ++i) ++counts[select_channel_random(5, rng)];
  bool pass = true;
  std::string all;
  char detail[64];
  for (int c = 0; c < 5; ++c) {
    double f = static_cast<double>(counts[c]) / draws;
    std::snprintf(detail, sizeof(detail), "%.4f ", f);
    all += detail;
    if (std::abs(f - 0.2) > 0.01) pass = false;
  }
  report(6, pass, "random selection frequency within 0.01 of 1/5 over 1e5 draws", all);
}

}  // namespace

int main(int argc, char** argv) {
  std::string config_path = argc > 1 ? argv[1] : "configs/fig12.cfg";
  criterion_1(config_path);
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  std::printf("%s: %d criterion failure(s)\n", g_failures == 0 ? "ACCEPTED" : "REJECTED",
              g_failures);
  return g_failures;
}
