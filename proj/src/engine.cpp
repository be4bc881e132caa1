#include "crdrn/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <set>
#include <sstream>
#include <thread>

#include "crdrn/errors.hpp"
#include "crdrn/rng.hpp"

namespace crdrn {

void validate(const ExperimentConfig& cfg) {
  if (cfg.channels < 1) throw ConfigError("channels", "must be >= 1");
  if (cfg.cr_count < 0) throw ConfigError("cr_count", "must be >= 0");
  if (cfg.pr_count < 0) throw ConfigError("pr_count", "must be >= 0");
  if (cfg.cmr_count < 0) throw ConfigError("cmr_count", "must be >= 0");
  if (cfg.area_width <= 0) throw ConfigError("area_width", "must be positive");
  if (cfg.area_height <= 0) throw ConfigError("area_height", "must be positive");
  if (cfg.cr_range <= 0) throw ConfigError("cr_range", "must be positive");
  if (cfg.pr_range <= 0) throw ConfigError("pr_range", "must be positive");
  if (cfg.cmr_range <= 0) throw ConfigError("cmr_range", "must be positive");
  if (cfg.portal_range <= 0) throw ConfigError("portal_range", "must be positive");
  if (cfg.cr_radios < 1) throw ConfigError("cr_radios", "must be >= 1");
  if (cfg.cmr_radios < 2) throw ConfigError("cmr_radios", "must be >= 2");
  if (cfg.occupancy_prob.empty()) throw ConfigError("occupancy_prob", "must not be empty");
  if (cfg.occupancy_prob.size() != 1 &&
      cfg.occupancy_prob.size() != static_cast<size_t>(cfg.channels))
    throw ConfigError("occupancy_prob", "need one value or one per channel");
  for (double p : cfg.occupancy_prob)
    if (p < 0 || p > 1) throw ConfigError("occupancy_prob", "values must be in [0,1]");
  if (cfg.ttl_init < 1) throw ConfigError("ttl_init", "must be >= 1");
  if (cfg.slots < 1) throw ConfigError("slots", "must be >= 1");
  if (cfg.warmup_slots < 0) throw ConfigError("warmup_slots", "must be >= 0");
  if (cfg.warmup_slots >= cfg.slots) throw ConfigError("warmup_slots", "must be < slots");
  if (cfg.messages < 0) throw ConfigError("messages", "must be >= 0");
  if (cfg.inject_interval < 1) throw ConfigError("inject_interval", "must be >= 1");
  if (cfg.pr_data_rate < 0 || cfg.pr_data_rate > 1)
    throw ConfigError("pr_data_rate", "must be in [0,1]");
  if (cfg.beacon_period < 1) throw ConfigError("beacon_period", "must be >= 1");
  if (cfg.scan_dwell < 1) throw ConfigError("scan_dwell", "must be >= 1");
  if (cfg.sense_window < 1) throw ConfigError("sense_window", "must be >= 1");
  if (cfg.busy_threshold <= 0 || cfg.busy_threshold > 1)
    throw ConfigError("busy_threshold", "must be in (0,1]");
  if (cfg.assign_period < 1) throw ConfigError("assign_period", "must be >= 1");
  if (cfg.holdoff_max < 0) throw ConfigError("holdoff_max", "must be >= 0");
  if (cfg.queue_cap < 1) throw ConfigError("queue_cap", "must be >= 1");
  if (cfg.cr_speed < 0) throw ConfigError("cr_speed", "must be >= 0");
  if (cfg.replications < 1) throw ConfigError("replications", "must be >= 1");
}

std::vector<double> expanded_occupancy(const ExperimentConfig& cfg) {
  if (cfg.occupancy_prob.size() == 1)
    return std::vector<double>(cfg.channels, cfg.occupancy_prob[0]);
  return cfg.occupancy_prob;
}

DeploymentConfig deployment_config(const ExperimentConfig& cfg) {
  DeploymentConfig d;
  d.area_width = cfg.area_width;
  d.area_height = cfg.area_height;
  d.cr_count = cfg.cr_count;
  d.pr_count = cfg.pr_count;
  d.cmr_count = cfg.cmr_count;
  d.cr_range = cfg.cr_range;
  d.pr_range = cfg.pr_range;
  d.cmr_range = cfg.cmr_range;
  d.portal_range = cfg.portal_range;
  d.cr_radios = cfg.cr_radios;
  d.cmr_radios = cfg.cmr_radios;
  d.channels = cfg.channels;
  d.mobile_crs = cfg.mobile_crs;
  d.seed = cfg.seed;
  return d;
}

SimOptions sim_options(const ExperimentConfig& cfg) {
  SimOptions o;
  o.strategy = cfg.strategy;
  o.mode = cfg.mode;
  o.map_mode = cfg.cmr_map_mode;
  o.ttl_init = cfg.ttl_init;
  o.sense_window = cfg.sense_window;
  o.scan_dwell = cfg.scan_dwell;
  o.beacon_period = cfg.beacon_period;
  o.pr_data_rate = cfg.pr_data_rate;
  o.holdoff_max = cfg.holdoff_max;
  o.busy_threshold = cfg.busy_threshold;
  o.assign_period = cfg.assign_period;
  o.queue_cap = cfg.queue_cap;
  o.warmup_slots = cfg.warmup_slots;
  o.cr_speed = cfg.cr_speed;
  o.seed = cfg.seed;
  return o;
}

namespace {

RunMetrics::Stat stat_over(const std::vector<RunMetrics::Point>& pts,
                           double (*get)(const RunMetrics::Point&)) {
  RunMetrics::Stat s;
  if (pts.empty()) return s;
  double sum = 0;
  for (const auto& p : pts) sum += get(p);
  s.mean = sum / pts.size();
  if (pts.size() > 1) {
    double sq = 0;
    for (const auto& p : pts) sq += (get(p) - s.mean) * (get(p) - s.mean);
    s.sd = std::sqrt(sq / (pts.size() - 1));
  }
  return s;
}

}  // namespace

RunMetrics::Stat RunMetrics::cmr_neighbor() const {
  return stat_over(per_replication,
                   [](const Point& p) { return p.delivery_ratio_cmr_neighbor; });
}
RunMetrics::Stat RunMetrics::cmr() const {
  return stat_over(per_replication, [](const Point& p) { return p.delivery_ratio_cmr; });
}
RunMetrics::Stat RunMetrics::portal() const {
  return stat_over(per_replication, [](const Point& p) { return p.delivery_ratio_portal; });
}
RunMetrics::Stat RunMetrics::hops() const {
  return stat_over(per_replication, [](const Point& p) { return p.mean_hops_to_cmr; });
}
RunMetrics::Stat RunMetrics::collisions() const {
  return stat_over(per_replication,
                   [](const Point& p) { return static_cast<double>(p.collision_count); });
}

RunMetrics::Point run_single(const ExperimentConfig& cfg, std::uint64_t rep_seed) {
  ExperimentConfig c = cfg;
  c.seed = rep_seed;
  Deployment d = deploy_random(deployment_config(c));
  SimWorld world(std::move(d), expanded_occupancy(c), sim_options(c));
  world.set_message_pipeline(c.messages, c.inject_interval);
  world.run_until_done(c.slots);

  RunMetrics::Point p;
  p.collision_count = world.collision_drop_count();
  int reached_nb = 0, reached_cmr = 0, reached_portal = 0;
  double hop_sum = 0;
  for (const Message& m : world.messages()) {
    if (!m.injected) continue;
    ++p.injected;
    if (m.reached_cmr_neighbor) ++reached_nb;
    if (m.reached_cmr) {
      ++reached_cmr;
      hop_sum += m.hops_to_cmr;
    }
    if (m.reached_portal) ++reached_portal;
  }
  if (p.injected > 0) {
    p.delivery_ratio_cmr_neighbor = static_cast<double>(reached_nb) / p.injected;
    p.delivery_ratio_cmr = static_cast<double>(reached_cmr) / p.injected;
    p.delivery_ratio_portal = static_cast<double>(reached_portal) / p.injected;
  }
  if (reached_cmr > 0) p.mean_hops_to_cmr = hop_sum / reached_cmr;
  return p;
}

RunMetrics run(const ExperimentConfig& cfg) {
  validate(cfg);
  RunMetrics metrics;
  metrics.per_replication.reserve(cfg.replications);
  for (int r = 0; r < cfg.replications; ++r)
    metrics.per_replication.push_back(run_single(cfg, replication_seed(cfg.seed, r)));
  return metrics;
}

namespace {

// Nodes whose reception makes a message count as delivered to the CMR
// neighborhood.
std::vector<char> cmr_neighborhood(const Deployment& d) {
  std::vector<char> good(d.node_count(), 0);
  for (const Node& n : d.nodes()) {
    if (n.role == NodeRole::Cmr) {
      good[n.node_id] = 1;
      for (int nb : d.neighbors(n.node_id)) good[nb] = 1;
    }
  }
  return good;
}

}  // namespace

double delivery_ratio_cmr_neighbor(std::span<const Event> events, const Deployment& d) {
  std::vector<char> good = cmr_neighborhood(d);
  std::set<int> injected, delivered;
  for (const Event& e : events) {
    if (e.kind == EventKind::Inject) injected.insert(e.msg);
  }
  if (injected.empty()) throw std::domain_error("no injected messages: ratio undefined");
  for (const Event& e : events) {
    if (!injected.count(e.msg)) continue;
    bool holds = e.kind == EventKind::Inject || e.kind == EventKind::Rx ||
                 e.kind == EventKind::Pickup;
    if (holds && e.node >= 0 && good[e.node]) delivered.insert(e.msg);
  }
  return static_cast<double>(delivered.size()) / injected.size();
}

double delivery_ratio_cmr(std::span<const Event> events, const Deployment& d) {
  std::set<int> injected, delivered;
  for (const Event& e : events)
    if (e.kind == EventKind::Inject) injected.insert(e.msg);
  if (injected.empty()) throw std::domain_error("no injected messages: ratio undefined");
  for (const Event& e : events)
    if (e.kind == EventKind::Rx && injected.count(e.msg) &&
        d.node(e.node).role == NodeRole::Cmr)
      delivered.insert(e.msg);
  return static_cast<double>(delivered.size()) / injected.size();
}

double delivery_ratio_portal(std::span<const Event> events, const Deployment& d) {
  (void)d;
  std::set<int> injected, delivered;
  for (const Event& e : events)
    if (e.kind == EventKind::Inject) injected.insert(e.msg);
  if (injected.empty()) throw std::domain_error("no injected messages: ratio undefined");
  for (const Event& e : events)
    if (e.kind == EventKind::PortalRx && injected.count(e.msg)) delivered.insert(e.msg);
  return static_cast<double>(delivered.size()) / injected.size();
}

ExperimentConfig apply_axis(ExperimentConfig cfg, const std::string& axis, double value) {
  if (axis == "cmr_count")
    cfg.cmr_count = static_cast<int>(value);
  else if (axis == "channels")
    cfg.channels = static_cast<int>(value);
  else if (axis == "cr_count")
    cfg.cr_count = static_cast<int>(value);
  else if (axis == "pr_count")
    cfg.pr_count = static_cast<int>(value);
  else if (axis == "messages")
    cfg.messages = static_cast<int>(value);
  else if (axis == "ttl_init")
    cfg.ttl_init = static_cast<int>(value);
  else if (axis == "occupancy_prob")
    cfg.occupancy_prob = {value};
  else if (axis == "pr_data_rate")
    cfg.pr_data_rate = value;
  else if (axis == "slots")
    cfg.slots = static_cast<std::int64_t>(value);
  else
    throw ConfigError("axis", "unrecognized sweep axis: " + axis);
  return cfg;
}

std::vector<SweepRow> sweep(const ExperimentConfig& base, const std::string& axis,
                            std::span<const double> values) {
  // Sweep points are share-nothing: run them in parallel and join in order,
  // so the table is identical to a sequential sweep.
  for (double v : values) validate(apply_axis(base, axis, v));
  std::vector<std::future<RunMetrics>> pending;
  pending.reserve(values.size());
  unsigned lanes = std::max(1u, std::thread::hardware_concurrency());
  std::vector<SweepRow> rows(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    ExperimentConfig cfg = apply_axis(base, axis, values[i]);
    rows[i].axis = axis;
    rows[i].value = values[i];
    rows[i].strategy = cfg.strategy;
    rows[i].channels = cfg.channels;
    rows[i].replications = cfg.replications;
    pending.push_back(std::async(std::launch::async, [cfg] { return run(cfg); }));
    if (pending.size() == lanes || i + 1 == values.size()) {
      size_t first = i + 1 - pending.size();
      for (size_t j = 0; j < pending.size(); ++j) rows[first + j].metrics = pending[j].get();
      pending.clear();
    }
  }
  return rows;
}

std::string metrics_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "axis,value,strategy,channels,replications,"
         "delivery_cmr_neighbor_mean,delivery_cmr_neighbor_sd,"
         "delivery_cmr_mean,delivery_cmr_sd,"
         "delivery_portal_mean,delivery_portal_sd,"
         "mean_hops_mean,mean_hops_sd,collisions_mean,collisions_sd\n";
  char buf[64];
  auto put = [&](double v, bool last = false) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    out << buf << (last ? "\n" : ",");
  };
  for (const SweepRow& r : rows) {
    out << r.axis << ",";
    put(r.value);
    out << to_string(r.strategy) << "," << r.channels << "," << r.replications << ",";
    auto nb = r.metrics.cmr_neighbor(), cm = r.metrics.cmr(), po = r.metrics.portal(),
         ho = r.metrics.hops(), co = r.metrics.collisions();
    put(nb.mean);
    put(nb.sd);
    put(cm.mean);
    put(cm.sd);
    put(po.mean);
    put(po.sd);
    put(ho.mean);
    put(ho.sd);
    put(co.mean);
    put(co.sd, true);
  }
  return out.str();
}

}  // namespace crdrn
