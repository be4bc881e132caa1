#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crdrn/protocol.hpp"

namespace crdrn {

// Full parameterization of one experiment. occupancy_prob holds either one
// value (applied to every channel) or one value per channel.
struct ExperimentConfig {
  int channels = 5;
  int cr_count = 30;
  int pr_count = 10;
  int cmr_count = 5;
  double area_width = 600;
  double area_height = 600;
  double cr_range = 100;
  double pr_range = 100;
  double cmr_range = 100;
  double portal_range = 150;
  int cr_radios = 1;
  int cmr_radios = 3;
  std::vector<double> occupancy_prob = {0.5};
  Strategy strategy = Strategy::Surf;
  SimMode mode = SimMode::MultiHop;
  MapMode cmr_map_mode = MapMode::Standalone;
  int ttl_init = 8;
  std::int64_t slots = 400;
  int warmup_slots = 40;
  int messages = 30;
  int inject_interval = 10;
  double pr_data_rate = 0.05;
  int beacon_period = 4;
  int scan_dwell = 1;
  int sense_window = 16;
  double busy_threshold = 0.5;
  int assign_period = 50;
  int holdoff_max = 0;
  int queue_cap = 64;
  bool mobile_crs = false;
  double cr_speed = 0.0;
  std::uint64_t seed = 1;
  int replications = 30;
};

// Throws ConfigError naming the offending field.
void validate(const ExperimentConfig& cfg);

std::vector<double> expanded_occupancy(const ExperimentConfig& cfg);
DeploymentConfig deployment_config(const ExperimentConfig& cfg);
SimOptions sim_options(const ExperimentConfig& cfg);

// Measured outcomes of one replicated run.
struct RunMetrics {
  struct Point {
    double delivery_ratio_cmr_neighbor = 0;
    double delivery_ratio_cmr = 0;
    double delivery_ratio_portal = 0;
    double mean_hops_to_cmr = 0;
    std::int64_t collision_count = 0;
    int injected = 0;
  };
  std::vector<Point> per_replication;

  struct Stat {
    double mean = 0;
    double sd = 0;  // sample standard deviation
  };
  Stat cmr_neighbor() const;
  Stat cmr() const;
  Stat portal() const;
  Stat hops() const;
  Stat collisions() const;
};

// One full run of `cfg`: deployment, warm-up, pickup/injection pipeline,
// dissemination until all messages are terminal or slots run out, averaged
// over cfg.replications with seeds derived from (seed, replication index).
RunMetrics run(const ExperimentConfig& cfg);

// A single replication with an explicit derived seed; replications are
// share-nothing, so run() is exactly the fold of these.
RunMetrics::Point run_single(const ExperimentConfig& cfg, std::uint64_t rep_seed);

// The point metric: fraction of injected messages received by a CMR or by
// some geometric one-hop neighbor of a CMR, recounted from the event log.
// Throws std::domain_error when the log contains no injections.
double delivery_ratio_cmr_neighbor(std::span<const Event> events, const Deployment& d);
double delivery_ratio_cmr(std::span<const Event> events, const Deployment& d);
double delivery_ratio_portal(std::span<const Event> events, const Deployment& d);

struct SweepRow {
  std::string axis;
  double value = 0;
  Strategy strategy = Strategy::Surf;
  int channels = 0;
  int replications = 0;
  RunMetrics metrics;
};

// One row per value; every row uses the same master seed so only the swept
// axis varies. Throws ConfigError("axis", ...) for an unrecognized name.
std::vector<SweepRow> sweep(const ExperimentConfig& base, const std::string& axis,
                            std::span<const double> values);

ExperimentConfig apply_axis(ExperimentConfig cfg, const std::string& axis, double value);

// CSV table for rows (or one row for a plain run), schema documented in the
// README. Byte-deterministic under a fixed seed.
std::string metrics_csv(std::span<const SweepRow> rows);

}  // namespace crdrn
