#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "crdrn/rng.hpp"
#include "crdrn/spectrum.hpp"
#include "crdrn/topology.hpp"

namespace crdrn {

enum class Strategy { Surf, Rd };
const char* to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);  // throws std::invalid_argument

enum class MapMode { Standalone, Coordinated };
const char* to_string(MapMode m);
MapMode map_mode_from_string(std::string_view s);  // throws std::invalid_argument

// Per-channel weight used by the SURF-like selection. The weight formula is
// a reconstruction: availability times known receiver count, with a
// fallback to plain availability when no receivers are known anywhere. It
// lives behind this one function so an alternative weighting can be swapped
// in without touching callers.
struct ChannelWeight {
  int channel_id = 0;
  double availability = 0.0;  // 1 - observed utilization
  int receivers = 0;          // CR neighbors tuned to this channel last slot
  double weight = 0.0;
};

std::vector<ChannelWeight> compute_channel_weights(std::span<const double> utilization,
                                                   std::span<const int> receivers);

// Argmax of availability x receivers; if every weight is zero, argmax of
// availability alone (a sender with no known receivers still picks the
// freest channel). Ties break to the lowest channel id. Throws
// std::invalid_argument for an empty channel set.
int select_channel_surf(std::span<const double> utilization, std::span<const int> receivers);

// Uniform over all channels, blind to PR and CR activity.
int select_channel_random(int channels, RngStream& rng);

// Running per-channel occupancy estimates built from sensing reports
// (the spectrum fluctuation monitor feeding the opportunity database).
// Estimates are busy-slot / observed-slot counters, so ingestion order
// cannot matter. Standalone maps take only the owning CMR's own reports;
// coordinated maps additionally accept CR-device feedback.
class OpportunityMap {
 public:
  OpportunityMap(int channels, int owner_cmr, MapMode mode);

  int channel_count() const { return static_cast<int>(cells_.size()); }
  int owner() const { return owner_; }
  MapMode mode() const { return mode_; }

  // Throws ModeViolation when a standalone map is offered a report from a
  // CR device (or any observer other than its owner).
  void ingest(const SpectrumObservation& obs, NodeRole observer_role);

  double occupancy_estimate(int channel) const;
  std::int64_t sample_count(int channel) const { return cells_.at(channel).observed; }
  std::int64_t last_updated(int channel) const { return cells_.at(channel).last_updated; }
  bool known(int channel) const { return cells_.at(channel).observed > 0; }

 private:
  struct Cell {
    std::int64_t busy = 0;
    std::int64_t observed = 0;
    std::int64_t last_updated = -1;
  };
  std::vector<Cell> cells_;
  int owner_;
  MapMode mode_;
};

// Functional form of the monitor update used by tests and batch feeds.
OpportunityMap fluctuation_monitor_update(OpportunityMap map,
                                          std::span<const SpectrumObservation> obs,
                                          NodeRole observer_role);

// Channels with estimate below busy_threshold, sorted by ascending estimate
// (ties to the lowest id), assigned round-robin over the given CR devices.
// nullopt when no channel is eligible: the CRs stay silent this epoch.
std::optional<std::vector<std::pair<int, int>>> cmr_assign_channels(
    const OpportunityMap& map, std::span<const int> cr_ids, double busy_threshold);

}  // namespace crdrn
