#pragma once

#include <cstdint>
#include <vector>

#include "crdrn/rng.hpp"

namespace crdrn {

// One orthogonal channel and the activity level of the primary radios bound
// to it. frequency_mhz is a nominal tag carried into sensing reports.
struct ChannelModel {
  int channel_id = 0;
  double occupancy_prob = 0.0;  // P(bound PR transmitter active in a slot)
  double frequency_mhz = 0.0;

  static double default_frequency(int channel_id) { return 2400.0 + 5.0 * channel_id; }
};

// A surviving primary-network transmitter, statically bound to one channel.
struct PrTransmitter {
  int node_id = 0;
  double x = 0, y = 0;
  double range = 0;
  int channel_id = 0;
};

// One sensing report: fraction of the observed window a channel was busy,
// as seen from one observer. Window bounds are inclusive slot indices.
struct SpectrumObservation {
  int observer_id = 0;
  int channel_id = 0;
  double utilization = 0.0;
  std::int64_t window_begin = 0;
  std::int64_t window_end = 0;
  double frequency_mhz = 0.0;

  std::int64_t window_slots() const { return window_end - window_begin + 1; }
};

// The set of channels plus the primary-radio occupancy process on each.
// PR activity is a pure function of (seed, slot, node id): independent
// per-slot Bernoulli(occupancy_prob) draws, idle before slot 0. Sensing is
// perfect within range.
class SpectrumEnvironment {
 public:
  SpectrumEnvironment(std::vector<ChannelModel> channels, std::vector<PrTransmitter> prs,
                      std::uint64_t seed);

  int channel_count() const { return static_cast<int>(channels_.size()); }
  const ChannelModel& channel(int id) const { return channels_.at(id); }
  const std::vector<ChannelModel>& channels() const { return channels_; }
  const std::vector<PrTransmitter>& pr_transmitters() const { return prs_; }
  std::uint64_t seed() const { return seed_; }

  bool pr_active(const PrTransmitter& pr, std::int64_t slot) const {
    if (slot < 0) return false;
    return u01(hash4(seed_, stream::kPrActivity, static_cast<std::uint64_t>(slot),
                     static_cast<std::uint64_t>(pr.node_id))) <
           channels_[pr.channel_id].occupancy_prob;
  }

  // True iff some PR bound to `channel_id` within `range` of (x, y) is active
  // at `slot`. `exclude_pr` skips one transmitter (used when checking whether
  // a PR's own handover collides with other primary traffic).
  bool channel_busy(int channel_id, std::int64_t slot, double x, double y, double range,
                    int exclude_pr = -1) const;

  // One observation per channel over the dwell window ending at `slot`
  // (slots [slot - dwell + 1, slot]; slots before 0 count as idle).
  // Throws std::invalid_argument when dwell < 1.
  std::vector<SpectrumObservation> sense_spectrum(int observer_id, double x, double y,
                                                  double range, std::int64_t slot,
                                                  int dwell) const;

 private:
  std::vector<ChannelModel> channels_;
  std::vector<PrTransmitter> prs_;
  std::uint64_t seed_;
};

}  // namespace crdrn
