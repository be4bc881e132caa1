#include "crdrn/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crdrn/errors.hpp"

namespace crdrn {

const char* to_string(Strategy s) { return s == Strategy::Surf ? "surf" : "rd"; }

Strategy strategy_from_string(std::string_view s) {
  if (s == "surf") return Strategy::Surf;
  if (s == "rd") return Strategy::Rd;
  throw std::invalid_argument("unknown strategy: " + std::string(s));
}

const char* to_string(MapMode m) { return m == MapMode::Standalone ? "standalone" : "coordinated"; }

MapMode map_mode_from_string(std::string_view s) {
  if (s == "standalone") return MapMode::Standalone;
  if (s == "coordinated") return MapMode::Coordinated;
  throw std::invalid_argument("unknown map mode: " + std::string(s));
}

std::vector<ChannelWeight> compute_channel_weights(std::span<const double> utilization,
                                                   std::span<const int> receivers) {
  if (utilization.empty()) throw std::invalid_argument("empty channel set");
  if (utilization.size() != receivers.size())
    throw std::invalid_argument("utilization/receiver size mismatch");
  std::vector<ChannelWeight> out(utilization.size());
  for (size_t c = 0; c < utilization.size(); ++c) {
    out[c].channel_id = static_cast<int>(c);
    out[c].availability = 1.0 - utilization[c];
    out[c].receivers = receivers[c];
    out[c].weight = out[c].availability * receivers[c];
  }
  return out;
}

int select_channel_surf(std::span<const double> utilization, std::span<const int> receivers) {
  std::vector<ChannelWeight> w = compute_channel_weights(utilization, receivers);
  int best = 0;
  bool any_positive = false;
  for (size_t c = 0; c < w.size(); ++c) {
    if (w[c].weight > 0) any_positive = true;
    if (w[c].weight > w[best].weight) best = static_cast<int>(c);
  }
  if (any_positive) return best;
  best = 0;
  for (size_t c = 0; c < w.size(); ++c)
    if (w[c].availability > w[best].availability) best = static_cast<int>(c);
  return best;
}

int select_channel_random(int channels, RngStream& rng) {
  if (channels < 1) throw std::invalid_argument("empty channel set");
  return static_cast<int>(rng.next_below(static_cast<std::uint64_t>(channels)));
}

OpportunityMap::OpportunityMap(int channels, int owner_cmr, MapMode mode)
    : cells_(channels), owner_(owner_cmr), mode_(mode) {
  if (channels < 1) throw std::invalid_argument("OpportunityMap needs >= 1 channel");
}

void OpportunityMap::ingest(const SpectrumObservation& obs, NodeRole observer_role) {
  if (obs.channel_id < 0 || obs.channel_id >= channel_count())
    throw std::invalid_argument("observation references unknown channel");
  if (mode_ == MapMode::Standalone && obs.observer_id != owner_) {
    if (observer_role == NodeRole::CrDevice)
      throw ModeViolation("standalone opportunity map offered CR-device feedback");
    throw ModeViolation("standalone opportunity map accepts only its owner's reports");
  }
  Cell& cell = cells_[obs.channel_id];
  std::int64_t slots = obs.window_slots();
  if (slots < 1) throw std::invalid_argument("observation window is empty");
  // Busy time is recovered as an integer slot count so the running totals
  // are exact and ingestion-order independent.
  cell.busy += std::llround(obs.utilization * static_cast<double>(slots));
  cell.observed += slots;
  if (obs.window_end > cell.last_updated) cell.last_updated = obs.window_end;
}

double OpportunityMap::occupancy_estimate(int channel) const {
  const Cell& cell = cells_.at(channel);
  if (cell.observed == 0) return 0.0;
  return static_cast<double>(cell.busy) / static_cast<double>(cell.observed);
}

OpportunityMap fluctuation_monitor_update(OpportunityMap map,
                                          std::span<const SpectrumObservation> obs,
                                          NodeRole observer_role) {
  for (const SpectrumObservation& o : obs) map.ingest(o, observer_role);
  return map;
}

std::optional<std::vector<std::pair<int, int>>> cmr_assign_channels(
    const OpportunityMap& map, std::span<const int> cr_ids, double busy_threshold) {
  std::vector<std::pair<double, int>> eligible;  // (estimate, channel)
  for (int c = 0; c < map.channel_count(); ++c) {
    double est = map.occupancy_estimate(c);
    if (est < busy_threshold) eligible.push_back({est, c});
  }
  if (eligible.empty()) return std::nullopt;
  std::sort(eligible.begin(), eligible.end());
  std::vector<std::pair<int, int>> out;
  out.reserve(cr_ids.size());
  for (size_t i = 0; i < cr_ids.size(); ++i)
    out.push_back({cr_ids[i], eligible[i % eligible.size()].second});
  return out;
}

}  // namespace crdrn
