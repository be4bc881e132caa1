#include "crdrn/spectrum.hpp"

#include <cmath>
#include <stdexcept>

namespace crdrn {

SpectrumEnvironment::SpectrumEnvironment(std::vector<ChannelModel> channels,
                                         std::vector<PrTransmitter> prs, std::uint64_t seed)
    : channels_(std::move(channels)), prs_(std::move(prs)), seed_(seed) {
  for (const ChannelModel& c : channels_) {
    if (c.occupancy_prob < 0.0 || c.occupancy_prob > 1.0)
      throw std::invalid_argument("occupancy_prob outside [0,1]");
  }
  for (const PrTransmitter& p : prs_) {
    if (p.channel_id < 0 || p.channel_id >= channel_count())
      throw std::invalid_argument("PR bound to unknown channel");
  }
}

bool SpectrumEnvironment::channel_busy(int channel_id, std::int64_t slot, double x, double y,
                                       double range, int exclude_pr) const {
  if (channel_id < 0 || channel_id >= channel_count())
    throw std::invalid_argument("channel_busy: unknown channel");
  for (const PrTransmitter& pr : prs_) {
    if (pr.channel_id != channel_id || pr.node_id == exclude_pr) continue;
    double dx = pr.x - x, dy = pr.y - y;
    if (std::sqrt(dx * dx + dy * dy) <= range && pr_active(pr, slot)) return true;
  }
  return false;
}

std::vector<SpectrumObservation> SpectrumEnvironment::sense_spectrum(int observer_id, double x,
                                                                     double y, double range,
                                                                     std::int64_t slot,
                                                                     int dwell) const {
  if (dwell < 1) throw std::invalid_argument("sense_spectrum: dwell must be >= 1");
  std::vector<SpectrumObservation> out;
  out.reserve(channels_.size());
  for (const ChannelModel& ch : channels_) {
    int busy = 0;
    for (std::int64_t s = slot - dwell + 1; s <= slot; ++s)
      if (s >= 0 && channel_busy(ch.channel_id, s, x, y, range)) ++busy;
    SpectrumObservation obs;
    obs.observer_id = observer_id;
    obs.channel_id = ch.channel_id;
    obs.utilization = static_cast<double>(busy) / dwell;
    obs.window_begin = slot - dwell + 1;
    obs.window_end = slot;
    obs.frequency_mhz = ch.frequency_mhz;
    out.push_back(obs);
  }
  return out;
}

}  // namespace crdrn
