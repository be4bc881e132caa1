#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "crdrn/protocol.hpp"
#include "crdrn/topology.hpp"

namespace crdrn {

// Independent recount of an event log against a deployment: TTL bookkeeping,
// duplicate suppression, collision and PR-priority reception rules (PR
// activity is recomputed from the seed in the log header), and the delivery
// ratios. Any mismatch becomes one violation line.
struct ReplayReport {
  std::vector<std::string> violations;
  int injected = 0;
  double ratio_cmr_neighbor = 0;
  double ratio_cmr = 0;
  double ratio_portal = 0;
  std::int64_t collision_drops = 0;

  bool ok() const { return violations.empty(); }
};

ReplayReport replay_verify(const Deployment& deployment, std::string_view log_text);

}  // namespace crdrn
