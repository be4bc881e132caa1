#include "crdrn/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <sstream>
#include <stdexcept>

#include "crdrn/errors.hpp"

namespace crdrn {

const char* to_string(SimMode m) { return m == SimMode::MultiHop ? "multi_hop" : "single_hop"; }

SimMode sim_mode_from_string(std::string_view s) {
  if (s == "multi_hop") return SimMode::MultiHop;
  if (s == "single_hop") return SimMode::SingleHop;
  throw std::invalid_argument("unknown mode: " + std::string(s));
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Inject: return "INJECT";
    case EventKind::Pickup: return "PICKUP";
    case EventKind::Tx: return "TX";
    case EventKind::Rx: return "RX";
    case EventKind::DropCollision: return "DROP_COLL";
    case EventKind::DropPr: return "DROP_PR";
    case EventKind::Grant: return "GRANT";
    case EventKind::Relay: return "RELAY";
    case EventKind::PortalRx: return "PORTAL_RX";
    case EventKind::TermPortal: return "TERM_PORTAL";
    case EventKind::TermStuck: return "TERM_STUCK";
    case EventKind::TermDead: return "TERM_DEAD";
  }
  return "?";
}

EventKind event_kind_from_string(std::string_view s) {
  static const std::pair<const char*, EventKind> table[] = {
      {"INJECT", EventKind::Inject},       {"PICKUP", EventKind::Pickup},
      {"TX", EventKind::Tx},               {"RX", EventKind::Rx},
      {"DROP_COLL", EventKind::DropCollision}, {"DROP_PR", EventKind::DropPr},
      {"GRANT", EventKind::Grant},         {"RELAY", EventKind::Relay},
      {"PORTAL_RX", EventKind::PortalRx},  {"TERM_PORTAL", EventKind::TermPortal},
      {"TERM_STUCK", EventKind::TermStuck}, {"TERM_DEAD", EventKind::TermDead},
  };
  for (const auto& [name, kind] : table)
    if (s == name) return kind;
  throw std::invalid_argument("unknown event kind: " + std::string(s));
}

const char* to_string(Terminal t) {
  switch (t) {
    case Terminal::None: return "none";
    case Terminal::DiedInNetwork: return "died_in_network";
    case Terminal::StuckAtCmr: return "stuck_at_cmr";
    case Terminal::ReachedPortal: return "reached_portal";
  }
  return "?";
}

int scan_channel(std::int64_t slot, int scan_dwell, int channels) {
  if (scan_dwell < 1 || channels < 1) throw std::invalid_argument("scan parameters must be >= 1");
  return static_cast<int>((slot / scan_dwell) % channels);
}

SimWorld::SimWorld(Deployment deployment, std::vector<double> occupancy_per_channel,
                   SimOptions opts)
    : deployment_(std::move(deployment)),
      spectrum_(
          [&] {
            std::vector<ChannelModel> ch(occupancy_per_channel.size());
            for (size_t c = 0; c < ch.size(); ++c)
              ch[c] = {static_cast<int>(c), occupancy_per_channel[c],
                       ChannelModel::default_frequency(static_cast<int>(c))};
            return ch;
          }(),
          [&] {
            std::vector<PrTransmitter> prs;
            for (const Node& n : deployment_.nodes())
              if (n.role == NodeRole::PrDevice)
                prs.push_back({n.node_id, n.x, n.y, n.range, n.pr_channel});
            return prs;
          }(),
          opts.seed),
      opts_(opts) {
  if (occupancy_per_channel.empty()) throw std::invalid_argument("need at least one channel");
  if (opts_.sense_window < 1) throw std::invalid_argument("sense_window must be >= 1");
  int n = deployment_.node_count();
  cr_.resize(n);
  cmr_.resize(n);
  pr_.resize(n);
  for (const Node& nd : deployment_.nodes()) {
    if (nd.role == NodeRole::Cmr && opts_.mode == SimMode::SingleHop)
      cmr_[nd.node_id].map.emplace(spectrum_.channel_count(), nd.node_id, opts_.map_mode);
    if (nd.role == NodeRole::CrDevice && nd.mobile) any_mobile_ = true;
  }
  waypoint_count_.assign(n, 0);
  waypoint_.assign(n, {0, 0});
  for (const Node& nd : deployment_.nodes())
    if (nd.mobile) {
      waypoint_[nd.node_id] = {
          u01(hash5(opts_.seed, stream::kMobility, nd.node_id, 0, 0)) * deployment_.width(),
          u01(hash5(opts_.seed, stream::kMobility, nd.node_id, 0, 1)) * deployment_.height()};
    }
  int c = spectrum_.channel_count();
  sense_ring_.assign(static_cast<size_t>(n) * c * opts_.sense_window, 0);
  sense_sum_.assign(static_cast<size_t>(n) * c, 0);
  rebuild_geometry();
}

void SimWorld::rebuild_geometry() {
  const auto& nodes = deployment_.nodes();
  int n = deployment_.node_count();
  int c = spectrum_.channel_count();
  nbrs_.assign(n, {});
  cr_nbrs_.assign(n, {});
  is_cmr_neighbor_.assign(n, 0);
  pr_in_range_.assign(static_cast<size_t>(n) * c, {});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || !in_range(nodes[i], nodes[j])) continue;
      nbrs_[i].push_back(j);
      if (nodes[j].role == NodeRole::CrDevice) cr_nbrs_[i].push_back(j);
      if (nodes[j].role == NodeRole::Cmr) is_cmr_neighbor_[i] = 1;
    }
  }
  const auto& prs = spectrum_.pr_transmitters();
  for (int i = 0; i < n; ++i) {
    for (size_t p = 0; p < prs.size(); ++p) {
      double dx = prs[p].x - nodes[i].x, dy = prs[p].y - nodes[i].y;
      if (std::sqrt(dx * dx + dy * dy) <= nodes[i].range)
        pr_in_range_[static_cast<size_t>(i) * c + prs[p].channel_id].push_back(
            static_cast<int>(p));
    }
  }
  // Backbone shortest paths from the portal(s) over portal/CMR links; the
  // parent is the lowest-id neighbor one hop closer.
  std::vector<int> dist(n, -1);
  backbone_parent_.assign(n, -1);
  std::deque<int> q;
  for (const Node& nd : nodes)
    if (nd.role == NodeRole::Portal) {
      dist[nd.node_id] = 0;
      q.push_back(nd.node_id);
    }
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (int v : nbrs_[u]) {
      if (nodes[v].role != NodeRole::Cmr && nodes[v].role != NodeRole::Portal) continue;
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
    }
  }
  for (const Node& nd : nodes) {
    if (nd.role != NodeRole::Cmr || dist[nd.node_id] < 0) continue;
    for (int v : nbrs_[nd.node_id]) {
      if (nodes[v].role != NodeRole::Cmr && nodes[v].role != NodeRole::Portal) continue;
      if (dist[v] == dist[nd.node_id] - 1) {
        backbone_parent_[nd.node_id] = v;
        break;  // neighbors are in ascending id order
      }
    }
  }
}

void SimWorld::set_message_pipeline(int messages, int inject_interval) {
  if (messages < 0) throw std::invalid_argument("messages must be >= 0");
  if (inject_interval < 1) throw std::invalid_argument("inject_interval must be >= 1");
  pipeline_messages_ = messages;
  inject_interval_ = inject_interval;
  next_inject_slot_ = opts_.warmup_slots;
}

int SimWorld::plant_injection(int cr_id, std::int64_t slot) {
  if (deployment_.node(cr_id).role != NodeRole::CrDevice)
    throw std::invalid_argument("plant_injection target must be a CR device");
  if (slot < slot_) throw std::invalid_argument("plant_injection slot already passed");
  plants_.push_back({slot, cr_id});
  Message m;
  m.msg_id = next_msg_id_++;
  m.ttl_init = opts_.ttl_init;
  messages_.push_back(m);
  holder_bits_.emplace_back((deployment_.node_count() + 63) / 64, 0);
  return m.msg_id;
}

void SimWorld::log(std::int64_t slot, EventKind kind, int node, int channel, int msg, int ttl) {
  events_.push_back({slot, kind, node, channel, msg, ttl});
}

void SimWorld::mark_holder(int msg, int node, int ttl, std::int64_t slot, int channel) {
  holder_bits_[msg][node >> 6] |= 1ull << (node & 63);
  Message& m = messages_[msg];
  m.hop_trace.push_back({node, slot, channel, ttl});
  const Node& nd = deployment_.node(node);
  if (nd.role == NodeRole::Cmr || is_cmr_neighbor_[node]) m.reached_cmr_neighbor = true;
}

double SimWorld::utilization(int node, int channel) const {
  return static_cast<double>(
             sense_sum_[static_cast<size_t>(node) * spectrum_.channel_count() + channel]) /
         opts_.sense_window;
}

int SimWorld::receivers_on(int node, int channel) const {
  int count = 0;
  for (int m : cr_nbrs_[node])
    if (cr_[m].prev_listen == channel) ++count;
  return count;
}

int SimWorld::pick_channel(int node) const {
  int c = spectrum_.channel_count();
  if (opts_.strategy == Strategy::Rd)
    return static_cast<int>(hash4(opts_.seed, stream::kTune, static_cast<std::uint64_t>(slot_),
                                  static_cast<std::uint64_t>(node)) %
                            static_cast<std::uint64_t>(c));
  thread_local std::vector<double> util;
  thread_local std::vector<int> recv;
  util.resize(c);
  recv.resize(c);
  for (int ch = 0; ch < c; ++ch) {
    util[ch] = utilization(node, ch);
    recv[ch] = receivers_on(node, ch);
  }
  return select_channel_surf(util, recv);
}

std::vector<int> SimWorld::rank_channels(int node, int count) const {
  int c = spectrum_.channel_count();
  std::vector<int> out;
  if (count <= 0) return out;
  if (opts_.strategy == Strategy::Rd) {
    for (int r = 0; r < count; ++r) {
      int ch = static_cast<int>(hash5(opts_.seed, stream::kCmrListen,
                                      static_cast<std::uint64_t>(slot_),
                                      static_cast<std::uint64_t>(node),
                                      static_cast<std::uint64_t>(r)) %
                                static_cast<std::uint64_t>(c));
      if (std::find(out.begin(), out.end(), ch) == out.end()) out.push_back(ch);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  std::vector<std::pair<double, int>> ranked(c);
  bool any_positive = false;
  for (int ch = 0; ch < c; ++ch) {
    double w = (1.0 - utilization(node, ch)) * receivers_on(node, ch);
    if (w > 0) any_positive = true;
    ranked[ch] = {w, ch};
  }
  if (!any_positive)
    for (int ch = 0; ch < c; ++ch) ranked[ch].first = 1.0 - utilization(node, ch);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int i = 0; i < std::min(count, c); ++i) out.push_back(ranked[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

void SimWorld::do_injections() {
  // Planted injections fire unconditionally at their slot, in plant order.
  for (size_t i = 0; i < plants_.size(); ++i) {
    if (plants_[i].first != slot_) continue;
    int msg = static_cast<int>(i);
    int cr = plants_[i].second;
    Message& m = messages_[msg];
    m.injector_cr = cr;
    m.injected_slot = slot_;
    m.injected = true;
    mark_holder(msg, cr, m.ttl_init, slot_, -1);
    if (m.ttl_init >= 1 && static_cast<int>(cr_[cr].queue.size()) < opts_.queue_cap)
      cr_[cr].queue.push_back({slot_, msg});
    log(slot_, EventKind::Inject, cr, -1, msg, m.ttl_init);
  }
  // Pipeline: one injection per due slot, drawn among picked-up messages
  // not yet injected; deferred while none exists.
  if (injections_done_ >= pipeline_messages_ || next_inject_slot_ < 0 ||
      slot_ < next_inject_slot_)
    return;
  std::vector<int> candidates;
  for (const Message& m : messages_)
    if (!m.injected && m.origin_pr >= 0) candidates.push_back(m.msg_id);
  if (candidates.empty()) return;  // retry next slot
  int pick = candidates[hash4(opts_.seed, stream::kInject, static_cast<std::uint64_t>(slot_),
                              static_cast<std::uint64_t>(injections_done_)) %
                        candidates.size()];
  Message& m = messages_[pick];
  int cr = m.hop_trace.front().node;  // pickup holder
  m.injector_cr = cr;
  m.injected_slot = slot_;
  m.injected = true;
  if (m.ttl_init >= 1 && static_cast<int>(cr_[cr].queue.size()) < opts_.queue_cap)
    cr_[cr].queue.push_back({slot_, pick});
  log(slot_, EventKind::Inject, cr, -1, pick, m.ttl_init);
  ++injections_done_;
  next_inject_slot_ = slot_ + inject_interval_;
}

void SimWorld::do_pickups() {
  const auto& nodes = deployment_.nodes();
  for (const PrTransmitter& prt : spectrum_.pr_transmitters()) {
    PrState& ps = pr_[prt.node_id];
    if (!ps.pending_data &&
        u01(hash4(opts_.seed, stream::kPrData, static_cast<std::uint64_t>(slot_),
                  static_cast<std::uint64_t>(prt.node_id))) < opts_.pr_data_rate)
      ps.pending_data = true;
    if (!ps.pending_data || slot_ < opts_.warmup_slots) continue;
    std::vector<int> eligible;
    for (int n : nbrs_[prt.node_id]) {
      if (nodes[n].role != NodeRole::CrDevice || cr_[n].busy) continue;
      const InfrastructureRegistry& reg = cr_[n].registry;
      bool knows = std::any_of(reg.begin(), reg.end(), [&](const RegistryEntry& e) {
        return e.pr_node_id == prt.node_id;
      });
      if (knows) eligible.push_back(n);
    }
    if (eligible.empty()) continue;
    int cr = eligible[hash4(opts_.seed, stream::kPickup, static_cast<std::uint64_t>(slot_),
                            static_cast<std::uint64_t>(prt.node_id)) %
                      eligible.size()];
    // The chosen CR tunes to the PR's channel for this slot either way.
    cr_[cr].busy = true;
    cr_[cr].listen = -1;
    const Node& crn = nodes[cr];
    if (spectrum_.channel_busy(prt.channel_id, slot_, crn.x, crn.y, crn.range, prt.node_id))
      continue;  // another PR stepped on the handover, retry later
    ps.pending_data = false;
    Message m;
    m.msg_id = next_msg_id_++;
    m.origin_pr = prt.node_id;
    m.pickup_slot = slot_;
    m.ttl_init = opts_.ttl_init;
    messages_.push_back(m);
    holder_bits_.emplace_back((deployment_.node_count() + 63) / 64, 0);
    mark_holder(m.msg_id, cr, m.ttl_init, slot_, prt.channel_id);
    log(slot_, EventKind::Pickup, cr, prt.channel_id, m.msg_id, m.ttl_init);
  }
}

void SimWorld::do_assignment_epoch() {
  const auto& nodes = deployment_.nodes();
  for (const Node& nd : nodes) {
    if (nd.role != NodeRole::Cmr) continue;
    CmrState& cs = cmr_[nd.node_id];
    if (!cs.map) continue;
    if (opts_.map_mode == MapMode::Coordinated && slot_ >= 1) {
      for (int cr : cs.poll_order) {
        const Node& crn = nodes[cr];
        std::int64_t end = slot_ - 1;
        int dwell = static_cast<int>(std::min<std::int64_t>(opts_.sense_window, end + 1));
        if (dwell < 1) continue;
        for (const SpectrumObservation& obs :
             spectrum_.sense_spectrum(cr, crn.x, crn.y, crn.range, end, dwell))
          cs.map->ingest(obs, NodeRole::CrDevice);
      }
    }
    std::vector<int> crs = cs.poll_order;
    auto assigned = cmr_assign_channels(*cs.map, crs, opts_.busy_threshold);
    for (int cr : crs) cr_[cr].assigned_channel = -1;
    if (assigned)
      for (auto [cr, ch] : *assigned) cr_[cr].assigned_channel = ch;
  }
}

std::vector<PollGrant> SimWorld::cmr_poll(int cmr_id, std::vector<char>& channel_taken) {
  std::vector<PollGrant> grants;
  CmrState& cs = cmr_[cmr_id];
  if (cs.poll_order.empty()) return grants;
  int budget = deployment_.node(cmr_id).radio_count - 1;
  for (int b = 0; b < budget; ++b) {
    int cr = cs.poll_order[cs.poll_ptr % cs.poll_order.size()];
    int ch = cr_[cr].assigned_channel;
    if (ch < 0) {
      ++cs.poll_ptr;
      continue;
    }
    if (channel_taken[ch]) break;  // channel claimed elsewhere, wait
    channel_taken[ch] = 1;
    ++cs.poll_ptr;
    grants.push_back({cr, ch});
    log(slot_, EventKind::Grant, cr, ch, -1, -1);
  }
  return grants;
}

void SimWorld::resolve_and_apply(std::vector<Transmission>& txs) {
  const auto& nodes = deployment_.nodes();
  std::sort(txs.begin(), txs.end(), [](const Transmission& a, const Transmission& b) {
    if (a.sender != b.sender) return a.sender < b.sender;
    return a.msg < b.msg;
  });
  for (const Transmission& tx : txs) log(slot_, EventKind::Tx, tx.sender, tx.channel, tx.msg, tx.ttl);
  for (const Transmission& tx : txs) {
    for (int r : nbrs_[tx.sender]) {
      const Node& rn = nodes[r];
      bool tuned = false;
      if (rn.role == NodeRole::CrDevice) {
        tuned = cr_[r].listen == tx.channel;
      } else if (rn.role == NodeRole::Cmr) {
        const auto& ls = cmr_[r].listen;
        tuned = std::binary_search(ls.begin(), ls.end(), tx.channel);
      }
      if (!tuned || holder(tx.msg, r)) continue;
      bool collided = false;
      for (const Transmission& other : txs) {
        if (other.sender == tx.sender || other.channel != tx.channel) continue;
        if (in_range(rn, nodes[other.sender])) {
          collided = true;
          break;
        }
      }
      if (collided) {
        ++collision_drops_;
        log(slot_, EventKind::DropCollision, r, tx.channel, tx.msg, -1);
        continue;
      }
      if (spectrum_.channel_busy(tx.channel, slot_, rn.x, rn.y, rn.range)) {
        log(slot_, EventKind::DropPr, r, tx.channel, tx.msg, -1);
        continue;
      }
      int new_ttl = tx.ttl - 1;
      mark_holder(tx.msg, r, new_ttl, slot_, tx.channel);
      log(slot_, EventKind::Rx, r, tx.channel, tx.msg, new_ttl);
      Message& m = messages_[tx.msg];
      if (rn.role == NodeRole::CrDevice) {
        if (new_ttl >= 1 && static_cast<int>(cr_[r].queue.size()) < opts_.queue_cap) {
          int hold = opts_.holdoff_max > 0
                         ? static_cast<int>(hash5(opts_.seed, stream::kHoldoff,
                                                  static_cast<std::uint64_t>(slot_),
                                                  static_cast<std::uint64_t>(r),
                                                  static_cast<std::uint64_t>(tx.msg)) %
                                            static_cast<std::uint64_t>(opts_.holdoff_max + 1))
                         : 0;
          cr_[r].queue.push_back({slot_ + 1 + hold, tx.msg});
        }
      } else if (rn.role == NodeRole::Cmr) {
        if (!m.reached_cmr) m.hops_to_cmr = m.ttl_init - new_ttl;
        m.reached_cmr = true;
        bool relaying = std::any_of(relay_.begin(), relay_.end(),
                                    [&](const RelayEntry& e) { return e.msg == tx.msg; });
        if (!relaying && !m.reached_portal) relay_.push_back({tx.msg, r, slot_});
      }
    }
  }
}

void SimWorld::relay_tick() {
  const auto& nodes = deployment_.nodes();
  for (size_t i = 0; i < relay_.size();) {
    RelayEntry& e = relay_[i];
    if (e.created >= slot_) {
      ++i;
      continue;
    }
    int parent = backbone_parent_[e.at];
    if (parent < 0) {
      ++i;  // no backbone path: the message stays stuck at this CMR
      continue;
    }
    e.at = parent;
    log(slot_, EventKind::Relay, parent, -1, e.msg, -1);
    if (nodes[parent].role == NodeRole::Portal) {
      messages_[e.msg].reached_portal = true;
      log(slot_, EventKind::PortalRx, parent, -1, e.msg, -1);
      relay_.erase(relay_.begin() + i);
    } else {
      ++i;
    }
  }
}

void SimWorld::update_sensing_ring() {
  const auto& nodes = deployment_.nodes();
  const auto& prs = spectrum_.pr_transmitters();
  pr_active_now_.resize(prs.size());
  for (size_t p = 0; p < prs.size(); ++p) pr_active_now_[p] = spectrum_.pr_active(prs[p], slot_);
  int c = spectrum_.channel_count();
  int w = opts_.sense_window;
  int ring_pos = static_cast<int>(slot_ % w);
  for (const Node& nd : nodes) {
    if (nd.role != NodeRole::CrDevice && nd.role != NodeRole::Cmr) continue;
    size_t base = static_cast<size_t>(nd.node_id) * c;
    for (int ch = 0; ch < c; ++ch) {
      std::uint8_t busy = 0;
      for (int p : pr_in_range_[base + ch])
        if (pr_active_now_[p]) {
          busy = 1;
          break;
        }
      std::uint8_t& cell = sense_ring_[(base + ch) * w + ring_pos];
      sense_sum_[base + ch] += busy - cell;
      cell = busy;
    }
  }
}

void SimWorld::move_mobiles() {
  if (!any_mobile_ || opts_.cr_speed <= 0) return;
  for (const Node& nd : deployment_.nodes()) {
    if (!nd.mobile || nd.role != NodeRole::CrDevice) continue;
    auto [wx, wy] = waypoint_[nd.node_id];
    double dx = wx - nd.x, dy = wy - nd.y;
    double d = std::sqrt(dx * dx + dy * dy);
    if (d <= opts_.cr_speed) {
      deployment_.set_position(nd.node_id, wx, wy);
      int k = ++waypoint_count_[nd.node_id];
      waypoint_[nd.node_id] = {
          u01(hash5(opts_.seed, stream::kMobility, nd.node_id, k, 0)) * deployment_.width(),
          u01(hash5(opts_.seed, stream::kMobility, nd.node_id, k, 1)) * deployment_.height()};
    } else {
      deployment_.set_position(nd.node_id, nd.x + dx / d * opts_.cr_speed,
                               nd.y + dy / d * opts_.cr_speed);
    }
  }
  rebuild_geometry();
}

void SimWorld::step() {
  const auto& nodes = deployment_.nodes();
  const auto& prs = spectrum_.pr_transmitters();
  int channels = spectrum_.channel_count();
  bool warm = slot_ < opts_.warmup_slots;

  pr_active_now_.resize(prs.size());
  for (size_t p = 0; p < prs.size(); ++p) pr_active_now_[p] = spectrum_.pr_active(prs[p], slot_);

  for (const Node& nd : nodes) {
    if (nd.role == NodeRole::CrDevice) {
      cr_[nd.node_id].busy = false;
      cr_[nd.node_id].listen = -1;
    } else if (nd.role == NodeRole::Cmr) {
      cmr_[nd.node_id].listen.clear();
    }
  }

  do_injections();
  do_pickups();

  if (opts_.mode == SimMode::SingleHop && !warm) {
    if (slot_ == opts_.warmup_slots) {
      // Associate each CR with its nearest in-range CMR.
      for (const Node& nd : nodes) {
        if (nd.role != NodeRole::CrDevice) continue;
        int best = -1;
        double best_d = 0;
        for (int nb : nbrs_[nd.node_id]) {
          if (nodes[nb].role != NodeRole::Cmr) continue;
          double d = distance(nd, nodes[nb]);
          if (best < 0 || d < best_d) {
            best = nb;
            best_d = d;
          }
        }
        cr_[nd.node_id].assoc_cmr = best;
        if (best >= 0) cmr_[best].poll_order.push_back(nd.node_id);
      }
    }
    if ((slot_ - opts_.warmup_slots) % opts_.assign_period == 0) do_assignment_epoch();
  }

  std::vector<Transmission> txs;

  if (opts_.mode == SimMode::SingleHop && !warm) {
    // Polling: CMRs issue grants in slot-rotated order, at most one grant
    // per channel per slot across the whole network.
    std::vector<int> cmr_ids = deployment_.ids_with_role(NodeRole::Cmr);
    std::vector<char> channel_taken(channels, 0);
    for (size_t k = 0; k < cmr_ids.size(); ++k) {
      int cmr_id = cmr_ids[(slot_ + k) % cmr_ids.size()];
      for (const PollGrant& g : cmr_poll(cmr_id, channel_taken)) {
        CmrState& cs = cmr_[cmr_id];
        cs.listen.push_back(g.channel);
        CrState& crs = cr_[g.cr];
        if (crs.busy) continue;  // picking up PR data, grant wasted
        crs.busy = true;
        // Oldest ready queue entry, ties by message id.
        int pick = -1;
        for (int qi = 0; qi < static_cast<int>(crs.queue.size()); ++qi) {
          const auto& e = crs.queue[qi];
          if (e.first > slot_) continue;
          if (pick < 0 || e < crs.queue[pick]) pick = qi;
        }
        if (pick >= 0) {
          auto [ready, msg] = crs.queue[pick];
          crs.queue.erase(crs.queue.begin() + pick);
          int ttl = 0;
          for (const HopEntry& h : messages_[msg].hop_trace)
            if (h.node == g.cr) ttl = h.ttl;
          txs.push_back({g.cr, g.channel, msg, ttl});
        }
      }
    }
    for (const Node& nd : nodes) {
      if (nd.role == NodeRole::Cmr) {
        auto& ls = cmr_[nd.node_id].listen;
        std::sort(ls.begin(), ls.end());
        ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
      } else if (nd.role == NodeRole::CrDevice && !cr_[nd.node_id].busy) {
        int assigned = cr_[nd.node_id].assigned_channel;
        cr_[nd.node_id].listen =
            assigned >= 0 ? assigned : scan_channel(slot_, opts_.scan_dwell, channels);
      }
    }
  } else {
    // Warm-up: every idle CR runs the cyclic discovery scan. Main phase
    // (multi-hop): transmit the oldest ready message or tune for
    // overhearing, both on the strategy-selected channel.
    for (const Node& nd : nodes) {
      if (nd.role == NodeRole::CrDevice) {
        CrState& crs = cr_[nd.node_id];
        if (crs.busy) continue;
        if (warm) {
          crs.listen = scan_channel(slot_, opts_.scan_dwell, channels);
          continue;
        }
        int pick = -1;
        for (int qi = 0; qi < static_cast<int>(crs.queue.size()); ++qi) {
          const auto& e = crs.queue[qi];
          if (e.first > slot_) continue;
          if (pick < 0 || e < crs.queue[pick]) pick = qi;
        }
        int ch = pick_channel(nd.node_id);
        if (pick >= 0) {
          auto [ready, msg] = crs.queue[pick];
          crs.queue.erase(crs.queue.begin() + pick);
          crs.busy = true;
          int ttl = 0;
          for (const HopEntry& h : messages_[msg].hop_trace)
            if (h.node == nd.node_id) ttl = h.ttl;
          txs.push_back({nd.node_id, ch, msg, ttl});
        } else {
          crs.listen = ch;
        }
      } else if (nd.role == NodeRole::Cmr) {
        cmr_[nd.node_id].listen = rank_channels(nd.node_id, nd.radio_count - 1);
      }
    }
  }

  // Infrastructure discovery: a CR tuned to a PR's channel in a beacon slot
  // learns or refreshes that PR.
  for (const PrTransmitter& prt : prs) {
    if (slot_ % opts_.beacon_period != prt.node_id % opts_.beacon_period) continue;
    for (int n : nbrs_[prt.node_id]) {
      if (nodes[n].role != NodeRole::CrDevice || cr_[n].listen != prt.channel_id) continue;
      InfrastructureRegistry& reg = cr_[n].registry;
      auto it = std::find_if(reg.begin(), reg.end(), [&](const RegistryEntry& e) {
        return e.pr_node_id == prt.node_id;
      });
      if (it == reg.end())
        reg.push_back({prt.node_id, prt.channel_id, slot_});
      else
        it->last_heard_slot = slot_;
    }
  }

  resolve_and_apply(txs);
  relay_tick();

  // CMR self-sensing into the opportunity map (one single-slot observation
  // per channel).
  if (opts_.mode == SimMode::SingleHop) {
    for (const Node& nd : nodes) {
      if (nd.role != NodeRole::Cmr || !cmr_[nd.node_id].map) continue;
      for (const SpectrumObservation& obs :
           spectrum_.sense_spectrum(nd.node_id, nd.x, nd.y, nd.range, slot_, 1))
        cmr_[nd.node_id].map->ingest(obs, NodeRole::Cmr);
    }
  }

  update_sensing_ring();
  move_mobiles();

  for (const Node& nd : nodes)
    if (nd.role == NodeRole::CrDevice) cr_[nd.node_id].prev_listen = cr_[nd.node_id].listen;
  ++slot_;
}

void SimWorld::run_for(std::int64_t slots) {
  for (std::int64_t i = 0; i < slots; ++i) step();
}

bool SimWorld::all_terminal_possible() const {
  if (injections_done_ < pipeline_messages_) return false;
  for (const auto& [slot, cr] : plants_)
    if (slot >= slot_) return false;
  if (!relay_.empty()) return false;
  for (const Node& nd : deployment_.nodes())
    if (nd.role == NodeRole::CrDevice && !cr_[nd.node_id].queue.empty()) return false;
  return true;
}

void SimWorld::run_until_done(std::int64_t max_slots) {
  while (slot_ < max_slots) {
    step();
    if (all_terminal_possible()) break;
  }
  finalize();
}

void SimWorld::finalize() {
  if (finalized_) return;
  finalized_ = true;
  for (Message& m : messages_) {
    if (!m.injected) continue;
    if (m.reached_portal)
      m.terminal = Terminal::ReachedPortal;
    else if (m.reached_cmr)
      m.terminal = Terminal::StuckAtCmr;
    else
      m.terminal = Terminal::DiedInNetwork;
    EventKind kind = m.terminal == Terminal::ReachedPortal ? EventKind::TermPortal
                     : m.terminal == Terminal::StuckAtCmr  ? EventKind::TermStuck
                                                           : EventKind::TermDead;
    log(slot_, kind, -1, -1, m.msg_id, -1);
  }
}

std::vector<std::pair<int, int>> SimWorld::disseminate_step(
    std::span<const std::pair<int, int>> senders_and_msgs) {
  const auto& nodes = deployment_.nodes();
  const auto& prs = spectrum_.pr_transmitters();
  pr_active_now_.resize(prs.size());
  for (size_t p = 0; p < prs.size(); ++p) pr_active_now_[p] = spectrum_.pr_active(prs[p], slot_);

  for (const Node& nd : nodes) {
    if (nd.role == NodeRole::CrDevice) {
      cr_[nd.node_id].busy = false;
      cr_[nd.node_id].listen = -1;
    } else if (nd.role == NodeRole::Cmr) {
      cmr_[nd.node_id].listen.clear();
    }
  }
  do_injections();  // planted injections due this slot become held messages

  std::vector<Transmission> txs;
  for (auto [sender, msg] : senders_and_msgs) {
    if (!holder(msg, sender))
      throw std::invalid_argument("disseminate_step: sender does not hold the message");
    int ttl = 0;
    for (const HopEntry& h : messages_[msg].hop_trace)
      if (h.node == sender) ttl = h.ttl;
    if (ttl < 1) throw std::invalid_argument("disseminate_step: sender holds ttl 0");
    cr_[sender].busy = true;
    cr_[sender].listen = -1;
    txs.push_back({sender, pick_channel(sender), msg, ttl});
    auto& q = cr_[sender].queue;
    q.erase(std::remove_if(q.begin(), q.end(),
                           [msg = msg](const auto& e) { return e.second == msg; }),
            q.end());
  }
  for (const Node& nd : nodes) {
    if (nd.role == NodeRole::CrDevice) {
      if (!cr_[nd.node_id].busy) cr_[nd.node_id].listen = pick_channel(nd.node_id);
    } else if (nd.role == NodeRole::Cmr) {
      cmr_[nd.node_id].listen = rank_channels(nd.node_id, nd.radio_count - 1);
    }
  }
  size_t events_before = events_.size();
  resolve_and_apply(txs);
  std::vector<std::pair<int, int>> received;
  for (size_t i = events_before; i < events_.size(); ++i)
    if (events_[i].kind == EventKind::Rx) received.push_back({events_[i].node, events_[i].msg});
  relay_tick();
  update_sensing_ring();
  move_mobiles();
  for (const Node& nd : nodes)
    if (nd.role == NodeRole::CrDevice) cr_[nd.node_id].prev_listen = cr_[nd.node_id].listen;
  ++slot_;
  return received;
}

std::vector<int> SimWorld::disseminate_step(int sender, int msg_id) {
  std::pair<int, int> one[] = {{sender, msg_id}};
  std::vector<int> out;
  for (auto [node, msg] : disseminate_step(std::span<const std::pair<int, int>>(one)))
    out.push_back(node);
  return out;
}

const InfrastructureRegistry& SimWorld::registry(int cr_id) const {
  if (deployment_.node(cr_id).role != NodeRole::CrDevice)
    throw std::invalid_argument("registry: not a CR device");
  return cr_[cr_id].registry;
}

const OpportunityMap* SimWorld::opportunity_map(int cmr_id) const {
  if (deployment_.node(cmr_id).role != NodeRole::Cmr)
    throw std::invalid_argument("opportunity_map: not a CMR");
  return cmr_[cmr_id].map ? &*cmr_[cmr_id].map : nullptr;
}

int SimWorld::listen_channel(int node_id) const { return cr_[node_id].prev_listen; }

int SimWorld::injected_count() const {
  int n = 0;
  for (const Message& m : messages_)
    if (m.injected) ++n;
  return n;
}

std::int64_t SimWorld::collision_drop_count() const { return collision_drops_; }

std::string SimWorld::log_text() const {
  std::ostringstream out;
  out << "# crdrn-events v1\n";
  out << "# seed " << opts_.seed << "\n";
  out << "# channels " << spectrum_.channel_count() << "\n";
  out << "# occupancy";
  char buf[64];
  for (const ChannelModel& ch : spectrum_.channels()) {
    std::snprintf(buf, sizeof(buf), " %.6f", ch.occupancy_prob);
    out << buf;
  }
  out << "\n# ttl_init " << opts_.ttl_init << "\n";
  out << "# columns slot kind node channel msg ttl\n";
  for (const Event& e : events_) {
    out << e.slot << ' ' << to_string(e.kind) << ' ' << e.node << ' ' << e.channel << ' '
        << e.msg << ' ' << e.ttl << "\n";
  }
  return out.str();
}

std::vector<RegistryEntry> discover_infrastructure(const SimWorld& world, int cr_id,
                                                   std::int64_t slot, int listen_channel) {
  std::vector<RegistryEntry> out;
  const Deployment& d = world.deployment();
  const Node& cr = d.node(cr_id);
  for (const PrTransmitter& prt : world.spectrum().pr_transmitters()) {
    if (slot % world.options().beacon_period != prt.node_id % world.options().beacon_period)
      continue;
    if (prt.channel_id != listen_channel) continue;
    if (in_range(cr, d.node(prt.node_id))) out.push_back({prt.node_id, prt.channel_id, slot});
  }
  return out;
}

}  // namespace crdrn
