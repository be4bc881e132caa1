#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crdrn/spectrum.hpp"
#include "crdrn/strategy.hpp"
#include "crdrn/topology.hpp"

namespace crdrn {

enum class SimMode { MultiHop, SingleHop };
const char* to_string(SimMode m);
SimMode sim_mode_from_string(std::string_view s);  // throws std::invalid_argument

enum class EventKind {
  Inject,
  Pickup,
  Tx,
  Rx,
  DropCollision,
  DropPr,
  Grant,
  Relay,
  PortalRx,
  TermPortal,
  TermStuck,
  TermDead,
};
const char* to_string(EventKind k);
EventKind event_kind_from_string(std::string_view s);  // throws std::invalid_argument

// One line of the event log. Unused columns hold -1.
struct Event {
  std::int64_t slot = 0;
  EventKind kind = EventKind::Tx;
  int node = -1;
  int channel = -1;
  int msg = -1;
  int ttl = -1;
};

struct HopEntry {
  int node = -1;
  std::int64_t slot = 0;
  int channel = -1;
  int ttl = 0;
};

enum class Terminal { None, DiedInNetwork, StuckAtCmr, ReachedPortal };
const char* to_string(Terminal t);

// A data unit making its way from a surviving primary device toward the
// portal. hop_trace records the injection and every successful reception.
struct Message {
  int msg_id = 0;
  int origin_pr = -1;
  int injector_cr = -1;
  std::int64_t pickup_slot = -1;
  std::int64_t injected_slot = -1;
  int ttl_init = 0;
  bool injected = false;
  bool reached_cmr_neighbor = false;
  bool reached_cmr = false;
  bool reached_portal = false;
  int hops_to_cmr = -1;  // transmissions until first CMR reception
  Terminal terminal = Terminal::None;
  std::vector<HopEntry> hop_trace;
};

struct RegistryEntry {
  int pr_node_id = 0;
  int channel_id = 0;
  std::int64_t last_heard_slot = 0;
};
using InfrastructureRegistry = std::vector<RegistryEntry>;

struct Transmission {
  int sender = 0;
  int channel = 0;
  int msg = 0;
  int ttl = 0;
};

struct PollGrant {
  int cr = 0;
  int channel = 0;
};

struct SimOptions {
  Strategy strategy = Strategy::Surf;
  SimMode mode = SimMode::MultiHop;
  MapMode map_mode = MapMode::Standalone;
  int ttl_init = 8;
  int sense_window = 16;
  int scan_dwell = 1;
  int beacon_period = 4;
  double pr_data_rate = 0.0;
  int holdoff_max = 0;
  double busy_threshold = 0.5;
  int assign_period = 50;
  int queue_cap = 64;
  int warmup_slots = 0;
  double cr_speed = 0.0;  // meters per slot for mobile CR devices
  std::uint64_t seed = 0;
};

// The slotted runtime. Each step() computes all of slot t from the state at
// the start of t and applies the results atomically: PR traffic and beacons,
// injection, PR-data pickup, channel tuning / transmit decisions, reception
// resolution with the collision and PR-priority rules, backbone relaying.
//
// Messages enter either through the pickup pipeline (PR devices generate
// data, CR devices pick it up, a seeded-random picked-up message is injected
// per injection slot) or planted directly for small deterministic scenarios.
class SimWorld {
 public:
  SimWorld(Deployment deployment, std::vector<double> occupancy_per_channel, SimOptions opts);

  // Injection pipeline for full experiments: `messages` injections, the
  // first at the end of warm-up, subsequent ones inject_interval slots
  // apart, each deferred until some CR holds picked-up data.
  void set_message_pipeline(int messages, int inject_interval);

  // Direct injection at a CR for oracle scenarios and unit tests.
  // Returns the message id.
  int plant_injection(int cr_id, std::int64_t slot);

  void step();
  void run_for(std::int64_t slots);
  // Runs until `max_slots` or until every injected message is terminal and
  // no further injection can happen. Classifies terminals at the end.
  void run_until_done(std::int64_t max_slots);
  // Terminal classification of injected messages; idempotent.
  void finalize();

  // One forced dissemination step at the current slot: the given senders
  // transmit the given held messages on their strategy-selected channels,
  // no other data transmissions happen, and the slot completes as usual.
  // Returns successful (receiver, msg) pairs.
  std::vector<std::pair<int, int>> disseminate_step(
      std::span<const std::pair<int, int>> senders_and_msgs);
  std::vector<int> disseminate_step(int sender, int msg_id);

  std::int64_t now() const { return slot_; }
  const Deployment& deployment() const { return deployment_; }
  const SpectrumEnvironment& spectrum() const { return spectrum_; }
  const SimOptions& options() const { return opts_; }
  const std::vector<Message>& messages() const { return messages_; }
  const std::vector<Event>& events() const { return events_; }
  const InfrastructureRegistry& registry(int cr_id) const;
  const OpportunityMap* opportunity_map(int cmr_id) const;
  int listen_channel(int node_id) const;  // previous slot's tuning
  int injected_count() const;
  std::int64_t collision_drop_count() const;

  // Event log text with the replay header (seed, channels, occupancy,
  // ttl_init) followed by one line per event.
  std::string log_text() const;

 private:
  struct CrState {
    InfrastructureRegistry registry;
    std::vector<std::pair<std::int64_t, int>> queue;  // (ready slot, msg)
    bool busy = false;                                // pickup or TX this slot
    int listen = -1;
    int prev_listen = -1;
    int assigned_channel = -1;
    int assoc_cmr = -1;
  };
  struct CmrState {
    std::vector<int> listen;  // sorted channel set this slot
    std::vector<int> poll_order;
    size_t poll_ptr = 0;
    std::optional<OpportunityMap> map;
  };
  struct PrState {
    bool pending_data = false;
  };
  struct RelayEntry {
    int msg = 0;
    int at = 0;
    std::int64_t created = 0;
  };

  void rebuild_geometry();
  void log(std::int64_t slot, EventKind kind, int node, int channel, int msg, int ttl);
  bool holder(int msg, int node) const {
    return (holder_bits_[msg][node >> 6] >> (node & 63)) & 1;
  }
  void mark_holder(int msg, int node, int ttl, std::int64_t slot, int channel);
  double utilization(int node, int channel) const;  // rolling window ending last slot
  int receivers_on(int node, int channel) const;
  int pick_channel(int node) const;
  std::vector<int> rank_channels(int node, int count) const;
  void do_injections();
  void do_pickups();
  void do_assignment_epoch();
  std::vector<PollGrant> cmr_poll(int cmr_id, std::vector<char>& channel_taken);
  void resolve_and_apply(std::vector<Transmission>& txs);
  void relay_tick();
  void update_sensing_ring();
  void move_mobiles();
  bool all_terminal_possible() const;

  Deployment deployment_;
  SpectrumEnvironment spectrum_;
  SimOptions opts_;
  std::int64_t slot_ = 0;

  std::vector<CrState> cr_;  // indexed by node id (empty for non-CR)
  std::vector<CmrState> cmr_;
  std::vector<PrState> pr_;
  std::vector<Message> messages_;
  std::vector<std::vector<std::uint64_t>> holder_bits_;
  std::vector<RelayEntry> relay_;
  std::vector<Event> events_;
  std::int64_t collision_drops_ = 0;

  // Pipeline state.
  int pipeline_messages_ = 0;
  int inject_interval_ = 1;
  int injections_done_ = 0;
  std::int64_t next_inject_slot_ = -1;
  std::vector<std::pair<std::int64_t, int>> plants_;  // (slot, cr), ids assigned in order
  int next_msg_id_ = 0;

  // Geometry and sensing caches.
  std::vector<std::vector<int>> nbrs_;          // ascending ids
  std::vector<std::vector<int>> cr_nbrs_;       // CR-device neighbors only
  std::vector<char> is_cmr_neighbor_;
  std::vector<int> backbone_parent_;            // toward nearest portal, -1 = none
  std::vector<std::vector<int>> pr_in_range_;   // per node*channels: PR indices
  std::vector<char> pr_active_now_;             // per PR index, this slot
  std::vector<std::uint8_t> sense_ring_;        // node*channels*window busy bits
  std::vector<int> sense_sum_;                  // node*channels rolling busy count
  std::vector<int> waypoint_count_;
  std::vector<std::pair<double, double>> waypoint_;
  bool any_mobile_ = false;
  bool finalized_ = false;
};

// Free-standing views over the runtime rules, used directly by tests.

// Channel a scanning CR dwells on during slot `slot` of the cyclic scan.
int scan_channel(std::int64_t slot, int scan_dwell, int channels);

// Runs the discovery rule for one CR at the current slot without advancing
// the world: returns the registry entries the CR would add or refresh.
std::vector<RegistryEntry> discover_infrastructure(const SimWorld& world, int cr_id,
                                                   std::int64_t slot, int listen_channel);

}  // namespace crdrn
