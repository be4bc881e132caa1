#include "crdrn/replay.hpp"

#include <map>
#include <set>
#include <sstream>

#include "crdrn/engine.hpp"
#include "crdrn/errors.hpp"
#include "crdrn/spectrum.hpp"

namespace crdrn {

namespace {

struct ParsedLog {
  std::uint64_t seed = 0;
  int channels = 0;
  std::vector<double> occupancy;
  int ttl_init = 0;
  std::vector<Event> events;
  std::vector<int> lines;  // source line per event
};

ParsedLog parse_log(std::string_view text) {
  ParsedLog log;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "seed") hs >> log.seed;
      else if (key == "channels") hs >> log.channels;
      else if (key == "ttl_init") hs >> log.ttl_init;
      else if (key == "occupancy") {
        double p;
        while (hs >> p) log.occupancy.push_back(p);
      }
      continue;
    }
    std::istringstream ls(line);
    Event e;
    std::string kind;
    if (!(ls >> e.slot >> kind >> e.node >> e.channel >> e.msg >> e.ttl))
      throw ParseError(lineno, "expected: slot kind node channel msg ttl");
    try {
      e.kind = event_kind_from_string(kind);
    } catch (const std::invalid_argument& ex) {
      throw ParseError(lineno, ex.what());
    }
    log.events.push_back(e);
    log.lines.push_back(lineno);
  }
  if (log.channels < 1) throw ParseError(0, "missing channels header");
  if (static_cast<int>(log.occupancy.size()) != log.channels)
    throw ParseError(0, "occupancy header does not match channel count");
  return log;
}

}  // namespace

ReplayReport replay_verify(const Deployment& deployment, std::string_view log_text) {
  ParsedLog log = parse_log(log_text);
  ReplayReport report;

  std::vector<ChannelModel> channels(log.channels);
  for (int c = 0; c < log.channels; ++c)
    channels[c] = {c, log.occupancy[c], ChannelModel::default_frequency(c)};
  std::vector<PrTransmitter> prs;
  for (const Node& n : deployment.nodes())
    if (n.role == NodeRole::PrDevice) prs.push_back({n.node_id, n.x, n.y, n.range, n.pr_channel});
  SpectrumEnvironment spectrum(channels, prs, log.seed);

  auto complain = [&](size_t idx, const std::string& what) {
    report.violations.push_back("line " + std::to_string(log.lines[idx]) + ": " + what);
  };

  // Transmissions grouped by (slot, channel) for reception checks.
  std::map<std::pair<std::int64_t, int>, std::vector<size_t>> tx_index;
  for (size_t i = 0; i < log.events.size(); ++i) {
    const Event& e = log.events[i];
    if (e.kind == EventKind::Tx) tx_index[{e.slot, e.channel}].push_back(i);
  }

  std::map<int, std::set<int>> holders;             // msg -> nodes
  std::map<std::pair<int, int>, int> held_ttl;      // (msg, node) -> ttl
  std::set<std::pair<int, int>> transmitted;        // (msg, node)
  std::set<int> injected;

  auto in_range_ids = [&](int a, int b) {
    return in_range(deployment.node(a), deployment.node(b));
  };

  for (size_t i = 0; i < log.events.size(); ++i) {
    const Event& e = log.events[i];
    switch (e.kind) {
      case EventKind::Inject:
        injected.insert(e.msg);
        if (log.ttl_init > 0 && e.ttl != log.ttl_init)
          complain(i, "injection ttl differs from ttl_init header");
        holders[e.msg].insert(e.node);
        held_ttl[{e.msg, e.node}] = e.ttl;
        break;
      case EventKind::Pickup:
        holders[e.msg].insert(e.node);
        held_ttl[{e.msg, e.node}] = e.ttl;
        break;
      case EventKind::Tx: {
        if (!holders[e.msg].count(e.node)) complain(i, "transmitter does not hold the message");
        auto it = held_ttl.find({e.msg, e.node});
        if (it != held_ttl.end() && it->second != e.ttl)
          complain(i, "transmitted ttl differs from held ttl");
        if (e.ttl < 1) complain(i, "transmission with ttl < 1");
        if (!transmitted.insert({e.msg, e.node}).second)
          complain(i, "node transmitted this message twice");
        break;
      }
      case EventKind::Rx: {
        std::vector<size_t> senders;  // all in-range transmissions this slot+channel
        for (size_t ti : tx_index[{e.slot, e.channel}]) {
          const Event& tx = log.events[ti];
          if (tx.node != e.node && in_range_ids(e.node, tx.node)) senders.push_back(ti);
        }
        size_t matching = 0;
        int tx_ttl = -1;
        for (size_t ti : senders)
          if (log.events[ti].msg == e.msg) {
            ++matching;
            tx_ttl = log.events[ti].ttl;
          }
        if (matching == 0) complain(i, "reception without an in-range transmission");
        if (senders.size() > 1) complain(i, "reception despite a same-channel collision");
        if (matching == 1 && e.ttl != tx_ttl - 1)
          complain(i, "received ttl is not transmitted ttl minus one");
        const Node& recv = deployment.node(e.node);
        if (spectrum.channel_busy(e.channel, e.slot, recv.x, recv.y, recv.range))
          complain(i, "reception while the channel was busy with PR activity");
        if (holders[e.msg].count(e.node)) complain(i, "receiver already held the message");
        holders[e.msg].insert(e.node);
        held_ttl[{e.msg, e.node}] = e.ttl;
        break;
      }
      case EventKind::DropCollision: {
        ++report.collision_drops;
        int in_range_txs = 0;
        for (size_t ti : tx_index[{e.slot, e.channel}])
          if (log.events[ti].node != e.node && in_range_ids(e.node, log.events[ti].node))
            ++in_range_txs;
        if (in_range_txs < 2) complain(i, "collision drop without two in-range transmissions");
        break;
      }
      case EventKind::DropPr: {
        const Node& recv = deployment.node(e.node);
        if (!spectrum.channel_busy(e.channel, e.slot, recv.x, recv.y, recv.range))
          complain(i, "PR drop while the channel was idle");
        break;
      }
      default:
        break;
    }
  }

  report.injected = static_cast<int>(injected.size());
  if (report.injected > 0) {
    report.ratio_cmr_neighbor = delivery_ratio_cmr_neighbor(log.events, deployment);
    report.ratio_cmr = delivery_ratio_cmr(log.events, deployment);
    report.ratio_portal = delivery_ratio_portal(log.events, deployment);
  }
  return report;
}

}  // namespace crdrn
