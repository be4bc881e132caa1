#include "crdrn/topology.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "crdrn/errors.hpp"
#include "crdrn/rng.hpp"

namespace crdrn {

const char* to_string(NodeRole role) {
  switch (role) {
    case NodeRole::PrDevice: return "PR";
    case NodeRole::CrDevice: return "CR";
    case NodeRole::Cmr: return "CMR";
    case NodeRole::Portal: return "PORTAL";
  }
  return "?";
}

NodeRole role_from_string(std::string_view s) {
  if (s == "PR") return NodeRole::PrDevice;
  if (s == "CR") return NodeRole::CrDevice;
  if (s == "CMR") return NodeRole::Cmr;
  if (s == "PORTAL") return NodeRole::Portal;
  throw std::invalid_argument("unknown node role: " + std::string(s));
}

double distance(const Node& a, const Node& b) {
  double dx = a.x - b.x, dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

bool in_range(const Node& a, const Node& b) {
  if (a.node_id == b.node_id) return false;
  return distance(a, b) <= std::min(a.range, b.range);
}

Deployment::Deployment(double width, double height, std::vector<Node> nodes, std::uint64_t seed)
    : width_(width), height_(height), nodes_(std::move(nodes)), seed_(seed) {
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    if (nodes_[i].node_id != i) throw std::invalid_argument("node ids must be 0..n-1 in order");
    if (nodes_[i].role == NodeRole::Cmr && nodes_[i].radio_count < 2)
      throw std::invalid_argument("CMR nodes need at least 2 radios");
  }
}

const Node& Deployment::node(int id) const {
  if (id < 0 || id >= node_count()) throw std::out_of_range("unknown node id");
  return nodes_[id];
}

std::vector<int> Deployment::neighbors(int node_id) const {
  const Node& a = node(node_id);
  std::vector<int> out;
  for (const Node& b : nodes_)
    if (in_range(a, b)) out.push_back(b.node_id);
  return out;
}

std::vector<int> Deployment::ids_with_role(NodeRole role) const {
  std::vector<int> out;
  for (const Node& n : nodes_)
    if (n.role == role) out.push_back(n.node_id);
  return out;
}

void Deployment::set_position(int node_id, double x, double y) {
  if (node_id < 0 || node_id >= node_count()) throw std::out_of_range("unknown node id");
  nodes_[node_id].x = x;
  nodes_[node_id].y = y;
}

Deployment deploy_random(const DeploymentConfig& cfg) {
  if (cfg.area_width <= 0) throw ConfigError("area_width", "must be positive");
  if (cfg.area_height <= 0) throw ConfigError("area_height", "must be positive");
  if (cfg.cr_count < 0) throw ConfigError("cr_count", "must be >= 0");
  if (cfg.pr_count < 0) throw ConfigError("pr_count", "must be >= 0");
  if (cfg.cmr_count < 0) throw ConfigError("cmr_count", "must be >= 0");
  if (cfg.channels < 1) throw ConfigError("channels", "must be >= 1");
  if (cfg.cmr_radios < 2) throw ConfigError("cmr_radios", "must be >= 2");

  RngStream rng(hash2(cfg.seed, stream::kDeploy));
  std::vector<Node> nodes;
  int next_id = 0;

  Node portal;
  portal.node_id = next_id++;
  portal.role = NodeRole::Portal;
  portal.x = cfg.area_width / 2.0;
  portal.y = cfg.area_height / 2.0;
  portal.range = cfg.portal_range;
  portal.radio_count = 2;
  nodes.push_back(portal);

  // CMRs: uniform draws, rejected until within range of the portal or a
  // previously placed CMR, so the backbone always reaches the portal.
  for (int i = 0; i < cfg.cmr_count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.placement_retries; ++attempt) {
      Node cmr;
      cmr.node_id = next_id;
      cmr.role = NodeRole::Cmr;
      cmr.x = rng.next_double() * cfg.area_width;
      cmr.y = rng.next_double() * cfg.area_height;
      cmr.range = cfg.cmr_range;
      cmr.radio_count = cfg.cmr_radios;
      bool connected = false;
      for (const Node& other : nodes)
        if ((other.role == NodeRole::Portal || other.role == NodeRole::Cmr) &&
            in_range(cmr, other))
          connected = true;
      if (connected) {
        nodes.push_back(cmr);
        ++next_id;
        placed = true;
        break;
      }
    }
    if (!placed)
      throw DeploymentError("could not place CMR " + std::to_string(i) +
                            " within the backbone after " +
                            std::to_string(cfg.placement_retries) + " attempts");
  }

  for (int i = 0; i < cfg.pr_count; ++i) {
    Node pr;
    pr.node_id = next_id++;
    pr.role = NodeRole::PrDevice;
    pr.x = rng.next_double() * cfg.area_width;
    pr.y = rng.next_double() * cfg.area_height;
    pr.range = cfg.pr_range;
    pr.pr_channel = static_cast<int>(rng.next_below(cfg.channels));
    nodes.push_back(pr);
  }

  for (int i = 0; i < cfg.cr_count; ++i) {
    Node cr;
    cr.node_id = next_id++;
    cr.role = NodeRole::CrDevice;
    cr.x = rng.next_double() * cfg.area_width;
    cr.y = rng.next_double() * cfg.area_height;
    cr.range = cfg.cr_range;
    cr.radio_count = cfg.cr_radios;
    cr.mobile = cfg.mobile_crs;
    nodes.push_back(cr);
  }

  return Deployment(cfg.area_width, cfg.area_height, std::move(nodes), cfg.seed);
}

std::string serialize(const Deployment& d) {
  std::ostringstream out;
  char buf[160];
  out << "# crdrn-deployment v1\n";
  std::snprintf(buf, sizeof(buf), "# area %.6f %.6f\n", d.width(), d.height());
  out << buf;
  out << "# seed " << d.seed() << "\n";
  for (const Node& n : d.nodes()) {
    std::snprintf(buf, sizeof(buf), "%d %s %.6f %.6f %.6f %d %d %d\n", n.node_id,
                  to_string(n.role), n.x, n.y, n.range, n.radio_count, n.pr_channel,
                  n.mobile ? 1 : 0);
    out << buf;
  }
  return out.str();
}

Deployment parse_deployment(std::string_view text) {
  double width = -1, height = -1;
  std::uint64_t seed = 0;
  std::vector<Node> nodes;
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
      if (key == "area") {
        if (!(hs >> width >> height)) throw ParseError(lineno, "bad area header");
      } else if (key == "seed") {
        if (!(hs >> seed)) throw ParseError(lineno, "bad seed header");
      }
      continue;
    }
    std::istringstream ls(line);
    Node n;
    std::string role;
    int mobile = 0;
    if (!(ls >> n.node_id >> role >> n.x >> n.y >> n.range >> n.radio_count >> n.pr_channel >>
          mobile))
      throw ParseError(lineno, "expected: id role x y range radios pr_channel mobile");
    try {
      n.role = role_from_string(role);
    } catch (const std::invalid_argument& e) {
      throw ParseError(lineno, e.what());
    }
    n.mobile = mobile != 0;
    nodes.push_back(n);
  }
  if (width <= 0 || height <= 0) throw ParseError(0, "missing area header");
  return Deployment(width, height, std::move(nodes), seed);
}

}  // namespace crdrn
