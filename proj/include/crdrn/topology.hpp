#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace crdrn {

enum class NodeRole { PrDevice, CrDevice, Cmr, Portal };

const char* to_string(NodeRole role);
NodeRole role_from_string(std::string_view s);  // throws std::invalid_argument

struct Node {
  int node_id = 0;
  NodeRole role = NodeRole::CrDevice;
  double x = 0, y = 0;
  double range = 0;  // transmission and sensing radius
  int radio_count = 1;
  int pr_channel = -1;  // PR devices: statically bound channel
  bool mobile = false;
};

// Unit-disk neighbor relation: within min(range_a, range_b), excluding self.
bool in_range(const Node& a, const Node& b);
double distance(const Node& a, const Node& b);

struct DeploymentConfig {
  double area_width = 0, area_height = 0;
  int cr_count = 0, pr_count = 0, cmr_count = 0;
  double cr_range = 0, pr_range = 0, cmr_range = 0, portal_range = 0;
  int cr_radios = 1, cmr_radios = 2;
  int channels = 1;  // PR devices are bound uniformly over these
  bool mobile_crs = false;
  std::uint64_t seed = 0;
  int placement_retries = 1000;  // per CMR, for the backbone invariant
};

// Node ids are assigned in deployment order: portal 0, then CMRs, PR
// devices, CR devices.
class Deployment {
 public:
  Deployment(double width, double height, std::vector<Node> nodes, std::uint64_t seed);

  double width() const { return width_; }
  double height() const { return height_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }

  // Throws std::out_of_range for an unknown id.
  const Node& node(int id) const;

  // All nodes within mutual range of `node_id` (symmetric, irreflexive).
  std::vector<int> neighbors(int node_id) const;

  std::vector<int> ids_with_role(NodeRole role) const;

  // Mobility hook: moves a node. Runtimes own their copy of the deployment.
  void set_position(int node_id, double x, double y);

 private:
  double width_, height_;
  std::vector<Node> nodes_;
  std::uint64_t seed_;
};

// Random deployment: portal at the area center; CMRs drawn uniformly and
// redrawn until each is within range of the portal or an already placed CMR
// (so the backbone reaches the portal); PR and CR devices uniform over the
// area. Throws DeploymentError when the retry budget runs out, ConfigError
// for bad counts or area.
Deployment deploy_random(const DeploymentConfig& cfg);

// Line-oriented text form, one node per line:
//   id role x y range radios pr_channel mobile
std::string serialize(const Deployment& d);
Deployment parse_deployment(std::string_view text);  // throws ParseError

}  // namespace crdrn
