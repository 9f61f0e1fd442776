#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace corridor::net {

enum class NodeKind { signalized, boundary };
enum class NodeRole { target, observed, plain };

// Direction a link arrives from at its downstream node. Fixed order is part of
// the observation layout.
enum class Approach : int { north = 0, east = 1, south = 2, west = 3 };
inline constexpr int kApproachCount = 4;

struct Node {
  std::string id;
  NodeKind kind = NodeKind::boundary;
  NodeRole role = NodeRole::plain;
};

struct Link {
  std::string id;
  std::size_t from = 0;
  std::size_t to = 0;
  double length = 0.0;           // m
  int lanes = 1;
  double free_flow_speed = 0.0;  // m/s
  double saturation_flow = 0.5;  // veh/s/lane
  std::optional<Approach> approach;

  double free_flow_time() const { return length / free_flow_speed; }
};

struct Route {
  std::string id;
  std::vector<std::size_t> links;
};

// Immutable corridor topology. Construction validates every invariant and
// throws ConfigError naming the offending element.
class Network {
 public:
  Network() = default;
  Network(std::vector<Node> nodes, std::vector<Link> links, std::vector<Route> routes);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<Route>& routes() const { return routes_; }
  const Node& node(std::size_t i) const { return nodes_.at(i); }
  const Link& link(std::size_t i) const { return links_.at(i); }
  const Route& route(std::size_t i) const { return routes_.at(i); }

  std::optional<std::size_t> find_node(std::string_view id) const;
  std::optional<std::size_t> find_link(std::string_view id) const;
  std::optional<std::size_t> find_route(std::string_view id) const;

  // Sum of link free-flow times, recomputed on every call.
  double route_free_flow_time(std::size_t route) const;
  double route_distance(std::size_t route) const;

  // Target nodes in document order, then observed nodes in document order.
  const std::vector<std::size_t>& targets() const { return targets_; }
  const std::vector<std::size_t>& observed() const { return observed_; }
  std::vector<std::size_t> observation_nodes() const;

  const std::vector<std::size_t>& incoming(std::size_t node) const { return incoming_[node]; }
  std::optional<std::size_t> incoming(std::size_t node, Approach a) const;

  // Incoming links of every target and observed node: the reward's link set.
  std::vector<std::size_t> monitored_links() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<Route> routes_;
  std::unordered_map<std::string, std::size_t> node_index_;
  std::unordered_map<std::string, std::size_t> link_index_;
  std::unordered_map<std::string, std::size_t> route_index_;
  std::vector<std::vector<std::size_t>> incoming_;
  std::vector<std::size_t> targets_;
  std::vector<std::size_t> observed_;
};

std::string_view to_string(NodeKind k);
std::string_view to_string(NodeRole r);
std::string_view to_string(Approach a);

}  // namespace corridor::net
