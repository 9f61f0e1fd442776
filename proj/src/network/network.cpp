#include "corridor/network/network.hpp"

#include <array>
#include <set>

#include "corridor/core/error.hpp"

namespace corridor::net {

namespace {

std::string at(std::string_view section, std::size_t i) {
  return "network." + std::string(section) + "[" + std::to_string(i) + "]";
}

}  // namespace

Network::Network(std::vector<Node> nodes, std::vector<Link> links, std::vector<Route> routes)
    : nodes_(std::move(nodes)), links_(std::move(links)), routes_(std::move(routes)) {
  if (nodes_.empty()) throw ConfigError("network.nodes", "no nodes");
  if (links_.empty()) throw ConfigError("network.links", "no links");

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.id.empty()) throw ConfigError(at("nodes", i), "empty id");
    if (!node_index_.emplace(n.id, i).second) {
      throw ConfigError(at("nodes", i), "duplicate node id '" + n.id + "'");
    }
    if (n.role != NodeRole::plain && n.kind != NodeKind::signalized) {
      throw ConfigError(at("nodes", i), "target/observed node '" + n.id + "' must be signalized");
    }
    if (n.role == NodeRole::target) targets_.push_back(i);
    if (n.role == NodeRole::observed) observed_.push_back(i);
  }

  incoming_.assign(nodes_.size(), {});
  std::vector<std::array<bool, kApproachCount>> taken(nodes_.size(), {false, false, false, false});
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    const std::string path = at("links", i);
    if (l.id.empty()) throw ConfigError(path, "empty id");
    if (!link_index_.emplace(l.id, i).second) {
      throw ConfigError(path, "duplicate link id '" + l.id + "'");
    }
    if (l.from >= nodes_.size() || l.to >= nodes_.size()) {
      throw ConfigError(path, "link '" + l.id + "' references an unknown node");
    }
    if (l.from == l.to) throw ConfigError(path, "link '" + l.id + "' is a self-loop");
    if (!(l.length > 0.0)) throw ConfigError(path + ".length", "must be > 0");
    if (l.lanes < 1) throw ConfigError(path + ".lanes", "must be >= 1");
    if (!(l.free_flow_speed > 0.0)) throw ConfigError(path + ".free_flow_speed", "must be > 0");
    if (!(l.saturation_flow > 0.0)) throw ConfigError(path + ".saturation_flow", "must be > 0");
    if (l.free_flow_time() < 1.0) {
      throw ConfigError(path, "free-flow traversal of '" + l.id + "' is shorter than one step");
    }
    if (l.approach) {
      auto& slot = taken[l.to][static_cast<int>(*l.approach)];
      if (slot) {
        throw ConfigError(path + ".approach", "node '" + nodes_[l.to].id + "' already has a " +
                                                  std::string(to_string(*l.approach)) + " approach");
      }
      slot = true;
    }
    incoming_[l.to].push_back(i);
  }

  for (std::size_t r = 0; r < routes_.size(); ++r) {
    const Route& route = routes_[r];
    const std::string path = at("routes", r);
    if (!route_index_.emplace(route.id, r).second) {
      throw ConfigError(path, "duplicate route id '" + route.id + "'");
    }
    if (route.links.empty()) throw ConfigError(path + ".links", "route '" + route.id + "' has no links");
    for (std::size_t k = 0; k < route.links.size(); ++k) {
      if (route.links[k] >= links_.size()) {
        throw ConfigError(path + ".links[" + std::to_string(k) + "]", "unknown link");
      }
      if (k > 0 && links_[route.links[k - 1]].to != links_[route.links[k]].from) {
        throw ConfigError(path + ".links[" + std::to_string(k) + "]",
                          "links '" + links_[route.links[k - 1]].id + "' and '" +
                              links_[route.links[k]].id + "' do not share a node");
      }
    }
    if (nodes_[links_[route.links.front()].from].kind != NodeKind::boundary) {
      throw ConfigError(path, "route '" + route.id + "' must start at a boundary node");
    }
    if (nodes_[links_[route.links.back()].to].kind != NodeKind::boundary) {
      throw ConfigError(path, "route '" + route.id + "' must end at a boundary node");
    }
    for (std::size_t k = 0; k + 1 < route.links.size(); ++k) {
      if (nodes_[links_[route.links[k]].to].kind != NodeKind::signalized) {
        throw ConfigError(path, "route '" + route.id + "' passes through a boundary node");
      }
    }
  }
}

std::optional<std::size_t> Network::find_node(std::string_view id) const {
  auto it = node_index_.find(std::string(id));
  return it == node_index_.end() ? std::nullopt : std::optional(it->second);
}

std::optional<std::size_t> Network::find_link(std::string_view id) const {
  auto it = link_index_.find(std::string(id));
  return it == link_index_.end() ? std::nullopt : std::optional(it->second);
}

std::optional<std::size_t> Network::find_route(std::string_view id) const {
  auto it = route_index_.find(std::string(id));
  return it == route_index_.end() ? std::nullopt : std::optional(it->second);
}

double Network::route_free_flow_time(std::size_t route) const {
  double t = 0.0;
  for (std::size_t l : routes_.at(route).links) t += links_[l].free_flow_time();
  return t;
}

double Network::route_distance(std::size_t route) const {
  double d = 0.0;
  for (std::size_t l : routes_.at(route).links) d += links_[l].length;
  return d;
}

std::vector<std::size_t> Network::observation_nodes() const {
  std::vector<std::size_t> out = targets_;
  out.insert(out.end(), observed_.begin(), observed_.end());
  return out;
}

std::optional<std::size_t> Network::incoming(std::size_t node, Approach a) const {
  for (std::size_t l : incoming_.at(node)) {
    if (links_[l].approach == a) return l;
  }
  return std::nullopt;
}

std::vector<std::size_t> Network::monitored_links() const {
  std::set<std::size_t> links;
  for (std::size_t n : observation_nodes()) {
    for (std::size_t l : incoming_[n]) links.insert(l);
  }
  return {links.begin(), links.end()};
}

std::string_view to_string(NodeKind k) {
  return k == NodeKind::signalized ? "signalized" : "boundary";
}

std::string_view to_string(NodeRole r) {
  switch (r) {
    case NodeRole::target: return "target";
    case NodeRole::observed: return "observed";
    case NodeRole::plain: return "plain";
  }
  return "plain";
}

std::string_view to_string(Approach a) {
  switch (a) {
    case Approach::north: return "N";
    case Approach::east: return "E";
    case Approach::south: return "S";
    case Approach::west: return "W";
  }
  return "N";
}

}  // namespace corridor::net
