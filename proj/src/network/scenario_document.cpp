#include "corridor/network/scenario_document.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "corridor/core/error.hpp"

namespace corridor::net {

using nlohmann::json;

namespace {

std::string idx(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const json& member(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path, std::string("missing field '") + key + "'");
  return *it;
}

const json& array_member(const json& j, const char* key, const std::string& path) {
  const json& a = member(j, key, path);
  if (!a.is_array()) throw ConfigError(path + "." + key, "expected an array");
  return a;
}

std::string string_member(const json& j, const char* key, const std::string& path) {
  const json& v = member(j, key, path);
  if (!v.is_string()) throw ConfigError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

double number_member(const json& j, const char* key, const std::string& path) {
  const json& v = member(j, key, path);
  if (!v.is_number()) throw ConfigError(path + "." + key, "expected a number");
  return v.get<double>();
}

int int_value(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<int>();
}

int int_member(const json& j, const char* key, const std::string& path) {
  return int_value(member(j, key, path), path + "." + key);
}

Seconds clock_member(const json& j, const char* key, const std::string& path) {
  const std::string text = string_member(j, key, path);
  try {
    return parse_clock(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path + "." + key, e.what());
  }
}

NodeKind parse_kind(const std::string& s, const std::string& path) {
  if (s == "signalized") return NodeKind::signalized;
  if (s == "boundary") return NodeKind::boundary;
  throw ConfigError(path, "unknown node kind '" + s + "'");
}

NodeRole parse_role(const std::string& s, const std::string& path) {
  if (s == "target") return NodeRole::target;
  if (s == "observed") return NodeRole::observed;
  if (s == "plain") return NodeRole::plain;
  throw ConfigError(path, "unknown node role '" + s + "'");
}

Approach parse_approach(const std::string& s, const std::string& path) {
  if (s == "N") return Approach::north;
  if (s == "E") return Approach::east;
  if (s == "S") return Approach::south;
  if (s == "W") return Approach::west;
  throw ConfigError(path, "unknown approach '" + s + "' (expected N, E, S or W)");
}

Network parse_network(const json& j) {
  const std::string path = "network";
  std::vector<Node> nodes;
  std::map<std::string, std::size_t> node_ids;
  const json& jn = array_member(j, "nodes", path);
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const std::string p = idx(path + ".nodes", i);
    Node n;
    n.id = string_member(jn[i], "id", p);
    n.kind = parse_kind(string_member(jn[i], "kind", p), p + ".kind");
    n.role = jn[i].contains("role") ? parse_role(string_member(jn[i], "role", p), p + ".role")
                                    : NodeRole::plain;
    node_ids.emplace(n.id, i);
    nodes.push_back(std::move(n));
  }

  std::vector<Link> links;
  std::map<std::string, std::size_t> link_ids;
  const json& jl = array_member(j, "links", path);
  if (jl.empty()) throw ConfigError(path + ".links", "no links");
  for (std::size_t i = 0; i < jl.size(); ++i) {
    const std::string p = idx(path + ".links", i);
    Link l;
    l.id = string_member(jl[i], "id", p);
    for (const char* end : {"from", "to"}) {
      const std::string node = string_member(jl[i], end, p);
      auto it = node_ids.find(node);
      if (it == node_ids.end()) throw ConfigError(p + "." + end, "unknown node '" + node + "'");
      (std::string_view(end) == "from" ? l.from : l.to) = it->second;
    }
    l.length = number_member(jl[i], "length", p);
    l.lanes = int_member(jl[i], "lanes", p);
    l.free_flow_speed = number_member(jl[i], "free_flow_speed", p);
    if (jl[i].contains("saturation_flow")) l.saturation_flow = number_member(jl[i], "saturation_flow", p);
    if (jl[i].contains("approach")) {
      l.approach = parse_approach(string_member(jl[i], "approach", p), p + ".approach");
    }
    link_ids.emplace(l.id, i);
    links.push_back(std::move(l));
  }

  std::vector<Route> routes;
  const json& jr = array_member(j, "routes", path);
  for (std::size_t i = 0; i < jr.size(); ++i) {
    const std::string p = idx(path + ".routes", i);
    Route r;
    r.id = string_member(jr[i], "id", p);
    const json& rl = array_member(jr[i], "links", p);
    for (std::size_t k = 0; k < rl.size(); ++k) {
      const std::string lp = idx(p + ".links", k);
      if (!rl[k].is_string()) throw ConfigError(lp, "expected a link id");
      const std::string id = rl[k].get<std::string>();
      auto it = link_ids.find(id);
      if (it == link_ids.end()) throw ConfigError(lp, "unknown link '" + id + "'");
      r.links.push_back(it->second);
    }
    routes.push_back(std::move(r));
  }

  Network network(std::move(nodes), std::move(links), std::move(routes));
  if (j.contains("n_target") &&
      network.targets().size() != static_cast<std::size_t>(int_member(j, "n_target", path))) {
    throw ConfigError(path + ".n_target", "declared target count does not match target nodes");
  }
  if (j.contains("n_observed") &&
      network.observed().size() != static_cast<std::size_t>(int_member(j, "n_observed", path))) {
    throw ConfigError(path + ".n_observed", "declared observed count does not match observed nodes");
  }
  return network;
}

std::size_t resolve_link(const Network& net, const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a link id");
  const auto id = v.get<std::string>();
  auto l = net.find_link(id);
  if (!l) throw ConfigError(path, "unknown link '" + id + "'");
  return *l;
}

std::vector<DemandProfile> parse_demand(const json& j, const Network& net) {
  const std::string path = "demand";
  std::vector<DemandProfile> out;
  const json& profiles = array_member(j, "profiles", path);
  std::set<std::string> labels;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const std::string p = idx(path + ".profiles", i);
    DemandProfile prof;
    prof.label = string_member(profiles[i], "label", p);
    if (!labels.insert(prof.label).second) throw ConfigError(p, "duplicate profile '" + prof.label + "'");
    prof.start = clock_member(profiles[i], "start", p);
    prof.end = clock_member(profiles[i], "end", p);
    if (prof.end <= prof.start) throw ConfigError(p, "profile end must follow start");
    if (profiles[i].contains("baseline_schedule")) {
      prof.baseline_schedule = string_member(profiles[i], "baseline_schedule", p);
    }
    const json& entries = array_member(profiles[i], "entries", p);
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const std::string ep = idx(p + ".entries", k);
      DemandEntry e;
      const std::string route = string_member(entries[k], "route", ep);
      auto r = net.find_route(route);
      if (!r) throw ConfigError(ep + ".route", "unknown route '" + route + "'");
      e.route = *r;
      e.start = clock_member(entries[k], "start", ep);
      e.end = clock_member(entries[k], "end", ep);
      e.rate = number_member(entries[k], "rate", ep);
      if (!(e.rate >= 0.0) || !std::isfinite(e.rate)) throw ConfigError(ep + ".rate", "must be >= 0");
      if (e.end <= e.start) throw ConfigError(ep, "entry end must follow start");
      if (e.start < prof.start || e.end > prof.end) {
        throw ConfigError(ep, "entry window outside the profile duration");
      }
      prof.entries.push_back(e);
    }
    out.push_back(std::move(prof));
  }
  return out;
}

std::vector<SignalSpec> parse_signals(const json& j, const Network& net) {
  const std::string path = "signals";
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  std::vector<SignalSpec> out;
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = idx(path, i);
    SignalSpec s;
    const std::string node = string_member(j[i], "node", p);
    auto n = net.find_node(node);
    if (!n) throw ConfigError(p + ".node", "unknown node '" + node + "'");
    if (net.node(*n).kind != NodeKind::signalized) {
      throw ConfigError(p + ".node", "node '" + node + "' is not signalized");
    }
    if (!seen.insert(*n).second) throw ConfigError(p + ".node", "duplicate signal for '" + node + "'");
    s.node = *n;
    if (j[i].contains("offset")) s.offset = int_member(j[i], "offset", p);
    if (s.offset < 0) throw ConfigError(p + ".offset", "must be >= 0");
    const json& phases = array_member(j[i], "phases", p);
    if (phases.size() < 2) throw ConfigError(p + ".phases", "at least 2 phases required");
    double total = 0.0;
    for (std::size_t k = 0; k < phases.size(); ++k) {
      const std::string pp = idx(p + ".phases", k);
      PhaseSpec ph;
      ph.name = phases[k].contains("name") ? string_member(phases[k], "name", pp) : "";
      ph.split = number_member(phases[k], "split", pp);
      if (!(ph.split > 0.0)) throw ConfigError(pp + ".split", "must be > 0");
      total += ph.split;
      const json& moves = array_member(phases[k], "movements", pp);
      for (std::size_t m = 0; m < moves.size(); ++m) {
        const std::string mp = idx(pp + ".movements", m);
        if (!moves[m].is_array() || moves[m].size() != 2) {
          throw ConfigError(mp, "expected [from_link, to_link]");
        }
        const std::size_t from = resolve_link(net, moves[m][0], mp + "[0]");
        const std::size_t to = resolve_link(net, moves[m][1], mp + "[1]");
        if (net.link(from).to != *n || net.link(to).from != *n) {
          throw ConfigError(mp, "movement does not pass through node '" + node + "'");
        }
        ph.movements.emplace_back(from, to);
      }
      s.phases.push_back(std::move(ph));
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError(p + ".phases", "splits must sum to 1");
    out.push_back(std::move(s));
  }
  for (std::size_t n = 0; n < net.nodes().size(); ++n) {
    if (net.node(n).kind == NodeKind::signalized && !seen.count(n)) {
      throw ConfigError(path, "signalized node '" + net.node(n).id + "' has no signal plan");
    }
  }
  return out;
}

std::vector<DetectorSpec> parse_detectors(const json& j, const Network& net) {
  const std::string path = "detectors";
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  std::vector<DetectorSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = idx(path, i);
    DetectorSpec d;
    d.link = resolve_link(net, member(j[i], "link", p), p + ".link");
    const Link& link = net.link(d.link);
    const std::string kind = string_member(j[i], "kind", p);
    if (kind == "advance") {
      d.kind = DetectorKind::advance;
    } else if (kind == "stopbar") {
      d.kind = DetectorKind::stopbar;
    } else {
      throw ConfigError(p + ".kind", "unknown detector kind '" + kind + "'");
    }
    d.position = j[i].contains("position") ? number_member(j[i], "position", p) : 0.0;
    if (d.kind == DetectorKind::stopbar && d.position != 0.0) {
      throw ConfigError(p + ".position", "stopbar detectors sit at position 0");
    }
    if (d.kind == DetectorKind::advance && !(d.position > 0.0 && d.position < link.length)) {
      throw ConfigError(p + ".position", "advance detectors need 0 < position < link length");
    }
    if (net.node(link.to).kind != NodeKind::signalized) {
      throw ConfigError(p + ".link", "detectors are only supported on links into signalized nodes");
    }
    if (j[i].contains("lanes")) {
      const json& lanes = array_member(j[i], "lanes", p);
      std::set<int> uniq;
      for (std::size_t k = 0; k < lanes.size(); ++k) {
        const int lane = int_value(lanes[k], idx(p + ".lanes", k));
        if (lane < 0 || lane >= link.lanes || !uniq.insert(lane).second) {
          throw ConfigError(idx(p + ".lanes", k), "invalid lane index");
        }
        d.lanes.push_back(lane);
      }
      if (d.lanes.empty()) throw ConfigError(p + ".lanes", "detector covers no lanes");
    } else {
      for (int lane = 0; lane < link.lanes; ++lane) d.lanes.push_back(lane);
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<PerturbationSpec> parse_perturbations(const json& j) {
  const std::string path = "perturbations";
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  std::vector<PerturbationSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = idx(path, i);
    PerturbationSpec s;
    s.name = string_member(j[i], "name", p);
    const std::string kind = string_member(j[i], "kind", p);
    if (kind == "demand_surge") {
      s.kind = PerturbationKind::demand_surge;
    } else if (kind == "lane_disruption") {
      s.kind = PerturbationKind::lane_disruption;
    } else {
      throw ConfigError(p + ".kind", "unknown perturbation kind '" + kind + "'");
    }
    s.start = clock_member(j[i], "start", p);
    s.end = clock_member(j[i], "end", p);
    if (s.end <= s.start) throw ConfigError(p, "window end must follow start");
    s.magnitude = number_member(j[i], "magnitude", p);
    if (!(s.magnitude > 0.0)) throw ConfigError(p + ".magnitude", "must be > 0");
    if (s.kind == PerturbationKind::lane_disruption && s.magnitude < 1.0) {
      throw ConfigError(p + ".magnitude", "blocked lanes must be >= 1");
    }
    const json& targets = array_member(j[i], "targets", p);
    for (std::size_t k = 0; k < targets.size(); ++k) {
      if (!targets[k].is_string()) throw ConfigError(idx(p + ".targets", k), "expected an id");
      s.targets.push_back(targets[k].get<std::string>());
    }
    out.push_back(std::move(s));
  }
  return out;
}

json clock(Seconds t) { return format_clock(t); }

}  // namespace

Schedule parse_schedule(const json& j, std::size_t expected_offsets, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of schedule blocks");
  Schedule out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = idx(path, i);
    ScheduleBlock b;
    b.start = clock_member(j[i], "start", p);
    b.end = clock_member(j[i], "end", p);
    if (b.end <= b.start) throw ConfigError(p, "block end must follow start");
    if (j[i].contains("cycle") && !j[i]["cycle"].is_null()) {
      b.cycle = int_member(j[i], "cycle", p);
      if (*b.cycle < 2) throw ConfigError(p + ".cycle", "cycle too short");
    }
    const json& offsets = array_member(j[i], "offsets", p);
    if (expected_offsets != 0 && offsets.size() != expected_offsets) {
      throw ConfigError(p + ".offsets", "expected " + std::to_string(expected_offsets) + " offsets");
    }
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      const int o = int_value(offsets[k], idx(p + ".offsets", k));
      if (o < 0 || o >= 120) throw ConfigError(idx(p + ".offsets", k), "offset outside [0, 120)");
      b.offsets.push_back(o);
    }
    out.push_back(std::move(b));
  }
  return out;
}

json schedule_to_json(const Schedule& s) {
  json out = json::array();
  for (const auto& b : s) {
    json jb = {{"start", clock(b.start)}, {"end", clock(b.end)}};
    if (b.cycle) jb["cycle"] = *b.cycle;
    jb["offsets"] = b.offsets;
    out.push_back(std::move(jb));
  }
  return out;
}

ScenarioDocument load_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("parse failure: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("", "document root must be an object");

  ScenarioDocument doc;
  doc.schema_version = int_member(root, "schema_version", "");
  if (doc.schema_version != kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported schema version " + std::to_string(doc.schema_version));
  }
  doc.name = root.contains("name") ? string_member(root, "name", "") : "";
  doc.network = parse_network(member(root, "network", ""));
  doc.demand = parse_demand(member(root, "demand", ""), doc.network);
  doc.signals = parse_signals(member(root, "signals", ""), doc.network);
  doc.detectors = parse_detectors(member(root, "detectors", ""), doc.network);

  const json& schedules = member(root, "schedules", "");
  if (!schedules.is_object()) throw ConfigError("schedules", "expected an object of named schedules");
  for (auto it = schedules.begin(); it != schedules.end(); ++it) {
    doc.schedules.emplace(it.key(), parse_schedule(it.value(), doc.network.targets().size(),
                                                   "schedules." + it.key()));
  }
  for (std::size_t i = 0; i < doc.demand.size(); ++i) {
    const auto& s = doc.demand[i].baseline_schedule;
    if (!s.empty() && !doc.schedules.count(s)) {
      throw ConfigError(idx("demand.profiles", i) + ".baseline_schedule", "unknown schedule '" + s + "'");
    }
  }
  if (root.contains("perturbations")) doc.perturbations = parse_perturbations(root["perturbations"]);
  return doc;
}

ScenarioDocument load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

json to_json(const ScenarioDocument& doc) {
  const Network& net = doc.network;
  json nodes = json::array();
  for (const auto& n : net.nodes()) {
    nodes.push_back({{"id", n.id}, {"kind", to_string(n.kind)}, {"role", to_string(n.role)}});
  }
  json links = json::array();
  for (const auto& l : net.links()) {
    json jl = {{"id", l.id},
               {"from", net.node(l.from).id},
               {"to", net.node(l.to).id},
               {"length", l.length},
               {"lanes", l.lanes},
               {"free_flow_speed", l.free_flow_speed},
               {"saturation_flow", l.saturation_flow}};
    if (l.approach) jl["approach"] = to_string(*l.approach);
    links.push_back(std::move(jl));
  }
  json routes = json::array();
  for (const auto& r : net.routes()) {
    json ids = json::array();
    for (std::size_t l : r.links) ids.push_back(net.link(l).id);
    routes.push_back({{"id", r.id}, {"links", std::move(ids)}});
  }

  json profiles = json::array();
  for (const auto& p : doc.demand) {
    json entries = json::array();
    for (const auto& e : p.entries) {
      entries.push_back({{"route", net.route(e.route).id},
                         {"start", clock(e.start)},
                         {"end", clock(e.end)},
                         {"rate", e.rate}});
    }
    json jp = {{"label", p.label}, {"start", clock(p.start)}, {"end", clock(p.end)}};
    if (!p.baseline_schedule.empty()) jp["baseline_schedule"] = p.baseline_schedule;
    jp["entries"] = std::move(entries);
    profiles.push_back(std::move(jp));
  }

  json signals = json::array();
  for (const auto& s : doc.signals) {
    json phases = json::array();
    for (const auto& ph : s.phases) {
      json moves = json::array();
      for (const auto& [from, to] : ph.movements) moves.push_back({net.link(from).id, net.link(to).id});
      phases.push_back({{"name", ph.name}, {"split", ph.split}, {"movements", std::move(moves)}});
    }
    signals.push_back({{"node", net.node(s.node).id}, {"offset", s.offset}, {"phases", std::move(phases)}});
  }

  json detectors = json::array();
  for (const auto& d : doc.detectors) {
    detectors.push_back({{"link", net.link(d.link).id},
                         {"kind", to_string(d.kind)},
                         {"position", d.position},
                         {"lanes", d.lanes}});
  }

  json schedules = json::object();
  for (const auto& [name, s] : doc.schedules) schedules[name] = schedule_to_json(s);

  json root = {{"schema_version", doc.schema_version},
               {"name", doc.name},
               {"network",
                {{"n_target", net.targets().size()},
                 {"n_observed", net.observed().size()},
                 {"nodes", std::move(nodes)},
                 {"links", std::move(links)},
                 {"routes", std::move(routes)}}},
               {"demand", {{"profiles", std::move(profiles)}}},
               {"signals", std::move(signals)},
               {"detectors", std::move(detectors)},
               {"schedules", std::move(schedules)}};
  if (!doc.perturbations.empty()) {
    json perts = json::array();
    for (const auto& p : doc.perturbations) {
      perts.push_back({{"name", p.name},
                       {"kind", to_string(p.kind)},
                       {"start", clock(p.start)},
                       {"end", clock(p.end)},
                       {"magnitude", p.magnitude},
                       {"targets", p.targets}});
    }
    root["perturbations"] = std::move(perts);
  }
  return root;
}

std::string serialize(const ScenarioDocument& doc) { return to_json(doc).dump(2); }

const DemandProfile& ScenarioDocument::profile(std::string_view label) const {
  for (const auto& p : demand) {
    if (p.label == label) return p;
  }
  throw ConfigError("demand", "no demand profile labelled '" + std::string(label) + "'");
}

const Schedule& ScenarioDocument::schedule(std::string_view schedule_name) const {
  auto it = schedules.find(std::string(schedule_name));
  if (it == schedules.end()) throw ConfigError("schedules", "unknown schedule '" + std::string(schedule_name) + "'");
  return it->second;
}

const SignalSpec& ScenarioDocument::signal_for(std::size_t node) const {
  for (const auto& s : signals) {
    if (s.node == node) return s;
  }
  throw ConfigError("signals", "no signal plan for node '" + network.node(node).id + "'");
}

const PerturbationSpec& ScenarioDocument::perturbation(std::string_view perturbation_name) const {
  for (const auto& p : perturbations) {
    if (p.name == perturbation_name) return p;
  }
  throw ConfigError("perturbations", "unknown perturbation '" + std::string(perturbation_name) + "'");
}

std::string_view to_string(DetectorKind k) { return k == DetectorKind::advance ? "advance" : "stopbar"; }

std::string_view to_string(PerturbationKind k) {
  return k == PerturbationKind::demand_surge ? "demand_surge" : "lane_disruption";
}

}  // namespace corridor::net
