#pragma once

// Scenario configuration: topology, sessions, adversaries and every tunable
// constant, loaded from JSON and validated before a run.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "secmon/covert_channel.hpp"
#include "secmon/ids.hpp"
#include "secmon/packet.hpp"
#include "secmon/qos_monitor.hpp"
#include "secmon/reputation.hpp"

namespace secmon {

/// Schema violation; `field()` is the dotted path of the offending value.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& msg)
      : std::runtime_error(field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct NodeSpec {
  NodeId id = 0;
  double capacity_pps = 0.0;  // 0 = unlimited
  std::size_t queue_limit = 50;
  bool ids = true;
};

struct LinkSpec {
  NodeId from = 0;
  NodeId to = 0;
  double delay_ms = 10.0;
  double jitter_ms = 0.0;
  double loss = 0.0;
  bool bidirectional = true;
};

struct Topology {
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;

  /// Directed adjacency expanded from bidirectional links.
  std::map<NodeId, std::set<NodeId>> adjacency() const {
    std::map<NodeId, std::set<NodeId>> adj;
    for (const auto& n : nodes) adj[n.id];
    for (const auto& l : links) {
      adj[l.from].insert(l.to);
      if (l.bidirectional) adj[l.to].insert(l.from);
    }
    return adj;
  }

  std::map<std::pair<NodeId, NodeId>, LinkSpec> directed_links() const {
    std::map<std::pair<NodeId, NodeId>, LinkSpec> out;
    for (const auto& l : links) {
      out[{l.from, l.to}] = l;
      if (l.bidirectional) {
        LinkSpec r = l;
        std::swap(r.from, r.to);
        out.try_emplace({r.from, r.to}, r);
      }
    }
    return out;
  }
};

struct SessionSpec {
  FlowId id = 0;
  NodeId source = 0;
  NodeId destination = 0;
  TimeMs start_ms = 0;
  std::optional<TimeMs> end_ms;  // defaults to the horizon
  TimeMs cadence_ms = 20;
  bool reroute = true;
  std::vector<NodeId> path;  // empty = computed
};

enum class Behavior { Tamper, Replay, Reorder, Drop, Jitter, Flood, LieVotes };

inline std::string_view to_string(Behavior b) {
  switch (b) {
    case Behavior::Tamper: return "TAMPER";
    case Behavior::Replay: return "REPLAY";
    case Behavior::Reorder: return "REORDER";
    case Behavior::Drop: return "DROP";
    case Behavior::Jitter: return "JITTER";
    case Behavior::Flood: return "FLOOD";
    case Behavior::LieVotes: return "LIE_VOTES";
  }
  return "?";
}

inline std::optional<Behavior> behavior_from_string(std::string_view s) {
  for (auto b : {Behavior::Tamper, Behavior::Replay, Behavior::Reorder, Behavior::Drop, Behavior::Jitter,
                 Behavior::Flood, Behavior::LieVotes})
    if (to_string(b) == s) return b;
  return std::nullopt;
}

struct AdversarySpec {
  NodeId node = 0;
  Behavior behavior = Behavior::Drop;
  TimeMs start_ms = 0;
  std::optional<TimeMs> end_ms;
  double rate = 1.0;              // TAMPER: per-packet probability
  std::size_t samples = 4;        // TAMPER: samples flipped per tampered packet
  int bit = 8;                    // TAMPER: flipped bit
  std::size_t depth = 5;          // REPLAY: windows back; REORDER: held packets
  double extra_loss = 0.0;        // DROP
  double extra_jitter_ms = 0.0;   // JITTER
  double rate_pps = 0.0;          // FLOOD
  std::optional<NodeId> target;   // FLOOD: neighbor receiving the flood
  std::size_t flood_bytes = 200;  // FLOOD: packet size
};

struct Constants {
  MonitorConfig monitor;
  ReputationParams reputation;
  IdsParams ids;
  bool ids_cusum = false;
  FieldMap field_map = FieldMap::default_map();
  int qim_step = 64;
  std::size_t qim_bits_per_frame = 16;
  std::size_t frames_per_window = 10;
  std::optional<TimeMs> epoch_ms;  // defaults to one observation window

  TimeMs epoch() const { return epoch_ms.value_or(monitor.window_ms()); }
};

struct ScenarioConfig {
  std::string name = "custom";
  std::string description;
  std::uint64_t seed = 42;
  TimeMs horizon_ms = 60000;
  Topology topology;
  std::vector<SessionSpec> sessions;
  std::vector<AdversarySpec> adversaries;
  Constants constants;
  bool trace = false;

  TimeMs session_end(const SessionSpec& s) const { return s.end_ms.value_or(horizon_ms); }
  TimeMs adversary_end(const AdversarySpec& a) const { return a.end_ms.value_or(horizon_ms); }
  const NodeSpec* node(NodeId id) const {
    for (const auto& n : topology.nodes)
      if (n.id == id) return &n;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

using nlohmann::json;

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline void allow_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "must be an object");
  for (const auto& [k, _] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError(join(path, k), "unknown field");
}

template <class T>
T get(const json& j, const std::string& path, const std::string& key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(join(path, key), "must be a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError(join(path, key), "must be a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError(join(path, key), "must be an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (!it->is_number_unsigned() && it->get<std::int64_t>() < 0)
          throw ConfigError(join(path, key), "must be non-negative");
    } else {
      if (!it->is_number()) throw ConfigError(join(path, key), "must be a number");
    }
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(join(path, key), e.what());
  }
}

template <class T>
T require(const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(join(path, key), "required field missing");
  return get<T>(j, path, key, T{});
}

inline void check(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ConfigError(field, msg);
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const nlohmann::json& j) {
  using namespace detail;
  ScenarioConfig c;
  allow_keys(j, "", {"name", "description", "seed", "horizon_ms", "topology", "sessions", "adversaries", "constants",
                     "trace"});
  c.name = get<std::string>(j, "", "name", c.name);
  c.description = get<std::string>(j, "", "description", "");
  c.seed = get<std::uint64_t>(j, "", "seed", c.seed);
  c.horizon_ms = get<TimeMs>(j, "", "horizon_ms", c.horizon_ms);
  c.trace = get<bool>(j, "", "trace", false);

  if (!j.contains("topology")) throw ConfigError("topology", "required field missing");
  const auto& jt = j.at("topology");
  allow_keys(jt, "topology", {"nodes", "links"});
  if (!jt.contains("nodes") || !jt.at("nodes").is_array()) throw ConfigError("topology.nodes", "must be an array");
  for (std::size_t i = 0; i < jt.at("nodes").size(); ++i) {
    const auto& jn = jt.at("nodes")[i];
    const std::string p = "topology.nodes[" + std::to_string(i) + "]";
    if (jn.is_number_integer()) {
      check(jn.get<std::int64_t>() >= 0, p, "node id must be non-negative");
      c.topology.nodes.push_back({jn.get<NodeId>()});
      continue;
    }
    allow_keys(jn, p, {"id", "capacity_pps", "queue_limit", "ids"});
    NodeSpec n;
    n.id = require<NodeId>(jn, p, "id");
    n.capacity_pps = get<double>(jn, p, "capacity_pps", n.capacity_pps);
    n.queue_limit = get<std::size_t>(jn, p, "queue_limit", n.queue_limit);
    n.ids = get<bool>(jn, p, "ids", n.ids);
    c.topology.nodes.push_back(n);
  }
  if (jt.contains("links")) {
    if (!jt.at("links").is_array()) throw ConfigError("topology.links", "must be an array");
    for (std::size_t i = 0; i < jt.at("links").size(); ++i) {
      const auto& jl = jt.at("links")[i];
      const std::string p = "topology.links[" + std::to_string(i) + "]";
      allow_keys(jl, p, {"from", "to", "delay_ms", "jitter_ms", "loss", "bidirectional"});
      LinkSpec l;
      l.from = require<NodeId>(jl, p, "from");
      l.to = require<NodeId>(jl, p, "to");
      l.delay_ms = get<double>(jl, p, "delay_ms", l.delay_ms);
      l.jitter_ms = get<double>(jl, p, "jitter_ms", l.jitter_ms);
      l.loss = get<double>(jl, p, "loss", l.loss);
      l.bidirectional = get<bool>(jl, p, "bidirectional", l.bidirectional);
      c.topology.links.push_back(l);
    }
  }

  if (j.contains("sessions")) {
    if (!j.at("sessions").is_array()) throw ConfigError("sessions", "must be an array");
    for (std::size_t i = 0; i < j.at("sessions").size(); ++i) {
      const auto& js = j.at("sessions")[i];
      const std::string p = "sessions[" + std::to_string(i) + "]";
      allow_keys(js, p, {"id", "source", "destination", "start_ms", "end_ms", "cadence_ms", "reroute", "path"});
      SessionSpec s;
      s.id = get<FlowId>(js, p, "id", static_cast<FlowId>(i + 1));
      s.source = require<NodeId>(js, p, "source");
      s.destination = require<NodeId>(js, p, "destination");
      s.start_ms = get<TimeMs>(js, p, "start_ms", s.start_ms);
      if (js.contains("end_ms")) s.end_ms = get<TimeMs>(js, p, "end_ms", 0);
      s.cadence_ms = get<TimeMs>(js, p, "cadence_ms", s.cadence_ms);
      s.reroute = get<bool>(js, p, "reroute", s.reroute);
      if (js.contains("path")) {
        const auto& jp = js.at("path");
        check(jp.is_array(), p + ".path", "must be an array of node ids");
        for (const auto& x : jp) {
          check(x.is_number_integer() && x.get<std::int64_t>() >= 0, p + ".path", "must be an array of node ids");
          s.path.push_back(x.get<NodeId>());
        }
      }
      c.sessions.push_back(s);
    }
  }

  if (j.contains("adversaries")) {
    if (!j.at("adversaries").is_array()) throw ConfigError("adversaries", "must be an array");
    for (std::size_t i = 0; i < j.at("adversaries").size(); ++i) {
      const auto& ja = j.at("adversaries")[i];
      const std::string p = "adversaries[" + std::to_string(i) + "]";
      allow_keys(ja, p, {"node", "behavior", "start_ms", "end_ms", "rate", "samples", "bit", "depth", "extra_loss",
                         "extra_jitter_ms", "rate_pps", "target", "flood_bytes"});
      AdversarySpec a;
      a.node = require<NodeId>(ja, p, "node");
      const auto name = require<std::string>(ja, p, "behavior");
      auto b = behavior_from_string(name);
      if (!b)
        throw ConfigError(p + ".behavior",
                          "unknown behavior '" + name + "' (TAMPER, REPLAY, REORDER, DROP, JITTER, FLOOD, LIE_VOTES)");
      a.behavior = *b;
      a.start_ms = get<TimeMs>(ja, p, "start_ms", a.start_ms);
      if (ja.contains("end_ms")) a.end_ms = get<TimeMs>(ja, p, "end_ms", 0);
      a.rate = get<double>(ja, p, "rate", a.rate);
      a.samples = get<std::size_t>(ja, p, "samples", a.samples);
      a.bit = get<int>(ja, p, "bit", a.bit);
      a.depth = get<std::size_t>(ja, p, "depth", a.depth);
      a.extra_loss = get<double>(ja, p, "extra_loss", a.extra_loss);
      a.extra_jitter_ms = get<double>(ja, p, "extra_jitter_ms", a.extra_jitter_ms);
      a.rate_pps = get<double>(ja, p, "rate_pps", a.rate_pps);
      if (ja.contains("target")) a.target = get<NodeId>(ja, p, "target", 0);
      a.flood_bytes = get<std::size_t>(ja, p, "flood_bytes", a.flood_bytes);
      c.adversaries.push_back(a);
    }
  }

  if (j.contains("constants")) {
    const auto& jc = j.at("constants");
    allow_keys(jc, "constants", {"monitor", "reputation", "ids", "covert", "epoch_ms"});
    auto& k = c.constants;
    if (jc.contains("epoch_ms")) k.epoch_ms = get<TimeMs>(jc, "constants", "epoch_ms", 0);
    if (jc.contains("monitor")) {
      const auto& jm = jc.at("monitor");
      const std::string p = "constants.monitor";
      allow_keys(jm, p, {"delta_t_ms", "window_len", "window_mode", "count_mode", "delta_avg", "delta_std"});
      auto& m = k.monitor;
      m.delta_t_ms = get<TimeMs>(jm, p, "delta_t_ms", m.delta_t_ms);
      m.window_len = get<std::size_t>(jm, p, "window_len", m.window_len);
      const auto wm = get<std::string>(jm, p, "window_mode", m.window_mode == WindowMode::Moving ? "moving" : "jumping");
      check(wm == "moving" || wm == "jumping", p + ".window_mode", "must be \"moving\" or \"jumping\"");
      m.window_mode = wm == "moving" ? WindowMode::Moving : WindowMode::Jumping;
      const auto cm = get<std::string>(jm, p, "count_mode", m.count_mode == CountMode::Packets ? "packets" : "bytes");
      check(cm == "packets" || cm == "bytes", p + ".count_mode", "must be \"packets\" or \"bytes\"");
      m.count_mode = cm == "packets" ? CountMode::Packets : CountMode::Bytes;
      m.delta_avg = get<double>(jm, p, "delta_avg", m.delta_avg);
      m.delta_std = get<double>(jm, p, "delta_std", m.delta_std);
    }
    if (jc.contains("reputation")) {
      const auto& jr = jc.at("reputation");
      const std::string p = "constants.reputation";
      allow_keys(jr, p, {"alpha", "beta", "gamma", "epsilon", "oe_prior", "ir_prior", "min_overlap", "rho_min",
                         "unvalidated_ir_cap", "pr_prior", "ssr_ok_threshold", "psr_ok_threshold", "share_budget"});
      auto& r = k.reputation;
      r.alpha = get<double>(jr, p, "alpha", r.alpha);
      r.beta = get<double>(jr, p, "beta", r.beta);
      r.gamma = get<double>(jr, p, "gamma", r.gamma);
      r.epsilon = get<double>(jr, p, "epsilon", r.epsilon);
      r.oe_prior = get<double>(jr, p, "oe_prior", r.oe_prior);
      r.ir_prior = get<double>(jr, p, "ir_prior", r.ir_prior);
      r.min_overlap = get<std::size_t>(jr, p, "min_overlap", r.min_overlap);
      r.rho_min = get<double>(jr, p, "rho_min", r.rho_min);
      r.unvalidated_ir_cap = get<double>(jr, p, "unvalidated_ir_cap", r.unvalidated_ir_cap);
      r.pr_prior = get<double>(jr, p, "pr_prior", r.pr_prior);
      r.ssr_ok_threshold = get<double>(jr, p, "ssr_ok_threshold", r.ssr_ok_threshold);
      r.psr_ok_threshold = get<double>(jr, p, "psr_ok_threshold", r.psr_ok_threshold);
      r.share_budget = get<std::size_t>(jr, p, "share_budget", r.share_budget);
    }
    if (jc.contains("ids")) {
      const auto& ji = jc.at("ids");
      const std::string p = "constants.ids";
      allow_keys(ji, p, {"k", "consecutive", "learn_len", "sigma_min", "cusum"});
      k.ids.k = get<double>(ji, p, "k", k.ids.k);
      k.ids.consecutive = get<std::size_t>(ji, p, "consecutive", k.ids.consecutive);
      k.ids.learn_len = get<std::size_t>(ji, p, "learn_len", k.ids.learn_len);
      k.ids.sigma_min = get<double>(ji, p, "sigma_min", k.ids.sigma_min);
      k.ids_cusum = get<bool>(ji, p, "cusum", k.ids_cusum);
    }
    if (jc.contains("covert")) {
      const auto& jv = jc.at("covert");
      const std::string p = "constants.covert";
      allow_keys(jv, p, {"field_map", "qim_step", "qim_bits_per_frame", "frames_per_window"});
      k.qim_step = get<int>(jv, p, "qim_step", k.qim_step);
      k.qim_bits_per_frame = get<std::size_t>(jv, p, "qim_bits_per_frame", k.qim_bits_per_frame);
      k.frames_per_window = get<std::size_t>(jv, p, "frames_per_window", k.frames_per_window);
      if (jv.contains("field_map")) {
        const auto& jf = jv.at("field_map");
        check(jf.is_array(), p + ".field_map", "must be an array");
        std::vector<FieldSlot> slots;
        for (std::size_t i = 0; i < jf.size(); ++i) {
          const std::string fp = p + ".field_map[" + std::to_string(i) + "]";
          allow_keys(jf[i], fp, {"field", "offset", "width"});
          const auto fname = require<std::string>(jf[i], fp, "field");
          auto f = covert_field_from_string(fname);
          check(f.has_value(), fp + ".field", "unknown header field '" + fname + "'");
          FieldSlot s{*f, 0, field_width(*f)};
          s.offset = get<unsigned>(jf[i], fp, "offset", 0);
          s.width = get<unsigned>(jf[i], fp, "width", field_width(*f) - s.offset);
          slots.push_back(s);
        }
        try {
          k.field_map = FieldMap(std::move(slots));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(p + ".field_map", e.what());
        }
      }
    }
  }
  return c;
}

/// Domain and consistency checks; the first violation throws ConfigError.
inline void validate(const ScenarioConfig& c) {
  using detail::check;
  check(c.horizon_ms > 0, "horizon_ms", "must be > 0");
  check(!c.topology.nodes.empty(), "topology.nodes", "must not be empty");
  std::set<NodeId> ids;
  for (std::size_t i = 0; i < c.topology.nodes.size(); ++i) {
    const auto& n = c.topology.nodes[i];
    const std::string p = "topology.nodes[" + std::to_string(i) + "]";
    check(ids.insert(n.id).second, p + ".id", "duplicate node id " + std::to_string(n.id));
    check(n.capacity_pps >= 0.0, p + ".capacity_pps", "must be >= 0");
    check(n.queue_limit >= 1, p + ".queue_limit", "must be >= 1");
  }
  for (std::size_t i = 0; i < c.topology.links.size(); ++i) {
    const auto& l = c.topology.links[i];
    const std::string p = "topology.links[" + std::to_string(i) + "]";
    check(ids.count(l.from), p + ".from", "unknown node " + std::to_string(l.from));
    check(ids.count(l.to), p + ".to", "unknown node " + std::to_string(l.to));
    check(l.from != l.to, p, "self-loop");
    check(l.delay_ms >= 0.0, p + ".delay_ms", "must be >= 0");
    check(l.jitter_ms >= 0.0, p + ".jitter_ms", "must be >= 0");
    check(l.loss >= 0.0 && l.loss <= 1.0, p + ".loss", "must be in [0,1]");
  }

  const auto& k = c.constants;
  auto wrap = [](const std::string& field, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(field, e.what());
    } catch (const std::domain_error& e) {
      throw ConfigError(field, e.what());
    }
  };
  wrap("constants.monitor", [&] { k.monitor.validate(); });
  wrap("constants.reputation", [&] { k.reputation.validate(); });
  wrap("constants.ids", [&] { k.ids.validate(); });
  check(k.qim_step >= 2 && k.qim_step % 2 == 0, "constants.covert.qim_step", "must be a positive even integer");
  check(k.qim_bits_per_frame >= 16 && k.qim_bits_per_frame % 8 == 0 && k.qim_bits_per_frame <= 160,
        "constants.covert.qim_bits_per_frame", "must be a multiple of 8 in [16,160]");
  check(k.frames_per_window >= 3, "constants.covert.frames_per_window", "must be >= 3");
  check(k.field_map.total_width() >= 32, "constants.covert.field_map",
        "carries " + std::to_string(k.field_map.total_width()) + " bits, a control word needs 32");
  check(k.epoch() > 0 && k.epoch() % k.monitor.delta_t_ms == 0, "constants.epoch_ms",
        "must be a positive multiple of delta_t_ms");

  const auto adj = c.topology.adjacency();
  auto reachable = [&](NodeId a, NodeId b) {
    std::set<NodeId> seen{a};
    std::deque<NodeId> q{a};
    while (!q.empty()) {
      auto u = q.front();
      q.pop_front();
      if (u == b) return true;
      for (auto v : adj.at(u))
        if (seen.insert(v).second) q.push_back(v);
    }
    return false;
  };

  std::set<FlowId> flows;
  for (std::size_t i = 0; i < c.sessions.size(); ++i) {
    const auto& s = c.sessions[i];
    const std::string p = "sessions[" + std::to_string(i) + "]";
    check(flows.insert(s.id).second, p + ".id", "duplicate session id " + std::to_string(s.id));
    check(s.id < 1000000, p + ".id", "must be < 1000000");
    check(ids.count(s.source), p + ".source", "unknown node " + std::to_string(s.source));
    check(ids.count(s.destination), p + ".destination", "unknown node " + std::to_string(s.destination));
    check(s.source != s.destination, p + ".destination", "must differ from source");
    check(s.cadence_ms > 0 && k.monitor.delta_t_ms % s.cadence_ms == 0, p + ".cadence_ms",
          "must be positive and divide delta_t_ms");
    check(s.start_ms >= 0 && s.start_ms < c.session_end(s), p + ".start_ms", "must be >= 0 and before end_ms");
    check(c.session_end(s) <= c.horizon_ms, p + ".end_ms", "must not exceed horizon_ms");
    check(reachable(s.source, s.destination), p, "source and destination are disconnected");
    if (!s.path.empty()) {
      check(s.path.front() == s.source && s.path.back() == s.destination, p + ".path",
            "must start at source and end at destination");
      for (std::size_t h = 0; h + 1 < s.path.size(); ++h)
        check(adj.count(s.path[h]) && adj.at(s.path[h]).count(s.path[h + 1]), p + ".path",
              "no link " + std::to_string(s.path[h]) + "->" + std::to_string(s.path[h + 1]));
      check(std::set<NodeId>(s.path.begin(), s.path.end()).size() == s.path.size(), p + ".path",
            "must not revisit a node");
    }
  }

  for (std::size_t i = 0; i < c.adversaries.size(); ++i) {
    const auto& a = c.adversaries[i];
    const std::string p = "adversaries[" + std::to_string(i) + "]";
    check(ids.count(a.node), p + ".node", "unknown node " + std::to_string(a.node));
    check(a.start_ms >= 0 && a.start_ms < c.adversary_end(a), p + ".start_ms", "must be >= 0 and before end_ms");
    check(c.adversary_end(a) <= c.horizon_ms, p + ".end_ms", "active interval must lie within horizon_ms");
    switch (a.behavior) {
      case Behavior::Tamper:
        check(a.rate >= 0.0 && a.rate <= 1.0, p + ".rate", "must be in [0,1]");
        check(a.samples >= 1, p + ".samples", "must be >= 1");
        check(a.bit >= 0 && a.bit < 16, p + ".bit", "must be in [0,15]");
        break;
      case Behavior::Replay:
      case Behavior::Reorder: check(a.depth >= 1, p + ".depth", "must be >= 1"); break;
      case Behavior::Drop:
        check(a.extra_loss >= 0.0 && a.extra_loss <= 1.0, p + ".extra_loss", "must be in [0,1]");
        break;
      case Behavior::Jitter: check(a.extra_jitter_ms >= 0.0, p + ".extra_jitter_ms", "must be >= 0"); break;
      case Behavior::Flood:
        check(a.rate_pps > 0.0, p + ".rate_pps", "must be > 0");
        check(a.target.has_value(), p + ".target", "required for FLOOD");
        check(adj.at(a.node).count(*a.target), p + ".target", "must be a neighbor of the flooding node");
        check(a.flood_bytes >= 28, p + ".flood_bytes", "must be >= 28");
        break;
      case Behavior::LieVotes: break;
    }
  }
}

inline ScenarioConfig load_scenario(const nlohmann::json& j) {
  auto c = parse_scenario(j);
  validate(c);
  return c;
}

inline ScenarioConfig load_scenario_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<document>", e.what());
  }
  return load_scenario(j);
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario_text(ss.str());
}

/// Full serialization with every default spelled out.
inline nlohmann::json to_json(const ScenarioConfig& c) {
  using nlohmann::json;
  json j;
  j["name"] = c.name;
  j["description"] = c.description;
  j["seed"] = c.seed;
  j["horizon_ms"] = c.horizon_ms;
  j["trace"] = c.trace;
  json nodes = json::array(), links = json::array();
  for (const auto& n : c.topology.nodes)
    nodes.push_back({{"id", n.id}, {"capacity_pps", n.capacity_pps}, {"queue_limit", n.queue_limit}, {"ids", n.ids}});
  for (const auto& l : c.topology.links)
    links.push_back({{"from", l.from},
                     {"to", l.to},
                     {"delay_ms", l.delay_ms},
                     {"jitter_ms", l.jitter_ms},
                     {"loss", l.loss},
                     {"bidirectional", l.bidirectional}});
  j["topology"] = {{"nodes", nodes}, {"links", links}};
  j["sessions"] = json::array();
  for (const auto& s : c.sessions) {
    json js{{"id", s.id},           {"source", s.source},         {"destination", s.destination},
            {"start_ms", s.start_ms}, {"cadence_ms", s.cadence_ms}, {"reroute", s.reroute}};
    if (s.end_ms) js["end_ms"] = *s.end_ms;
    if (!s.path.empty()) js["path"] = s.path;
    j["sessions"].push_back(js);
  }
  j["adversaries"] = json::array();
  for (const auto& a : c.adversaries) {
    json ja{{"node", a.node},
            {"behavior", std::string(to_string(a.behavior))},
            {"start_ms", a.start_ms},
            {"rate", a.rate},
            {"samples", a.samples},
            {"bit", a.bit},
            {"depth", a.depth},
            {"extra_loss", a.extra_loss},
            {"extra_jitter_ms", a.extra_jitter_ms},
            {"rate_pps", a.rate_pps},
            {"flood_bytes", a.flood_bytes}};
    if (a.end_ms) ja["end_ms"] = *a.end_ms;
    if (a.target) ja["target"] = *a.target;
    j["adversaries"].push_back(ja);
  }
  const auto& k = c.constants;
  const auto& m = k.monitor;
  const auto& r = k.reputation;
  json fm = json::array();
  for (const auto& s : k.field_map.slots())
    fm.push_back({{"field", std::string(to_string(s.field))}, {"offset", s.offset}, {"width", s.width}});
  j["constants"] = {
      {"monitor",
       {{"delta_t_ms", m.delta_t_ms},
        {"window_len", m.window_len},
        {"window_mode", m.window_mode == WindowMode::Moving ? "moving" : "jumping"},
        {"count_mode", m.count_mode == CountMode::Packets ? "packets" : "bytes"},
        {"delta_avg", m.delta_avg},
        {"delta_std", m.delta_std}}},
      {"reputation",
       {{"alpha", r.alpha},
        {"beta", r.beta},
        {"gamma", r.gamma},
        {"epsilon", r.epsilon},
        {"oe_prior", r.oe_prior},
        {"ir_prior", r.ir_prior},
        {"min_overlap", r.min_overlap},
        {"rho_min", r.rho_min},
        {"unvalidated_ir_cap", r.unvalidated_ir_cap},
        {"pr_prior", r.pr_prior},
        {"ssr_ok_threshold", r.ssr_ok_threshold},
        {"psr_ok_threshold", r.psr_ok_threshold},
        {"share_budget", r.share_budget}}},
      {"ids",
       {{"k", k.ids.k},
        {"consecutive", k.ids.consecutive},
        {"learn_len", k.ids.learn_len},
        {"sigma_min", k.ids.sigma_min},
        {"cusum", k.ids_cusum}}},
      {"covert",
       {{"field_map", fm},
        {"qim_step", k.qim_step},
        {"qim_bits_per_frame", k.qim_bits_per_frame},
        {"frames_per_window", k.frames_per_window}}},
      {"epoch_ms", k.epoch()}};
  return j;
}

}  // namespace secmon
