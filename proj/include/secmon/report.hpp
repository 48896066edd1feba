#pragma once

// Run outputs: per-module log rows, per-session counters, reroute events,
// and their CSV/JSON renderings.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "secmon/ids.hpp"
#include "secmon/packet.hpp"
#include "secmon/reputation.hpp"

namespace secmon {

struct QosRow {
  TimeMs time = 0;
  NodeId node = 0;
  FlowId flow = 0;
  std::int64_t interval = 0;
  std::uint8_t avg_q = 0, std_q = 0;  // receiver side
  bool psr_ok = true;
  double rel_avg_drop = 0.0, rel_std_increase = 0.0;
};

struct SecurityRow {
  TimeMs time = 0;
  NodeId node = 0;
  FlowId flow = 0;
  std::uint64_t window = 0;
  std::optional<bool> ssr_ok;  // empty: window incomplete at this node
  std::string cause;
};

struct ReputationRow {
  TimeMs time = 0;
  std::uint64_t epoch = 0;
  NodeId node = 0;
  NodeId subject = 0;
  Context context = Context::Psr;
  std::optional<double> oe;
  double sr = 0, cr = 0, pr = 0;
  std::optional<Action> action;  // set when the node had evidence about the subject
};

struct VoterRow {
  TimeMs time = 0;
  std::uint64_t epoch = 0;
  NodeId node = 0;
  NodeId voter = 0;
  Context context = Context::Psr;
  double ir = 0;
  VoteStatus status = VoteStatus::Unvalidated;
  std::optional<double> correlation;
};

struct AlarmRow {
  TimeMs time = 0;
  NodeId node = 0;
  std::int64_t interval = 0;
  Metric metric = Metric::PacketRate;
  double value = 0, threshold = 0;
  AttackType type = AttackType::Flood;
  std::optional<NodeId> suspected;
};

struct RerouteEvent {
  TimeMs time = 0;
  FlowId session = 0;
  NodeId decider = 0;
  NodeId subject = 0;
  Action trigger = Action::Monitor;
  std::vector<NodeId> old_path, new_path;
  std::vector<NodeId> isolated, avoided;
  bool same_path = false;
  bool flagged = false;     // endpoint could not be excluded
  bool terminated = false;  // no path left
};

struct SessionStats {
  FlowId id = 0;
  NodeId source = 0, destination = 0;
  std::uint64_t injected = 0, delivered = 0, dropped_link = 0, dropped_adversary = 0, in_flight = 0;
  bool reconciled = false;
  bool terminated = false;
  std::vector<NodeId> initial_path, final_path;
  std::vector<std::uint64_t> sent_per_second, delivered_per_second;  // by send time
  std::uint64_t covert_length_mismatch = 0;

  double delivered_fraction() const {
    return injected == 0 ? 0.0 : static_cast<double>(delivered) / static_cast<double>(injected);
  }
  /// Delivery ratio over packets sent in [from_s, to_s).
  double delivered_fraction(std::size_t from_s, std::size_t to_s) const {
    std::uint64_t s = 0, d = 0;
    for (std::size_t i = from_s; i < to_s && i < sent_per_second.size(); ++i) {
      s += sent_per_second[i];
      d += delivered_per_second[i];
    }
    return s == 0 ? 0.0 : static_cast<double>(d) / static_cast<double>(s);
  }
};

struct IdsStats {
  NodeId node = 0;
  std::uint64_t evaluated = 0;  // intervals past learning
  std::uint64_t alarmed = 0;    // intervals with at least one alarm
};

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  TimeMs horizon_ms = 0;
  std::vector<QosRow> qos;
  std::vector<SecurityRow> security;
  std::vector<ReputationRow> reputation;
  std::vector<VoterRow> voters;
  std::vector<AlarmRow> alarms;
  std::vector<RerouteEvent> reroutes;
  std::vector<SessionStats> sessions;
  std::vector<IdsStats> ids;
  std::vector<std::string> trace;
  std::uint64_t events = 0;

  const SessionStats* session(FlowId id) const {
    for (const auto& s : sessions)
      if (s.id == id) return &s;
    return nullptr;
  }

  /// SR/PR for (node, subject, context) from the last epoch the node evaluated it.
  std::optional<ReputationRow> last_reputation(NodeId node, NodeId subject, Context c) const {
    std::optional<ReputationRow> out;
    for (const auto& r : reputation)
      if (r.node == node && r.subject == subject && r.context == c) out = r;
    return out;
  }
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(6) << v;
  return o.str();
}

inline std::string path_str(const std::vector<NodeId>& p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "-" : "") + std::to_string(p[i]);
  return s;
}

inline std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::ostringstream o;
  for (unsigned i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << int{md[i]};
  return o.str();
}

}  // namespace detail

inline std::string qos_csv(const RunReport& r) {
  std::ostringstream o;
  o << "node,flow,n,avg_q,std_q,psr_ok,rel_avg_drop,rel_std_increase,time_ms\n";
  for (const auto& q : r.qos)
    o << q.node << ',' << q.flow << ',' << q.interval << ',' << int{q.avg_q} << ',' << int{q.std_q} << ','
      << (q.psr_ok ? "true" : "false") << ',' << detail::fmt(q.rel_avg_drop) << ','
      << detail::fmt(q.rel_std_increase) << ',' << q.time << '\n';
  return o.str();
}

inline std::string security_csv(const RunReport& r) {
  std::ostringstream o;
  o << "node,session,w,ssr_ok,cause,time_ms\n";
  for (const auto& s : r.security)
    o << s.node << ',' << s.flow << ',' << s.window << ','
      << (s.ssr_ok ? (*s.ssr_ok ? "true" : "false") : "NA") << ',' << s.cause << ',' << s.time << '\n';
  return o.str();
}

inline std::string reputation_csv(const RunReport& r) {
  std::ostringstream o;
  o << "node,subject,context,OE,SR,CR,PR,action,epoch,time_ms\n";
  for (const auto& x : r.reputation)
    o << x.node << ',' << x.subject << ',' << to_string(x.context) << ',' << (x.oe ? detail::fmt(*x.oe) : "NA")
      << ',' << detail::fmt(x.sr) << ',' << detail::fmt(x.cr) << ',' << detail::fmt(x.pr) << ','
      << (x.action ? std::string(to_string(*x.action)) : "NA") << ',' << x.epoch << ',' << x.time << '\n';
  return o.str();
}

inline std::string voters_csv(const RunReport& r) {
  std::ostringstream o;
  o << "node,voter,context,IR,status,correlation,epoch,time_ms\n";
  for (const auto& v : r.voters) {
    const char* st = v.status == VoteStatus::Unvalidated ? "unvalidated"
                     : v.status == VoteStatus::Retained  ? "retained"
                                                         : "excluded";
    o << v.node << ',' << v.voter << ',' << to_string(v.context) << ',' << detail::fmt(v.ir) << ',' << st << ','
      << (v.correlation ? detail::fmt(*v.correlation) : "NA") << ',' << v.epoch << ',' << v.time << '\n';
  }
  return o.str();
}

inline std::string alarms_csv(const RunReport& r) {
  std::ostringstream o;
  o << "node,interval,metric,value,threshold,attack_type,suspected,time_ms\n";
  for (const auto& a : r.alarms)
    o << a.node << ',' << a.interval << ',' << to_string(a.metric) << ',' << detail::fmt(a.value) << ','
      << detail::fmt(a.threshold) << ',' << to_string(a.type) << ','
      << (a.suspected ? std::to_string(*a.suspected) : "NA") << ',' << a.time << '\n';
  return o.str();
}

/// Summary without the digest field.
inline nlohmann::json summary_body(const RunReport& r) {
  using nlohmann::json;
  json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["horizon_ms"] = r.horizon_ms;
  j["events"] = r.events;
  j["sessions"] = json::array();
  for (const auto& s : r.sessions)
    j["sessions"].push_back({{"id", s.id},
                             {"source", s.source},
                             {"destination", s.destination},
                             {"injected", s.injected},
                             {"delivered", s.delivered},
                             {"dropped_link", s.dropped_link},
                             {"dropped_adversary", s.dropped_adversary},
                             {"in_flight", s.in_flight},
                             {"reconciled", s.reconciled},
                             {"delivered_fraction", detail::fmt(s.delivered_fraction())},
                             {"covert_length_mismatch", s.covert_length_mismatch},
                             {"terminated", s.terminated},
                             {"initial_path", s.initial_path},
                             {"final_path", s.final_path}});
  j["reroutes"] = json::array();
  for (const auto& e : r.reroutes)
    j["reroutes"].push_back({{"time_ms", e.time},
                             {"session", e.session},
                             {"decider", e.decider},
                             {"subject", e.subject},
                             {"trigger", std::string(to_string(e.trigger))},
                             {"old_path", e.old_path},
                             {"new_path", e.new_path},
                             {"isolated", e.isolated},
                             {"avoided", e.avoided},
                             {"same_path", e.same_path},
                             {"flagged", e.flagged},
                             {"terminated", e.terminated}});
  j["ids"] = json::array();
  std::uint64_t ev = 0, al = 0;
  for (const auto& s : r.ids) {
    j["ids"].push_back({{"node", s.node}, {"evaluated_intervals", s.evaluated}, {"alarm_intervals", s.alarmed}});
    ev += s.evaluated;
    al += s.alarmed;
  }
  j["alarm_count"] = r.alarms.size();
  j["alarm_interval_fraction"] = detail::fmt(ev == 0 ? 0.0 : static_cast<double>(al) / static_cast<double>(ev));
  j["first_alarms"] = json::array();
  std::set<std::pair<NodeId, int>> seen;
  for (const auto& a : r.alarms)
    if (seen.insert({a.node, static_cast<int>(a.type)}).second)
      j["first_alarms"].push_back({{"node", a.node},
                                   {"attack_type", std::string(to_string(a.type))},
                                   {"time_ms", a.time},
                                   {"suspected", a.suspected ? json(*a.suspected) : json(nullptr)}});
  // final reputations: last row per (node, subject, context)
  std::map<std::tuple<NodeId, NodeId, int>, const ReputationRow*> last;
  for (const auto& x : r.reputation) last[{x.node, x.subject, static_cast<int>(x.context)}] = &x;
  j["final_reputations"] = json::array();
  for (const auto& [k, x] : last)
    j["final_reputations"].push_back({{"node", x->node},
                                      {"subject", x->subject},
                                      {"context", std::string(to_string(x->context))},
                                      {"SR", detail::fmt(x->sr)},
                                      {"PR", detail::fmt(x->pr)}});
  return j;
}

/// SHA-256 over every log and the summary body; equal for byte-identical runs.
inline std::string report_digest(const RunReport& r) {
  return detail::sha256_hex(qos_csv(r) + security_csv(r) + reputation_csv(r) + voters_csv(r) + alarms_csv(r) +
                            summary_body(r).dump());
}

inline nlohmann::json summary_json(const RunReport& r) {
  auto j = summary_body(r);
  j["digest"] = report_digest(r);
  return j;
}

/// Writes summary.json and the CSV logs (plus trace.jsonl when traced) into `dir`.
inline void write_report(const RunReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << body;
  };
  put("summary.json", summary_json(r).dump(2) + "\n");
  put("qos.csv", qos_csv(r));
  put("security.csv", security_csv(r));
  put("reputation.csv", reputation_csv(r));
  put("voters.csv", voters_csv(r));
  put("alarms.csv", alarms_csv(r));
  if (!r.trace.empty()) {
    std::string t;
    for (const auto& line : r.trace) t += line + "\n";
    put("trace.jsonl", t);
  }
}

}  // namespace secmon
