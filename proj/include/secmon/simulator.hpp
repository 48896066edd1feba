#pragma once

// Deterministic discrete-event overlay simulation. Sessions send voice frames
// along multi-hop paths; every on-path node runs the QoS, security, IDS and
// reputation blocks; adversary hooks act at their owning node before
// forwarding. One RNG stream per link, session and adversary keeps runs
// reproducible independently of event interleaving.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "secmon/covert_channel.hpp"
#include "secmon/ids.hpp"
#include "secmon/packet.hpp"
#include "secmon/qos_monitor.hpp"
#include "secmon/report.hpp"
#include "secmon/reputation.hpp"
#include "secmon/scenario.hpp"
#include "secmon/security.hpp"

namespace secmon {

namespace sim_detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t kind, std::uint64_t id) {
  return splitmix64(seed ^ splitmix64((kind << 40) ^ id));
}

enum StreamKind : std::uint64_t { kLinkStream = 1, kSessionStream = 2, kAdversaryStream = 3, kKeyStream = 4 };

}  // namespace sim_detail

/// One directed link: Bernoulli loss, then delay plus Gaussian jitter, truncated at 0.
class LinkChannel {
 public:
  LinkChannel(LinkSpec spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

  /// Arrival time, or nothing when the packet is lost.
  std::optional<TimeMs> transmit(TimeMs now, double extra_jitter_ms = 0.0) {
    if (spec_.loss > 0.0 && unit_(rng_) < spec_.loss) return std::nullopt;
    double d = spec_.delay_ms;
    const double sd = std::sqrt(spec_.jitter_ms * spec_.jitter_ms + extra_jitter_ms * extra_jitter_ms);
    if (sd > 0.0) d += std::normal_distribution<double>(0.0, sd)(rng_);
    return now + static_cast<TimeMs>(std::llround(std::max(0.0, d)));
  }

  const LinkSpec& spec() const { return spec_; }

 private:
  LinkSpec spec_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// Speech-like test signal: two voiced partials with a slow envelope plus noise.
inline VoiceFrame synth_voice_frame(FlowId flow, std::uint64_t k, std::mt19937_64& rng) {
  VoiceFrame f = VoiceFrame::silence();
  const double f1 = 180.0 + 20.0 * (flow % 5), f2 = 700.0 + 37.0 * (flow % 11);
  std::normal_distribution<double> noise(0.0, 200.0);
  const std::size_t n = f.samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(k * n + i) / f.sample_rate;
    const double env = 0.6 + 0.4 * std::sin(2 * M_PI * 3.0 * t);
    const double v = 3000.0 * env * std::sin(2 * M_PI * f1 * t) + 1200.0 * std::sin(2 * M_PI * f2 * t) + noise(rng);
    f.samples[i] = static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L));
  }
  return f;
}

class Simulator {
 public:
  explicit Simulator(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
    setup();
  }

  RunReport run() {
    if (ran_) throw std::logic_error("Simulator::run called twice");
    ran_ = true;
    while (!queue_.empty()) {
      std::pop_heap(queue_.begin(), queue_.end(), Later{});
      Event ev = std::move(queue_.back());
      queue_.pop_back();
      if (ev.t > cfg_.horizon_ms) {
        queue_.push_back(std::move(ev));
        std::push_heap(queue_.begin(), queue_.end(), Later{});
        break;
      }
      if (ev.t < now_) throw std::logic_error("event scheduled in the past");
      now_ = ev.t;
      ++report_.events;
      dispatch(ev);
    }
    finish();
    return std::move(report_);
  }

 private:
  // -------------------------------------------------------------------------
  // State

  struct InFlight {
    SimPacket pkt;
    std::shared_ptr<const std::vector<NodeId>> path;  // null for unknown-session traffic
    std::size_t hop = 0;                              // index of the node it is travelling to
    NodeId from = 0;
    std::optional<std::size_t> session;
    bool tampered = false, replayed = false;
  };
  using Pkt = std::shared_ptr<InFlight>;

  enum class Kind : std::uint8_t { IntervalTick, EpochTick, RepShare, Arrive, Process, FrameSend, FloodSend };

  struct Event {
    TimeMs t = 0;
    Kind kind = Kind::Arrive;
    std::uint64_t seq = 0;
    NodeId node = 0;
    std::size_t index = 0;
    Pkt pkt;
    std::shared_ptr<RepSharePayload> share;
  };

  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return std::tie(a.t, a.kind, a.seq) > std::tie(b.t, b.kind, b.seq);
    }
  };

  /// One node's monitoring state for one session.
  struct FlowView {
    std::optional<StatRing> ring;
    TimeMs ring_start = 0;
    std::map<std::int64_t, MonitoringRecord> local;  // interval -> own summary
    bool seen = false;
    std::uint64_t max_k = 0;
    NodeId upstream = 0;
    std::map<std::uint64_t, VoiceFrame> frames;
    std::map<std::uint64_t, NodeId> frame_from;
    std::map<std::uint64_t, std::array<std::optional<std::array<std::uint8_t, 2>>, 2>> token_parts;
    std::uint64_t next_window = 0;
    TimeMs not_before = 0;  // monitoring restart after a reroute
  };

  struct Node {
    NodeSpec spec;
    ReputationStore store;
    EvidenceRepository evidence;
    IdsInstance ids;
    IntervalMetrics cur;
    std::vector<ObservedPacket> cur_log;
    std::deque<double> busy;  // completion times of queued packets
    std::map<FlowId, FlowView> flows;
    std::vector<std::size_t> adversaries;
    IdsStats ids_stats;
  };

  struct Session {
    SessionSpec spec;
    SessionKeys keys;
    QimParams qim;
    std::optional<CovertSender> sender;
    std::shared_ptr<const std::vector<NodeId>> path;
    std::set<NodeId> isolated, avoided;
    bool terminated = false;
    std::uint64_t k = 0;
    std::optional<StatRing> ring;
    std::optional<MonitoringRecord> pending;
    std::vector<VoiceFrame> window_frames;
    std::map<std::uint64_t, IntegrityToken> tokens;
    std::mt19937_64 rng;
    SessionStats stats;
  };

  struct Adversary {
    AdversarySpec spec;
    std::mt19937_64 rng;
    std::deque<Pkt> held;                                  // REORDER
    std::map<std::pair<FlowId, std::uint64_t>, SimPacket> history;  // REPLAY
    double next_flood = 0.0;
  };

  struct Trigger {
    NodeId decider = 0, subject = 0;
    Action action = Action::Monitor;
  };

  // -------------------------------------------------------------------------
  // Setup

  void setup() {
    const auto& k = cfg_.constants;
    mon_ = k.monitor;
    sec_.frames_per_window = k.frames_per_window;
    sec_.qim_step = k.qim_step;
    adj_ = cfg_.topology.adjacency();
    report_.scenario = cfg_.name;
    report_.seed = cfg_.seed;
    report_.horizon_ms = cfg_.horizon_ms;

    for (const auto& [key, spec] : cfg_.topology.directed_links())
      links_.emplace(key, LinkChannel(spec, sim_detail::stream_seed(cfg_.seed, sim_detail::kLinkStream,
                                                                    (std::uint64_t{key.first} << 20) ^ key.second)));
    for (const auto& ns : cfg_.topology.nodes) {
      Node n{ns, ReputationStore(ns.id, k.reputation, adj_.at(ns.id)), {}, IdsInstance(k.ids, k.ids_cusum), {}, {}, {},
             {}, {}, {}};
      n.store.set_topology(adj_);
      n.ids_stats.node = ns.id;
      nodes_.emplace(ns.id, std::move(n));
    }
    for (std::size_t i = 0; i < cfg_.adversaries.size(); ++i) {
      Adversary a{cfg_.adversaries[i], std::mt19937_64(sim_detail::stream_seed(cfg_.seed, sim_detail::kAdversaryStream, i)),
                  {}, {}, 0.0};
      nodes_.at(a.spec.node).adversaries.push_back(i);
      if (a.spec.behavior == Behavior::Flood) {
        a.next_flood = static_cast<double>(a.spec.start_ms);
        schedule(a.spec.start_ms, Kind::FloodSend, a.spec.node, i);
      }
      adversaries_.push_back(std::move(a));
    }
    for (std::size_t i = 0; i < cfg_.sessions.size(); ++i) {
      const auto& sp = cfg_.sessions[i];
      Session s;
      s.spec = sp;
      s.rng.seed(sim_detail::stream_seed(cfg_.seed, sim_detail::kSessionStream, sp.id));
      std::mt19937_64 krng(sim_detail::stream_seed(cfg_.seed, sim_detail::kKeyStream, sp.id));
      s.keys.session_id = sp.id;
      for (auto& b : s.keys.group_key) b = static_cast<std::uint8_t>(krng());
      s.qim.step = k.qim_step;
      s.qim.bits_per_frame = k.qim_bits_per_frame;
      s.qim.key = krng();
      s.sender.emplace(k.field_map, s.qim);
      const TimeMs ring_start = ceil_boundary(sp.start_ms);
      s.ring.emplace(mon_, ring_start);
      std::vector<NodeId> path = sp.path;
      if (path.empty()) {
        auto p = compute_path(sp.source, sp.destination, {});
        if (!p) throw ConfigError("sessions[" + std::to_string(i) + "]", "no path between endpoints");
        path = *p;
      }
      s.path = std::make_shared<const std::vector<NodeId>>(path);
      s.stats.id = sp.id;
      s.stats.source = sp.source;
      s.stats.destination = sp.destination;
      s.stats.initial_path = path;
      const auto secs = static_cast<std::size_t>((cfg_.horizon_ms + 999) / 1000);
      s.stats.sent_per_second.assign(secs, 0);
      s.stats.delivered_per_second.assign(secs, 0);
      session_index_[sp.id] = i;
      sessions_.push_back(std::move(s));
      schedule(sp.start_ms, Kind::FrameSend, sp.source, i);
    }
    schedule(mon_.delta_t_ms, Kind::IntervalTick, 0, 0);
    schedule(k.epoch(), Kind::EpochTick, 0, 0);
  }

  TimeMs ceil_boundary(TimeMs t) const { return (t + mon_.delta_t_ms - 1) / mon_.delta_t_ms * mon_.delta_t_ms; }

  void schedule(TimeMs t, Kind kind, NodeId node, std::size_t index, Pkt pkt = nullptr,
                std::shared_ptr<RepSharePayload> share = nullptr) {
    if (t < now_) throw std::logic_error("cannot schedule into the past");
    queue_.push_back(Event{t, kind, seq_++, node, index, std::move(pkt), std::move(share)});
    std::push_heap(queue_.begin(), queue_.end(), Later{});
  }

  void dispatch(Event& ev) {
    switch (ev.kind) {
      case Kind::IntervalTick: on_interval(ev.t); break;
      case Kind::EpochTick: on_epoch(ev.t); break;
      case Kind::RepShare: nodes_.at(ev.node).store.ingest(*ev.share); break;
      case Kind::Arrive: on_arrive(ev.node, std::move(ev.pkt), ev.t); break;
      case Kind::Process: on_process(ev.node, std::move(ev.pkt), ev.t); break;
      case Kind::FrameSend: on_frame_send(ev.index, ev.t); break;
      case Kind::FloodSend: on_flood(ev.index, ev.t); break;
    }
  }

  // -------------------------------------------------------------------------
  // Routing

  /// Hop-by-hop path over the graph minus `excluded`: at each hop the
  /// candidates are neighbors one step closer to the destination, ranked by
  /// the current node's reputation view.
  std::optional<std::vector<NodeId>> compute_path(NodeId src, NodeId dst, const std::set<NodeId>& excluded) const {
    auto blocked = [&](NodeId v) { return v != src && v != dst && excluded.count(v); };
    std::map<NodeId, int> dist{{dst, 0}};
    std::deque<NodeId> q{dst};
    while (!q.empty()) {
      const auto u = q.front();
      q.pop_front();
      for (const auto& [v, nbrs] : adj_) {
        if (!nbrs.count(u) || blocked(v) || dist.count(v)) continue;
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
    }
    if (!dist.count(src)) return std::nullopt;
    std::vector<NodeId> path{src};
    NodeId u = src;
    while (u != dst) {
      std::set<NodeId> cands;
      for (auto v : adj_.at(u))
        if (dist.count(v) && dist.at(v) == dist.at(u) - 1) cands.insert(v);
      u = nodes_.at(u).store.recommend_next_hop(cands).node;
      path.push_back(u);
    }
    return path;
  }

  // -------------------------------------------------------------------------
  // Sending

  void on_frame_send(std::size_t si, TimeMs t) {
    auto& s = sessions_[si];
    if (s.terminated || t >= cfg_.session_end(s.spec)) return;
    const std::uint64_t k = s.k++;
    const std::size_t W = sec_.frames_per_window;
    SimPacket pkt = make_voice_packet(s.spec.id, k, synth_voice_frame(s.spec.id, k, s.rng), t);
    pkt.meta.origin = s.spec.source;
    const std::size_t before = pkt.byte_length();

    MsgType type = MsgType::Keepalive;
    std::vector<std::uint8_t> payload;
    if (k >= W && k % W < 2) {
      const auto tag = s.tokens.at(k / W - 1).tag_bytes();
      type = MsgType::Sec;
      payload = k % W == 0 ? std::vector<std::uint8_t>{tag[0], tag[1]} : std::vector<std::uint8_t>{tag[2], tag[3]};
    } else if (s.pending) {
      type = MsgType::Qos;
      const auto b = s.pending->encode();
      payload.assign(b.begin(), b.end());
      s.pending.reset();
    }
    pkt = s.sender->send_measurement(std::move(pkt), type, payload);
    if (pkt.byte_length() != before) ++s.stats.covert_length_mismatch;

    if (t >= s.ring->current_start()) s.ring->observe_packet(t, pkt.byte_length());
    s.window_frames.push_back(pkt.payload);
    if (s.window_frames.size() == W) {
      const std::uint64_t w = k / W;
      s.tokens[w] = token_generate(s.window_frames, w, static_cast<std::uint32_t>(w * W), s.keys, sec_);
      s.window_frames.clear();
      if (w >= 2) s.tokens.erase(w - 2);
    }

    ++s.stats.injected;
    ++s.stats.sent_per_second.at(static_cast<std::size_t>(t / 1000));
    auto ctx = std::make_shared<InFlight>();
    ctx->pkt = std::move(pkt);
    ctx->path = s.path;
    ctx->session = si;
    forward(s.spec.source, std::move(ctx), t, 0.0);
    schedule(t + s.spec.cadence_ms, Kind::FrameSend, s.spec.source, si);
  }

  void on_flood(std::size_t ai, TimeMs t) {
    auto& a = adversaries_[ai];
    if (t >= cfg_.adversary_end(a.spec)) return;
    SimPacket p;
    p.payload.samples.assign((a.spec.flood_bytes - 40) / 2, 0);
    p.rtp_ssrc = 1000000u + static_cast<std::uint32_t>(a.rng() % 1000000u);
    p.meta.flow = p.rtp_ssrc;
    p.meta.send_time = t;
    p.meta.origin = a.spec.node;
    auto ctx = std::make_shared<InFlight>();
    ctx->pkt = std::move(p);
    ctx->from = a.spec.node;
    if (auto arr = links_.at({a.spec.node, *a.spec.target}).transmit(t)) schedule(*arr, Kind::Arrive, *a.spec.target, 0, ctx);
    a.next_flood += 1000.0 / a.spec.rate_pps;
    schedule(std::max(t, static_cast<TimeMs>(std::llround(a.next_flood))), Kind::FloodSend, a.spec.node, ai);
  }

  void forward(NodeId u, Pkt ctx, TimeMs t, double extra_jitter) {
    const NodeId next = (*ctx->path)[ctx->hop + 1];
    auto arr = links_.at({u, next}).transmit(t, extra_jitter);
    if (!arr) {
      auto& s = sessions_[*ctx->session];
      ++s.stats.dropped_link;
      trace(*ctx, -1);
      return;
    }
    ctx->hop += 1;
    ctx->from = u;
    schedule(*arr, Kind::Arrive, next, 0, std::move(ctx));
  }

  void trace(const InFlight& ctx, TimeMs recv) {
    if (!cfg_.trace) return;
    TraceEntry e;
    e.packet = ctx.pkt;
    e.recv_time = recv;
    e.tampered = ctx.tampered;
    e.replayed = ctx.replayed;
    report_.trace.push_back(to_trace_line(e));
  }

  // -------------------------------------------------------------------------
  // Receiving

  void on_arrive(NodeId id, Pkt ctx, TimeMs t) {
    auto& n = nodes_.at(id);
    const bool known = ctx->session.has_value();
    const std::size_t bytes = ctx->pkt.byte_length();
    n.cur[Metric::PacketRate] += 1;
    n.cur[Metric::ByteRate] += static_cast<double>(bytes);
    if (!known) n.cur[Metric::UnknownSessionRate] += 1;
    n.cur_log.push_back({ctx->pkt.meta.flow, ctx->from, known, false, bytes});
    if (known) monitor(id, *ctx, t);

    if (n.spec.capacity_pps > 0.0) {
      while (!n.busy.empty() && n.busy.front() <= static_cast<double>(t)) n.busy.pop_front();
      if (n.busy.size() >= n.spec.queue_limit) {
        if (known) {
          ++sessions_[*ctx->session].stats.dropped_link;
          trace(*ctx, -1);
        }
        return;
      }
      const double start = n.busy.empty() ? static_cast<double>(t) : std::max<double>(t, n.busy.back());
      const double done = start + 1000.0 / n.spec.capacity_pps;
      n.busy.push_back(done);
      schedule(static_cast<TimeMs>(std::ceil(done)), Kind::Process, id, 0, std::move(ctx));
      return;
    }
    on_process(id, std::move(ctx), t);
  }

  void on_process(NodeId id, Pkt ctx, TimeMs t) {
    if (!ctx->session) return;  // unknown session: counted at ingress, not forwarded
    auto& s = sessions_[*ctx->session];
    if (ctx->hop + 1 == ctx->path->size()) {
      ++s.stats.delivered;
      ++s.stats.delivered_per_second.at(static_cast<std::size_t>(ctx->pkt.meta.send_time / 1000));
      trace(*ctx, t);
      return;
    }
    double extra_jitter = 0.0;
    std::optional<std::size_t> reorder;
    for (auto ai : nodes_.at(id).adversaries) {
      auto& a = adversaries_[ai];
      const bool active = t >= a.spec.start_ms && t < cfg_.adversary_end(a.spec);
      switch (a.spec.behavior) {
        case Behavior::Drop:
          if (active && std::uniform_real_distribution<double>(0, 1)(a.rng) < a.spec.extra_loss) {
            ++s.stats.dropped_adversary;
            trace(*ctx, -1);
            return;
          }
          break;
        case Behavior::Replay: replay(a, *ctx, active); break;
        case Behavior::Tamper:
          if (active && std::uniform_real_distribution<double>(0, 1)(a.rng) < a.spec.rate) {
            auto& smp = ctx->pkt.payload.samples;
            for (std::size_t i = 0; i < a.spec.samples; ++i) {
              const auto j = static_cast<std::size_t>(a.rng() % smp.size());
              smp[j] = static_cast<std::int16_t>(static_cast<std::uint16_t>(smp[j]) ^ (1u << a.spec.bit));
            }
            ctx->tampered = true;
          }
          break;
        case Behavior::Jitter:
          if (active) extra_jitter = std::hypot(extra_jitter, a.spec.extra_jitter_ms);
          break;
        case Behavior::Reorder:
          if (active) {
            reorder = ai;
          } else {
            while (!a.held.empty()) {
              auto h = std::move(a.held.front());
              a.held.pop_front();
              forward(id, std::move(h), t, 0.0);
            }
          }
          break;
        case Behavior::Flood:
        case Behavior::LieVotes: break;
      }
    }
    if (reorder) {
      auto& a = adversaries_[*reorder];
      a.held.push_back(std::move(ctx));
      if (a.held.size() < a.spec.depth) return;
      const auto j = static_cast<std::size_t>(a.rng() % a.held.size());
      ctx = std::move(a.held[j]);
      a.held.erase(a.held.begin() + static_cast<std::ptrdiff_t>(j));
    }
    forward(id, std::move(ctx), t, extra_jitter);
  }

  void replay(Adversary& a, InFlight& ctx, bool active) {
    const FlowId flow = ctx.pkt.meta.flow;
    const std::uint64_t k = ctx.pkt.rtp_seq;  // no wrap within a scenario horizon
    const std::uint64_t back = a.spec.depth * sec_.frames_per_window;
    a.history[{flow, k}] = ctx.pkt;
    if (k > back + 2 * sec_.frames_per_window) a.history.erase(a.history.begin(), a.history.lower_bound({flow, k - back - 2 * sec_.frames_per_window}));
    if (!active || k < back) return;
    auto it = a.history.find({flow, k - back});
    if (it == a.history.end()) return;
    const auto& old = it->second;
    ctx.pkt.payload = old.payload;
    ctx.pkt.ip_id = old.ip_id;
    ctx.pkt.ip_tos = old.ip_tos;
    ctx.pkt.ip_flags_reserved = old.ip_flags_reserved;
    ctx.pkt.udp_checksum = old.udp_checksum;
    ctx.replayed = true;
  }

  /// SecMon blocks at an on-path node: QoS ring, covert decoding, window verification.
  void monitor(NodeId id, const InFlight& ctx, TimeMs t) {
    auto& n = nodes_.at(id);
    auto& s = sessions_[*ctx.session];
    auto& fv = n.flows[s.spec.id];
    const std::size_t W = sec_.frames_per_window;

    std::uint64_t k = ctx.pkt.rtp_seq;
    if (fv.seen) {
      const auto delta = static_cast<std::int16_t>(ctx.pkt.rtp_seq - static_cast<std::uint16_t>(fv.max_k & 0xFFFFu));
      k = static_cast<std::uint64_t>(static_cast<std::int64_t>(fv.max_k) + delta);
    } else {
      fv.seen = true;
      fv.max_k = k;
      fv.next_window = (k + W - 1) / W;
      fv.ring_start = std::max(ceil_boundary(t), fv.not_before);
      fv.ring.emplace(mon_, fv.ring_start);
    }
    fv.max_k = std::max(fv.max_k, k);
    fv.upstream = ctx.from;

    if (t >= fv.ring_start) fv.ring->observe_packet(t, ctx.pkt.byte_length());

    if (auto msg = receive_measurement(ctx.pkt, s.sender->map(), s.qim)) {
      if (msg->type == MsgType::Qos && msg->payload.size() == 2) {
        const std::int64_t m = ctx.pkt.meta.send_time / mon_.delta_t_ms - 1;
        on_sender_record(id, s, fv, MonitoringRecord::decode(msg->payload, m), t);
      } else if (msg->type == MsgType::Sec && msg->payload.size() == 2 && k >= W && k % W < 2) {
        fv.token_parts[k / W - 1][k % W] = std::array<std::uint8_t, 2>{msg->payload[0], msg->payload[1]};
      }
    }
    if (k >= fv.next_window * W) {
      fv.frames[k] = ctx.pkt.payload;
      fv.frame_from[k] = ctx.from;
    }
    while (fv.max_k >= (fv.next_window + 2) * W) finalize_window(id, s, fv, fv.next_window++, t);
  }

  void on_sender_record(NodeId id, Session& s, FlowView& fv, const MonitoringRecord& rec, TimeMs t) {
    auto it = fv.local.find(rec.interval);
    if (it == fv.local.end()) return;
    const auto v = compare(rec, it->second, mon_);
    report_.qos.push_back({t, id, s.spec.id, rec.interval, it->second.avg_q, it->second.std_q, v.psr_ok,
                           v.rel_avg_drop, v.rel_std_increase});
    psr_verdicts_[{id, s.spec.id, rec.interval}] = v.psr_ok;
    const NodeId up = fv.upstream;
    if (v.psr_ok) {
      nodes_.at(id).evidence.add_psr(up, true);
      return;
    }
    std::optional<bool> up_ok;
    if (up == s.spec.source) {
      up_ok = true;
    } else if (auto p = psr_verdicts_.find({up, s.spec.id, rec.interval}); p != psr_verdicts_.end()) {
      up_ok = p->second;
    }
    if (up_ok) nodes_.at(id).evidence.add_psr(up, !*up_ok);
  }

  void finalize_window(NodeId id, Session& s, FlowView& fv, std::uint64_t w, TimeMs t) {
    const std::size_t W = sec_.frames_per_window;
    std::vector<VoiceFrame> frames;
    std::set<NodeId> ups;
    for (std::uint64_t k = w * W; k < (w + 1) * W; ++k) {
      auto f = fv.frames.find(k);
      if (f == fv.frames.end()) break;
      frames.push_back(f->second);
      ups.insert(fv.frame_from.at(k));
    }
    auto& parts = fv.token_parts[w];
    if (frames.size() != W) {
      report_.security.push_back({t, id, s.spec.id, w, std::nullopt, "incomplete_window"});
      ssr_verdicts_[{id, s.spec.id, w}] = -1;
    } else {
      std::optional<IntegrityToken> tok;
      if (parts[0] && parts[1]) {
        const std::array<std::uint8_t, 4> b{(*parts[0])[0], (*parts[0])[1], (*parts[1])[0], (*parts[1])[1]};
        tok = IntegrityToken{w, IntegrityToken::tag_from_bytes(b)};
      }
      const auto v = token_verify(frames, w, static_cast<std::uint32_t>(w * W), s.keys, tok, sec_);
      report_.security.push_back({t, id, s.spec.id, w, v.ssr_ok, std::string(to_string(v.cause))});
      ssr_verdicts_[{id, s.spec.id, w}] = v.ssr_ok ? 1 : 0;
      auto& n = nodes_.at(id);
      if (!v.ssr_ok) {
        n.cur[Metric::HashFailureRate] += 1;
        n.cur_log.push_back({s.spec.id, *ups.begin(), true, true, 0});
      }
      if (ups.size() == 1) {
        const NodeId up = *ups.begin();
        if (v.ssr_ok) {
          n.evidence.add_ssr(up, true);
        } else if (up == s.spec.source) {
          n.evidence.add_ssr(up, false);
        } else if (auto p = ssr_verdicts_.find({up, s.spec.id, w}); p != ssr_verdicts_.end() && p->second >= 0) {
          n.evidence.add_ssr(up, p->second == 0);
        }
      }
    }
    fv.frames.erase(fv.frames.begin(), fv.frames.lower_bound((w + 1) * W));
    fv.frame_from.erase(fv.frame_from.begin(), fv.frame_from.lower_bound((w + 1) * W));
    fv.token_parts.erase(fv.token_parts.begin(), fv.token_parts.upper_bound(w));
  }

  // -------------------------------------------------------------------------
  // Periodic work

  void on_interval(TimeMs t) {
    const std::int64_t m = t / mon_.delta_t_ms - 1;
    for (auto& s : sessions_) {
      if (t < s.ring->current_start()) continue;
      s.ring->advance_to(t);
      if (s.ring->completed() > 0) {
        auto rec = summarize(*s.ring);
        rec.interval = m;
        s.pending = rec;
      }
    }
    for (auto& [id, n] : nodes_) {
      for (auto& [flow, fv] : n.flows) {
        if (!fv.ring || t < fv.ring_start) continue;
        fv.ring->advance_to(t);
        if (fv.ring->completed() == 0) continue;
        auto rec = summarize(*fv.ring);
        rec.interval = m;
        fv.local[m] = rec;
        fv.local.erase(fv.local.begin(), fv.local.lower_bound(m - static_cast<std::int64_t>(mon_.window_len)));
      }
      if (n.spec.ids) {
        const bool was_learning = n.ids.learning();
        const auto alarms = n.ids.observe(n.cur);
        if (!was_learning) {
          ++n.ids_stats.evaluated;
          if (!alarms.empty()) ++n.ids_stats.alarmed;
        }
        if (!alarms.empty()) {
          for (const auto& rep : characterize(alarms, n.cur_log, m)) {
            notify_rmb(rep, n.evidence);
            for (const auto& a : rep.metrics)
              report_.alarms.push_back({t, id, m, a.metric, a.value, a.threshold, rep.type, rep.suspected});
          }
        }
      }
      n.cur = {};
      n.cur_log.clear();
    }
    if (t + mon_.delta_t_ms <= cfg_.horizon_ms) schedule(t + mon_.delta_t_ms, Kind::IntervalTick, 0, 0);
  }

  bool liar_active(NodeId id, TimeMs t) const {
    for (auto ai : nodes_.at(id).adversaries) {
      const auto& a = adversaries_[ai];
      if (a.spec.behavior == Behavior::LieVotes && t >= a.spec.start_ms && t <= cfg_.adversary_end(a.spec))
        return true;
    }
    return false;
  }

  void on_epoch(TimeMs t) {
    const TimeMs len = cfg_.constants.epoch();
    const auto e = static_cast<std::uint64_t>(t / len - 1);
    std::vector<Trigger> triggers;
    for (auto& [id, n] : nodes_) {
      std::map<std::pair<NodeId, Context>, Action> acted;
      for (const auto& r : n.evidence.commit(n.store, e)) {
        for (Context c : kContexts) acted[{r.subject, c}] = r.action;
        if (r.action != Action::Monitor) triggers.push_back({id, r.subject, r.action});
      }
      n.store.close_epoch(e);
      for (Context c : kContexts) {
        for (auto subj : n.store.subjects(c)) {
          auto pr = n.store.pr(subj, c);
          if (!pr) continue;
          std::optional<Action> act;
          if (auto a = acted.find({subj, c}); a != acted.end()) act = a->second;
          report_.reputation.push_back({t, e, id, subj, c, n.store.oe(subj, c), *n.store.sr(subj, c),
                                        *n.store.cr(subj, c), *pr, act});
        }
        for (auto v : n.store.voters(c)) {
          auto val = n.store.validation(v, c);
          report_.voters.push_back({t, e, id, v, c, n.store.ir(v, c), val ? val->status : VoteStatus::Unvalidated,
                                    val ? val->correlation : std::nullopt});
        }
      }
      const bool lie = liar_active(id, t);
      for (auto& p : n.store.share_reputation(e)) {
        if (lie)
          for (auto& r : p.records) r.sr_q = static_cast<std::uint8_t>(255 - r.sr_q);
        const auto delay = links_.at({id, p.to}).spec().delay_ms;
        const NodeId to = p.to;
        schedule(t + static_cast<TimeMs>(std::llround(delay)), Kind::RepShare, to, 0, nullptr,
                 std::make_shared<RepSharePayload>(std::move(p)));
      }
    }
    apply_triggers(triggers, t);
    if (t + len <= cfg_.horizon_ms) schedule(t + len, Kind::EpochTick, 0, 0);
  }

  static int severity(Action a) {
    switch (a) {
      case Action::ReestablishAndIsolate: return 3;
      case Action::ReestablishSession: return 2;
      case Action::ShareReputationReroute: return 1;
      case Action::Monitor: return 0;
    }
    return 0;
  }

  void apply_triggers(const std::vector<Trigger>& triggers, TimeMs t) {
    for (auto& s : sessions_) {
      if (s.terminated || !s.spec.reroute || t >= cfg_.session_end(s.spec)) continue;
      const auto& path = *s.path;
      std::vector<Trigger> mine;
      for (const auto& tr : triggers)
        for (std::size_t i = 1; i < path.size(); ++i)
          if (path[i] == tr.decider && path[i - 1] == tr.subject) mine.push_back(tr);
      if (mine.empty()) continue;

      RerouteEvent ev;
      ev.time = t;
      ev.session = s.spec.id;
      const auto top = *std::max_element(mine.begin(), mine.end(), [](const Trigger& a, const Trigger& b) {
        return severity(a.action) < severity(b.action);
      });
      ev.decider = top.decider;
      ev.subject = top.subject;
      ev.trigger = top.action;
      ev.old_path = path;
      for (const auto& tr : mine) {
        if (tr.subject == s.spec.source || tr.subject == s.spec.destination) {
          ev.flagged = true;
        } else if (tr.action == Action::ReestablishAndIsolate) {
          s.isolated.insert(tr.subject);
          s.avoided.erase(tr.subject);
        } else if (!s.isolated.count(tr.subject)) {
          s.avoided.insert(tr.subject);
        }
      }
      std::set<NodeId> excl = s.isolated;
      excl.insert(s.avoided.begin(), s.avoided.end());
      auto np = compute_path(s.spec.source, s.spec.destination, excl);
      if (!np) np = compute_path(s.spec.source, s.spec.destination, s.isolated);
      ev.isolated.assign(s.isolated.begin(), s.isolated.end());
      ev.avoided.assign(s.avoided.begin(), s.avoided.end());
      if (!np) {
        ev.terminated = true;
        s.terminated = true;
        report_.reroutes.push_back(ev);
        continue;
      }
      ev.new_path = *np;
      ev.same_path = *np == path;
      report_.reroutes.push_back(ev);
      if (ev.same_path) continue;
      install_path(s, *np, t);
    }
  }

  /// Session re-establishment: monitoring restarts on every node of the new path.
  void install_path(Session& s, const std::vector<NodeId>& np, TimeMs t) {
    const std::set<NodeId> old(s.path->begin(), s.path->end());
    s.path = std::make_shared<const std::vector<NodeId>>(np);
    const TimeMs restart = ceil_boundary(t + mon_.delta_t_ms);
    for (std::size_t i = 1; i < np.size(); ++i) {
      auto& n = nodes_.at(np[i]);
      n.flows[s.spec.id] = FlowView{};
      n.flows[s.spec.id].not_before = restart;
      if (!old.count(np[i])) n.ids = IdsInstance(cfg_.constants.ids, cfg_.constants.ids_cusum);
    }
  }

  void finish() {
    std::map<std::size_t, std::uint64_t> in_flight;
    for (const auto& ev : queue_)
      if ((ev.kind == Kind::Arrive || ev.kind == Kind::Process) && ev.pkt && ev.pkt->session)
        ++in_flight[*ev.pkt->session];
    for (const auto& a : adversaries_)
      for (const auto& p : a.held)
        if (p->session) ++in_flight[*p->session];
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
      auto& st = sessions_[i].stats;
      st.in_flight = in_flight[i];
      st.reconciled = st.injected == st.delivered + st.dropped_link + st.dropped_adversary + st.in_flight;
      st.terminated = sessions_[i].terminated;
      st.final_path = *sessions_[i].path;
      report_.sessions.push_back(st);
    }
    for (const auto& [id, n] : nodes_)
      if (n.spec.ids) report_.ids.push_back(n.ids_stats);
  }

  ScenarioConfig cfg_;
  MonitorConfig mon_;
  SecurityConfig sec_;
  std::map<NodeId, std::set<NodeId>> adj_;
  std::map<std::pair<NodeId, NodeId>, LinkChannel> links_;
  std::map<NodeId, Node> nodes_;
  std::vector<Session> sessions_;
  std::map<FlowId, std::size_t> session_index_;
  std::vector<Adversary> adversaries_;
  std::map<std::tuple<NodeId, FlowId, std::int64_t>, bool> psr_verdicts_;
  std::map<std::tuple<NodeId, FlowId, std::uint64_t>, int> ssr_verdicts_;  // 1 ok, 0 fail, -1 incomplete
  std::vector<Event> queue_;
  std::uint64_t seq_ = 0;
  TimeMs now_ = 0;
  bool ran_ = false;
  RunReport report_;
};

/// Validates, runs to the horizon and returns the report.
inline RunReport run(const ScenarioConfig& cfg) { return Simulator(cfg).run(); }

}  // namespace secmon
