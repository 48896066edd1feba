#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace secmon {

using NodeId = std::uint32_t;
using FlowId = std::uint32_t;
using TimeMs = std::int64_t;

class PacketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// PCM16 voice frame. Sample count is fixed by rate and duration.
struct VoiceFrame {
  std::vector<std::int16_t> samples;
  std::uint32_t sample_rate = 8000;
  std::uint32_t frame_duration_ms = 20;

  static constexpr std::size_t expected_samples(std::uint32_t rate, std::uint32_t duration_ms) {
    return static_cast<std::size_t>(rate) * duration_ms / 1000;
  }
  std::size_t expected_samples() const { return expected_samples(sample_rate, frame_duration_ms); }
  bool valid() const { return samples.size() == expected_samples(); }

  static VoiceFrame silence(std::uint32_t rate = 8000, std::uint32_t duration_ms = 20) {
    VoiceFrame f;
    f.sample_rate = rate;
    f.frame_duration_ms = duration_ms;
    f.samples.assign(expected_samples(rate, duration_ms), 0);
    return f;
  }

  bool operator==(const VoiceFrame&) const = default;
};

struct PacketMeta {
  TimeMs send_time = 0;
  NodeId origin = 0;
  FlowId flow = 0;
  bool operator==(const PacketMeta&) const = default;
};

/// Simulated IPv4/UDP/RTP voice packet. Only the fields the covert channel
/// may touch, plus the RTP fields the receivers need, are modeled.
struct SimPacket {
  // covert-capable fields
  std::uint8_t ip_tos = 0;
  std::uint16_t ip_id = 0;
  std::uint8_t ip_flags_reserved = 0;  // 1 bit
  std::uint16_t udp_checksum = 0;

  std::uint16_t rtp_seq = 0;
  std::uint32_t rtp_timestamp = 0;
  std::uint32_t rtp_ssrc = 0;

  VoiceFrame payload;
  PacketMeta meta;

  static constexpr std::size_t kIpHeaderBytes = 20;
  static constexpr std::size_t kUdpHeaderBytes = 8;
  static constexpr std::size_t kRtpHeaderBytes = 12;

  /// On-the-wire size the packet would have (headers + PCM16 payload).
  std::size_t byte_length() const {
    return kIpHeaderBytes + kUdpHeaderBytes + kRtpHeaderBytes + payload.samples.size() * sizeof(std::int16_t);
  }

  bool operator==(const SimPacket&) const = default;
};

/// Builds a voice packet with every covert-capable field zeroed.
inline SimPacket make_voice_packet(FlowId flow, std::uint64_t seq, VoiceFrame samples, TimeMs now) {
  if (!samples.valid()) {
    throw PacketError("voice frame has " + std::to_string(samples.samples.size()) + " samples, expected " +
                      std::to_string(samples.expected_samples()));
  }
  SimPacket p;
  p.rtp_seq = static_cast<std::uint16_t>(seq & 0xFFFFu);
  p.rtp_timestamp = static_cast<std::uint32_t>(seq * samples.samples.size());
  p.rtp_ssrc = flow;
  p.payload = std::move(samples);
  p.meta.send_time = now;
  p.meta.flow = flow;
  return p;
}

// Packet trace export: one JSON object per line.

struct TraceEntry {
  SimPacket packet;
  TimeMs recv_time = -1;  // -1: not delivered
  bool tampered = false;
  bool replayed = false;
  bool operator==(const TraceEntry&) const = default;
};

inline nlohmann::json to_json(const TraceEntry& e) {
  const auto& p = e.packet;
  return nlohmann::json{
      {"flow", p.meta.flow},
      {"origin", p.meta.origin},
      {"seq", p.rtp_seq},
      {"send_time", p.meta.send_time},
      {"recv_time", e.recv_time},
      {"ip_tos", p.ip_tos},
      {"ip_id", p.ip_id},
      {"ip_flags_reserved", p.ip_flags_reserved},
      {"udp_checksum", p.udp_checksum},
      {"rtp_timestamp", p.rtp_timestamp},
      {"rtp_ssrc", p.rtp_ssrc},
      {"sample_rate", p.payload.sample_rate},
      {"frame_duration_ms", p.payload.frame_duration_ms},
      {"samples", p.payload.samples},
      {"tampered", e.tampered},
      {"replayed", e.replayed},
  };
}

inline TraceEntry trace_from_json(const nlohmann::json& j) {
  TraceEntry e;
  auto& p = e.packet;
  p.meta.flow = j.at("flow").get<FlowId>();
  p.meta.origin = j.at("origin").get<NodeId>();
  p.rtp_seq = j.at("seq").get<std::uint16_t>();
  p.meta.send_time = j.at("send_time").get<TimeMs>();
  e.recv_time = j.at("recv_time").get<TimeMs>();
  p.ip_tos = j.at("ip_tos").get<std::uint8_t>();
  p.ip_id = j.at("ip_id").get<std::uint16_t>();
  p.ip_flags_reserved = j.at("ip_flags_reserved").get<std::uint8_t>();
  p.udp_checksum = j.at("udp_checksum").get<std::uint16_t>();
  p.rtp_timestamp = j.at("rtp_timestamp").get<std::uint32_t>();
  p.rtp_ssrc = j.at("rtp_ssrc").get<std::uint32_t>();
  p.payload.sample_rate = j.at("sample_rate").get<std::uint32_t>();
  p.payload.frame_duration_ms = j.at("frame_duration_ms").get<std::uint32_t>();
  p.payload.samples = j.at("samples").get<std::vector<std::int16_t>>();
  e.tampered = j.at("tampered").get<bool>();
  e.replayed = j.at("replayed").get<bool>();
  return e;
}

inline std::string to_trace_line(const TraceEntry& e) { return to_json(e).dump(); }
inline TraceEntry parse_trace_line(const std::string& line) { return trace_from_json(nlohmann::json::parse(line)); }

}  // namespace secmon
