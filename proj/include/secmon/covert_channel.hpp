#pragma once

// Covert channels block: control words hidden in IP/UDP header fields and
// payload bytes hidden in voice samples with quantization index modulation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "secmon/packet.hpp"

namespace secmon {

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// crc8, polynomial x^8 + x^2 + x + 1 (0x07), init 0x00, no reflection.

namespace detail {
constexpr std::array<std::uint8_t, 256> make_crc8_table() {
  std::array<std::uint8_t, 256> t{};
  for (unsigned i = 0; i < 256; ++i) {
    std::uint8_t c = static_cast<std::uint8_t>(i);
    for (int b = 0; b < 8; ++b) c = static_cast<std::uint8_t>((c & 0x80) ? (c << 1) ^ 0x07 : (c << 1));
    t[i] = c;
  }
  return t;
}
inline constexpr auto kCrc8Table = make_crc8_table();
}  // namespace detail

constexpr std::uint8_t crc8(std::span<const std::uint8_t> bytes) {
  std::uint8_t crc = 0;
  for (auto b : bytes) crc = detail::kCrc8Table[crc ^ b];
  return crc;
}

// ---------------------------------------------------------------------------
// Control word

enum class MsgType : std::uint8_t { Qos = 0, Sec = 1, RepShare = 2, Keepalive = 3 };

inline std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::Qos: return "QOS";
    case MsgType::Sec: return "SEC";
    case MsgType::RepShare: return "REP_SHARE";
    case MsgType::Keepalive: return "KEEPALIVE";
  }
  return "?";
}

/// 32-bit control word, MSB-first layout:
/// [version:2][msg_type:3][seq:8][payload_len:6][crc8:8][reserved:5]
struct ControlWord {
  static constexpr std::uint8_t kProtocolVersion = 1;

  std::uint8_t version = kProtocolVersion;
  std::uint8_t msg_type = 0;
  std::uint8_t seq = 0;
  std::uint8_t payload_len = 0;
  std::uint8_t crc = 0;

  static constexpr unsigned kVersionShift = 30;
  static constexpr unsigned kTypeShift = 27;
  static constexpr unsigned kSeqShift = 19;
  static constexpr unsigned kLenShift = 13;
  static constexpr unsigned kCrcShift = 5;

  /// The 19 header bits the crc protects.
  constexpr std::uint32_t header_bits() const {
    return (std::uint32_t{version} & 0x3u) << 17 | (std::uint32_t{msg_type} & 0x7u) << 14 |
           std::uint32_t{seq} << 6 | (std::uint32_t{payload_len} & 0x3Fu);
  }

  /// crc8 over the 19 header bits left-aligned in three bytes.
  constexpr std::uint8_t compute_crc() const {
    const std::uint32_t padded = header_bits() << 5;
    const std::array<std::uint8_t, 3> b{static_cast<std::uint8_t>(padded >> 16), static_cast<std::uint8_t>(padded >> 8),
                                        static_cast<std::uint8_t>(padded)};
    return crc8(b);
  }

  constexpr ControlWord& seal() {
    crc = compute_crc();
    return *this;
  }

  constexpr std::uint32_t pack() const {
    return (std::uint32_t{version} & 0x3u) << kVersionShift | (std::uint32_t{msg_type} & 0x7u) << kTypeShift |
           std::uint32_t{seq} << kSeqShift | (std::uint32_t{payload_len} & 0x3Fu) << kLenShift |
           std::uint32_t{crc} << kCrcShift;
  }

  /// Decodes a raw word; nullopt if the crc does not verify or reserved bits are set.
  static constexpr std::optional<ControlWord> unpack(std::uint32_t raw) {
    if ((raw & 0x1Fu) != 0) return std::nullopt;
    ControlWord w;
    w.version = static_cast<std::uint8_t>((raw >> kVersionShift) & 0x3u);
    w.msg_type = static_cast<std::uint8_t>((raw >> kTypeShift) & 0x7u);
    w.seq = static_cast<std::uint8_t>((raw >> kSeqShift) & 0xFFu);
    w.payload_len = static_cast<std::uint8_t>((raw >> kLenShift) & 0x3Fu);
    w.crc = static_cast<std::uint8_t>((raw >> kCrcShift) & 0xFFu);
    if (w.crc != w.compute_crc()) return std::nullopt;
    return w;
  }

  constexpr bool operator==(const ControlWord&) const = default;
};

// ---------------------------------------------------------------------------
// Field map

enum class CovertField : std::uint8_t { IpId, IpTos, IpFlagsReserved, UdpChecksum };

constexpr unsigned field_width(CovertField f) {
  switch (f) {
    case CovertField::IpId: return 16;
    case CovertField::IpTos: return 8;
    case CovertField::IpFlagsReserved: return 1;
    case CovertField::UdpChecksum: return 16;
  }
  return 0;
}

inline std::string_view to_string(CovertField f) {
  switch (f) {
    case CovertField::IpId: return "ip_id";
    case CovertField::IpTos: return "ip_tos";
    case CovertField::IpFlagsReserved: return "ip_flags_reserved";
    case CovertField::UdpChecksum: return "udp_checksum";
  }
  return "?";
}

inline std::optional<CovertField> covert_field_from_string(std::string_view s) {
  for (auto f : {CovertField::IpId, CovertField::IpTos, CovertField::IpFlagsReserved, CovertField::UdpChecksum})
    if (to_string(f) == s) return f;
  return std::nullopt;
}

/// Bits [offset, offset + width) of a header field, counted from the field's LSB.
struct FieldSlot {
  CovertField field;
  unsigned offset = 0;
  unsigned width = 0;
  bool operator==(const FieldSlot&) const = default;
};

/// Ordered slots; the covert bit stream fills them in order, each slot MSB-first.
class FieldMap {
 public:
  FieldMap() = default;
  explicit FieldMap(std::vector<FieldSlot> slots) : slots_(std::move(slots)) { validate(); }

  /// ip_id 16 + ip_tos 8 + ip_flags_reserved 1 + udp_checksum 16 = 41 bits.
  static FieldMap default_map() {
    return FieldMap({{CovertField::IpId, 0, 16},
                     {CovertField::IpTos, 0, 8},
                     {CovertField::IpFlagsReserved, 0, 1},
                     {CovertField::UdpChecksum, 0, 16}});
  }

  const std::vector<FieldSlot>& slots() const { return slots_; }

  unsigned total_width() const {
    unsigned w = 0;
    for (const auto& s : slots_) w += s.width;
    return w;
  }

 private:
  void validate() const {
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      const auto& a = slots_[i];
      if (a.width == 0 || a.offset + a.width > field_width(a.field))
        throw std::invalid_argument("field map slot exceeds " + std::string(to_string(a.field)));
      for (std::size_t j = 0; j < i; ++j) {
        const auto& b = slots_[j];
        if (a.field == b.field && a.offset < b.offset + b.width && b.offset < a.offset + a.width)
          throw std::invalid_argument("field map slots overlap in " + std::string(to_string(a.field)));
      }
    }
  }

  std::vector<FieldSlot> slots_;
};

namespace detail {
inline std::uint32_t read_field(const SimPacket& p, CovertField f) {
  switch (f) {
    case CovertField::IpId: return p.ip_id;
    case CovertField::IpTos: return p.ip_tos;
    case CovertField::IpFlagsReserved: return p.ip_flags_reserved & 1u;
    case CovertField::UdpChecksum: return p.udp_checksum;
  }
  return 0;
}

inline void write_field(SimPacket& p, CovertField f, std::uint32_t v) {
  switch (f) {
    case CovertField::IpId: p.ip_id = static_cast<std::uint16_t>(v); break;
    case CovertField::IpTos: p.ip_tos = static_cast<std::uint8_t>(v); break;
    case CovertField::IpFlagsReserved: p.ip_flags_reserved = static_cast<std::uint8_t>(v & 1u); break;
    case CovertField::UdpChecksum: p.udp_checksum = static_cast<std::uint16_t>(v); break;
  }
}
}  // namespace detail

/// Writes the 32 control bits into the map slots; map bits past the word are zeroed.
inline SimPacket stego_embed(SimPacket packet, const ControlWord& word, const FieldMap& map) {
  if (map.total_width() < 32)
    throw CapacityError("field map carries " + std::to_string(map.total_width()) + " bits, need 32");
  const std::uint32_t raw = word.pack();
  int next = 31;  // next word bit to place, MSB first
  for (const auto& s : map.slots()) {
    std::uint32_t v = detail::read_field(packet, s.field);
    for (int i = static_cast<int>(s.width) - 1; i >= 0; --i) {
      const std::uint32_t bit = next >= 0 ? (raw >> next) & 1u : 0u;
      const unsigned pos = s.offset + static_cast<unsigned>(i);
      v = (v & ~(1u << pos)) | (bit << pos);
      --next;
    }
    detail::write_field(packet, s.field, v);
  }
  return packet;
}

/// Reads the control word back. Rejects on crc failure, set reserved bits,
/// or non-zero padding in the map bits past the word.
inline std::optional<ControlWord> stego_extract(const SimPacket& packet, const FieldMap& map) {
  if (map.total_width() < 32) return std::nullopt;
  std::uint32_t raw = 0;
  int taken = 0;
  for (const auto& s : map.slots()) {
    const std::uint32_t v = detail::read_field(packet, s.field);
    for (int i = static_cast<int>(s.width) - 1; i >= 0; --i) {
      const std::uint32_t bit = (v >> (s.offset + static_cast<unsigned>(i))) & 1u;
      if (taken < 32) {
        raw = (raw << 1) | bit;
      } else if (bit != 0) {
        return std::nullopt;
      }
      ++taken;
    }
  }
  return ControlWord::unpack(raw);
}

// ---------------------------------------------------------------------------
// QIM watermark

struct QimParams {
  int step = 64;  // lattice step, PCM units; even
  std::size_t bits_per_frame = 16;
  std::uint64_t key = 0;  // seeds the carrier permutation

  void validate(std::size_t frame_samples) const {
    if (step < 2 || step % 2 != 0) throw std::invalid_argument("qim step must be a positive even integer");
    if (bits_per_frame == 0 || bits_per_frame > frame_samples)
      throw std::invalid_argument("qim bits_per_frame must be in [1, frame sample count]");
  }

  std::size_t payload_bytes_per_frame() const { return bits_per_frame / 8; }
};

/// First `count` entries of a keyed Fisher-Yates permutation of [0, n).
inline std::vector<std::size_t> carrier_positions(std::uint64_t key, std::size_t n, std::size_t count) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(key);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  idx.resize(std::min(count, n));
  return idx;
}

/// Nearest point of lattice b: step*Z + b*step/2, kept inside the PCM16 range.
inline std::int16_t qim_quantize(std::int32_t x, int bit, int step) {
  const std::int64_t offset = bit ? step / 2 : 0;
  const double k = std::floor(static_cast<double>(x - offset) / step + 0.5);
  std::int64_t y = static_cast<std::int64_t>(k) * step + offset;
  while (y > INT16_MAX) y -= step;
  while (y < INT16_MIN) y += step;
  return static_cast<std::int16_t>(y);
}

inline int qim_decode(std::int32_t x, int step) {
  const auto d0 = std::abs(static_cast<std::int64_t>(x) - qim_quantize(x, 0, step));
  const auto d1 = std::abs(static_cast<std::int64_t>(x) - qim_quantize(x, 1, step));
  return d1 < d0 ? 1 : 0;
}

inline VoiceFrame wm_embed(VoiceFrame frame, std::span<const std::uint8_t> payload_bits, const QimParams& params) {
  params.validate(frame.samples.size());
  if (payload_bits.size() > params.bits_per_frame)
    throw CapacityError("watermark payload of " + std::to_string(payload_bits.size()) + " bits exceeds " +
                        std::to_string(params.bits_per_frame));
  const auto pos = carrier_positions(params.key, frame.samples.size(), params.bits_per_frame);
  for (std::size_t i = 0; i < payload_bits.size(); ++i) {
    auto& s = frame.samples[pos[i]];
    s = qim_quantize(s, payload_bits[i] ? 1 : 0, params.step);
  }
  return frame;
}

inline std::vector<std::uint8_t> wm_extract(const VoiceFrame& frame, std::size_t nbits, const QimParams& params) {
  params.validate(frame.samples.size());
  if (nbits > params.bits_per_frame) throw CapacityError("requested more bits than the frame carries");
  const auto pos = carrier_positions(params.key, frame.samples.size(), params.bits_per_frame);
  std::vector<std::uint8_t> bits(nbits);
  for (std::size_t i = 0; i < nbits; ++i) bits[i] = static_cast<std::uint8_t>(qim_decode(frame.samples[pos[i]], params.step));
  return bits;
}

inline std::vector<std::uint8_t> bytes_to_bits(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> bits;
  bits.reserve(bytes.size() * 8);
  for (auto b : bytes)
    for (int i = 7; i >= 0; --i) bits.push_back(static_cast<std::uint8_t>((b >> i) & 1u));
  return bits;
}

inline std::vector<std::uint8_t> bits_to_bytes(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> bytes(bits.size() / 8, 0);
  for (std::size_t i = 0; i < bytes.size() * 8; ++i)
    bytes[i / 8] = static_cast<std::uint8_t>(bytes[i / 8] | ((bits[i] & 1u) << (7 - i % 8)));
  return bytes;
}

// ---------------------------------------------------------------------------
// Measurement framing over both sub-channels

struct CovertMessage {
  MsgType type = MsgType::Keepalive;
  std::uint8_t seq = 0;
  std::vector<std::uint8_t> payload;
  bool operator==(const CovertMessage&) const = default;
};

/// Sender side of one session's covert channel. Owns the control-word
/// sequence counter; not shared between sessions.
class CovertSender {
 public:
  CovertSender(FieldMap map, QimParams params) : map_(std::move(map)), params_(params) {}

  SimPacket send_measurement(SimPacket packet, MsgType type, std::span<const std::uint8_t> payload) {
    if (payload.size() > params_.payload_bytes_per_frame())
      throw CapacityError("covert payload of " + std::to_string(payload.size()) + " bytes exceeds " +
                          std::to_string(params_.payload_bytes_per_frame()) + " per frame");
    ControlWord w;
    w.msg_type = static_cast<std::uint8_t>(type);
    w.seq = seq_;
    w.payload_len = static_cast<std::uint8_t>(payload.size());
    w.seal();
    packet = stego_embed(std::move(packet), w, map_);
    if (!payload.empty()) packet.payload = wm_embed(std::move(packet.payload), bytes_to_bits(payload), params_);
    ++seq_;
    return packet;
  }

  std::uint8_t next_seq() const { return seq_; }
  const FieldMap& map() const { return map_; }
  const QimParams& params() const { return params_; }

 private:
  FieldMap map_;
  QimParams params_;
  std::uint8_t seq_ = 0;
};

/// Receive side: decodes the control word and the watermark payload it announces.
inline std::optional<CovertMessage> receive_measurement(const SimPacket& packet, const FieldMap& map,
                                                        const QimParams& params) {
  const auto w = stego_extract(packet, map);
  if (!w || w->version != ControlWord::kProtocolVersion || w->msg_type > 3) return std::nullopt;
  if (w->payload_len > params.payload_bytes_per_frame()) return std::nullopt;
  CovertMessage m;
  m.type = static_cast<MsgType>(w->msg_type);
  m.seq = w->seq;
  if (w->payload_len > 0) m.payload = bits_to_bytes(wm_extract(packet.payload, std::size_t{w->payload_len} * 8, params));
  return m;
}

}  // namespace secmon
