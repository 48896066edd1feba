#pragma once

// Security management block: keyed hash tokens over windows of voice frames.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "secmon/packet.hpp"
#include "secmon/qos_monitor.hpp"

namespace secmon {

class WindowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using SessionKey = std::array<std::uint8_t, 16>;

struct SessionKeys {
  std::uint32_t session_id = 0;
  SessionKey group_key{};
};

struct SecurityConfig {
  std::size_t frames_per_window = 10;  // 200 ms at 20 ms framing
  int qim_step = 64;

  void validate() const {
    if (frames_per_window < 3) throw std::invalid_argument("frames_per_window must be >= 3");
    if (qim_step < 2 || qim_step % 2 != 0) throw std::invalid_argument("qim_step must be a positive even integer");
  }
};

struct IntegrityToken {
  std::uint64_t window = 0;
  std::uint32_t tag = 0;

  std::array<std::uint8_t, 4> tag_bytes() const {
    return {static_cast<std::uint8_t>(tag >> 24), static_cast<std::uint8_t>(tag >> 16),
            static_cast<std::uint8_t>(tag >> 8), static_cast<std::uint8_t>(tag)};
  }
  static std::uint32_t tag_from_bytes(std::span<const std::uint8_t> b) {
    if (b.size() != 4) throw std::invalid_argument("tag is four bytes");
    return std::uint32_t{b[0]} << 24 | std::uint32_t{b[1]} << 16 | std::uint32_t{b[2]} << 8 | b[3];
  }

  bool operator==(const IntegrityToken&) const = default;
};

/// HMAC-SHA256 truncated to its first four bytes, big-endian.
inline std::uint32_t hmac_sha256_32(std::span<const std::uint8_t> key, std::span<const std::uint8_t> msg) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(), msg.size(), md.data(), &len) ==
          nullptr ||
      len < 4)
    throw std::runtime_error("HMAC-SHA256 failed");
  return std::uint32_t{md[0]} << 24 | std::uint32_t{md[1]} << 16 | std::uint32_t{md[2]} << 8 | md[3];
}

/// Sample index on the half-step lattice. Stable under perturbations below a
/// quarter step of points already on the lattice, so watermark carriers hash
/// the same at every hop; a change of half a step or more always moves it.
inline std::int16_t lattice_index(std::int16_t x, int step) {
  const double h = step / 2.0;
  return static_cast<std::int16_t>(std::floor(x / h + 0.5));
}

namespace detail {
inline void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::vector<std::uint8_t> token_preimage(std::span<const VoiceFrame> frames, std::uint64_t w,
                                                std::uint32_t first_seq, const SessionKeys& keys,
                                                const SecurityConfig& cfg) {
  std::vector<std::uint8_t> msg;
  msg.reserve(20 + frames.size() * 320);
  put_be(msg, keys.session_id, 4);
  put_be(msg, w, 8);
  put_be(msg, first_seq, 4);
  put_be(msg, first_seq + frames.size() - 1, 4);
  for (const auto& f : frames)
    for (auto s : f.samples) put_be(msg, static_cast<std::uint16_t>(lattice_index(s, cfg.qim_step)), 2);
  return msg;
}
}  // namespace detail

/// Token over window `w`, whose first frame carries sequence counter `first_seq`.
inline IntegrityToken token_generate(std::span<const VoiceFrame> frames, std::uint64_t w, std::uint32_t first_seq,
                                     const SessionKeys& keys, const SecurityConfig& cfg = {}) {
  if (frames.size() != cfg.frames_per_window)
    throw WindowError("window holds " + std::to_string(frames.size()) + " frames, expected " +
                      std::to_string(cfg.frames_per_window));
  const auto msg = detail::token_preimage(frames, w, first_seq, keys, cfg);
  return {w, hmac_sha256_32(keys.group_key, msg)};
}

enum class SecCause { Ok, TokenAbsent, TagMismatch };

inline std::string_view to_string(SecCause c) {
  switch (c) {
    case SecCause::Ok: return "ok";
    case SecCause::TokenAbsent: return "token_absent";
    case SecCause::TagMismatch: return "tag_mismatch";
  }
  return "?";
}

struct SecVerdict {
  bool ssr_ok = false;
  SecCause cause = SecCause::TokenAbsent;
};

inline SecVerdict token_verify(std::span<const VoiceFrame> frames, std::uint64_t w, std::uint32_t first_seq,
                               const SessionKeys& keys, const std::optional<IntegrityToken>& received,
                               const SecurityConfig& cfg = {}) {
  if (!received) return {false, SecCause::TokenAbsent};
  const auto expect = token_generate(frames, w, first_seq, keys, cfg);
  if (expect.tag != received->tag || received->window != w) return {false, SecCause::TagMismatch};
  return {true, SecCause::Ok};
}

/// Fraction of verified windows in a reporting period.
inline double emit_security_metric(std::span<const SecVerdict> verdicts) {
  if (verdicts.empty()) throw NotReady("no security verdicts in period");
  std::size_t ok = 0;
  for (const auto& v : verdicts) ok += v.ssr_ok ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(verdicts.size());
}

}  // namespace secmon
