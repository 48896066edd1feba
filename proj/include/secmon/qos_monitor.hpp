#pragma once

// QoS management block: per-interval throughput counts kept in a ring,
// summarized as (mean, std) over the observation window, and compared
// between sender and receiver.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "secmon/packet.hpp"

namespace secmon {

class ClockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotReady : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class WindowMode { Moving, Jumping };
enum class CountMode { Packets, Bytes };

struct MonitorConfig {
  TimeMs delta_t_ms = 500;
  std::size_t window_len = 10;  // averaging intervals per observation window
  WindowMode window_mode = WindowMode::Moving;
  CountMode count_mode = CountMode::Packets;
  double delta_avg = 0.10;
  double delta_std = 0.50;

  TimeMs window_ms() const { return delta_t_ms * static_cast<TimeMs>(window_len); }

  void validate() const {
    if (delta_t_ms <= 0) throw std::invalid_argument("delta_t_ms must be > 0");
    if (window_len == 0) throw std::invalid_argument("window_len must be >= 1");
    if (!(delta_avg >= 0.0)) throw std::invalid_argument("delta_avg must be >= 0");
    if (!(delta_std >= 0.0)) throw std::invalid_argument("delta_std must be >= 0");
  }

  /// Rule of thumb: >= 5 packets per interval and >= 10 intervals per window.
  bool meets_sizing_guidelines(double packets_per_second) const {
    return window_len >= 10 && packets_per_second * static_cast<double>(delta_t_ms) / 1000.0 >= 5.0;
  }
};

/// Two bytes per observation window: quantized mean and std of per-interval counts.
struct MonitoringRecord {
  std::uint8_t avg_q = 0;
  std::uint8_t std_q = 0;
  std::int64_t interval = 0;  // index of the last interval the window covers

  std::array<std::uint8_t, 2> encode() const { return {avg_q, std_q}; }
  static MonitoringRecord decode(std::span<const std::uint8_t> b, std::int64_t interval) {
    if (b.size() != 2) throw std::invalid_argument("monitoring record is two bytes");
    return {b[0], b[1], interval};
  }

  bool operator==(const MonitoringRecord&) const = default;
};

inline std::uint8_t quantize_stat(double x) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 255.0)));
}

/// Fixed-capacity ring of per-interval counts with running first and second moments.
class StatRing {
 public:
  StatRing(MonitorConfig cfg, TimeMs start_ms = 0)
      : cfg_(cfg), buckets_(cfg.window_len, 0), current_start_(start_ms), last_now_(start_ms) {
    cfg_.validate();
  }

  /// Counts one packet at `now`; rolls completed intervals first. Half-open buckets.
  void observe_packet(TimeMs now, std::size_t bytes = 1) {
    advance_to(now);
    current_count_ += cfg_.count_mode == CountMode::Bytes ? static_cast<std::int64_t>(bytes) : 1;
  }

  /// Closes every interval that ended at or before `now`.
  void advance_to(TimeMs now) {
    if (now < last_now_) throw ClockError("monitor clock moved backwards");
    last_now_ = now;
    while (now >= current_start_ + cfg_.delta_t_ms) {
      push(current_count_);
      current_count_ = 0;
      current_start_ += cfg_.delta_t_ms;
    }
  }

  std::int64_t current_count() const { return current_count_; }
  std::size_t completed() const { return completed_; }
  /// Index of the most recently completed interval, counted from the ring start.
  std::int64_t last_interval() const { return static_cast<std::int64_t>(completed_) - 1; }
  TimeMs current_start() const { return current_start_; }

  std::size_t size() const { return std::min(completed_, buckets_.size()); }

  /// Buckets of the current summary window, oldest first.
  std::vector<std::int64_t> window() const {
    if (cfg_.window_mode == WindowMode::Jumping) return last_block_;
    std::vector<std::int64_t> out;
    const std::size_t n = size();
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(buckets_[(head_ + buckets_.size() - n + i) % buckets_.size()]);
    return out;
  }

  double mean() const {
    const auto [n, s, _] = moments();
    if (n == 0) throw NotReady("no completed interval");
    return static_cast<double>(s) / static_cast<double>(n);
  }

  /// Population standard deviation.
  double stddev() const {
    const auto [n, s, ss] = moments();
    if (n == 0) throw NotReady("no completed interval");
    const double m = static_cast<double>(s) / static_cast<double>(n);
    return std::sqrt(std::max(0.0, static_cast<double>(ss) / static_cast<double>(n) - m * m));
  }

  const MonitorConfig& config() const { return cfg_; }

 private:
  struct Moments {
    std::int64_t n, sum, sumsq;
  };

  Moments moments() const {
    if (cfg_.window_mode == WindowMode::Jumping)
      return {static_cast<std::int64_t>(last_block_.size()), block_sum_, block_sumsq_};
    return {static_cast<std::int64_t>(size()), sum_, sumsq_};
  }

  void push(std::int64_t c) {
    if (completed_ >= buckets_.size()) {
      const auto old = buckets_[head_];
      sum_ -= old;
      sumsq_ -= old * old;
    }
    buckets_[head_] = c;
    head_ = (head_ + 1) % buckets_.size();
    sum_ += c;
    sumsq_ += c * c;
    ++completed_;
    if (completed_ % buckets_.size() == 0) {
      last_block_ = window_unchecked();
      block_sum_ = sum_;
      block_sumsq_ = sumsq_;
    }
  }

  std::vector<std::int64_t> window_unchecked() const {
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < buckets_.size(); ++i) out.push_back(buckets_[(head_ + i) % buckets_.size()]);
    return out;
  }

  MonitorConfig cfg_;
  std::vector<std::int64_t> buckets_;
  std::size_t head_ = 0;
  std::size_t completed_ = 0;
  std::int64_t sum_ = 0;
  std::int64_t sumsq_ = 0;
  std::vector<std::int64_t> last_block_;
  std::int64_t block_sum_ = 0;
  std::int64_t block_sumsq_ = 0;
  TimeMs current_start_;
  TimeMs last_now_;
  std::int64_t current_count_ = 0;
};

inline MonitoringRecord summarize(const StatRing& ring) {
  MonitoringRecord r;
  r.avg_q = quantize_stat(ring.mean());
  r.std_q = quantize_stat(ring.stddev());
  r.interval = ring.last_interval();
  return r;
}

struct QosVerdict {
  bool psr_ok = true;
  double rel_avg_drop = 0.0;
  double rel_std_increase = 0.0;
};

inline QosVerdict compare(const MonitoringRecord& sender, const MonitoringRecord& receiver, const MonitorConfig& cfg) {
  if (sender.interval != receiver.interval)
    throw AlignmentError("records from intervals " + std::to_string(sender.interval) + " and " +
                         std::to_string(receiver.interval));
  const double s_avg = sender.avg_q, r_avg = receiver.avg_q;
  const double s_std = sender.std_q, r_std = receiver.std_q;
  QosVerdict v;
  v.rel_avg_drop = std::max(0.0, (s_avg - r_avg) / std::max(s_avg, 1.0));
  v.rel_std_increase = std::max(0.0, (r_std - s_std) / std::max(s_std, 1.0));
  v.psr_ok = v.rel_avg_drop <= cfg.delta_avg && v.rel_std_increase <= cfg.delta_std;
  return v;
}

/// Two one-byte pieces per interval.
inline double monitoring_bitrate(const MonitorConfig& cfg) {
  return 2.0 * 8.0 * 1000.0 / static_cast<double>(cfg.delta_t_ms);
}

}  // namespace secmon
