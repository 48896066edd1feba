#pragma once

// Anomaly-based intrusion detection with a behaviour model learned from
// attack-free traffic. One-sided thresholds: every modeled threat shows up
// as an increase of some per-interval metric.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "secmon/packet.hpp"
#include "secmon/qos_monitor.hpp"
#include "secmon/reputation.hpp"

namespace secmon {

enum class Metric : std::size_t { PacketRate = 0, ByteRate = 1, UnknownSessionRate = 2, HashFailureRate = 3 };
inline constexpr std::size_t kMetricCount = 4;
inline constexpr Metric kMetrics[] = {Metric::PacketRate, Metric::ByteRate, Metric::UnknownSessionRate,
                                      Metric::HashFailureRate};

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::PacketRate: return "packet_rate";
    case Metric::ByteRate: return "byte_rate";
    case Metric::UnknownSessionRate: return "unknown_session_rate";
    case Metric::HashFailureRate: return "hash_failure_rate";
  }
  return "?";
}

/// Metric values for one averaging interval.
struct IntervalMetrics {
  std::array<double, kMetricCount> values{};
  double& operator[](Metric m) { return values[static_cast<std::size_t>(m)]; }
  double operator[](Metric m) const { return values[static_cast<std::size_t>(m)]; }
};

struct IdsParams {
  double k = 3.0;
  std::size_t consecutive = 2;
  std::size_t learn_len = 20;
  double sigma_min = 1.0;

  void validate() const {
    if (!(k > 0.0)) throw std::invalid_argument("ids k must be > 0");
    if (consecutive == 0) throw std::invalid_argument("ids consecutive must be >= 1");
    if (learn_len < 2) throw std::invalid_argument("ids learn_len must be >= 2");
    if (!(sigma_min > 0.0)) throw std::invalid_argument("ids sigma_min must be > 0");
  }
};

struct BehaviourModel {
  std::array<double, kMetricCount> mean{};
  std::array<double, kMetricCount> sigma{};
  IdsParams params;

  double threshold(Metric m) const {
    const auto i = static_cast<std::size_t>(m);
    return mean[i] + params.k * sigma[i];
  }
};

/// Population mean/std per metric over the learning samples, sigma floored.
inline BehaviourModel learn(std::span<const IntervalMetrics> samples, const IdsParams& params) {
  params.validate();
  if (samples.size() < params.learn_len)
    throw NotReady("behaviour model needs " + std::to_string(params.learn_len) + " intervals, got " +
                   std::to_string(samples.size()));
  BehaviourModel m;
  m.params = params;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    double s = 0;
    for (const auto& x : samples) s += x.values[i];
    const double mu = s / n;
    double var = 0;
    for (const auto& x : samples) var += (x.values[i] - mu) * (x.values[i] - mu);
    m.mean[i] = mu;
    m.sigma[i] = std::max(params.sigma_min, std::sqrt(var / n));
  }
  return m;
}

struct Alarm {
  Metric metric = Metric::PacketRate;
  double value = 0.0;
  double threshold = 0.0;
};

class AnomalyDetector {
 public:
  virtual ~AnomalyDetector() = default;
  virtual std::vector<Alarm> detect(const IntervalMetrics& metrics) = 0;
};

/// Alarms when a metric exceeds mean + k*sigma for `consecutive` intervals in a row.
class ThresholdDetector final : public AnomalyDetector {
 public:
  explicit ThresholdDetector(BehaviourModel model) : model_(std::move(model)) {}

  std::vector<Alarm> detect(const IntervalMetrics& metrics) override {
    std::vector<Alarm> out;
    for (auto m : kMetrics) {
      const auto i = static_cast<std::size_t>(m);
      const double thr = model_.threshold(m);
      if (metrics[m] > thr) {
        ++run_[i];
      } else {
        run_[i] = 0;
      }
      if (run_[i] >= model_.params.consecutive) out.push_back({m, metrics[m], thr});
    }
    return out;
  }

  const BehaviourModel& model() const { return model_; }

 private:
  BehaviourModel model_;
  std::array<std::size_t, kMetricCount> run_{};
};

/// One-sided CUSUM on standardized metrics. Drift and decision limit in sigma units.
class CusumDetector final : public AnomalyDetector {
 public:
  CusumDetector(BehaviourModel model, double drift = 0.5, double limit = 5.0)
      : model_(std::move(model)), drift_(drift), limit_(limit) {}

  std::vector<Alarm> detect(const IntervalMetrics& metrics) override {
    std::vector<Alarm> out;
    for (auto m : kMetrics) {
      const auto i = static_cast<std::size_t>(m);
      const double z = (metrics[m] - model_.mean[i]) / model_.sigma[i];
      stat_[i] = std::max(0.0, stat_[i] + z - drift_);
      if (stat_[i] > limit_) out.push_back({m, metrics[m], model_.mean[i] + limit_ * model_.sigma[i]});
    }
    return out;
  }

 private:
  BehaviourModel model_;
  double drift_, limit_;
  std::array<double, kMetricCount> stat_{};
};

/// Learning phase followed by frozen-model detection. Never alarms while learning.
class IdsInstance {
 public:
  explicit IdsInstance(IdsParams params, bool use_cusum = false) : params_(params), use_cusum_(use_cusum) {
    params_.validate();
  }

  std::vector<Alarm> observe(const IntervalMetrics& metrics) {
    if (!detector_) {
      samples_.push_back(metrics);
      if (samples_.size() >= params_.learn_len) {
        model_ = learn(samples_, params_);
        if (use_cusum_) {
          detector_ = std::make_unique<CusumDetector>(*model_);
        } else {
          detector_ = std::make_unique<ThresholdDetector>(*model_);
        }
        samples_.clear();
      }
      return {};
    }
    return detector_->detect(metrics);
  }

  bool learning() const { return !detector_; }
  const std::optional<BehaviourModel>& model() const { return model_; }

 private:
  IdsParams params_;
  bool use_cusum_;
  std::vector<IntervalMetrics> samples_;
  std::optional<BehaviourModel> model_;
  std::unique_ptr<AnomalyDetector> detector_;
};

// ---------------------------------------------------------------------------
// Attack characterization

enum class AttackType { Flood, UnknownSession, IntegrityAnomaly };

inline std::string_view to_string(AttackType t) {
  switch (t) {
    case AttackType::Flood: return "FLOOD";
    case AttackType::UnknownSession: return "UNKNOWN_SESSION";
    case AttackType::IntegrityAnomaly: return "INTEGRITY_ANOMALY";
  }
  return "?";
}

/// What a node saw during the detection interval.
struct ObservedPacket {
  FlowId flow = 0;
  NodeId upstream = 0;
  bool known_session = true;
  bool hash_failure = false;  // a failed integrity window attributed to this flow
  std::size_t bytes = 0;
};

struct AttackReport {
  AttackType type = AttackType::Flood;
  std::set<FlowId> flows;
  std::optional<NodeId> suspected;
  std::int64_t interval = 0;
  std::vector<Alarm> metrics;
};

namespace detail {
template <class Pred>
std::optional<NodeId> top_upstream(std::span<const ObservedPacket> log, Pred pred, std::set<FlowId>& flows) {
  std::map<NodeId, std::size_t> counts;
  for (const auto& p : log) {
    if (!pred(p)) continue;
    ++counts[p.upstream];
    flows.insert(p.flow);
  }
  std::optional<NodeId> best;
  std::size_t best_n = 0;
  for (const auto& [id, n] : counts)
    if (n > best_n) {
      best = id;
      best_n = n;
    }
  return best;
}
}  // namespace detail

/// Groups alarmed traffic by attack type; at most one report per type.
inline std::vector<AttackReport> characterize(std::span<const Alarm> alarms, std::span<const ObservedPacket> log,
                                              std::int64_t interval) {
  auto has = [&](Metric m) {
    return std::any_of(alarms.begin(), alarms.end(), [m](const Alarm& a) { return a.metric == m; });
  };
  auto pick = [&](std::initializer_list<Metric> ms) {
    std::vector<Alarm> out;
    for (const auto& a : alarms)
      if (std::find(ms.begin(), ms.end(), a.metric) != ms.end()) out.push_back(a);
    return out;
  };
  std::vector<AttackReport> out;
  const bool volume = has(Metric::PacketRate) || has(Metric::ByteRate);
  const bool unknown = has(Metric::UnknownSessionRate);
  if (volume || unknown) {
    AttackReport r;
    r.type = volume ? AttackType::Flood : AttackType::UnknownSession;
    r.interval = interval;
    r.metrics = pick({Metric::PacketRate, Metric::ByteRate, Metric::UnknownSessionRate});
    const bool any_unknown =
        std::any_of(log.begin(), log.end(), [](const ObservedPacket& p) { return !p.known_session; });
    if (any_unknown) {
      r.suspected = detail::top_upstream(log, [](const ObservedPacket& p) { return !p.known_session; }, r.flows);
    } else {
      r.suspected = detail::top_upstream(log, [](const ObservedPacket&) { return true; }, r.flows);
    }
    out.push_back(std::move(r));
  }
  if (has(Metric::HashFailureRate)) {
    AttackReport r;
    r.type = AttackType::IntegrityAnomaly;
    r.interval = interval;
    r.metrics = pick({Metric::HashFailureRate});
    r.suspected = detail::top_upstream(log, [](const ObservedPacket& p) { return p.hash_failure; }, r.flows);
    out.push_back(std::move(r));
  }
  return out;
}

/// Alert to the reputation block: the suspected node's SSR evidence is pinned to 0.
inline void notify_rmb(const AttackReport& report, EvidenceRepository& evidence) {
  if (report.suspected) evidence.flag_ids(*report.suspected, std::string(to_string(report.type)));
}

}  // namespace secmon
