#pragma once

// Built-in scenarios, one per acceptance property.

#include <optional>
#include <string_view>
#include <vector>

namespace secmon {

struct CannedScenario {
  std::string_view name;
  std::string_view description;
  std::string_view json;
};

namespace canned {

inline constexpr std::string_view kCleanBaseline = R"({
  "name": "clean-baseline",
  "description": "Two nodes on a direct link, one voice session, no adversary.",
  "seed": 42,
  "topology": {
    "nodes": [0, 1],
    "links": [{"from": 0, "to": 1, "delay_ms": 10, "jitter_ms": 1}]
  },
  "sessions": [{"id": 1, "source": 0, "destination": 1}]
})";

inline constexpr std::string_view kLossInjection = R"({
  "name": "loss-injection",
  "description": "Relay drops 20% of the session's packets from t=20 s.",
  "seed": 42,
  "topology": {
    "nodes": [0, 1, 2],
    "links": [
      {"from": 0, "to": 1, "delay_ms": 5, "jitter_ms": 1},
      {"from": 1, "to": 2, "delay_ms": 5, "jitter_ms": 1}
    ]
  },
  "sessions": [{"id": 1, "source": 0, "destination": 2}],
  "adversaries": [{"node": 1, "behavior": "DROP", "extra_loss": 0.2, "start_ms": 20000}]
})";

inline constexpr std::string_view kJitterInjection = R"({
  "name": "jitter-injection",
  "description": "Relay adds 50 ms std of jitter from t=20 s.",
  "seed": 42,
  "topology": {
    "nodes": [0, 1, 2],
    "links": [
      {"from": 0, "to": 1, "delay_ms": 5, "jitter_ms": 1},
      {"from": 1, "to": 2, "delay_ms": 5, "jitter_ms": 1}
    ]
  },
  "sessions": [{"id": 1, "source": 0, "destination": 2}],
  "adversaries": [{"node": 1, "behavior": "JITTER", "extra_jitter_ms": 50, "start_ms": 20000}]
})";

inline constexpr std::string_view kTamperDiamond = R"({
  "name": "tamper-diamond",
  "description": "Relay on the shortest path flips payload bits from t=15 s; an honest longer path exists.",
  "seed": 42,
  "topology": {
    "nodes": [0, 1, 2, 3, 4],
    "links": [
      {"from": 0, "to": 1, "delay_ms": 5, "jitter_ms": 1},
      {"from": 1, "to": 4, "delay_ms": 5, "jitter_ms": 1},
      {"from": 0, "to": 2, "delay_ms": 3, "jitter_ms": 1},
      {"from": 2, "to": 3, "delay_ms": 4, "jitter_ms": 1},
      {"from": 3, "to": 4, "delay_ms": 3, "jitter_ms": 1}
    ]
  },
  "sessions": [{"id": 1, "source": 0, "destination": 4}],
  "adversaries": [{"node": 1, "behavior": "TAMPER", "rate": 1.0, "samples": 4, "bit": 8, "start_ms": 15000}]
})";

inline constexpr std::string_view kReplay = R"({
  "name": "replay",
  "description": "Relay replays voice and covert fields from five windows earlier from t=15 s.",
  "seed": 42,
  "topology": {
    "nodes": [0, 1, 2, 3, 4],
    "links": [
      {"from": 0, "to": 1, "delay_ms": 5, "jitter_ms": 1},
      {"from": 1, "to": 4, "delay_ms": 5, "jitter_ms": 1},
      {"from": 0, "to": 2, "delay_ms": 3, "jitter_ms": 1},
      {"from": 2, "to": 3, "delay_ms": 4, "jitter_ms": 1},
      {"from": 3, "to": 4, "delay_ms": 3, "jitter_ms": 1}
    ]
  },
  "sessions": [{"id": 1, "source": 0, "destination": 4}],
  "adversaries": [{"node": 1, "behavior": "REPLAY", "depth": 5, "start_ms": 15000}]
})";

inline constexpr std::string_view kFloodDdos = R"({
  "name": "flood-ddos",
  "description": "Unknown-session flood at 10x the relay's baseline rate from t=30 s; relay capacity is limited.",
  "seed": 42,
  "topology": {
    "nodes": [0, {"id": 1, "capacity_pps": 200, "queue_limit": 20}, 2, 3, 4, 5],
    "links": [
      {"from": 0, "to": 1, "delay_ms": 5, "jitter_ms": 1},
      {"from": 1, "to": 2, "delay_ms": 5, "jitter_ms": 1},
      {"from": 0, "to": 3, "delay_ms": 3, "jitter_ms": 1},
      {"from": 3, "to": 4, "delay_ms": 4, "jitter_ms": 1},
      {"from": 4, "to": 2, "delay_ms": 3, "jitter_ms": 1},
      {"from": 5, "to": 1, "delay_ms": 5, "jitter_ms": 1}
    ]
  },
  "sessions": [{"id": 1, "source": 0, "destination": 2}],
  "adversaries": [{"node": 5, "behavior": "FLOOD", "target": 1, "rate_pps": 500, "start_ms": 30000}]
})";

inline constexpr std::string_view kLyingVoter = R"({
  "name": "lying-voter",
  "description": "Node 5 shares inverted reputation; relay 2 drops 30% in alternating 10 s phases.",
  "seed": 42,
  "topology": {
    "nodes": [0, 1, 2, 3, 4, 5],
    "links": [
      {"from": 0, "to": 1, "delay_ms": 5, "jitter_ms": 1},
      {"from": 0, "to": 2, "delay_ms": 5, "jitter_ms": 1},
      {"from": 1, "to": 3, "delay_ms": 5, "jitter_ms": 1},
      {"from": 1, "to": 4, "delay_ms": 5, "jitter_ms": 1},
      {"from": 1, "to": 5, "delay_ms": 5, "jitter_ms": 1},
      {"from": 2, "to": 3, "delay_ms": 5, "jitter_ms": 1},
      {"from": 2, "to": 4, "delay_ms": 5, "jitter_ms": 1},
      {"from": 2, "to": 5, "delay_ms": 5, "jitter_ms": 1},
      {"from": 3, "to": 4, "delay_ms": 5, "jitter_ms": 1},
      {"from": 3, "to": 5, "delay_ms": 5, "jitter_ms": 1}
    ]
  },
  "sessions": [
    {"id": 1, "source": 0, "destination": 3, "path": [0, 1, 3], "reroute": false},
    {"id": 2, "source": 0, "destination": 3, "path": [0, 2, 3], "reroute": false},
    {"id": 3, "source": 0, "destination": 4, "path": [0, 1, 4], "reroute": false},
    {"id": 4, "source": 0, "destination": 4, "path": [0, 2, 4], "reroute": false},
    {"id": 5, "source": 0, "destination": 5, "path": [0, 1, 5], "reroute": false},
    {"id": 6, "source": 0, "destination": 5, "path": [0, 2, 5], "reroute": false}
  ],
  "adversaries": [
    {"node": 5, "behavior": "LIE_VOTES"},
    {"node": 2, "behavior": "DROP", "extra_loss": 0.3, "start_ms": 10000, "end_ms": 20000},
    {"node": 2, "behavior": "DROP", "extra_loss": 0.3, "start_ms": 30000, "end_ms": 40000},
    {"node": 2, "behavior": "DROP", "extra_loss": 0.3, "start_ms": 50000, "end_ms": 60000}
  ]
})";

}  // namespace canned

inline const std::vector<CannedScenario>& canned_scenarios() {
  static const std::vector<CannedScenario> all{
      {"clean-baseline", "direct link, one session, no adversary", canned::kCleanBaseline},
      {"loss-injection", "20% loss at the relay from t=20 s", canned::kLossInjection},
      {"jitter-injection", "50 ms jitter std at the relay from t=20 s", canned::kJitterInjection},
      {"tamper-diamond", "payload tampering on the short path of a diamond, reroute expected",
       canned::kTamperDiamond},
      {"replay", "window replay on the short path of a diamond", canned::kReplay},
      {"flood-ddos", "unknown-session flood against a capacity-limited relay", canned::kFloodDdos},
      {"lying-voter", "one neighbor shares inverted reputation values", canned::kLyingVoter},
  };
  return all;
}

inline std::optional<CannedScenario> find_canned(std::string_view name) {
  for (const auto& c : canned_scenarios())
    if (c.name == name) return c;
  return std::nullopt;
}

}  // namespace secmon
