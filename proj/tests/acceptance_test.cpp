// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "secmon/canned_scenarios.hpp"
#include "secmon/covert_channel.hpp"
#include "secmon/qos_monitor.hpp"
#include "secmon/reputation.hpp"
#include "secmon/security.hpp"
#include "secmon/simulator.hpp"

using namespace secmon;

namespace {

int failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::cout << id << ' ' << (ok ? "PASS" : "FAIL") << "  " << detail << std::endl;
  if (!ok) ++failures;
}

ScenarioConfig canned_config(std::string_view name) { return load_scenario_text(find_canned(name)->json); }

bool contains(const std::vector<NodeId>& p, NodeId n) { return std::find(p.begin(), p.end(), n) != p.end(); }

std::string fmt(double v, int prec = 4) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(prec);
  o << v;
  return o.str();
}

// A1: covert capacity and control-word round trip.
void a1() {
  const auto map = FieldMap::default_map();
  std::mt19937_64 rng(1);
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    ControlWord w;
    w.msg_type = static_cast<std::uint8_t>(rng() % 4);
    w.seq = static_cast<std::uint8_t>(rng());
    w.payload_len = static_cast<std::uint8_t>(rng() % 64);
    w.seal();
    SimPacket p = make_voice_packet(1, i, VoiceFrame::silence(), 0);
    p.ip_id = static_cast<std::uint16_t>(rng());
    p.ip_tos = static_cast<std::uint8_t>(rng());
    p.udp_checksum = static_cast<std::uint16_t>(rng());
    const auto back = stego_extract(stego_embed(p, w, map), map);
    if (!back || !(*back == w)) ++bad;
  }
  report("A1", map.total_width() == 41 && map.total_width() >= 32 && bad == 0,
         "field map width " + std::to_string(map.total_width()) + " bits, " + std::to_string(bad) +
             " round-trip failures over 10000 control words");
}

// A2: 32 bps budget and zero bandwidth overhead.
void a2() {
  MonitorConfig cfg;
  const double bps = monitoring_bitrate(cfg);
  CovertSender tx(FieldMap::default_map(), QimParams{});
  std::mt19937_64 rng(2);
  std::size_t changed = 0, total = 0;
  for (int i = 0; i < 10000; ++i) {
    VoiceFrame f = VoiceFrame::silence();
    for (auto& s : f.samples) s = static_cast<std::int16_t>(static_cast<int>(rng() % 20001) - 10000);
    const SimPacket p = make_voice_packet(1, i, f, i * 20);
    const std::uint8_t payload[2] = {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())};
    const auto q = tx.send_measurement(p, static_cast<MsgType>(i % 4), std::span(payload, i % 3));
    ++total;
    if (q.byte_length() != p.byte_length()) ++changed;
  }
  std::uint64_t sim_mismatch = 0;
  for (const auto& c : canned_scenarios())
    for (const auto& s : run(load_scenario_text(c.json)).sessions) sim_mismatch += s.covert_length_mismatch;
  report("A2", bps == 32.0 && changed == 0 && sim_mismatch == 0,
         "monitoring bitrate " + fmt(bps, 1) + " bps; length changed on " + std::to_string(changed) + "/" +
             std::to_string(total) + " embedded packets and " + std::to_string(sim_mismatch) +
             " simulated packets");
}

// A3: loss and jitter detection timeliness.
void a3() {
  const auto loss = run(canned_config("loss-injection"));
  TimeMs first_loss = -1;
  for (const auto& q : loss.qos)
    if (!q.psr_ok && q.time >= 20000) {
      first_loss = q.time;
      break;
    }
  const auto jit_cfg = canned_config("jitter-injection");
  const auto jit = run(jit_cfg);
  const double delta_std = jit_cfg.constants.monitor.delta_std;
  const TimeMs two_windows = 2 * jit_cfg.constants.monitor.window_ms();
  TimeMs first_jit = -1;
  for (const auto& q : jit.qos)
    if (q.time >= 20000 && q.rel_std_increase > delta_std) {
      first_jit = q.time;
      break;
    }
  bool early = false;
  for (const auto& q : loss.qos) early |= !q.psr_ok && q.time < 20000;
  const bool ok_loss = first_loss >= 0 && first_loss - 20000 <= 1000 && !early;
  const bool ok_jit = first_jit >= 0 && first_jit - 20000 <= two_windows;
  report("A3", ok_loss && ok_jit,
         "loss: first psr_ok=false " + std::to_string(first_loss - 20000) + " ms after onset (limit 1000)" +
             (early ? ", false verdict before onset" : "") + "; jitter: rel_std_increase > " + fmt(delta_std, 2) +
             " " + std::to_string(first_jit - 20000) + " ms after onset (limit " + std::to_string(two_windows) + ")");
}

// A4: integrity verification and isolation of the tamperer.
void a4() {
  // Silent-pass rate on 1000 independently tampered windows.
  SecurityConfig sc;
  SessionKeys keys{7, {}};
  std::mt19937_64 rng(4);
  for (auto& b : keys.group_key) b = static_cast<std::uint8_t>(rng());
  int silent = 0;
  for (int w = 0; w < 1000; ++w) {
    std::vector<VoiceFrame> frames;
    for (int k = 0; k < 10; ++k) frames.push_back(synth_voice_frame(1, w * 10 + k, rng));
    const auto tok = token_generate(frames, w, w * 10, keys, sc);
    auto bad = frames;
    for (auto& f : bad)
      for (int i = 0; i < 4; ++i) {
        auto& s = f.samples[rng() % f.samples.size()];
        s = static_cast<std::int16_t>(static_cast<std::uint16_t>(s) ^ (1u << 8));
      }
    if (token_verify(bad, w, w * 10, keys, tok, sc).ssr_ok) ++silent;
  }

  const auto cfg = canned_config("tamper-diamond");
  const auto r = run(cfg);
  const std::uint64_t first_w =
      static_cast<std::uint64_t>(15000 / (20 * cfg.constants.frames_per_window));
  bool first_failed = false;
  for (const auto& s : r.security)
    if (s.node == 4 && s.window == first_w && s.ssr_ok && !*s.ssr_ok) first_failed = true;
  const auto action = decide_action(true, false);
  const TimeMs limit = 15000 + 2 * cfg.constants.epoch();
  const RerouteEvent* iso = nullptr;
  for (const auto& e : r.reroutes)
    if (!contains(e.new_path, 1) && !e.terminated) {
      iso = &e;
      break;
    }
  const bool ok = silent == 0 && first_failed && action == Action::ReestablishAndIsolate && iso &&
                  iso->trigger == Action::ReestablishAndIsolate && iso->time <= limit;
  report("A4", ok,
         std::to_string(silent) + " silent passes over 1000 tampered windows; first tampered window " +
             std::to_string(first_w) + (first_failed ? " failed" : " NOT failed") + "; action " +
             std::string(to_string(action)) + "; reroute excluding node 1 " +
             (iso ? "at " + std::to_string(iso->time) + " ms via " + detail::path_str(iso->new_path) +
                        " (trigger " + std::string(to_string(iso->trigger)) + ")"
                  : std::string("missing")) +
             ", limit " + std::to_string(limit) + " ms");
}

// A5: reputation equations against exact rational evaluation on a 0.05 grid.
void a5() {
  std::mt19937_64 rng(5);
  auto grid = [&](int lo, int hi) { return static_cast<long long>(lo + rng() % (hi - lo + 1)); };
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const long long a = grid(1, 19), o = grid(0, 20);
    const int nv = static_cast<int>(rng() % 6);
    std::vector<WeightedVote> votes;
    long long S = 0, T = 0;
    for (int i = 0; i < nv; ++i) {
      const long long ir = grid(1, 20), v = grid(0, 20);
      votes.push_back({ir / 20.0, v / 20.0});
      S += ir;
      T += ir * v;
    }
    // SR = [a*o*S + (20-a)*T] / (400*S), all in units of 1/20.
    const double sr_exact = nv == 0 ? o / 20.0
                                    : static_cast<double>(a * o * S + (20 - a) * T) / static_cast<double>(400 * S);
    const double sr = service_reputation(a / 20.0, o / 20.0, votes);
    const long long irA = grid(1, 20);
    const int nn = 1 + static_cast<int>(rng() % 5);
    std::vector<double> nvotes;
    long long V = 0;
    for (int i = 0; i < nn; ++i) {
      const long long v = grid(0, 20);
      nvotes.push_back(v / 20.0);
      V += v;
    }
    const double cr_exact = static_cast<double>(irA * V) / static_cast<double>(400 * nn);
    const double cr = cumulative_reputation(irA / 20.0, nvotes);
    const double pr_exact =
        nv == 0 ? static_cast<double>(o * irA * V) / static_cast<double>(20 * 400 * nn)
                : static_cast<double>((a * o * S + (20 - a) * T) * irA * V) / static_cast<double>(400 * S * 400 * nn);
    const double pr = path_reputation(sr, cr);
    worst = std::max({worst, std::abs(sr - sr_exact), std::abs(cr - cr_exact), std::abs(pr - pr_exact)});
  }

  std::uniform_real_distribution<double> u(0.0, 1.0);
  int convex_bad = 0, mono_bad = 0;
  for (int t = 0; t < 10000; ++t) {
    const double alpha = 0.01 + 0.98 * u(rng), oe = u(rng);
    const int nv = 1 + static_cast<int>(rng() % 5);
    std::vector<WeightedVote> votes;
    double lo = oe, hi = oe;
    for (int i = 0; i < nv; ++i) {
      votes.push_back({0.01 + 0.99 * u(rng), u(rng)});
      lo = std::min(lo, votes.back().value);
      hi = std::max(hi, votes.back().value);
    }
    const double sr = service_reputation(alpha, oe, votes);
    if (sr < lo - 1e-12 || sr > hi + 1e-12) ++convex_bad;
    const double d = 0.1 * u(rng);
    if (service_reputation(alpha, std::min(1.0, oe + d), votes) < sr - 1e-12) ++mono_bad;
    auto bumped = votes;
    auto& v = bumped[rng() % bumped.size()].value;
    v = std::min(1.0, v + d);
    if (service_reputation(alpha, oe, bumped) < sr - 1e-12) ++mono_bad;
  }
  report("A5", worst <= 1e-12 && convex_bad == 0 && mono_bad == 0,
         "max |error| vs exact rational evaluation " + std::to_string(worst) + " over 1000 instances; " +
             std::to_string(convex_bad) + " convexity and " + std::to_string(mono_bad) +
             " monotonicity violations over 10000 inputs");
}

// A6: the lying voter is filtered and loses credibility.
void a6() {
  const auto cfg = canned_config("lying-voter");
  const auto r = run(cfg);
  const NodeId observer = 3, liar = 5, honest = 1;
  std::optional<std::uint64_t> excluded_at, ir_low_at;
  for (const auto& v : r.voters) {
    if (v.node != observer || v.voter != liar || v.context != Context::Psr) continue;
    if (!excluded_at && v.status == VoteStatus::Excluded) excluded_at = v.epoch;
    if (!ir_low_at && v.ir <= 0.2) ir_low_at = v.epoch;
  }
  auto base_cfg = cfg;
  std::erase_if(base_cfg.adversaries, [](const AdversarySpec& a) { return a.behavior == Behavior::LieVotes; });
  const auto base = run(base_cfg);
  const auto with = r.last_reputation(observer, honest, Context::Psr);
  const auto without = base.last_reputation(observer, honest, Context::Psr);
  const double dev = with && without ? std::abs(with->sr - without->sr) : 1.0;
  const bool ok = excluded_at && *excluded_at <= 5 && ir_low_at && *ir_low_at <= 20 && dev <= 0.05;
  report("A6", ok,
         "node 3 excludes voter 5 at epoch " + (excluded_at ? std::to_string(*excluded_at) : "never") +
             " (limit 5); IR <= 0.2 at epoch " + (ir_low_at ? std::to_string(*ir_low_at) : "never") +
             " (limit 20); SR of node 1 deviates from the no-liar run by " + fmt(dev) + " (limit 0.05)");
}

// A7: flood detection, attribution, service after reroute, false-positive rate.
void a7() {
  const auto cfg = canned_config("flood-ddos");
  const auto r = run(cfg);
  const AlarmRow* first = nullptr;
  for (const auto& a : r.alarms)
    if (a.type == AttackType::Flood && a.time >= 30000) {
      first = &a;
      break;
    }
  bool early = false;
  for (const auto& a : r.alarms) early |= a.time < 30000;
  const RerouteEvent* rr = nullptr;
  for (const auto& e : r.reroutes)
    if (e.time >= 30000 && !e.same_path) {
      rr = &e;
      break;
    }
  auto clean_cfg = cfg;
  clean_cfg.adversaries.clear();
  const auto clean = run(clean_cfg);
  const std::size_t from_s = rr ? static_cast<std::size_t>((rr->time + 999) / 1000) : 30;
  const std::size_t to_s = static_cast<std::size_t>(cfg.horizon_ms / 1000);
  const double got = r.session(1)->delivered_fraction(from_s, to_s);
  const double ref = clean.session(1)->delivered_fraction(from_s, to_s);
  const double ratio = ref > 0 ? got / ref : 0.0;

  std::uint64_t evaluated = 0, alarmed = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto c = canned_config("clean-baseline");
    c.seed = seed;
    for (const auto& s : run(c).ids) {
      evaluated += s.evaluated;
      alarmed += s.alarmed;
    }
  }
  // Wilson upper bound, 99% two-sided.
  const double n = static_cast<double>(evaluated), p = n > 0 ? alarmed / n : 1.0, z = 2.5758293035489;
  const double upper = n > 0 ? (p + z * z / (2 * n) + z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n))) /
                                   (1 + z * z / n)
                             : 1.0;

  const bool ok_alarm = first && first->time - 30000 <= 1000 && first->suspected && *first->suspected == 5 && !early;
  const bool ok = ok_alarm && rr && ratio >= 0.95 && evaluated >= 1000 && upper <= 0.01;
  report("A7", ok,
         "FLOOD alarm " + (first ? std::to_string(first->time - 30000) + " ms after onset, suspect " +
                                       (first->suspected ? std::to_string(*first->suspected) : "none")
                                 : std::string("missing")) +
             (early ? ", alarm before onset" : "") + "; reroute " +
             (rr ? "at " + std::to_string(rr->time) + " ms to " + detail::path_str(rr->new_path) : "missing") +
             "; delivered after reroute " + fmt(got) + " vs clean " + fmt(ref) + " (ratio " + fmt(ratio) +
             ", limit 0.95); false positives " + std::to_string(alarmed) + "/" + std::to_string(evaluated) +
             " intervals, 99% upper bound " + fmt(upper) + " (limit 0.01)");
}

// A8: QIM decoding under bounded integer noise.
void a8() {
  const int step = 64;
  std::uint64_t wrong_small = 0, checked = 0;
  bool error_large = false;
  for (int x = INT16_MIN; x <= INT16_MAX; ++x) {
    for (int bit = 0; bit <= 1; ++bit) {
      const int q = qim_quantize(x, bit, step);
      for (int n = -15; n <= 15; ++n) {
        const int y = q + n;
        if (y < INT16_MIN || y > INT16_MAX) continue;
        ++checked;
        if (qim_decode(y, step) != bit) ++wrong_small;
      }
      if (!error_large)
        for (int n : {step / 2, -step / 2})
          if (q + n >= INT16_MIN && q + n <= INT16_MAX && qim_decode(q + n, step) != bit) error_large = true;
    }
  }
  report("A8", wrong_small == 0 && error_large,
         std::to_string(wrong_small) + " decoding errors over " + std::to_string(checked) +
             " (sample, bit, noise in [-15,15]) cases; error at |noise| = 32 " +
             (error_large ? "observed" : "not observed"));
}

// A9: byte-identical digests on repeated runs.
void a9() {
  int differ = 0;
  std::string names;
  for (const auto& c : canned_scenarios()) {
    const auto cfg = load_scenario_text(c.json);
    if (report_digest(run(cfg)) != report_digest(run(cfg))) {
      ++differ;
      names += " " + std::string(c.name);
    }
  }
  report("A9", differ == 0,
         std::to_string(differ) + " of " + std::to_string(canned_scenarios().size()) +
             " canned scenarios produced differing digests" + names);
}

// A10: the four rows of the action table.
void a10() {
  const bool ok = decide_action(true, true) == Action::Monitor &&
                  decide_action(true, false) == Action::ReestablishAndIsolate &&
                  decide_action(false, true) == Action::ShareReputationReroute &&
                  decide_action(false, false) == Action::ReestablishSession;
  report("A10", ok, "(psr,ssr) -> action for all four combinations");
}

}  // namespace

int main() {
  a1();
  a2();
  a3();
  a4();
  a5();
  a6();
  a7();
  a8();
  a9();
  a10();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
