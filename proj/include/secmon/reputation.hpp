#pragma once

// Reputation management block. Own experience and second-hand votes are
// blended into a service reputation per context (PSR, SSR); voters are
// weighted by their information reputation, and the routing metric is the
// path reputation PR = SR * CR.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "secmon/packet.hpp"

namespace secmon {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class RoutingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Context : std::uint8_t { Psr = 0, Ssr = 1 };
inline constexpr Context kContexts[] = {Context::Psr, Context::Ssr};

inline std::string_view to_string(Context c) { return c == Context::Psr ? "PSR" : "SSR"; }

struct ReputationParams {
  double alpha = 0.5;    // weight of own experience in SR
  double beta = 0.3;     // own-experience smoothing
  double gamma = 0.1;    // IR learning rate
  double epsilon = 0.01; // IR floor
  double oe_prior = 0.5;
  double ir_prior = 0.5;
  std::size_t min_overlap = 5;      // epochs before a voter is correlation-checked
  double rho_min = 0.0;
  double unvalidated_ir_cap = 0.5;
  double pr_prior = 0.25;
  double ssr_ok_threshold = 0.99;
  double psr_ok_threshold = 0.9;    // fraction of intervals with psr_ok in an epoch
  std::size_t share_budget = 16;    // REP_SHARE records per neighbor per context

  void validate() const {
    auto unit_open = [](double v, const char* name) {
      if (!(v > 0.0 && v < 1.0)) throw DomainError(std::string(name) + " must be in (0,1)");
    };
    unit_open(alpha, "alpha");
    unit_open(beta, "beta");
    unit_open(gamma, "gamma");
    unit_open(epsilon, "epsilon");
    unit_open(oe_prior, "oe_prior");
    if (!(ir_prior >= epsilon && ir_prior <= 1.0)) throw DomainError("ir_prior must be in [epsilon,1]");
    if (!(rho_min >= -1.0 && rho_min <= 1.0)) throw DomainError("rho_min must be in [-1,1]");
    if (!(unvalidated_ir_cap > 0.0 && unvalidated_ir_cap <= 1.0)) throw DomainError("unvalidated_ir_cap must be in (0,1]");
    if (!(pr_prior >= 0.0 && pr_prior <= 1.0)) throw DomainError("pr_prior must be in [0,1]");
    if (!(ssr_ok_threshold >= 0.0 && ssr_ok_threshold <= 1.0)) throw DomainError("ssr_ok_threshold must be in [0,1]");
    if (!(psr_ok_threshold >= 0.0 && psr_ok_threshold <= 1.0)) throw DomainError("psr_ok_threshold must be in [0,1]");
    if (min_overlap < 2) throw DomainError("min_overlap must be >= 2");
  }
};

// ---------------------------------------------------------------------------
// Equations

struct WeightedVote {
  double ir = 0.0;
  double value = 0.0;
};

inline void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(what) + " outside [0,1]");
}

/// SR = alpha*OE + (1-alpha) * sum(IR*V)/sum(IR). No voters: SR = OE.
inline double service_reputation(double alpha, double oe, std::span<const WeightedVote> votes) {
  double num = 0.0, den = 0.0;
  for (const auto& v : votes) {
    if (!(v.ir > 0.0)) throw DomainError("information reputation must be > 0");
    check_unit(v.value, "vote");
    num += v.ir * v.value;
    den += v.ir;
  }
  if (votes.empty()) return oe;
  return alpha * oe + (1.0 - alpha) * num / den;
}

/// CR = IR(A) * mean of A's votes about its neighbors unknown to the evaluator.
/// An empty neighbor set takes the neutral mean 0.5.
inline double cumulative_reputation(double ir_subject, std::span<const double> neighbor_votes) {
  if (!(ir_subject > 0.0)) throw DomainError("information reputation must be > 0");
  if (neighbor_votes.empty()) return ir_subject * 0.5;
  double sum = 0.0;
  for (double v : neighbor_votes) {
    check_unit(v, "vote");
    sum += v;
  }
  return ir_subject * sum / static_cast<double>(neighbor_votes.size());
}

inline double path_reputation(double sr, double cr) { return sr * cr; }

inline double update_own_experience(double prev, double obs, double beta) {
  check_unit(obs, "observation");
  return beta * obs + (1.0 - beta) * prev;
}

inline double update_information_reputation(double prev, double vote, double obs, double gamma, double epsilon) {
  check_unit(vote, "vote");
  check_unit(obs, "observation");
  return std::clamp(prev + gamma * (1.0 - 2.0 * std::abs(vote - obs)), epsilon, 1.0);
}

/// Pearson correlation; nullopt when either series has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 1e-12 || syy <= 1e-12) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

enum class VoteStatus { Retained, Excluded, Unvalidated };

struct VoterValidation {
  VoteStatus status = VoteStatus::Unvalidated;
  std::optional<double> correlation;
  std::size_t overlap_epochs = 0;
};

/// Paired (vote, own observation) samples for one voter.
struct VotePair {
  std::uint64_t epoch = 0;
  double vote = 0.0;
  double own = 0.0;
};

inline VoterValidation validate_voter(std::span<const VotePair> pairs, const ReputationParams& p) {
  VoterValidation out;
  std::set<std::uint64_t> epochs;
  std::vector<double> v, o;
  for (const auto& pr : pairs) {
    epochs.insert(pr.epoch);
    v.push_back(pr.vote);
    o.push_back(pr.own);
  }
  out.overlap_epochs = epochs.size();
  if (out.overlap_epochs < p.min_overlap) return out;
  out.correlation = pearson(v, o);
  out.status = (out.correlation && *out.correlation >= p.rho_min) ? VoteStatus::Retained : VoteStatus::Excluded;
  return out;
}

// ---------------------------------------------------------------------------
// Action table: (psr_ok, ssr_ok) -> reaction

enum class Action { Monitor, ReestablishAndIsolate, ShareReputationReroute, ReestablishSession };

inline std::string_view to_string(Action a) {
  switch (a) {
    case Action::Monitor: return "MONITOR";
    case Action::ReestablishAndIsolate: return "REESTABLISH_AND_ISOLATE";
    case Action::ShareReputationReroute: return "SHARE_REPUTATION_REROUTE";
    case Action::ReestablishSession: return "REESTABLISH_SESSION";
  }
  return "?";
}

inline Action decide_action(bool psr_ok, bool ssr_ok) {
  if (psr_ok) return ssr_ok ? Action::Monitor : Action::ReestablishAndIsolate;
  return ssr_ok ? Action::ShareReputationReroute : Action::ReestablishSession;
}

// ---------------------------------------------------------------------------
// Next hop

struct NextHopChoice {
  NodeId node = 0;
  double pr = 0.0;
  bool used_prior = false;
};

/// argmax PR; ties go to the smallest id. Candidates without a PR take the prior.
inline NextHopChoice recommend_next_hop(const std::map<NodeId, std::optional<double>>& candidates, double prior) {
  if (candidates.empty()) throw RoutingError("no next-hop candidates");
  std::optional<NextHopChoice> best;
  for (const auto& [id, pr] : candidates) {
    const double v = pr.value_or(prior);
    if (!best || v > best->pr) best = NextHopChoice{id, v, !pr.has_value()};
  }
  return *best;
}

// ---------------------------------------------------------------------------
// REP_SHARE payload: repeated (subject, SR_q, IR_q) byte triples.

inline std::uint8_t quantize_unit(double x) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
}
inline double dequantize_unit(std::uint8_t q) { return q / 255.0; }

struct RepShareRecord {
  NodeId subject = 0;
  std::uint8_t sr_q = 0;
  std::uint8_t ir_q = 0;
  bool operator==(const RepShareRecord&) const = default;
};

inline std::vector<std::uint8_t> encode_rep_share(std::span<const RepShareRecord> recs) {
  std::vector<std::uint8_t> out;
  out.reserve(recs.size() * 3);
  for (const auto& r : recs) {
    if (r.subject > 255) throw std::invalid_argument("node id does not fit the one-byte node table");
    out.push_back(static_cast<std::uint8_t>(r.subject));
    out.push_back(r.sr_q);
    out.push_back(r.ir_q);
  }
  return out;
}

inline std::vector<RepShareRecord> decode_rep_share(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 3 != 0) throw std::invalid_argument("REP_SHARE payload is a multiple of three bytes");
  std::vector<RepShareRecord> out;
  for (std::size_t i = 0; i < bytes.size(); i += 3) out.push_back({bytes[i], bytes[i + 1], bytes[i + 2]});
  return out;
}

struct RepSharePayload {
  NodeId from = 0;
  NodeId to = 0;
  Context context = Context::Psr;
  std::uint64_t epoch = 0;
  std::vector<RepShareRecord> records;
  bool truncated = false;
};

// ---------------------------------------------------------------------------
// Per-node store

struct SubjectState {
  double oe = 0.5;
  bool has_own = false;
  double sr = 0.5;
  double cr = 0.25;
  double pr = 0.125;
  bool cr_neutral = false;
  double last_shared_sr = 0.5;
  std::uint64_t epoch = 0;
  bool evaluated = false;
  std::map<std::uint64_t, double> own_obs;  // epoch -> observation
};

struct VoterState {
  double ir = 0.5;
  VoterValidation validation;
  std::set<std::pair<NodeId, std::uint64_t>> scored;  // (subject, epoch) pairs already fed into IR
};

/// Evidence repository and reputation state of one evaluating node.
/// Owned and mutated by that node only.
class ReputationStore {
 public:
  ReputationStore(NodeId self, ReputationParams params, std::set<NodeId> neighbors = {})
      : self_(self), params_(params), neighbors_(std::move(neighbors)) {
    params_.validate();
  }

  NodeId self() const { return self_; }
  const ReputationParams& params() const { return params_; }
  void set_neighbors(std::set<NodeId> n) { neighbors_ = std::move(n); }
  /// Declared neighbor sets of other nodes, used for G_A \ G_B.
  void set_topology(std::map<NodeId, std::set<NodeId>> adjacency) { adjacency_ = std::move(adjacency); }

  /// Records own experience for `subject` in epoch `n` and updates OE.
  void record_own(NodeId subject, Context c, double obs, std::uint64_t n) {
    check_unit(obs, "observation");
    auto& s = subject_state(subject, c);
    s.oe = update_own_experience(s.oe, obs, params_.beta);
    s.has_own = true;
    s.own_obs[n] = obs;
  }

  /// Stores a second-hand vote from `voter` about `subject` for epoch `n`.
  void record_vote(NodeId voter, NodeId subject, Context c, double vote, std::uint64_t n) {
    check_unit(vote, "vote");
    if (voter == self_ || subject == self_) return;
    votes_[key(c, voter)][subject][n] = vote;
    voter_state(voter, c);
  }

  void ingest(const RepSharePayload& p) {
    for (const auto& r : p.records) record_vote(p.from, r.subject, p.context, dequantize_unit(r.sr_q), p.epoch);
  }

  /// Updates IR, validates voters and recomputes SR/CR/PR for epoch `n`.
  void close_epoch(std::uint64_t n) {
    for (Context c : kContexts) {
      update_ir(c, n);
      validate(c);
      for (auto& [subj_key, st] : subjects_) {
        if (subj_key.first != c) continue;
        evaluate(subj_key.second, c, n);
      }
      for (const auto& [vk, per_subject] : votes_) {
        if (vk.first != c) continue;
        for (const auto& [subject, _] : per_subject) {
          if (subject == self_ || subjects_.count({c, subject})) continue;
          subject_state(subject, c);
          evaluate(subject, c, n);
        }
      }
    }
  }

  std::optional<double> sr(NodeId subject, Context c) const { return field(subject, c, &SubjectState::sr); }
  std::optional<double> cr(NodeId subject, Context c) const { return field(subject, c, &SubjectState::cr); }
  std::optional<double> oe(NodeId subject, Context c) const {
    auto it = subjects_.find({c, subject});
    if (it == subjects_.end() || !it->second.has_own) return std::nullopt;
    return it->second.oe;
  }

  /// PR for the epoch just closed; alignment error when asked about another epoch.
  std::optional<double> pr(NodeId subject, Context c, std::optional<std::uint64_t> epoch = std::nullopt) const {
    auto it = subjects_.find({c, subject});
    if (it == subjects_.end() || !it->second.evaluated) return std::nullopt;
    if (epoch && it->second.epoch != *epoch)
      throw std::runtime_error("path reputation requested for epoch " + std::to_string(*epoch) + ", state is at " +
                               std::to_string(it->second.epoch));
    return it->second.pr;
  }

  /// Routing metric: the weaker of the two contexts' PR.
  std::optional<double> route_metric(NodeId subject) const {
    std::optional<double> m;
    for (Context c : kContexts) {
      if (auto v = pr(subject, c)) m = m ? std::min(*m, *v) : *v;
    }
    return m;
  }

  NextHopChoice recommend_next_hop(const std::set<NodeId>& candidates) const {
    std::map<NodeId, std::optional<double>> prs;
    for (auto id : candidates) prs[id] = route_metric(id);
    return secmon::recommend_next_hop(prs, params_.pr_prior);
  }

  double ir(NodeId voter, Context c) const {
    auto it = voters_.find(key(c, voter));
    return it == voters_.end() ? params_.ir_prior : it->second.ir;
  }

  std::optional<VoterValidation> validation(NodeId voter, Context c) const {
    auto it = voters_.find(key(c, voter));
    if (it == voters_.end()) return std::nullopt;
    return it->second.validation;
  }

  /// REP_SHARE payloads for every neighbor; records for subjects with own experience.
  std::vector<RepSharePayload> share_reputation(std::uint64_t n) {
    std::vector<RepSharePayload> out;
    for (Context c : kContexts) {
      std::vector<std::pair<double, RepShareRecord>> recs;
      for (auto& [k, st] : subjects_) {
        if (k.first != c || !st.has_own || !st.evaluated) continue;
        recs.push_back({std::abs(st.sr - st.last_shared_sr),
                        RepShareRecord{k.second, quantize_unit(st.sr), quantize_unit(ir(k.second, c))}});
      }
      bool truncated = false;
      if (recs.size() > params_.share_budget) {
        std::stable_sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        recs.resize(params_.share_budget);
        std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.second.subject < b.second.subject; });
        truncated = true;
      }
      for (const auto& r : recs) subjects_[{c, r.second.subject}].last_shared_sr = dequantize_unit(r.second.sr_q);
      if (recs.empty()) continue;
      for (auto nb : neighbors_) {
        RepSharePayload p;
        p.from = self_;
        p.to = nb;
        p.context = c;
        p.epoch = n;
        p.truncated = truncated;
        for (const auto& r : recs)
          if (r.second.subject != nb) p.records.push_back(r.second);
        if (!p.records.empty()) out.push_back(std::move(p));
      }
    }
    return out;
  }

  /// Subjects known in context `c`.
  std::vector<NodeId> subjects(Context c) const {
    std::vector<NodeId> out;
    for (const auto& [k, _] : subjects_)
      if (k.first == c) out.push_back(k.second);
    return out;
  }

  /// Voters heard from in context `c`.
  std::vector<NodeId> voters(Context c) const {
    std::vector<NodeId> out;
    for (const auto& [k, _] : voters_)
      if (k.first == c) out.push_back(k.second);
    return out;
  }

  bool cr_was_neutral(NodeId subject, Context c) const {
    auto it = subjects_.find({c, subject});
    return it != subjects_.end() && it->second.cr_neutral;
  }

 private:
  using Key = std::pair<Context, NodeId>;
  static Key key(Context c, NodeId id) { return {c, id}; }

  SubjectState& subject_state(NodeId subject, Context c) {
    auto [it, inserted] = subjects_.try_emplace({c, subject});
    if (inserted) {
      it->second.oe = params_.oe_prior;
      it->second.sr = params_.oe_prior;
      it->second.last_shared_sr = params_.oe_prior;
    }
    return it->second;
  }

  VoterState& voter_state(NodeId voter, Context c) {
    auto [it, inserted] = voters_.try_emplace(key(c, voter));
    if (inserted) it->second.ir = params_.ir_prior;
    return it->second;
  }

  std::optional<double> field(NodeId subject, Context c, double SubjectState::*f) const {
    auto it = subjects_.find({c, subject});
    if (it == subjects_.end() || !it->second.evaluated) return std::nullopt;
    return it->second.*f;
  }

  /// Scores every vote whose epoch now has a matching own observation, once.
  void update_ir(Context c, std::uint64_t n) {
    for (auto& [vk, per_subject] : votes_) {
      if (vk.first != c) continue;
      auto& vs = voter_state(vk.second, c);
      for (const auto& [subject, by_epoch] : per_subject) {
        auto st = subjects_.find({c, subject});
        if (st == subjects_.end()) continue;
        for (const auto& [e, vote] : by_epoch) {
          if (e > n || vs.scored.count({subject, e})) continue;
          auto o = st->second.own_obs.find(e);
          if (o == st->second.own_obs.end()) continue;
          vs.ir = update_information_reputation(vs.ir, vote, o->second, params_.gamma, params_.epsilon);
          vs.scored.insert({subject, e});
        }
      }
    }
  }

  void validate(Context c) {
    for (auto& [vk, per_subject] : votes_) {
      if (vk.first != c) continue;
      std::vector<VotePair> pairs;
      for (const auto& [subject, by_epoch] : per_subject) {
        auto st = subjects_.find({c, subject});
        if (st == subjects_.end()) continue;
        for (const auto& [e, vote] : by_epoch) {
          auto o = st->second.own_obs.find(e);
          if (o != st->second.own_obs.end()) pairs.push_back({e, vote, o->second});
        }
      }
      voter_state(vk.second, c).validation = validate_voter(pairs, params_);
    }
  }

  void evaluate(NodeId subject, Context c, std::uint64_t n) {
    std::vector<WeightedVote> wv;
    for (const auto& [vk, per_subject] : votes_) {
      if (vk.first != c || vk.second == subject) continue;
      auto it = per_subject.find(subject);
      if (it == per_subject.end() || it->second.empty()) continue;
      const auto& vs = voters_.at(vk);
      if (vs.validation.status == VoteStatus::Excluded) continue;
      double w = vs.ir;
      if (vs.validation.status == VoteStatus::Unvalidated) w = std::min(w, params_.unvalidated_ir_cap);
      wv.push_back({w, it->second.rbegin()->second});
    }
    auto& st = subject_state(subject, c);
    st.sr = service_reputation(params_.alpha, st.oe, wv);

    // A's votes about its neighbors that the evaluator does not neighbor itself.
    std::vector<double> nvotes;
    st.cr_neutral = true;
    if (auto adj = adjacency_.find(subject); adj != adjacency_.end()) {
      auto vit = votes_.find(key(c, subject));
      for (auto p : adj->second) {
        if (p == self_ || neighbors_.count(p)) continue;
        if (vit == votes_.end()) continue;
        auto pv = vit->second.find(p);
        if (pv == vit->second.end() || pv->second.empty()) continue;
        nvotes.push_back(pv->second.rbegin()->second);
      }
    }
    st.cr_neutral = nvotes.empty();
    st.cr = cumulative_reputation(ir(subject, c), nvotes);
    st.pr = path_reputation(st.sr, st.cr);
    st.epoch = n;
    st.evaluated = true;
  }

  NodeId self_;
  ReputationParams params_;
  std::set<NodeId> neighbors_;
  std::map<NodeId, std::set<NodeId>> adjacency_;
  std::map<Key, SubjectState> subjects_;
  std::map<Key, VoterState> voters_;
  std::map<Key, std::map<NodeId, std::map<std::uint64_t, double>>> votes_;  // (ctx, voter) -> subject -> epoch -> V
};

// ---------------------------------------------------------------------------
// Evidence repository: per-epoch own observations, turned into OE updates
// and action-table decisions when the epoch closes.

struct EvidenceRecord {
  NodeId subject = 0;
  std::uint64_t epoch = 0;
  std::optional<double> psr_obs;
  std::optional<double> ssr_obs;
  std::set<std::string> ids_flags;
  bool psr_ok = true;
  bool ssr_ok = true;
  Action action = Action::Monitor;
};

class EvidenceRepository {
 public:
  void add_psr(NodeId subject, bool ok) { tally(subject).psr.push_back(ok); }
  void add_ssr(NodeId subject, bool ok) { tally(subject).ssr.push_back(ok); }
  /// IDS characterization pins the subject's SSR evidence to 0 for this epoch.
  void flag_ids(NodeId subject, std::string attack) { tally(subject).flags.insert(std::move(attack)); }

  bool empty() const { return pending_.empty(); }

  /// Feeds the epoch's evidence into `store` and returns one record per subject.
  std::vector<EvidenceRecord> commit(ReputationStore& store, std::uint64_t n) {
    std::vector<EvidenceRecord> out;
    const auto& p = store.params();
    for (auto& [subject, t] : pending_) {
      EvidenceRecord r;
      r.subject = subject;
      r.epoch = n;
      r.ids_flags = t.flags;
      if (!t.psr.empty()) r.psr_obs = fraction(t.psr);
      if (!t.ssr.empty()) r.ssr_obs = fraction(t.ssr);
      if (!t.flags.empty()) r.ssr_obs = 0.0;
      if (r.psr_obs) {
        store.record_own(subject, Context::Psr, *r.psr_obs, n);
        r.psr_ok = *r.psr_obs >= p.psr_ok_threshold;
      }
      if (r.ssr_obs) {
        store.record_own(subject, Context::Ssr, *r.ssr_obs, n);
        r.ssr_ok = *r.ssr_obs >= p.ssr_ok_threshold;
      }
      r.action = decide_action(r.psr_ok, r.ssr_ok);
      out.push_back(std::move(r));
    }
    pending_.clear();
    return out;
  }

 private:
  struct Tally {
    std::vector<bool> psr, ssr;
    std::set<std::string> flags;
  };
  Tally& tally(NodeId s) { return pending_[s]; }
  static double fraction(const std::vector<bool>& v) {
    std::size_t ok = 0;
    for (bool b : v) ok += b ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(v.size());
  }

  std::map<NodeId, Tally> pending_;
};

}  // namespace secmon
