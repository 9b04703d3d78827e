#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <vector>

#include "triadcep/core.hpp"

// Level-1 correlation: packets are grouped into bursts, then causes and
// effects are greedily bound to their nearest burst. Greedy keeps the
// matching deterministic and linear after sorting; the test suite's
// brute-force oracle checks it always lands on a valid maximal assignment.

namespace triadcep {

struct CorrelationConfig {
  std::int64_t window_us = 5'000'000;
  std::int64_t max_clock_skew_us = 100'000;
  enum class EndpointMatch { HostOnly, HostAndPort };
  EndpointMatch endpoint_match = EndpointMatch::HostOnly;
};

inline std::optional<InvariantViolation> validate_config(const CorrelationConfig& cfg) {
  if (cfg.window_us <= 0)
    return InvariantViolation{"window_us", "must be positive"};
  if (cfg.max_clock_skew_us < 0)
    return InvariantViolation{"max_clock_skew_us", "must be non-negative"};
  if (cfg.window_us <= cfg.max_clock_skew_us)
    return InvariantViolation{"window_us", "must exceed max_clock_skew_us"};
  return std::nullopt;
}

namespace detail {

inline FlowKey key_of(const PacketRecord& p) {
  return FlowKey{p.src, p.dst, p.transport};
}

inline std::uint64_t distance_us(Timestamp a, Timestamp b) {
  return a.us > b.us ? a.us - b.us : b.us - a.us;
}

}  // namespace detail

// Maximal same-key runs whose inter-packet gaps stay within window_us.
// Groups come back sorted by (first timestamp, key, first id); packets
// within a group by (timestamp, id).
inline std::vector<std::vector<PacketRecord>> burst_split(
    std::vector<PacketRecord> packets, std::int64_t window_us) {
  std::map<FlowKey, std::vector<PacketRecord>> by_key;
  for (auto& p : packets) by_key[detail::key_of(p)].push_back(std::move(p));

  std::vector<std::vector<PacketRecord>> groups;
  for (auto& [key, run] : by_key) {
    std::sort(run.begin(), run.end(), [](const PacketRecord& a, const PacketRecord& b) {
      return std::tie(a.timestamp, a.id) < std::tie(b.timestamp, b.id);
    });
    std::vector<PacketRecord> current;
    for (auto& p : run) {
      if (!current.empty() &&
          micros_between(current.back().timestamp, p.timestamp) > window_us) {
        groups.push_back(std::move(current));
        current.clear();
      }
      current.push_back(std::move(p));
    }
    if (!current.empty()) groups.push_back(std::move(current));
  }
  std::sort(groups.begin(), groups.end(),
            [](const std::vector<PacketRecord>& a, const std::vector<PacketRecord>& b) {
              return std::tie(a.front().timestamp, a.front().src, a.front().dst,
                              a.front().transport, a.front().id) <
                     std::tie(b.front().timestamp, b.front().src, b.front().dst,
                              b.front().transport, b.front().id);
            });
  return groups;
}

struct CorrelationResult {
  std::vector<TriadEvent> triads;
  std::vector<std::string> residue_cause_ids;
  std::vector<std::string> residue_effect_ids;
};

inline CorrelationResult correlate(const std::vector<CauseRecord>& causes,
                                   const std::vector<PacketRecord>& packets,
                                   const std::vector<EffectRecord>& effects,
                                   const CorrelationConfig& cfg) {
  struct Burst {
    std::vector<PacketRecord> pkts;
    Timestamp start;
    Timestamp end;
    const CauseRecord* cause = nullptr;
    const EffectRecord* effect = nullptr;
  };

  std::vector<Burst> bursts;
  for (auto& group : burst_split(packets, cfg.window_us)) {
    Burst b;
    b.start = group.front().timestamp;
    b.end = group.back().timestamp;
    b.pkts = std::move(group);
    bursts.push_back(std::move(b));
  }

  const std::int64_t w = cfg.window_us;
  const std::int64_t skew = cfg.max_clock_skew_us;

  // A command may precede its traffic by up to window+skew; its remote
  // reaction may lag the burst by the same. Asymmetric on purpose: the
  // data flows cause -> traffic -> effect.
  auto cause_matches = [&](const CauseRecord& c, const Burst& b) {
    const Endpoint& dst = b.pkts.front().dst;
    if (c.subject.host_id != dst.host_id) return false;
    if (cfg.endpoint_match == CorrelationConfig::EndpointMatch::HostAndPort &&
        c.subject.port != dst.port)
      return false;
    const std::int64_t delta = micros_between(b.start, c.timestamp);
    return delta >= -(w + skew) && delta <= skew;
  };
  auto effect_matches = [&](const EffectRecord& e, const Burst& b) {
    if (e.host.host_id != b.pkts.front().dst.host_id) return false;
    const std::int64_t after_start = micros_between(b.start, e.timestamp);
    const std::int64_t after_end = micros_between(b.end, e.timestamp);
    return after_start >= -skew && after_end <= w + skew;
  };

  // Greedy nearest-burst binding, records visited in time order. Nearest by
  // |timestamp - burst_start|, ties to the earlier burst, then to burst
  // order (which is itself (start, key, first packet id)).
  auto bind = [&](auto& records, auto&& matches, auto&& slot) {
    std::vector<const std::remove_reference_t<decltype(records[0])>*> sorted;
    for (const auto& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
      return std::tie(a->timestamp, a->id) < std::tie(b->timestamp, b->id);
    });
    std::vector<std::string> residue;
    for (const auto* r : sorted) {
      std::size_t best = bursts.size();
      std::uint64_t best_dist = 0;
      for (std::size_t i = 0; i < bursts.size(); ++i) {
        if (slot(bursts[i]) != nullptr) continue;
        if (!matches(*r, bursts[i])) continue;
        const std::uint64_t dist = detail::distance_us(r->timestamp, bursts[i].start);
        if (best == bursts.size() ||
            std::tie(dist, bursts[i].start, i) <
                std::tie(best_dist, bursts[best].start, best)) {
          best = i;
          best_dist = dist;
        }
      }
      if (best == bursts.size())
        residue.push_back(r->id);
      else
        slot(bursts[best]) = r;
    }
    std::sort(residue.begin(), residue.end());
    return residue;
  };

  CorrelationResult out;
  out.residue_cause_ids =
      bind(causes, cause_matches, [](Burst& b) -> const CauseRecord*& { return b.cause; });
  out.residue_effect_ids = bind(effects, effect_matches,
                                [](Burst& b) -> const EffectRecord*& { return b.effect; });

  for (std::size_t i = 0; i < bursts.size(); ++i) {
    const Burst& b = bursts[i];
    TriadEvent t;
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "triad-%06zu", i + 1);
    t.id = idbuf;
    for (const auto& p : b.pkts) t.traffic_ids.push_back(p.id);
    t.window_start = b.start;
    t.window_end = b.end;
    if (b.cause) {
      t.cause_id = b.cause->id;
      t.window_start = std::min(t.window_start, b.cause->timestamp);
      t.window_end = std::max(t.window_end, b.cause->timestamp);
    }
    if (b.effect) {
      t.effect_id = b.effect->id;
      t.window_start = std::min(t.window_start, b.effect->timestamp);
      t.window_end = std::max(t.window_end, b.effect->timestamp);
    }
    if (b.cause && b.effect)
      t.completeness = Completeness::Full;
    else if (b.cause)
      t.completeness = Completeness::MissingEffect;
    else if (b.effect)
      t.completeness = Completeness::MissingCause;
    else
      t.completeness = Completeness::TrafficOnly;
    out.triads.push_back(std::move(t));
  }
  std::sort(out.triads.begin(), out.triads.end(),
            [](const TriadEvent& a, const TriadEvent& b) {
              return std::tie(a.window_start, a.id) < std::tie(b.window_start, b.id);
            });
  return out;
}

// The core triad invariants, with the correlation slack the config allows.
// Used by tests and by the pipeline's self-check.
inline std::optional<InvariantViolation> validate_triad(
    const TriadEvent& t, const std::optional<Timestamp>& cause_ts,
    const std::optional<Timestamp>& first_packet_ts,
    const std::optional<Timestamp>& effect_ts, std::int64_t skew_us) {
  if (t.traffic_ids.empty())
    return InvariantViolation{"traffic_ids", "a triad always carries traffic"};
  const bool has_cause = t.cause_id.has_value();
  const bool has_effect = t.effect_id.has_value();
  const Completeness want =
      has_cause && has_effect
          ? Completeness::Full
          : has_cause ? Completeness::MissingEffect
                      : has_effect ? Completeness::MissingCause : Completeness::TrafficOnly;
  if (t.completeness != want)
    return InvariantViolation{"completeness", "does not reflect member presence"};
  if (has_cause && cause_ts && first_packet_ts &&
      micros_between(*cause_ts, *first_packet_ts) < -skew_us)
    return InvariantViolation{"cause_id", "cause follows the first packet beyond skew"};
  if (has_effect && effect_ts && first_packet_ts &&
      micros_between(*first_packet_ts, *effect_ts) < -skew_us)
    return InvariantViolation{"effect_id", "effect precedes the first packet beyond skew"};
  if (t.window_end < t.window_start)
    return InvariantViolation{"window_end", "window ends before it starts"};
  return std::nullopt;
}

}  // namespace triadcep
