#pragma once

#include <algorithm>
#include <vector>

#include "triadcep/correlate.hpp"
#include "triadcep/core.hpp"

// Level-2 ascent: packets roll up into Flows, per-machine cause records into
// CauseTraces (ticket history + intended settings), per-host effect records
// into EffectTraces (log counters + setting history). Aggregates keep member
// ids so any of them can be exploded back to its exact record set.

namespace triadcep {

inline constexpr std::int64_t default_flow_timeout_us = 60'000'000;

inline std::vector<Flow> aggregate_flows(const std::vector<PacketRecord>& packets,
                                         std::int64_t idle_timeout_us) {
  std::vector<Flow> flows;
  // a flow is a burst at a coarser gap threshold; reuse the splitter
  for (auto& group : burst_split(packets, idle_timeout_us)) {
    Flow f;
    f.key = FlowKey{group.front().src, group.front().dst, group.front().transport};
    f.first_seen = group.front().timestamp;
    f.last_seen = group.back().timestamp;
    for (auto& p : group) {
      ++f.packet_count;
      f.byte_count += p.length_bytes;
      if (p.modbus) ++f.modbus_functions[p.modbus->function_code];
      f.packet_ids.push_back(p.id);
    }
    flows.push_back(std::move(f));
  }
  return flows;  // burst_split already orders by (first_seen, key)
}

inline CauseTrace build_cause_trace(std::vector<CauseRecord> causes,
                                    const Endpoint& subject) {
  std::sort(causes.begin(), causes.end(), [](const CauseRecord& a, const CauseRecord& b) {
    return std::tie(a.timestamp, a.id) < std::tie(b.timestamp, b.id);
  });
  CauseTrace t;
  t.subject = subject;
  for (const auto& c : causes) {
    t.entries.push_back(c.id);
    if (c.kind == CauseKind::TicketIssued || c.kind == CauseKind::TicketAccepted)
      ++t.ticket_count;
    if (c.kind == CauseKind::ConfigEntry || c.kind == CauseKind::Parameterization)
      for (const auto& [k, v] : c.payload) t.last_settings[k] = v;
  }
  return t;
}

// A setting effect updates the running snapshot: MachineSetting payloads
// overlay as-is, RegisterSetting payloads overlay {register: value}.
inline void overlay_setting(std::map<std::string, std::string>& snapshot,
                            const EffectRecord& e) {
  if (e.kind == EffectKind::MachineSetting) {
    for (const auto& [k, v] : e.payload) snapshot[k] = v;
  } else if (e.kind == EffectKind::RegisterSetting) {
    auto reg = e.payload.find("register");
    auto val = e.payload.find("value");
    if (reg != e.payload.end() && val != e.payload.end())
      snapshot[reg->second] = val->second;
  }
}

inline EffectTrace build_effect_trace(std::vector<EffectRecord> effects,
                                      const Endpoint& host) {
  std::sort(effects.begin(), effects.end(),
            [](const EffectRecord& a, const EffectRecord& b) {
              return std::tie(a.timestamp, a.id) < std::tie(b.timestamp, b.id);
            });
  EffectTrace t;
  t.host = host;
  std::map<std::string, std::string> snapshot;
  for (const auto& e : effects) {
    t.entries.push_back(e.id);
    if (e.severity == Severity::Error) ++t.error_count;
    if (e.severity == Severity::Warning) ++t.warning_count;
    if (e.kind == EffectKind::RegisterSetting || e.kind == EffectKind::MachineSetting) {
      overlay_setting(snapshot, e);
      t.setting_history.emplace_back(e.timestamp, snapshot);
    }
  }
  return t;
}

namespace detail {

// Traces are per machine, not per (machine, port): the owning endpoint keeps
// the first-seen address and a zero port.
template <typename Record, typename GetEndpoint>
std::map<std::string, std::pair<Endpoint, std::vector<Record>>> group_by_host(
    const std::vector<Record>& records, GetEndpoint&& ep) {
  std::vector<const Record*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const Record* a, const Record* b) {
    return std::tie(a->timestamp, a->id) < std::tie(b->timestamp, b->id);
  });
  std::map<std::string, std::pair<Endpoint, std::vector<Record>>> out;
  for (const Record* r : sorted) {
    const Endpoint& e = ep(*r);
    auto [it, inserted] =
        out.emplace(e.host_id, std::make_pair(Endpoint{e.host_id, e.address, 0},
                                              std::vector<Record>{}));
    it->second.second.push_back(*r);
  }
  return out;
}

}  // namespace detail

inline std::vector<CauseTrace> group_cause_traces(const std::vector<CauseRecord>& causes) {
  std::vector<CauseTrace> out;
  for (auto& [host, bundle] :
       detail::group_by_host(causes, [](const CauseRecord& c) -> const Endpoint& {
         return c.subject;
       }))
    out.push_back(build_cause_trace(std::move(bundle.second), bundle.first));
  return out;  // map iteration gives host_id order
}

inline std::vector<EffectTrace> group_effect_traces(
    const std::vector<EffectRecord>& effects) {
  std::vector<EffectTrace> out;
  for (auto& [host, bundle] :
       detail::group_by_host(effects, [](const EffectRecord& e) -> const Endpoint& {
         return e.host;
       }))
    out.push_back(build_effect_trace(std::move(bundle.second), bundle.first));
  return out;
}

}  // namespace triadcep
