#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "triadcep/core.hpp"
#include "triadcep/topology.hpp"

// The six inconsistency heuristics. Each rule is a pure function over the
// run's aggregates; run_all_rules dedups, sorts, and reports which
// statistical rules abstained for lack of population.

namespace triadcep {

struct RuleConfig {
  // drift tolerance: empty set = exact match, otherwise listed keys are
  // allowed to change without being flagged
  std::set<std::string> drift_ignored_keys;
  double degree_outlier_factor = 1.0 / 3.0;  // flag degree < factor * median
  double error_rate_z = 2.0;                 // flag rate > mean + z * stddev
  std::uint64_t rare_setting_max_count = 1;  // value on <= this many hosts is rare
  std::int64_t lookback_us = 5'000'000;      // R1 horizon; mirrors the correlation window
  std::set<RuleId> enabled = {
      RuleId::R1_TicketWithoutError,          RuleId::R2_SettingDrift,
      RuleId::R3_ParameterizationWithoutCause, RuleId::R4_DegreeOutlier,
      RuleId::R5_ErrorRateOutlier,            RuleId::R6_RareSetting,
  };
};

inline std::optional<InvariantViolation> validate_config(const RuleConfig& cfg) {
  if (!(cfg.degree_outlier_factor > 0))
    return InvariantViolation{"degree_outlier_factor", "must be positive"};
  if (!(cfg.error_rate_z > 0))
    return InvariantViolation{"error_rate_z", "must be positive"};
  if (cfg.rare_setting_max_count < 1)
    return InvariantViolation{"rare_setting_max_count", "must be positive"};
  if (cfg.lookback_us <= 0)
    return InvariantViolation{"lookback_us", "must be positive"};
  return std::nullopt;
}

// Result for rules that may abstain when the population is too small to
// support a statistic.
struct RuleResult {
  std::vector<Finding> findings;
  bool abstained = false;
};

namespace detail {

template <typename Record>
std::map<std::string, const Record*> index_by_id(const std::vector<Record>& records) {
  std::map<std::string, const Record*> out;
  for (const auto& r : records) out.emplace(r.id, &r);
  return out;
}

inline std::string join_keys(const std::set<std::string>& keys) {
  std::string out;
  for (const auto& k : keys) {
    if (!out.empty()) out += ", ";
    out += k;
  }
  return out;
}

}  // namespace detail

// R1: a ticket reporting a problem the machine's own logs never saw.
inline std::vector<Finding> rule_r1_ticket_without_error(
    const std::vector<CauseRecord>& causes, const std::vector<EffectTrace>& effect_traces,
    const std::vector<EffectRecord>& effects, const RuleConfig& cfg) {
  auto effect_by_id = detail::index_by_id(effects);
  std::map<std::string, const EffectTrace*> trace_by_host;
  for (const auto& t : effect_traces) trace_by_host.emplace(t.host.host_id, &t);

  std::vector<const CauseRecord*> tickets;
  for (const auto& c : causes)
    if (c.kind == CauseKind::TicketIssued) tickets.push_back(&c);
  std::sort(tickets.begin(), tickets.end(), [](const CauseRecord* a, const CauseRecord* b) {
    return std::tie(a->timestamp, a->id) < std::tie(b->timestamp, b->id);
  });

  std::vector<Finding> out;
  for (const CauseRecord* ticket : tickets) {
    bool justified = false;
    if (auto it = trace_by_host.find(ticket->subject.host_id); it != trace_by_host.end()) {
      for (const auto& id : it->second->entries) {
        auto rec = effect_by_id.find(id);
        if (rec == effect_by_id.end()) continue;
        const EffectRecord& e = *rec->second;
        if (e.severity != Severity::Warning && e.severity != Severity::Error) continue;
        const std::int64_t age = micros_between(e.timestamp, ticket->timestamp);
        if (age >= 0 && age <= cfg.lookback_us) {
          justified = true;
          break;
        }
      }
    }
    if (!justified)
      out.push_back(Finding{RuleId::R1_TicketWithoutError, FindingSeverity::Suspicious,
                            ticket->subject.host_id,
                            {ticket->id},
                            "ticket issued with no error or warning on " +
                                ticket->subject.host_id + " in the preceding window"});
  }
  return out;
}

// R2: after a maintenance session, settings moved on keys the session's own
// cause records never announced.
inline std::vector<Finding> rule_r2_setting_drift(
    const std::vector<CauseTrace>& cause_traces,
    const std::vector<EffectTrace>& effect_traces, const std::vector<CauseRecord>& causes,
    const std::vector<EffectRecord>& effects, const RuleConfig& cfg) {
  auto cause_by_id = detail::index_by_id(causes);
  auto effect_by_id = detail::index_by_id(effects);
  std::map<std::string, const EffectTrace*> trace_by_host;
  for (const auto& t : effect_traces) trace_by_host.emplace(t.host.host_id, &t);

  std::vector<Finding> out;
  for (const auto& ct : cause_traces) {
    const std::string& host = ct.subject.host_id;
    auto et = trace_by_host.find(host);
    if (et == trace_by_host.end()) continue;
    const auto& history = et->second->setting_history;
    if (history.empty()) continue;

    // session boundaries: one per TicketAccepted, ending at the next one
    std::vector<const CauseRecord*> session_causes;
    for (const auto& id : ct.entries)
      if (auto it = cause_by_id.find(id); it != cause_by_id.end())
        session_causes.push_back(it->second);
    std::vector<const CauseRecord*> accepts;
    for (const CauseRecord* c : session_causes)
      if (c->kind == CauseKind::TicketAccepted) accepts.push_back(c);

    for (std::size_t s = 0; s < accepts.size(); ++s) {
      const Timestamp t0 = accepts[s]->timestamp;
      const Timestamp t1 = s + 1 < accepts.size()
                               ? accepts[s + 1]->timestamp
                               : Timestamp{std::numeric_limits<std::uint64_t>::max()};
      auto in_session = [&](Timestamp ts) { return ts >= t0 && ts < t1; };

      const std::map<std::string, std::string>* pre = nullptr;
      const std::map<std::string, std::string>* post = nullptr;
      for (const auto& [ts, snapshot] : history) {
        if (ts < t0) pre = &snapshot;
        if (in_session(ts)) post = &snapshot;
      }
      if (!post) continue;  // session changed nothing

      std::set<std::string> expected = cfg.drift_ignored_keys;
      for (const CauseRecord* c : session_causes)
        if (in_session(c->timestamp))
          for (const auto& [k, v] : c->payload) expected.insert(k);

      static const std::map<std::string, std::string> empty_snapshot;
      const auto& before = pre ? *pre : empty_snapshot;
      std::set<std::string> drifted;
      std::set<std::string> touched;
      for (const auto& [k, v] : *post) touched.insert(k);
      for (const auto& [k, v] : before) touched.insert(k);
      for (const auto& k : touched) {
        auto b = before.find(k);
        auto a = post->find(k);
        const bool changed = (b == before.end()) != (a == post->end()) ||
                             (b != before.end() && a != post->end() && b->second != a->second);
        if (changed && !expected.count(k)) drifted.insert(k);
      }
      if (drifted.empty()) continue;

      std::vector<std::string> evidence{accepts[s]->id};
      for (const auto& id : et->second->entries) {
        auto rec = effect_by_id.find(id);
        if (rec == effect_by_id.end()) continue;
        const EffectRecord& e = *rec->second;
        if (!in_session(e.timestamp)) continue;
        if (e.kind == EffectKind::MachineSetting) {
          for (const auto& k : drifted)
            if (e.payload.count(k)) {
              evidence.push_back(e.id);
              break;
            }
        } else if (e.kind == EffectKind::RegisterSetting) {
          auto reg = e.payload.find("register");
          if (reg != e.payload.end() && drifted.count(reg->second))
            evidence.push_back(e.id);
        }
      }
      out.push_back(Finding{RuleId::R2_SettingDrift, FindingSeverity::Suspicious, host,
                            std::move(evidence),
                            "settings drifted on unannounced keys: " +
                                detail::join_keys(drifted)});
    }
  }
  return out;
}

// R3: register writes nobody announced — the classic spoofing hint.
inline std::vector<Finding> rule_r3_parameterization_without_cause(
    const std::vector<TriadEvent>& triads, const std::vector<PacketRecord>& packets,
    const std::vector<EffectRecord>& residue_effects, const RuleConfig&) {
  auto packet_by_id = detail::index_by_id(packets);

  std::vector<Finding> out;
  for (const auto& t : triads) {
    if (t.completeness != Completeness::MissingCause &&
        t.completeness != Completeness::TrafficOnly)
      continue;
    std::vector<std::string> writes;
    std::string target;
    for (const auto& id : t.traffic_ids) {
      auto it = packet_by_id.find(id);
      if (it == packet_by_id.end()) continue;
      const PacketRecord& p = *it->second;
      if (p.modbus && !p.modbus->is_response && modbus_is_write(p.modbus->function_code)) {
        writes.push_back(id);
        target = p.dst.host_id;
      }
    }
    if (!writes.empty())
      out.push_back(Finding{RuleId::R3_ParameterizationWithoutCause,
                            FindingSeverity::Alert, target, std::move(writes),
                            "register write burst with no announcing cause (" + t.id +
                                ")"});
  }
  for (const auto& e : residue_effects)
    if (e.kind == EffectKind::RegisterSetting)
      out.push_back(Finding{RuleId::R3_ParameterizationWithoutCause,
                            FindingSeverity::Alert, e.host.host_id,
                            {e.id},
                            "register setting with no correlated traffic"});
  return out;
}

// R4: a command origin talking to suspiciously few machines. The population
// is the set of hosts that originate cause records and actually send
// traffic; the median of their out-degrees anchors "few".
inline RuleResult rule_r4_degree_outlier(const TopologyGraph& graph,
                                         const std::set<std::string>& cause_origin_hosts,
                                         const RuleConfig& cfg) {
  auto degrees = degree_profile(graph);
  std::vector<std::pair<std::string, std::uint64_t>> population;
  for (const auto& host : cause_origin_hosts) {
    auto it = degrees.find(host);
    if (it != degrees.end() && it->second >= 1) population.emplace_back(host, it->second);
  }
  RuleResult out;
  if (population.size() < 3) {
    out.abstained = true;
    return out;
  }
  std::vector<std::uint64_t> sorted_degrees;
  for (const auto& [host, d] : population) sorted_degrees.push_back(d);
  std::sort(sorted_degrees.begin(), sorted_degrees.end());
  const std::size_t n = sorted_degrees.size();
  const double median = n % 2 == 1 ? static_cast<double>(sorted_degrees[n / 2])
                                   : (static_cast<double>(sorted_degrees[n / 2 - 1]) +
                                      static_cast<double>(sorted_degrees[n / 2])) /
                                         2.0;
  const double threshold = cfg.degree_outlier_factor * median;
  for (const auto& [host, d] : population)
    if (static_cast<double>(d) < threshold) {
      std::ostringstream msg;
      msg << "command origin " << host << " reaches " << d
          << " destination(s); population median is " << median;
      out.findings.push_back(Finding{RuleId::R4_DegreeOutlier, FindingSeverity::Notice,
                                     host,
                                     {"node:" + host},
                                     msg.str()});
    }
  return out;
}

// R5: error-rate outliers across hosts, population statistics.
inline RuleResult rule_r5_error_rate_outlier(
    const std::vector<EffectTrace>& effect_traces,
    const std::vector<EffectRecord>& effects, const RuleConfig& cfg) {
  auto effect_by_id = detail::index_by_id(effects);
  std::vector<const EffectTrace*> population;
  for (const auto& t : effect_traces)
    if (!t.entries.empty()) population.push_back(&t);

  RuleResult out;
  if (population.size() < 3) {
    out.abstained = true;
    return out;
  }
  std::vector<double> rates;
  for (const EffectTrace* t : population)
    rates.push_back(static_cast<double>(t->error_count) /
                    static_cast<double>(std::max<std::size_t>(1, t->entries.size())));
  double mean = 0;
  for (double r : rates) mean += r;
  mean /= static_cast<double>(rates.size());
  double var = 0;
  for (double r : rates) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rates.size());
  const double threshold = mean + cfg.error_rate_z * std::sqrt(var);

  for (std::size_t i = 0; i < population.size(); ++i) {
    if (!(rates[i] > threshold)) continue;
    const EffectTrace& t = *population[i];
    std::vector<std::string> evidence;
    for (const auto& id : t.entries)
      if (auto it = effect_by_id.find(id);
          it != effect_by_id.end() && it->second->severity == Severity::Error)
        evidence.push_back(id);
    std::ostringstream msg;
    msg << "error rate " << rates[i] << " exceeds mean + " << cfg.error_rate_z
        << " stddev (" << threshold << ")";
    out.findings.push_back(Finding{RuleId::R5_ErrorRateOutlier, FindingSeverity::Notice,
                                   t.host.host_id, std::move(evidence), msg.str()});
  }
  return out;
}

// R6: a setting value seen on almost no other machine.
inline std::vector<Finding> rule_r6_rare_setting(
    const std::vector<EffectTrace>& effect_traces,
    const std::vector<EffectRecord>& effects, const RuleConfig& cfg) {
  auto effect_by_id = detail::index_by_id(effects);

  // (key, value) -> hosts carrying it in their final snapshot
  std::map<std::pair<std::string, std::string>, std::set<std::string>> carriers;
  for (const auto& t : effect_traces) {
    if (t.setting_history.empty()) continue;
    for (const auto& [k, v] : t.setting_history.back().second)
      carriers[{k, v}].insert(t.host.host_id);
  }

  std::vector<Finding> out;
  for (const auto& t : effect_traces) {
    if (t.setting_history.empty()) continue;
    const auto& final_snapshot = t.setting_history.back().second;
    for (const auto& [k, v] : final_snapshot) {
      if (carriers[{k, v}].size() > cfg.rare_setting_max_count) continue;
      // cite the record that last assigned this key
      std::string last_setter;
      for (const auto& id : t.entries) {
        auto rec = effect_by_id.find(id);
        if (rec == effect_by_id.end()) continue;
        const EffectRecord& e = *rec->second;
        if (e.kind == EffectKind::MachineSetting && e.payload.count(k))
          last_setter = e.id;
        else if (e.kind == EffectKind::RegisterSetting) {
          auto reg = e.payload.find("register");
          if (reg != e.payload.end() && reg->second == k) last_setter = e.id;
        }
      }
      std::vector<std::string> evidence;
      evidence.push_back(last_setter.empty() ? "node:" + t.host.host_id : last_setter);
      out.push_back(Finding{RuleId::R6_RareSetting, FindingSeverity::Notice,
                            t.host.host_id, std::move(evidence),
                            "setting " + k + "=" + v + " is carried by " +
                                std::to_string(carriers[{k, v}].size()) + " host(s)"});
    }
  }
  return out;
}

// Everything a rule may look at, assembled once per run.
struct RuleContext {
  const std::vector<CauseRecord>& causes;
  const std::vector<PacketRecord>& packets;
  const std::vector<EffectRecord>& effects;
  const std::vector<TriadEvent>& triads;
  const std::vector<EffectRecord>& residue_effects;
  const std::vector<CauseTrace>& cause_traces;
  const std::vector<EffectTrace>& effect_traces;
  const TopologyGraph& graph;
  const std::set<std::string>& cause_origin_hosts;
};

struct RuleRunResult {
  std::vector<Finding> findings;
  std::vector<std::string> abstained;  // rule ids that lacked population
};

inline RuleRunResult run_all_rules(const RuleContext& ctx, const RuleConfig& cfg) {
  RuleRunResult out;
  auto enabled = [&](RuleId r) { return cfg.enabled.count(r) > 0; };

  if (enabled(RuleId::R1_TicketWithoutError))
    for (auto& f : rule_r1_ticket_without_error(ctx.causes, ctx.effect_traces,
                                                ctx.effects, cfg))
      out.findings.push_back(std::move(f));
  if (enabled(RuleId::R2_SettingDrift))
    for (auto& f : rule_r2_setting_drift(ctx.cause_traces, ctx.effect_traces, ctx.causes,
                                         ctx.effects, cfg))
      out.findings.push_back(std::move(f));
  if (enabled(RuleId::R3_ParameterizationWithoutCause))
    for (auto& f : rule_r3_parameterization_without_cause(ctx.triads, ctx.packets,
                                                          ctx.residue_effects, cfg))
      out.findings.push_back(std::move(f));
  if (enabled(RuleId::R4_DegreeOutlier)) {
    auto r = rule_r4_degree_outlier(ctx.graph, ctx.cause_origin_hosts, cfg);
    if (r.abstained) out.abstained.push_back(to_string(RuleId::R4_DegreeOutlier));
    for (auto& f : r.findings) out.findings.push_back(std::move(f));
  }
  if (enabled(RuleId::R5_ErrorRateOutlier)) {
    auto r = rule_r5_error_rate_outlier(ctx.effect_traces, ctx.effects, cfg);
    if (r.abstained) out.abstained.push_back(to_string(RuleId::R5_ErrorRateOutlier));
    for (auto& f : r.findings) out.findings.push_back(std::move(f));
  }
  if (enabled(RuleId::R6_RareSetting))
    for (auto& f : rule_r6_rare_setting(ctx.effect_traces, ctx.effects, cfg))
      out.findings.push_back(std::move(f));

  // dedup on (rule, subject, evidence-set), then severity-major ordering
  std::set<std::tuple<RuleId, std::string, std::vector<std::string>>> seen;
  std::vector<Finding> unique;
  for (auto& f : out.findings) {
    auto key_evidence = f.evidence;
    std::sort(key_evidence.begin(), key_evidence.end());
    if (seen.emplace(f.rule_id, f.subject, std::move(key_evidence)).second)
      unique.push_back(std::move(f));
  }
  out.findings = std::move(unique);
  std::sort(out.findings.begin(), out.findings.end(),
            [](const Finding& a, const Finding& b) {
              return std::make_tuple(-severity_rank(a.severity), a.rule_id, a.subject,
                                     a.evidence) <
                     std::make_tuple(-severity_rank(b.severity), b.rule_id, b.subject,
                                     b.evidence);
            });
  return out;
}

}  // namespace triadcep
