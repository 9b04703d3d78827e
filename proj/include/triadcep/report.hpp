#pragma once

#include <string>
#include <vector>

#include "triadcep/core.hpp"
#include "triadcep/json_codec.hpp"

// Deterministic outputs: the run report (JSON) and the topology graph
// (DOT and JSON). Key order is fixed by construction; identical inputs
// serialize to identical bytes.

namespace triadcep {

struct ColumnStats {
  std::uint64_t ingested = 0;
  std::uint64_t rejected = 0;

  bool operator==(const ColumnStats&) const = default;
};

struct RunStats {
  ColumnStats causes;
  ColumnStats packets;
  std::uint64_t skipped_frames = 0;  // non-IPv4 / non-TCP-UDP capture frames
  ColumnStats effects;

  std::uint64_t triads = 0;
  std::map<Completeness, std::uint64_t> by_completeness;
  std::uint64_t residue_causes = 0;
  std::uint64_t residue_effects = 0;

  std::uint64_t flows = 0;
  std::uint64_t cause_traces = 0;
  std::uint64_t effect_traces = 0;

  std::uint64_t nodes = 0;
  std::uint64_t edges = 0;
  std::vector<std::string> dangling_hosts;

  std::uint64_t packets_in = 0;
  std::uint64_t triad_packet_sum = 0;
  std::uint64_t flow_packet_sum = 0;
  std::uint64_t edge_packet_sum = 0;

  std::vector<std::string> abstained_rules;

  bool operator==(const RunStats&) const = default;
};

inline ojson finding_to_json(const Finding& f) {
  ojson j;
  j["rule_id"] = to_string(f.rule_id);
  j["severity"] = to_string(f.severity);
  j["subject"] = f.subject;
  j["evidence"] = f.evidence;
  j["message"] = f.message;
  return j;
}

inline ojson emit_report(const std::vector<Finding>& findings, const RunStats& stats) {
  ojson j;
  j["findings"] = ojson::array();
  for (const auto& f : findings) j["findings"].push_back(finding_to_json(f));

  ojson ingest;
  ingest["causes"] = {{"ingested", stats.causes.ingested},
                      {"rejected", stats.causes.rejected}};
  ingest["packets"] = {{"ingested", stats.packets.ingested},
                       {"rejected", stats.packets.rejected},
                       {"skipped_frames", stats.skipped_frames}};
  ingest["effects"] = {{"ingested", stats.effects.ingested},
                       {"rejected", stats.effects.rejected}};

  ojson correlation;
  correlation["triads"] = stats.triads;
  ojson by_completeness;
  for (auto c : {Completeness::Full, Completeness::MissingCause,
                 Completeness::MissingEffect, Completeness::TrafficOnly}) {
    auto it = stats.by_completeness.find(c);
    by_completeness[to_string(c)] = it == stats.by_completeness.end() ? 0 : it->second;
  }
  correlation["by_completeness"] = by_completeness;
  correlation["residue_causes"] = stats.residue_causes;
  correlation["residue_effects"] = stats.residue_effects;

  ojson aggregation;
  aggregation["flows"] = stats.flows;
  aggregation["cause_traces"] = stats.cause_traces;
  aggregation["effect_traces"] = stats.effect_traces;

  ojson topology;
  topology["nodes"] = stats.nodes;
  topology["edges"] = stats.edges;
  topology["dangling_hosts"] = stats.dangling_hosts;

  ojson conservation;
  conservation["packets_in"] = stats.packets_in;
  conservation["triad_packet_sum"] = stats.triad_packet_sum;
  conservation["flow_packet_sum"] = stats.flow_packet_sum;
  conservation["edge_packet_sum"] = stats.edge_packet_sum;

  ojson rules;
  rules["abstained"] = stats.abstained_rules;

  j["stats"] = {{"ingest", ingest},        {"correlation", correlation},
                {"aggregation", aggregation}, {"topology", topology},
                {"conservation", conservation}, {"rules", rules}};
  return j;
}

inline std::string report_text(const std::vector<Finding>& findings,
                               const RunStats& stats) {
  return emit_report(findings, stats).dump(2) + "\n";
}

// Fixed-schema node serialization: every kind/severity key is always
// present so two summaries differ only in the digits of their counters.
inline ojson node_summary_to_json(const NodeSummary& n) {
  ojson j;
  j["host_id"] = n.host_id;
  std::vector<std::string> roles;
  for (auto r : n.roles) roles.push_back(to_string(r));
  j["roles"] = roles;
  ojson kinds;
  for (auto k : {CauseKind::ConfigEntry, CauseKind::TicketIssued,
                 CauseKind::TicketAccepted, CauseKind::Parameterization}) {
    auto it = n.cause_summary.kind_counts.find(k);
    kinds[to_string(k)] = it == n.cause_summary.kind_counts.end() ? 0 : it->second;
  }
  j["cause_summary"] = {{"kind_counts", kinds},
                        {"ticket_count", n.cause_summary.ticket_count}};
  ojson severities;
  for (auto s : {Severity::Info, Severity::Warning, Severity::Error}) {
    auto it = n.effect_summary.severity_counts.find(s);
    severities[to_string(s)] = it == n.effect_summary.severity_counts.end() ? 0 : it->second;
  }
  j["effect_summary"] = {{"severity_counts", severities},
                         {"distinct_setting_count", n.effect_summary.distinct_setting_count}};
  return j;
}

inline ojson graph_to_json(const TopologyGraph& g) {
  ojson j;
  j["nodes"] = ojson::object();
  for (const auto& [host, node] : g.nodes) j["nodes"][host] = node_summary_to_json(node);
  j["edges"] = ojson::array();
  for (const auto& [key, e] : g.edges) {
    ojson edge;
    edge["src"] = key.first;
    edge["dst"] = key.second;
    edge["flows"] = e.flow_count;
    edge["packets"] = e.packet_count;
    edge["bytes"] = e.byte_count;
    edge["first_seen_us"] = e.first_seen.us;
    edge["last_seen_us"] = e.last_seen.us;
    j["edges"].push_back(edge);
  }
  return j;
}

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

inline std::string emit_dot(const TopologyGraph& g) {
  if (g.nodes.empty() && g.edges.empty()) return "digraph topology {}\n";
  std::string out = "digraph topology {\n";
  for (const auto& [host, n] : g.nodes) {
    std::uint64_t cause_records = 0;
    for (const auto& [k, c] : n.cause_summary.kind_counts) cause_records += c;
    std::uint64_t errors = 0, warnings = 0;
    if (auto it = n.effect_summary.severity_counts.find(Severity::Error);
        it != n.effect_summary.severity_counts.end())
      errors = it->second;
    if (auto it = n.effect_summary.severity_counts.find(Severity::Warning);
        it != n.effect_summary.severity_counts.end())
      warnings = it->second;
    std::string roles;
    for (auto r : n.roles) {
      if (!roles.empty()) roles += "+";
      roles += to_string(r);
    }
    out += "  \"" + detail::dot_escape(host) + "\" [label=\"" + detail::dot_escape(host) +
           "\\n" + roles + "\\ncauses=" + std::to_string(cause_records) +
           " tickets=" + std::to_string(n.cause_summary.ticket_count) +
           " errors=" + std::to_string(errors) + " warnings=" + std::to_string(warnings) +
           " settings=" + std::to_string(n.effect_summary.distinct_setting_count) +
           "\"];\n";
  }
  for (const auto& [key, e] : g.edges)
    out += "  \"" + detail::dot_escape(key.first) + "\" -> \"" +
           detail::dot_escape(key.second) + "\" [label=\"flows=" +
           std::to_string(e.flow_count) + " pkts=" + std::to_string(e.packet_count) +
           " bytes=" + std::to_string(e.byte_count) + "\"];\n";
  out += "}\n";
  return out;
}

}  // namespace triadcep
