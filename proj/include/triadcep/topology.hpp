#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "triadcep/core.hpp"

// Level-3 ascent: flows collapse into a directed host graph; traces collapse
// into per-node count summaries. Nothing record-sized crosses this boundary —
// a node stays the same handful of integers whether ten or ten thousand
// records sit behind it.

namespace triadcep {

struct TopologyResult {
  TopologyGraph graph;
  // trace owners that never appear as a flow endpoint; kept as isolated
  // nodes and surfaced as warnings
  std::vector<std::string> dangling_hosts;
};

inline TopologyResult build_topology(const std::vector<Flow>& flows,
                                     const std::vector<CauseTrace>& cause_traces,
                                     const std::vector<EffectTrace>& effect_traces,
                                     const std::vector<CauseRecord>& causes,
                                     const std::vector<EffectRecord>& effects) {
  std::map<std::string, const CauseRecord*> cause_by_id;
  for (const auto& c : causes) cause_by_id.emplace(c.id, &c);
  std::map<std::string, const EffectRecord*> effect_by_id;
  for (const auto& e : effects) effect_by_id.emplace(e.id, &e);

  TopologyResult out;
  std::set<std::string> flow_hosts;

  for (const auto& f : flows) {
    flow_hosts.insert(f.key.src.host_id);
    flow_hosts.insert(f.key.dst.host_id);
    auto& edge = out.graph.edges[{f.key.src.host_id, f.key.dst.host_id}];
    if (edge.flow_count == 0) {
      edge.first_seen = f.first_seen;
      edge.last_seen = f.last_seen;
    } else {
      edge.first_seen = std::min(edge.first_seen, f.first_seen);
      edge.last_seen = std::max(edge.last_seen, f.last_seen);
    }
    ++edge.flow_count;
    edge.packet_count += f.packet_count;
    edge.byte_count += f.byte_count;
  }

  for (const auto& h : flow_hosts) {
    NodeSummary n;
    n.host_id = h;
    out.graph.nodes.emplace(h, std::move(n));
  }

  auto node_for = [&](const std::string& host) -> NodeSummary& {
    auto [it, inserted] = out.graph.nodes.emplace(host, NodeSummary{});
    if (inserted) {
      it->second.host_id = host;
      out.dangling_hosts.push_back(host);
    }
    return it->second;
  };

  std::set<std::string> cause_hosts, effect_hosts;
  for (const auto& t : cause_traces) {
    if (t.entries.empty()) continue;
    cause_hosts.insert(t.subject.host_id);
    NodeSummary& n = node_for(t.subject.host_id);
    n.cause_summary.ticket_count = t.ticket_count;
    for (const auto& id : t.entries)
      if (auto it = cause_by_id.find(id); it != cause_by_id.end())
        ++n.cause_summary.kind_counts[it->second->kind];
  }
  for (const auto& t : effect_traces) {
    if (t.entries.empty()) continue;
    effect_hosts.insert(t.host.host_id);
    NodeSummary& n = node_for(t.host.host_id);
    for (const auto& id : t.entries)
      if (auto it = effect_by_id.find(id); it != effect_by_id.end())
        ++n.effect_summary.severity_counts[it->second->severity];
    n.effect_summary.distinct_setting_count =
        t.setting_history.empty() ? 0 : t.setting_history.back().second.size();
  }

  for (auto& [host, node] : out.graph.nodes) {
    const bool has_cause = cause_hosts.count(host) > 0;
    const bool has_effect = effect_hosts.count(host) > 0;
    node.roles.insert(has_cause && has_effect
                          ? NodeRole::Both
                          : has_cause ? NodeRole::Cause
                                      : has_effect ? NodeRole::Effect
                                                   : NodeRole::TrafficOnly);
  }

  std::sort(out.dangling_hosts.begin(), out.dangling_hosts.end());
  return out;
}

inline bool node_has_role(const NodeSummary& n, NodeRole wanted) {
  if (n.roles.count(wanted)) return true;
  // Both stands in for either single role
  if ((wanted == NodeRole::Cause || wanted == NodeRole::Effect) &&
      n.roles.count(NodeRole::Both))
    return true;
  return false;
}

// Out-degree = number of distinct edge destinations. Pass a role to restrict
// the profiled hosts; degree-zero hosts stay in the result.
inline std::map<std::string, std::uint64_t> degree_profile(
    const TopologyGraph& graph, std::optional<NodeRole> role_filter = std::nullopt) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& [host, node] : graph.nodes)
    if (!role_filter || node_has_role(node, *role_filter)) out[host] = 0;
  for (const auto& [key, edge] : graph.edges) {
    auto it = out.find(key.first);
    if (it != out.end()) ++it->second;
  }
  return out;
}

}  // namespace triadcep
