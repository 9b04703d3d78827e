#pragma once

#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "triadcep/aggregate.hpp"
#include "triadcep/correlate.hpp"
#include "triadcep/json_codec.hpp"
#include "triadcep/pcap.hpp"
#include "triadcep/report.hpp"
#include "triadcep/rules.hpp"
#include "triadcep/topology.hpp"

// End-to-end wiring: ingest -> correlate -> aggregate -> topology -> rules
// -> report. Everything in memory; callers hand in file contents, not paths.

namespace triadcep {

struct NamedText {
  std::string name;
  std::string content;
};

struct NamedBytes {
  std::string name;
  std::vector<std::uint8_t> content;
};

struct RawInputs {
  std::vector<NamedText> cause_files;
  std::vector<NamedText> effect_files;
  std::vector<NamedBytes> captures;
  std::vector<NamedText> hosts_files;
};

struct InputError {
  std::string source;    // file name
  std::uint64_t line_no; // 0 when not line-addressable (capture-level problems)
  std::string reason;
};

struct PipelineConfig {
  CorrelationConfig correlation;
  std::int64_t flow_timeout_us = default_flow_timeout_us;
  RuleConfig rules;
};

struct PipelineResult {
  std::vector<CauseRecord> causes;
  std::vector<PacketRecord> packets;
  std::vector<EffectRecord> effects;
  CorrelationResult correlation;
  std::vector<Flow> flows;
  std::vector<CauseTrace> cause_traces;
  std::vector<EffectTrace> effect_traces;
  TopologyResult topology;
  RuleRunResult rules;
  std::vector<InputError> input_errors;
  RunStats stats;
  ojson report;
};

namespace pipe_detail {

// Bind the addresses a record claims, or reject it on the first mismatch
// with what the host map already knows.
template <typename Record, typename EndpointsOf>
void admit(std::vector<Record>&& parsed, const std::string& source, HostMap& hosts,
           std::set<std::string>& seen_ids, std::vector<Record>& accepted,
           std::uint64_t& rejected, std::vector<InputError>& errors,
           EndpointsOf endpoints_of) {
  for (auto& r : parsed) {
    if (!seen_ids.insert(r.id).second) {
      ++rejected;
      errors.push_back({source, 0, "duplicate record id " + r.id});
      continue;
    }
    bool ok = true;
    for (const Endpoint* ep : endpoints_of(r)) {
      if (auto v = hosts.bind(ep->address, ep->host_id)) {
        ++rejected;
        errors.push_back({source, 0, "record " + r.id + ": " + v->reason});
        seen_ids.erase(r.id);
        ok = false;
        break;
      }
    }
    if (ok) accepted.push_back(std::move(r));
  }
}

}  // namespace pipe_detail

inline PipelineResult run_pipeline(const RawInputs& in, const PipelineConfig& cfg) {
  if (auto v = validate_config(cfg.correlation))
    throw std::invalid_argument("correlation config: " + v->reason);
  if (auto v = validate_config(cfg.rules))
    throw std::invalid_argument("rule config: " + v->reason);

  PipelineResult out;
  HostMap hosts;

  for (const auto& f : in.hosts_files) {
    std::istringstream s(f.content);
    for (const auto& e : parse_hosts_stream(s, hosts))
      out.input_errors.push_back({f.name, e.line_no, e.reason});
  }

  // causes and effects may arrive mixed in either file list; the declared
  // column only decides which rejection counter a bad line lands in
  std::set<std::string> cause_ids, effect_ids;
  auto cause_eps = [](const CauseRecord& c) {
    return std::vector<const Endpoint*>{&c.origin, &c.subject};
  };
  auto effect_eps = [](const EffectRecord& e) {
    return std::vector<const Endpoint*>{&e.host};
  };

  struct ParsedFile {
    std::string name;
    RecordStream stream;
    bool cause_column;
  };
  std::vector<ParsedFile> parsed;
  for (const auto& f : in.cause_files)
    parsed.push_back({f.name, parse_record_stream(f.content), true});
  for (const auto& f : in.effect_files)
    parsed.push_back({f.name, parse_record_stream(f.content), false});

  for (auto& pf : parsed) {
    for (const auto& e : pf.stream.errors) {
      out.input_errors.push_back({pf.name, e.line_no, e.reason});
      ++(pf.cause_column ? out.stats.causes.rejected : out.stats.effects.rejected);
    }
    pipe_detail::admit(std::move(pf.stream.causes), pf.name, hosts, cause_ids,
                       out.causes, out.stats.causes.rejected, out.input_errors,
                       cause_eps);
  }
  for (auto& pf : parsed)
    pipe_detail::admit(std::move(pf.stream.effects), pf.name, hosts, effect_ids,
                       out.effects, out.stats.effects.rejected, out.input_errors,
                       effect_eps);

  std::uint64_t packet_no = 0;
  for (const auto& f : in.captures) {
    try {
      CaptureResult r = parse_capture(f.content, hosts, packet_no);
      for (const auto& e : r.errors) {
        out.input_errors.push_back({f.name, e.line_no, e.reason});
        ++out.stats.packets.rejected;
      }
      out.stats.skipped_frames += r.skipped_frames;
      for (auto& p : r.packets) out.packets.push_back(std::move(p));
    } catch (const CaptureFormatError& e) {
      out.input_errors.push_back({f.name, 0, e.what()});
      ++out.stats.packets.rejected;
    }
  }

  out.stats.causes.ingested = out.causes.size();
  out.stats.packets.ingested = out.packets.size();
  out.stats.effects.ingested = out.effects.size();

  out.correlation = correlate(out.causes, out.packets, out.effects, cfg.correlation);
  out.flows = aggregate_flows(out.packets, cfg.flow_timeout_us);
  out.cause_traces = group_cause_traces(out.causes);
  out.effect_traces = group_effect_traces(out.effects);
  out.topology = build_topology(out.flows, out.cause_traces, out.effect_traces,
                                out.causes, out.effects);

  std::set<std::string> cause_origin_hosts;
  for (const auto& c : out.causes) cause_origin_hosts.insert(c.origin.host_id);

  std::vector<EffectRecord> residue_effects;
  {
    std::map<std::string, const EffectRecord*> by_id;
    for (const auto& e : out.effects) by_id[e.id] = &e;
    for (const auto& id : out.correlation.residue_effect_ids)
      if (auto it = by_id.find(id); it != by_id.end())
        residue_effects.push_back(*it->second);
  }

  RuleContext ctx{out.causes,       out.packets,       out.effects,
                  out.correlation.triads, residue_effects, out.cause_traces,
                  out.effect_traces, out.topology.graph, cause_origin_hosts};
  out.rules = run_all_rules(ctx, cfg.rules);

  out.stats.triads = out.correlation.triads.size();
  for (const auto& t : out.correlation.triads) {
    ++out.stats.by_completeness[t.completeness];
    out.stats.triad_packet_sum += t.traffic_ids.size();
  }
  out.stats.residue_causes = out.correlation.residue_cause_ids.size();
  out.stats.residue_effects = out.correlation.residue_effect_ids.size();
  out.stats.flows = out.flows.size();
  for (const auto& f : out.flows) out.stats.flow_packet_sum += f.packet_count;
  out.stats.cause_traces = out.cause_traces.size();
  out.stats.effect_traces = out.effect_traces.size();
  out.stats.nodes = out.topology.graph.nodes.size();
  out.stats.edges = out.topology.graph.edges.size();
  for (const auto& [key, e] : out.topology.graph.edges)
    out.stats.edge_packet_sum += e.packet_count;
  out.stats.dangling_hosts = out.topology.dangling_hosts;
  out.stats.packets_in = out.packets.size();
  out.stats.abstained_rules = out.rules.abstained;

  out.report = emit_report(out.rules.findings, out.stats);
  return out;
}

// 0 clean, 1 findings, 2 input errors without findings
inline int exit_code_for(const PipelineResult& r) {
  if (!r.rules.findings.empty()) return 1;
  if (!r.input_errors.empty()) return 2;
  return 0;
}

}  // namespace triadcep
