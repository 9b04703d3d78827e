#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "triadcep/pipeline.hpp"
#include "triadcep/report.hpp"
#include "triadcep/scenario.hpp"

namespace {

constexpr int exit_usage = 64;
constexpr int exit_io = 74;

std::optional<std::string> slurp_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<std::vector<std::uint8_t>> slurp_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::vector<std::uint8_t> out((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  return out;
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << content;
  return static_cast<bool>(out);
}

struct IngestOptions {
  std::vector<std::string> cause_paths;
  std::vector<std::string> effect_paths;
  std::vector<std::string> pcap_paths;
  std::vector<std::string> hosts_paths;
  std::int64_t window_us = 5'000'000;
  std::int64_t skew_us = 100'000;
  std::string match = "host";
  std::int64_t flow_timeout_us = triadcep::default_flow_timeout_us;
  std::vector<std::string> rule_names;
  std::vector<std::string> drift_ignore;
};

void add_ingest_options(CLI::App& cmd, IngestOptions& o) {
  cmd.add_option("--cause", o.cause_paths, "cause record file (JSON lines)");
  cmd.add_option("--effect", o.effect_paths, "effect record file (JSON lines)");
  cmd.add_option("--pcap", o.pcap_paths, "packet capture file (pcap, Ethernet)");
  cmd.add_option("--hosts", o.hosts_paths, "address-to-host map (JSON lines)");
  cmd.add_option("--window-us", o.window_us, "correlation window in microseconds");
  cmd.add_option("--skew-us", o.skew_us, "tolerated clock skew in microseconds");
  cmd.add_option("--match", o.match, "cause endpoint matching: host | hostport");
  cmd.add_option("--flow-timeout-us", o.flow_timeout_us,
                 "flow idle timeout in microseconds");
  cmd.add_option("--rules", o.rule_names, "rules to run, e.g. R1,R3 (default: all)")
      ->delimiter(',');
  cmd.add_option("--drift-ignore", o.drift_ignore,
                 "setting key the drift rule should ignore");
}

// "R3" or "R3_ParameterizationWithoutCause"
std::optional<triadcep::RuleId> rule_from_name(const std::string& name) {
  if (auto r = triadcep::parse_rule_id(name)) return r;
  using triadcep::RuleId;
  for (auto r : {RuleId::R1_TicketWithoutError, RuleId::R2_SettingDrift,
                 RuleId::R3_ParameterizationWithoutCause, RuleId::R4_DegreeOutlier,
                 RuleId::R5_ErrorRateOutlier, RuleId::R6_RareSetting}) {
    const std::string full = triadcep::to_string(r);
    if (name == full.substr(0, 2)) return r;
  }
  return std::nullopt;
}

// 0 on success; exit_usage / exit_io on failure, with cfg/in half-filled
int build_pipeline_inputs(const IngestOptions& o, triadcep::RawInputs& in,
                          triadcep::PipelineConfig& cfg) {
  for (const auto& p : o.hosts_paths) {
    auto text = slurp_text(p);
    if (!text) { std::cerr << "cannot read " << p << "\n"; return exit_io; }
    in.hosts_files.push_back({p, std::move(*text)});
  }
  for (const auto& p : o.cause_paths) {
    auto text = slurp_text(p);
    if (!text) { std::cerr << "cannot read " << p << "\n"; return exit_io; }
    in.cause_files.push_back({p, std::move(*text)});
  }
  for (const auto& p : o.effect_paths) {
    auto text = slurp_text(p);
    if (!text) { std::cerr << "cannot read " << p << "\n"; return exit_io; }
    in.effect_files.push_back({p, std::move(*text)});
  }
  for (const auto& p : o.pcap_paths) {
    auto bytes = slurp_bytes(p);
    if (!bytes) { std::cerr << "cannot read " << p << "\n"; return exit_io; }
    in.captures.push_back({p, std::move(*bytes)});
  }

  cfg.correlation.window_us = o.window_us;
  cfg.correlation.max_clock_skew_us = o.skew_us;
  using Match = triadcep::CorrelationConfig::EndpointMatch;
  if (o.match == "host") {
    cfg.correlation.endpoint_match = Match::HostOnly;
  } else if (o.match == "hostport") {
    cfg.correlation.endpoint_match = Match::HostAndPort;
  } else {
    std::cerr << "--match must be host or hostport\n";
    return exit_usage;
  }
  cfg.flow_timeout_us = o.flow_timeout_us;
  cfg.rules.lookback_us = o.window_us;  // justification lookback tracks the window
  for (const auto& k : o.drift_ignore) cfg.rules.drift_ignored_keys.insert(k);
  if (!o.rule_names.empty()) {
    cfg.rules.enabled.clear();
    for (const auto& name : o.rule_names) {
      auto r = rule_from_name(name);
      if (!r) { std::cerr << "unknown rule " << name << "\n"; return exit_usage; }
      cfg.rules.enabled.insert(*r);
    }
  }
  return 0;
}

int run_and_report(const IngestOptions& o, const std::string& out_path,
                   const std::string& dot_path) {
  triadcep::RawInputs in;
  triadcep::PipelineConfig cfg;
  if (int rc = build_pipeline_inputs(o, in, cfg)) return rc;

  triadcep::PipelineResult result;
  try {
    result = triadcep::run_pipeline(in, cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return exit_usage;
  }

  const std::string report = result.report.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << report;
  } else if (!write_file(out_path, report)) {
    std::cerr << "cannot write " << out_path << "\n";
    return exit_io;
  }
  if (!dot_path.empty() &&
      !write_file(dot_path, triadcep::emit_dot(result.topology.graph))) {
    std::cerr << "cannot write " << dot_path << "\n";
    return exit_io;
  }

  std::cerr << result.rules.findings.size() << " finding(s), "
            << result.input_errors.size() << " input error(s)";
  if (!result.rules.abstained.empty()) {
    std::cerr << ", abstained:";
    for (const auto& r : result.rules.abstained) std::cerr << ' ' << r;
  }
  std::cerr << "\n";
  for (const auto& e : result.input_errors) {
    std::cerr << "input error: " << e.source;
    if (e.line_no) std::cerr << ':' << e.line_no;
    std::cerr << ": " << e.reason << "\n";
  }
  return triadcep::exit_code_for(result);
}

int emit_graph(const IngestOptions& o, const std::string& dot_path,
               const std::string& json_path) {
  triadcep::RawInputs in;
  triadcep::PipelineConfig cfg;
  if (int rc = build_pipeline_inputs(o, in, cfg)) return rc;

  triadcep::PipelineResult result;
  try {
    result = triadcep::run_pipeline(in, cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return exit_usage;
  }

  const std::string dot = triadcep::emit_dot(result.topology.graph);
  if (dot_path.empty() && json_path.empty()) {
    std::cout << dot;
  } else {
    if (!dot_path.empty() && !write_file(dot_path, dot)) {
      std::cerr << "cannot write " << dot_path << "\n";
      return exit_io;
    }
    if (!json_path.empty() &&
        !write_file(json_path,
                    triadcep::graph_to_json(result.topology.graph).dump(2) + "\n")) {
      std::cerr << "cannot write " << json_path << "\n";
      return exit_io;
    }
  }
  for (const auto& e : result.input_errors) {
    std::cerr << "input error: " << e.source;
    if (e.line_no) std::cerr << ':' << e.line_no;
    std::cerr << ": " << e.reason << "\n";
  }
  return result.input_errors.empty() ? 0 : 2;
}

int generate_corpus(const std::string& profile_name, std::uint64_t seed,
                    std::uint32_t hosts, std::uint32_t count,
                    const std::vector<std::string>& inject_specs,
                    const std::string& out_dir) {
  triadcep::ScenarioSpec spec;
  auto profile = triadcep::parse_profile(profile_name);
  if (!profile) {
    std::cerr << "--profile must be maintenance or plc\n";
    return exit_usage;
  }
  spec.profile = *profile;
  spec.seed = seed;
  spec.host_count = hosts;
  spec.unit_count = count;
  for (const auto& s : inject_specs) {
    const auto at = s.find('@');
    if (at == std::string::npos) {
      std::cerr << "--inject expects KIND@TARGET, got " << s << "\n";
      return exit_usage;
    }
    auto kind = triadcep::parse_anomaly_kind(s.substr(0, at));
    if (!kind) {
      std::cerr << "unknown anomaly kind " << s.substr(0, at) << "\n";
      return exit_usage;
    }
    std::uint32_t target = 0;
    try {
      target = static_cast<std::uint32_t>(std::stoul(s.substr(at + 1)));
    } catch (const std::exception&) {
      std::cerr << "bad anomaly target in " << s << "\n";
      return exit_usage;
    }
    spec.injected.push_back({*kind, target});
  }

  triadcep::Corpus corpus;
  try {
    corpus = triadcep::generate(spec);
  } catch (const triadcep::ScenarioError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return exit_usage;
  }
  try {
    triadcep::write_corpus(corpus, out_dir);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return exit_io;
  }
  for (const char* name :
       {"causes.jsonl", "effects.jsonl", "hosts.jsonl", "traffic.pcap", "manifest.json"})
    std::cout << out_dir << "/" << name << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"three-level cause/traffic/effect correlation for industrial networks"};
  app.require_subcommand(1);

  IngestOptions run_opts;
  std::string run_out, run_dot;
  CLI::App* run_cmd = app.add_subcommand("run", "correlate records and apply rules");
  add_ingest_options(*run_cmd, run_opts);
  run_cmd->add_option("--out", run_out, "write the JSON report here (default: stdout)");
  run_cmd->add_option("--dot", run_dot, "also write the topology as Graphviz DOT");

  IngestOptions graph_opts;
  std::string graph_dot, graph_json;
  CLI::App* graph_cmd = app.add_subcommand("graph", "emit the topology graph only");
  add_ingest_options(*graph_cmd, graph_opts);
  graph_cmd->add_option("--dot", graph_dot, "write Graphviz DOT here (default: stdout)");
  graph_cmd->add_option("--json", graph_json, "write the graph as JSON here");

  std::string gen_profile = "maintenance", gen_out_dir = ".";
  std::uint64_t gen_seed = 1;
  std::uint32_t gen_hosts = 5, gen_count = 12;
  std::vector<std::string> gen_injects;
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate a synthetic corpus");
  gen_cmd->add_option("--profile", gen_profile, "maintenance | plc");
  gen_cmd->add_option("--seed", gen_seed, "corpus seed");
  gen_cmd->add_option("--hosts", gen_hosts, "host count");
  gen_cmd->add_option("--count", gen_count, "sessions (maintenance) or writes (plc)");
  gen_cmd->add_option("--inject", gen_injects, "anomaly to inject, KIND@TARGET");
  gen_cmd->add_option("--out-dir", gen_out_dir, "directory for the corpus files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  if (*run_cmd) return run_and_report(run_opts, run_out, run_dot);
  if (*graph_cmd) return emit_graph(graph_opts, graph_dot, graph_json);
  return generate_corpus(gen_profile, gen_seed, gen_hosts, gen_count, gen_injects,
                         gen_out_dir);
}
