#include <catch2/catch_amalgamated.hpp>

#include <regex>
#include <string>

#include "triadcep/report.hpp"
#include "triadcep/topology.hpp"

using namespace triadcep;

namespace {

TopologyGraph small_graph() {
  TopologyGraph g;
  NodeSummary ics;
  ics.host_id = "ics-0";
  ics.roles = {NodeRole::Cause};
  ics.cause_summary.kind_counts[CauseKind::Parameterization] = 2;
  g.nodes.emplace("ics-0", ics);

  NodeSummary plc;
  plc.host_id = "plc-0";
  plc.roles = {NodeRole::Effect};
  plc.effect_summary.severity_counts[Severity::Info] = 3;
  plc.effect_summary.severity_counts[Severity::Error] = 1;
  plc.effect_summary.distinct_setting_count = 2;
  g.nodes.emplace("plc-0", plc);

  EdgeSummary e;
  e.flow_count = 2;
  e.packet_count = 10;
  e.byte_count = 640;
  e.first_seen = Timestamp{1'000'000};
  e.last_seen = Timestamp{9'000'000};
  g.edges.emplace(std::make_pair("ics-0", "plc-0"), e);
  return g;
}

}  // namespace

TEST_CASE("an empty topology renders as the empty digraph") {
  CHECK(emit_dot(TopologyGraph{}) == "digraph topology {}\n");
}

TEST_CASE("dot output is stable and carries the node and edge labels") {
  const std::string want =
      "digraph topology {\n"
      "  \"ics-0\" [label=\"ics-0\\nCause\\ncauses=2 tickets=0 errors=0 warnings=0"
      " settings=0\"];\n"
      "  \"plc-0\" [label=\"plc-0\\nEffect\\ncauses=0 tickets=0 errors=1 warnings=0"
      " settings=2\"];\n"
      "  \"ics-0\" -> \"plc-0\" [label=\"flows=2 pkts=10 bytes=640\"];\n"
      "}\n";
  CHECK(emit_dot(small_graph()) == want);
}

TEST_CASE("dot output escapes quotes and backslashes in host names") {
  TopologyGraph g;
  NodeSummary odd;
  odd.host_id = "host\"x\\y";
  odd.roles = {NodeRole::TrafficOnly};
  g.nodes.emplace(odd.host_id, odd);
  auto dot = emit_dot(g);
  CHECK(dot.find("\"host\\\"x\\\\y\"") != std::string::npos);
}

TEST_CASE("node summaries always serialize the full key schema") {
  NodeSummary bare;
  bare.host_id = "quiet";
  bare.roles = {NodeRole::TrafficOnly};
  auto j = node_summary_to_json(bare);

  // every kind and severity key is present even at zero
  for (const char* k :
       {"ConfigEntry", "TicketIssued", "TicketAccepted", "Parameterization"})
    CHECK(j["cause_summary"]["kind_counts"][k] == 0);
  for (const char* s : {"Info", "Warning", "Error"})
    CHECK(j["effect_summary"]["severity_counts"][s] == 0);
  CHECK(j["host_id"] == "quiet");
  CHECK(j["roles"] == std::vector<std::string>{"TrafficOnly"});
}

TEST_CASE("summaries with different magnitudes differ only in digits") {
  // the level-3 compression contract: a node is the same handful of counters
  // whether ten or ten thousand records sit behind it
  auto make = [](std::uint64_t scale) {
    NodeSummary n;
    n.host_id = "machine-1";
    n.roles = {NodeRole::Both};
    n.cause_summary.ticket_count = 2 * scale;
    n.cause_summary.kind_counts[CauseKind::TicketIssued] = scale;
    n.cause_summary.kind_counts[CauseKind::Parameterization] = scale;
    n.effect_summary.severity_counts[Severity::Info] = 7 * scale;
    n.effect_summary.severity_counts[Severity::Error] = scale;
    n.effect_summary.distinct_setting_count = 3;
    return node_summary_to_json(n).dump();
  };
  const std::string small = make(10);
  const std::string large = make(10'000);
  CHECK(small != large);
  const std::regex digits("[0-9]+");
  CHECK(std::regex_replace(small, digits, "#") ==
        std::regex_replace(large, digits, "#"));
}

TEST_CASE("the graph serializes with a fixed edge schema") {
  auto j = graph_to_json(small_graph());
  REQUIRE(j["nodes"].size() == 2);
  CHECK(j["nodes"].contains("ics-0"));
  REQUIRE(j["edges"].size() == 1);
  const std::string dump = j["edges"][0].dump();
  CHECK(dump ==
        "{\"src\":\"ics-0\",\"dst\":\"plc-0\",\"flows\":2,\"packets\":10,"
        "\"bytes\":640,\"first_seen_us\":1000000,\"last_seen_us\":9000000}");
}

TEST_CASE("findings serialize their fields in report order") {
  Finding f{RuleId::R3_ParameterizationWithoutCause, FindingSeverity::Alert, "plc-1",
            {"pkt-000004", "pkt-000005"}, "register write burst with no announcing cause"};
  CHECK(finding_to_json(f).dump() ==
        "{\"rule_id\":\"R3_ParameterizationWithoutCause\",\"severity\":\"Alert\","
        "\"subject\":\"plc-1\",\"evidence\":[\"pkt-000004\",\"pkt-000005\"],"
        "\"message\":\"register write burst with no announcing cause\"}");
}

TEST_CASE("the run report carries every stats section with stable keys") {
  RunStats stats;
  stats.causes = {24, 1};
  stats.packets = {101, 2};
  stats.skipped_frames = 3;
  stats.effects = {32, 0};
  stats.triads = 32;
  stats.by_completeness[Completeness::Full] = 24;
  stats.by_completeness[Completeness::MissingCause] = 8;
  stats.residue_causes = 1;
  stats.residue_effects = 2;
  stats.flows = 9;
  stats.cause_traces = 4;
  stats.effect_traces = 5;
  stats.nodes = 7;
  stats.edges = 6;
  stats.dangling_hosts = {"ghost-0"};
  stats.packets_in = 101;
  stats.triad_packet_sum = 101;
  stats.flow_packet_sum = 101;
  stats.edge_packet_sum = 101;
  stats.abstained_rules = {"R4_DegreeOutlier"};

  Finding f{RuleId::R1_TicketWithoutError, FindingSeverity::Suspicious, "machine-1",
            {"c-000009"}, "ticket issued with no error"};
  auto j = emit_report({f}, stats);

  REQUIRE(j["findings"].size() == 1);
  CHECK(j["findings"][0]["rule_id"] == "R1_TicketWithoutError");

  const auto& st = j["stats"];
  CHECK(st["ingest"]["causes"]["ingested"] == 24);
  CHECK(st["ingest"]["causes"]["rejected"] == 1);
  CHECK(st["ingest"]["packets"]["skipped_frames"] == 3);
  CHECK(st["correlation"]["triads"] == 32);
  // all four completeness buckets appear, populated or not
  CHECK(st["correlation"]["by_completeness"].dump() ==
        "{\"Full\":24,\"MissingCause\":8,\"MissingEffect\":0,\"TrafficOnly\":0}");
  CHECK(st["correlation"]["residue_causes"] == 1);
  CHECK(st["aggregation"]["flows"] == 9);
  CHECK(st["topology"]["dangling_hosts"] == std::vector<std::string>{"ghost-0"});
  CHECK(st["conservation"]["packets_in"] == 101);
  CHECK(st["conservation"]["edge_packet_sum"] == 101);
  CHECK(st["rules"]["abstained"] == std::vector<std::string>{"R4_DegreeOutlier"});

  // the text form is the two-space dump plus a final newline
  auto text = report_text({f}, stats);
  CHECK(text == j.dump(2) + "\n");
  CHECK(text.rfind("{\n  \"findings\"", 0) == 0);
}
