#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "oracle_helpers.hpp"
#include "triadcep/aggregate.hpp"
#include "triadcep/scenario.hpp"

using namespace triadcep;

namespace {

PacketRecord pkt(const char* id, std::uint64_t ts_us, const char* src, const char* dst,
                 std::uint16_t dst_port, std::uint64_t length = 60) {
  PacketRecord p;
  p.id = id;
  p.timestamp = Timestamp{ts_us};
  p.src = Endpoint{src, std::string("addr-") + src, 40000};
  p.dst = Endpoint{dst, std::string("addr-") + dst, dst_port};
  p.transport = Transport::TCP;
  p.length_bytes = length;
  return p;
}

CauseRecord cause(const char* id, std::uint64_t ts_us, CauseKind kind,
                  const char* subject_host,
                  std::map<std::string, std::string> payload = {}) {
  CauseRecord c;
  c.id = id;
  c.timestamp = Timestamp{ts_us};
  c.origin = Endpoint{"origin-0", "10.9.9.9", 0};
  c.kind = kind;
  c.subject = Endpoint{subject_host, std::string("addr-") + subject_host, 22};
  c.payload = std::move(payload);
  return c;
}

EffectRecord effect(const char* id, std::uint64_t ts_us, const char* host,
                    EffectKind kind, Severity sev,
                    std::map<std::string, std::string> payload = {}) {
  EffectRecord e;
  e.id = id;
  e.timestamp = Timestamp{ts_us};
  e.host = Endpoint{host, std::string("addr-") + host, 0};
  e.kind = kind;
  e.severity = sev;
  e.payload = std::move(payload);
  return e;
}

constexpr std::uint64_t s = 1'000'000;

}  // namespace

TEST_CASE("flows split on the idle timeout and sum their members") {
  std::vector<PacketRecord> packets{
      pkt("pkt-000001", 0, "h1", "h2", 502, 66),
      pkt("pkt-000002", 30 * s, "h1", "h2", 502, 70),
      pkt("pkt-000003", 120 * s, "h1", "h2", 502, 80),  // 90s idle: next flow
      pkt("pkt-000004", 10 * s, "h1", "h2", 8080, 100),
  };
  packets[0].modbus = ModbusFrame{1, 1, 3, 0, {}, false};
  packets[1].modbus = ModbusFrame{1, 1, 3, 0, {512}, true};
  packets[2].modbus = ModbusFrame{2, 1, 6, 16, {7}, false};

  auto flows = aggregate_flows(packets, default_flow_timeout_us);
  REQUIRE(flows.size() == 3);

  CHECK(flows[0].key.src.host_id == "h1");
  CHECK(flows[0].key.dst.port == 502);
  CHECK(flows[0].packet_count == 2);
  CHECK(flows[0].byte_count == 136);
  CHECK(flows[0].first_seen.us == 0);
  CHECK(flows[0].last_seen.us == 30 * s);
  CHECK(flows[0].packet_ids == std::vector<std::string>{"pkt-000001", "pkt-000002"});
  CHECK(flows[0].modbus_functions == std::map<std::uint8_t, std::uint64_t>{{3, 2}});

  CHECK(flows[1].key.dst.port == 8080);
  CHECK(flows[1].modbus_functions.empty());

  CHECK(flows[2].packet_ids == std::vector<std::string>{"pkt-000003"});
  CHECK(flows[2].modbus_functions == std::map<std::uint8_t, std::uint64_t>{{6, 1}});
}

TEST_CASE("flow membership equals burst splitting at the flow timeout") {
  const char* hosts[] = {"h1", "h2", "h3"};
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    SplitMix64 rng(seed * 31);
    std::vector<PacketRecord> packets;
    const std::size_t n = 2 + rng.bounded(10);
    std::uint64_t total_bytes = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t si = rng.bounded(3), di = rng.bounded(3);
      if (si == di) di = (di + 1) % 3;
      char id[16];
      std::snprintf(id, sizeof id, "pkt-%06zu", i + 1);
      const std::uint64_t len = 54 + rng.bounded(100);
      total_bytes += len;
      packets.push_back(pkt(id, rng.bounded(300) * s, hosts[si], hosts[di],
                            static_cast<std::uint16_t>(1 + rng.bounded(2)), len));
    }
    auto flows = aggregate_flows(packets, default_flow_timeout_us);
    auto want = oracle::ref_burst_split(packets, default_flow_timeout_us);
    REQUIRE(flows.size() == want.size());
    std::uint64_t flow_bytes = 0, flow_pkts = 0;
    for (std::size_t f = 0; f < flows.size(); ++f) {
      REQUIRE(flows[f].packet_ids.size() == want[f].size());
      for (std::size_t i = 0; i < want[f].size(); ++i)
        CHECK(flows[f].packet_ids[i] == want[f][i].id);
      CHECK(flows[f].first_seen == want[f].front().timestamp);
      CHECK(flows[f].last_seen == want[f].back().timestamp);
      flow_bytes += flows[f].byte_count;
      flow_pkts += flows[f].packet_count;
    }
    CHECK(flow_bytes == total_bytes);
    CHECK(flow_pkts == packets.size());
  }
}

TEST_CASE("cause traces count tickets and keep the newest intended settings") {
  // deliberately out of time order
  std::vector<CauseRecord> causes{
      cause("c-000004", 40 * s, CauseKind::Parameterization, "m",
            {{"param-0", "level-9"}, {"param-2", "level-2"}}),
      cause("c-000001", 10 * s, CauseKind::TicketIssued, "m", {{"problem", "x"}}),
      cause("c-000002", 20 * s, CauseKind::TicketAccepted, "m"),
      cause("c-000003", 30 * s, CauseKind::ConfigEntry, "m",
            {{"param-0", "level-0"}, {"param-1", "level-1"}}),
  };
  auto t = build_cause_trace(causes, Endpoint{"m", "addr-m", 0});
  CHECK(t.subject.host_id == "m");
  CHECK(t.entries == std::vector<std::string>{"c-000001", "c-000002", "c-000003",
                                              "c-000004"});
  CHECK(t.ticket_count == 2);
  // c-000004 wrote param-0 after c-000003 did
  CHECK(t.last_settings ==
        std::map<std::string, std::string>{
            {"param-0", "level-9"}, {"param-1", "level-1"}, {"param-2", "level-2"}});
}

TEST_CASE("effect traces track severities and snapshot every setting change") {
  std::vector<EffectRecord> effects{
      effect("e-000001", 10 * s, "m", EffectKind::LogEntry, Severity::Error,
             {{"event", "malfunction"}}),
      effect("e-000002", 20 * s, "m", EffectKind::MachineSetting, Severity::Info,
             {{"param-0", "level-0"}}),
      effect("e-000003", 30 * s, "m", EffectKind::RegisterSetting, Severity::Info,
             {{"register", "16"}, {"value", "512"}}),
      effect("e-000004", 40 * s, "m", EffectKind::LogEntry, Severity::Warning),
      effect("e-000005", 50 * s, "m", EffectKind::RegisterSetting, Severity::Info,
             {{"register", "16"}, {"value", "768"}}),
  };
  auto t = build_effect_trace(effects, Endpoint{"m", "addr-m", 0});
  CHECK(t.error_count == 1);
  CHECK(t.warning_count == 1);
  CHECK(t.entries.size() == 5);

  REQUIRE(t.setting_history.size() == 3);
  CHECK(t.setting_history[0].first.us == 20 * s);
  CHECK(t.setting_history[0].second ==
        std::map<std::string, std::string>{{"param-0", "level-0"}});
  CHECK(t.setting_history[1].second ==
        std::map<std::string, std::string>{{"param-0", "level-0"}, {"16", "512"}});
  // the final snapshot reflects the overwrite of register 16
  CHECK(t.setting_history[2].second ==
        std::map<std::string, std::string>{{"param-0", "level-0"}, {"16", "768"}});
}

TEST_CASE("traces group per host in host order") {
  std::vector<CauseRecord> causes{
      cause("c-000001", 10 * s, CauseKind::TicketIssued, "machine-2"),
      cause("c-000002", 20 * s, CauseKind::TicketIssued, "machine-1"),
      cause("c-000003", 30 * s, CauseKind::TicketAccepted, "machine-2"),
  };
  auto traces = group_cause_traces(causes);
  REQUIRE(traces.size() == 2);
  CHECK(traces[0].subject.host_id == "machine-1");
  CHECK(traces[0].subject.port == 0);  // traces belong to hosts, not ports
  CHECK(traces[1].subject.host_id == "machine-2");
  CHECK(traces[1].ticket_count == 2);

  std::vector<EffectRecord> effects{
      effect("e-000001", 10 * s, "b", EffectKind::LogEntry, Severity::Info),
      effect("e-000002", 20 * s, "a", EffectKind::LogEntry, Severity::Error),
  };
  auto etraces = group_effect_traces(effects);
  REQUIRE(etraces.size() == 2);
  CHECK(etraces[0].host.host_id == "a");
  CHECK(etraces[0].error_count == 1);
  CHECK(etraces[1].host.host_id == "b");
}
