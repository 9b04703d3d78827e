#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "triadcep/json_codec.hpp"

using namespace triadcep;

namespace {

const char* cause_json =
    R"({"type":"cause","id":"c-000001","ts_us":1600000000000000,"origin_host":"tech-0",)"
    R"("origin_addr":"10.0.0.1","origin_port":0,"kind":"TicketAccepted",)"
    R"("subject_host":"machine-1","subject_addr":"10.0.0.2","subject_port":22,)"
    R"("payload":{"param-0":"level-0"}})";

const char* effect_json =
    R"({"type":"effect","id":"e-000001","ts_us":1600000000000500,"host":"machine-1",)"
    R"("addr":"10.0.0.2","port":0,"kind":"MachineSetting","severity":"Info",)"
    R"("payload":{"param-0":"level-0"}})";

}  // namespace

TEST_CASE("cause and effect lines parse into fully populated records") {
  auto r = parse_record_stream(std::string(cause_json) + "\n" + effect_json + "\n");
  CHECK(r.errors.empty());
  REQUIRE(r.causes.size() == 1);
  REQUIRE(r.effects.size() == 1);

  const CauseRecord& c = r.causes[0];
  CHECK(c.id == "c-000001");
  CHECK(c.timestamp.us == 1600000000000000ull);
  CHECK(c.origin.host_id == "tech-0");
  CHECK(c.origin.address == "10.0.0.1");
  CHECK(c.kind == CauseKind::TicketAccepted);
  CHECK(c.subject.host_id == "machine-1");
  CHECK(c.subject.port == 22);
  CHECK(c.payload.at("param-0") == "level-0");

  const EffectRecord& e = r.effects[0];
  CHECK(e.id == "e-000001");
  CHECK(e.host.host_id == "machine-1");
  CHECK(e.kind == EffectKind::MachineSetting);
  CHECK(e.severity == Severity::Info);
}

TEST_CASE("serialization round-trips and key order is stable") {
  auto parsed = parse_record_stream(std::string(cause_json) + "\n" + effect_json + "\n");
  REQUIRE(parsed.causes.size() == 1);
  REQUIRE(parsed.effects.size() == 1);
  CHECK(cause_line(parsed.causes[0]) == cause_json);
  CHECK(effect_line(parsed.effects[0]) == effect_json);
}

TEST_CASE("a bad line is reported and its neighbors still parse") {
  std::string text = std::string(cause_json) + "\n" +
                     "{\"type\":\"cause\",\"id\":17}\n" +      // id is not a string
                     "not json at all\n" +
                     "\n" +                                     // blank: skipped
                     "{\"type\":\"weird\"}\n" +
                     effect_json + "\n";
  auto r = parse_record_stream(text);
  CHECK(r.causes.size() == 1);
  CHECK(r.effects.size() == 1);
  REQUIRE(r.errors.size() == 3);
  CHECK(r.errors[0].line_no == 2);
  CHECK(r.errors[0].reason == "id: not a string");
  CHECK(r.errors[1].line_no == 3);
  CHECK(r.errors[2].line_no == 5);
  CHECK(r.errors[2].reason == "type: must be \"cause\" or \"effect\"");
}

TEST_CASE("schema violations surface as line errors") {
  // negative timestamp
  std::string neg = cause_json;
  auto pos = neg.find("1600000000000000");
  neg.replace(pos, 16, "-5");
  auto r1 = parse_record_stream(neg + "\n");
  REQUIRE(r1.errors.size() == 1);
  CHECK(r1.errors[0].reason == "ts_us: not a non-negative integer");

  // port out of range
  std::string big_port = cause_json;
  pos = big_port.find("\"subject_port\":22");
  big_port.replace(pos, 17, "\"subject_port\":70000");
  auto r2 = parse_record_stream(big_port + "\n");
  REQUIRE(r2.errors.size() == 1);
  CHECK(r2.errors[0].reason == "subject_port: port out of range");

  // payload values must be strings
  std::string num_payload = cause_json;
  pos = num_payload.find("{\"param-0\":\"level-0\"}");
  num_payload.replace(pos, 21, "{\"param-0\":7}");
  auto r3 = parse_record_stream(num_payload + "\n");
  REQUIRE(r3.errors.size() == 1);
  CHECK(r3.errors[0].reason == "payload.param-0: not a string");

  // record-level invariants run too: a Parameterization without payload
  std::string empty_param = cause_json;
  pos = empty_param.find("TicketAccepted");
  empty_param.replace(pos, 14, "Parameterization");
  pos = empty_param.find("{\"param-0\":\"level-0\"}");
  empty_param.replace(pos, 21, "{}");
  auto r4 = parse_record_stream(empty_param + "\n");
  CHECK(r4.causes.empty());
  REQUIRE(r4.errors.size() == 1);
}

TEST_CASE("host maps prefer explicit entries, then learned ones, then the address") {
  HostMap m;
  CHECK(m.resolve("10.0.0.9") == "10.0.0.9");

  CHECK(!m.bind("10.0.0.2", "machine-1"));
  CHECK(m.resolve("10.0.0.2") == "machine-1");
  CHECK(!m.bind("10.0.0.2", "machine-1"));  // re-binding the same pair is fine

  auto conflict = m.bind("10.0.0.2", "machine-2");
  REQUIRE(conflict);
  CHECK(conflict->field == "addr");

  m.set_explicit("10.0.0.3", "monitor-0");
  CHECK(m.resolve("10.0.0.3") == "monitor-0");
  CHECK(m.bind("10.0.0.3", "someone-else"));
  CHECK(!m.bind("10.0.0.3", "monitor-0"));

  // empty fields never bind anything
  CHECK(!m.bind("", "x"));
  CHECK(!m.bind("10.0.0.4", ""));
  CHECK(m.resolve("10.0.0.4") == "10.0.0.4");
}

TEST_CASE("hosts files parse line by line with errors reported in place") {
  HostMap m;
  std::istringstream in(std::string(hosts_line("10.0.0.1", "tech-0")) + "\n" +
                        "{\"addr\":\"10.0.0.2\"}\n" +
                        hosts_line("10.0.0.3", "monitor-0") + "\n");
  auto errors = parse_hosts_stream(in, m);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].line_no == 2);
  CHECK(errors[0].reason == "host_id: missing");
  CHECK(m.resolve("10.0.0.1") == "tech-0");
  CHECK(m.resolve("10.0.0.3") == "monitor-0");
}
