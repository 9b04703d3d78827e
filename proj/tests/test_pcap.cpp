#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <vector>

#include "triadcep/json_codec.hpp"
#include "triadcep/pcap.hpp"

using namespace triadcep;

namespace {

// Local capture assembler, independent of the library's writer.
void le16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xFF);
  b.push_back(v >> 8);
}
void le32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xFF);
}
void be16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v >> 8);
  b.push_back(v & 0xFF);
}

std::vector<std::uint8_t> header_le() {
  std::vector<std::uint8_t> b;
  le32(b, 0xA1B2C3D4);
  le16(b, 2);
  le16(b, 4);
  le32(b, 0);
  le32(b, 0);
  le32(b, 65535);
  le32(b, 1);
  return b;
}

std::vector<std::uint8_t> ip_frame(std::uint8_t proto, const std::uint8_t (&src)[4],
                                   const std::uint8_t (&dst)[4], std::uint16_t sport,
                                   std::uint16_t dport,
                                   const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> f(12, 0x02);  // MACs, content irrelevant
  be16(f, 0x0800);
  const std::size_t l4 = (proto == 6 ? 20 : 8) + payload.size();
  f.push_back(0x45);
  f.push_back(0);
  be16(f, static_cast<std::uint16_t>(20 + l4));
  be16(f, 0);          // identification
  be16(f, 0);          // flags/fragment
  f.push_back(64);     // ttl
  f.push_back(proto);
  be16(f, 0);          // checksum, parser does not verify it
  f.insert(f.end(), src, src + 4);
  f.insert(f.end(), dst, dst + 4);
  be16(f, sport);
  be16(f, dport);
  if (proto == 6) {
    be16(f, 0); be16(f, 0);  // seq
    be16(f, 0); be16(f, 0);  // ack
    f.push_back(0x50);       // data offset 5
    f.push_back(0x18);
    be16(f, 1024);
    be16(f, 0);
    be16(f, 0);
  } else {
    be16(f, static_cast<std::uint16_t>(8 + payload.size()));
    be16(f, 0);
  }
  f.insert(f.end(), payload.begin(), payload.end());
  return f;
}

void add_record(std::vector<std::uint8_t>& cap, std::uint32_t sec, std::uint32_t usec,
                const std::vector<std::uint8_t>& frame) {
  le32(cap, sec);
  le32(cap, usec);
  le32(cap, static_cast<std::uint32_t>(frame.size()));
  le32(cap, static_cast<std::uint32_t>(frame.size()));
  cap.insert(cap.end(), frame.begin(), frame.end());
}

const std::uint8_t ics[4] = {10, 1, 0, 1};
const std::uint8_t plc[4] = {10, 1, 1, 1};

HostMap mapped_hosts() {
  HostMap h;
  h.set_explicit("10.1.0.1", "ics-0");
  h.set_explicit("10.1.1.1", "plc-0");
  return h;
}

}  // namespace

TEST_CASE("a hand-assembled capture parses into addressed, decoded packets") {
  const std::vector<std::uint8_t> modbus_write{0x00, 0x01, 0x00, 0x00, 0x00, 0x06,
                                               0x01, 0x06, 0x00, 0x10, 0x02, 0x00};
  auto cap = header_le();
  add_record(cap, 100, 250, ip_frame(6, ics, plc, 49152, 502, modbus_write));
  add_record(cap, 100, 900, ip_frame(17, plc, ics, 5000, 6000, {0xAA, 0xBB}));

  HostMap hosts = mapped_hosts();
  std::uint64_t counter = 0;
  auto r = parse_capture(cap, hosts, counter);

  REQUIRE(r.packets.size() == 2);
  CHECK(r.errors.empty());
  CHECK(r.skipped_frames == 0);
  CHECK(counter == 2);

  const PacketRecord& p0 = r.packets[0];
  CHECK(p0.id == "pkt-000001");
  CHECK(p0.timestamp.us == 100 * 1000000ull + 250);
  CHECK(p0.src.host_id == "ics-0");
  CHECK(p0.src.address == "10.1.0.1");
  CHECK(p0.src.port == 49152);
  CHECK(p0.dst.host_id == "plc-0");
  CHECK(p0.dst.port == 502);
  CHECK(p0.transport == Transport::TCP);
  CHECK(p0.length_bytes == 54 + modbus_write.size());
  REQUIRE(p0.modbus);
  CHECK(p0.modbus->register_address == 16);
  CHECK(p0.modbus->values == std::vector<std::uint16_t>{512});
  CHECK(!p0.modbus->is_response);

  const PacketRecord& p1 = r.packets[1];
  CHECK(p1.id == "pkt-000002");
  CHECK(p1.transport == Transport::UDP);
  CHECK(!p1.modbus);  // not port 502
}

TEST_CASE("unmapped addresses fall back to the address string as host id") {
  auto cap = header_le();
  add_record(cap, 1, 0, ip_frame(6, ics, plc, 1111, 2222, {}));
  HostMap empty;
  std::uint64_t counter = 0;
  auto r = parse_capture(cap, empty, counter);
  REQUIRE(r.packets.size() == 1);
  CHECK(r.packets[0].src.host_id == "10.1.0.1");
  CHECK(r.packets[0].dst.host_id == "10.1.1.1");
}

TEST_CASE("the id counter is shared across capture files") {
  auto cap1 = header_le();
  add_record(cap1, 1, 0, ip_frame(6, ics, plc, 1111, 2222, {}));
  auto cap2 = header_le();
  add_record(cap2, 2, 0, ip_frame(6, plc, ics, 2222, 1111, {}));

  HostMap hosts = mapped_hosts();
  std::uint64_t counter = 0;
  auto r1 = parse_capture(cap1, hosts, counter);
  auto r2 = parse_capture(cap2, hosts, counter);
  REQUIRE(r1.packets.size() == 1);
  REQUIRE(r2.packets.size() == 1);
  CHECK(r1.packets[0].id == "pkt-000001");
  CHECK(r2.packets[0].id == "pkt-000002");
}

TEST_CASE("byte-swapped captures parse identically") {
  // same single packet, every header and record field written big-endian
  auto frame = ip_frame(6, ics, plc, 49152, 502, {});
  std::vector<std::uint8_t> cap;
  auto be32 = [&](std::uint32_t v) {
    cap.push_back(v >> 24);
    cap.push_back((v >> 16) & 0xFF);
    cap.push_back((v >> 8) & 0xFF);
    cap.push_back(v & 0xFF);
  };
  be32(0xA1B2C3D4);  // reads as 0xD4C3B2A1 on a little-endian probe
  be16(cap, 2);
  be16(cap, 4);
  be32(0);
  be32(0);
  be32(65535);
  be32(1);
  be32(7);   // ts_sec
  be32(13);  // ts_usec
  be32(static_cast<std::uint32_t>(frame.size()));
  be32(static_cast<std::uint32_t>(frame.size()));
  cap.insert(cap.end(), frame.begin(), frame.end());

  HostMap hosts = mapped_hosts();
  std::uint64_t counter = 0;
  auto r = parse_capture(cap, hosts, counter);
  REQUIRE(r.packets.size() == 1);
  CHECK(r.packets[0].timestamp.us == 7 * 1000000ull + 13);
  CHECK(r.packets[0].dst.port == 502);
}

TEST_CASE("unsupported captures are rejected as a whole") {
  HostMap hosts;
  std::uint64_t counter = 0;

  std::vector<std::uint8_t> tiny{1, 2, 3};
  CHECK_THROWS_AS(parse_capture(tiny, hosts, counter), CaptureFormatError);

  auto ns = header_le();
  ns[0] = 0x4D; ns[1] = 0x3C; ns[2] = 0xB2; ns[3] = 0xA1;  // nanosecond magic
  CHECK_THROWS_AS(parse_capture(ns, hosts, counter), CaptureFormatError);

  auto wrong_magic = header_le();
  wrong_magic[0] = 0x00;
  CHECK_THROWS_AS(parse_capture(wrong_magic, hosts, counter), CaptureFormatError);

  auto not_ethernet = header_le();
  not_ethernet[20] = 101;  // raw IP
  CHECK_THROWS_AS(parse_capture(not_ethernet, hosts, counter), CaptureFormatError);

  CHECK(counter == 0);
}

TEST_CASE("non-IP and non-TCP/UDP frames are skipped, not errors") {
  auto cap = header_le();
  std::vector<std::uint8_t> arp(12, 0x02);
  be16(arp, 0x0806);
  arp.resize(42, 0);
  add_record(cap, 1, 0, arp);
  add_record(cap, 2, 0, ip_frame(1, ics, plc, 0, 0, {}));  // ICMP-ish: proto 1
  add_record(cap, 3, 0, ip_frame(6, ics, plc, 1, 2, {}));

  HostMap hosts = mapped_hosts();
  std::uint64_t counter = 0;
  auto r = parse_capture(cap, hosts, counter);
  CHECK(r.skipped_frames == 2);
  REQUIRE(r.packets.size() == 1);
  CHECK(r.packets[0].id == "pkt-000001");
  CHECK(r.errors.empty());
}

TEST_CASE("a truncated record body stops the file with an error, keeping earlier packets") {
  auto cap = header_le();
  add_record(cap, 1, 0, ip_frame(6, ics, plc, 1, 2, {}));
  auto frame = ip_frame(6, ics, plc, 3, 4, {});
  le32(cap, 5);
  le32(cap, 0);
  le32(cap, static_cast<std::uint32_t>(frame.size() + 10));  // claims more than present
  le32(cap, static_cast<std::uint32_t>(frame.size() + 10));
  cap.insert(cap.end(), frame.begin(), frame.end());

  HostMap hosts = mapped_hosts();
  std::uint64_t counter = 0;
  auto r = parse_capture(cap, hosts, counter);
  CHECK(r.packets.size() == 1);
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].reason == "truncated packet data");
}

TEST_CASE("packets that map src and dst to the same endpoint are rejected individually") {
  auto cap = header_le();
  add_record(cap, 1, 0, ip_frame(6, ics, ics, 7, 7, {}));  // same addr, same port
  add_record(cap, 2, 0, ip_frame(6, ics, plc, 7, 8, {}));

  HostMap hosts = mapped_hosts();
  std::uint64_t counter = 0;
  auto r = parse_capture(cap, hosts, counter);
  REQUIRE(r.packets.size() == 1);
  CHECK(r.errors.size() == 1);
  // the reject does not consume an id: the good packet is still first
  CHECK(r.packets[0].id == "pkt-000001");
  CHECK(counter == 1);
}

TEST_CASE("the writer emits captures the parser reads back exactly") {
  WirePacket a;
  a.ts = Timestamp{1'000'000};
  a.src_addr = "10.1.0.1";
  a.dst_addr = "10.1.1.1";
  a.src_port = 49152;
  a.dst_port = 502;
  a.transport = Transport::TCP;
  a.payload = encode_write_single(1, 1, 16, 512);

  WirePacket b;
  b.ts = Timestamp{2'000'000};
  b.src_addr = "10.1.1.1";
  b.dst_addr = "10.1.0.1";
  b.src_port = 9000;
  b.dst_port = 9001;
  b.transport = Transport::UDP;
  b.payload = {1, 2, 3};

  auto cap = capture_header();
  append_packet(cap, a);
  append_packet(cap, b);

  HostMap hosts = mapped_hosts();
  std::uint64_t counter = 0;
  auto r = parse_capture(cap, hosts, counter);
  REQUIRE(r.packets.size() == 2);
  CHECK(r.errors.empty());
  CHECK(r.packets[0].timestamp.us == 1'000'000);
  CHECK(r.packets[0].src.host_id == "ics-0");
  CHECK(r.packets[0].dst.port == 502);
  CHECK(r.packets[0].length_bytes == 54 + a.payload.size());
  REQUIRE(r.packets[0].modbus);
  CHECK(r.packets[0].modbus->values == std::vector<std::uint16_t>{512});
  CHECK(r.packets[1].transport == Transport::UDP);
  CHECK(r.packets[1].length_bytes == 42 + b.payload.size());
}
