#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "triadcep/json_codec.hpp"
#include "triadcep/modbus.hpp"

// Classic capture-file reader (both endiannesses) and a little-endian writer.
// Ethernet/IPv4 only; TCP and UDP transports; TCP/502 payloads run through
// the Modbus decoder. Nanosecond-resolution magics are out of scope and
// rejected up front.

namespace triadcep {

struct CaptureFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CaptureResult {
  std::vector<PacketRecord> packets;
  std::vector<ParseError> errors;       // line_no = 1-based packet index
  std::uint64_t skipped_frames = 0;     // non-IPv4 / non-TCP-UDP frames
};

namespace detail {

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, bool swap) : data_(data), swap_(swap) {}

  std::uint32_t u32(std::size_t off) const {
    std::uint32_t v = static_cast<std::uint32_t>(data_[off]) |
                      (static_cast<std::uint32_t>(data_[off + 1]) << 8) |
                      (static_cast<std::uint32_t>(data_[off + 2]) << 16) |
                      (static_cast<std::uint32_t>(data_[off + 3]) << 24);
    if (swap_) v = __builtin_bswap32(v);
    return v;
  }

  std::uint16_t u16(std::size_t off) const {
    std::uint16_t v = static_cast<std::uint16_t>(data_[off] |
                                                 (static_cast<std::uint16_t>(data_[off + 1]) << 8));
    if (swap_) v = static_cast<std::uint16_t>(__builtin_bswap16(v));
    return v;
  }

 private:
  std::span<const std::uint8_t> data_;
  bool swap_;
};

inline std::uint16_t net16(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
}

inline std::string ipv4_to_string(std::span<const std::uint8_t> b, std::size_t off) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", b[off], b[off + 1], b[off + 2],
                b[off + 3]);
  return buf;
}

}  // namespace detail

// Packet ids are assigned from a caller-owned counter so multiple capture
// files share one id space in ingest order.
inline CaptureResult parse_capture(std::span<const std::uint8_t> bytes,
                                   const HostMap& hosts,
                                   std::uint64_t& next_packet_no) {
  constexpr std::uint32_t magic_us_le = 0xA1B2C3D4;
  constexpr std::uint32_t magic_us_be = 0xD4C3B2A1;
  constexpr std::uint32_t magic_ns_le = 0xA1B23C4D;
  constexpr std::uint32_t magic_ns_be = 0x4D3CB2A1;

  if (bytes.size() < 24) throw CaptureFormatError("capture shorter than global header");
  detail::ByteReader probe(bytes, false);
  const std::uint32_t raw_magic = probe.u32(0);
  bool swap = false;
  if (raw_magic == magic_us_le) {
    swap = false;
  } else if (raw_magic == magic_us_be) {
    swap = true;
  } else if (raw_magic == magic_ns_le || raw_magic == magic_ns_be) {
    throw CaptureFormatError("nanosecond-resolution captures are not supported");
  } else {
    throw CaptureFormatError("bad capture magic");
  }

  detail::ByteReader rd(bytes, swap);
  const std::uint32_t linktype = rd.u32(20);
  if (linktype != 1)
    throw CaptureFormatError("unsupported link type " + std::to_string(linktype) +
                             " (Ethernet only)");

  CaptureResult out;
  std::size_t pos = 24;
  std::size_t index = 0;
  while (pos < bytes.size()) {
    ++index;
    if (bytes.size() - pos < 16) {
      out.errors.push_back(ParseError{index, "truncated packet header"});
      break;
    }
    const std::uint32_t ts_sec = rd.u32(pos);
    const std::uint32_t ts_usec = rd.u32(pos + 4);
    const std::uint32_t incl_len = rd.u32(pos + 8);
    const std::uint32_t orig_len = rd.u32(pos + 12);
    pos += 16;
    if (bytes.size() - pos < incl_len) {
      out.errors.push_back(ParseError{index, "truncated packet data"});
      break;
    }
    auto frame = bytes.subspan(pos, incl_len);
    pos += incl_len;

    // Ethernet
    if (frame.size() < 14 || detail::net16(frame, 12) != 0x0800) {
      ++out.skipped_frames;
      continue;
    }
    auto ip = frame.subspan(14);
    if (ip.size() < 20 || (ip[0] >> 4) != 4) {
      ++out.skipped_frames;
      continue;
    }
    const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0F) * 4;
    if (ihl < 20 || ip.size() < ihl) {
      ++out.skipped_frames;
      continue;
    }
    const std::uint8_t proto = ip[9];
    if (proto != 6 && proto != 17) {
      ++out.skipped_frames;
      continue;
    }
    const std::uint16_t total_len = detail::net16(ip, 2);
    const std::size_t ip_len = std::min<std::size_t>(total_len, ip.size());
    if (ip_len < ihl) {
      out.errors.push_back(ParseError{index, "IPv4 total length shorter than header"});
      continue;
    }
    auto l4 = ip.subspan(ihl, ip_len - ihl);

    PacketRecord pkt;
    pkt.timestamp = Timestamp{static_cast<std::uint64_t>(ts_sec) * 1000000ull + ts_usec};
    pkt.length_bytes = orig_len;
    const std::string src_addr = detail::ipv4_to_string(ip, 12);
    const std::string dst_addr = detail::ipv4_to_string(ip, 16);

    std::span<const std::uint8_t> payload;
    std::uint16_t src_port = 0, dst_port = 0;
    if (proto == 6) {
      if (l4.size() < 20) {
        out.errors.push_back(ParseError{index, "truncated TCP header"});
        continue;
      }
      src_port = detail::net16(l4, 0);
      dst_port = detail::net16(l4, 2);
      const std::size_t data_off = static_cast<std::size_t>(l4[12] >> 4) * 4;
      if (data_off < 20 || l4.size() < data_off) {
        out.errors.push_back(ParseError{index, "bad TCP data offset"});
        continue;
      }
      pkt.transport = Transport::TCP;
      payload = l4.subspan(data_off);
    } else {
      if (l4.size() < 8) {
        out.errors.push_back(ParseError{index, "truncated UDP header"});
        continue;
      }
      src_port = detail::net16(l4, 0);
      dst_port = detail::net16(l4, 2);
      pkt.transport = Transport::UDP;
      payload = l4.subspan(8);
    }

    pkt.src = Endpoint{hosts.resolve(src_addr), src_addr, src_port};
    pkt.dst = Endpoint{hosts.resolve(dst_addr), dst_addr, dst_port};

    if (pkt.transport == Transport::TCP && !payload.empty() &&
        (src_port == modbus_port || dst_port == modbus_port))
      pkt.modbus = parse_modbus(payload, dst_port == modbus_port);

    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "pkt-%06llu",
                  static_cast<unsigned long long>(next_packet_no + 1));
    pkt.id = idbuf;

    if (auto v = validate_record(pkt)) {
      out.errors.push_back(ParseError{index, v->field + ": " + v->reason});
      continue;
    }
    ++next_packet_no;
    out.packets.push_back(std::move(pkt));
  }
  return out;
}

// --------------------------------------------------------------------------
// Writer
// --------------------------------------------------------------------------

struct WirePacket {
  Timestamp ts;
  std::string src_addr;
  std::string dst_addr;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Transport transport = Transport::TCP;
  std::vector<std::uint8_t> payload;
};

namespace detail {

inline std::array<std::uint8_t, 4> ipv4_from_string(const std::string& s) {
  std::array<std::uint8_t, 4> out{};
  unsigned a = 0, b = 0, c = 0, d = 0;
  if (std::sscanf(s.c_str(), "%u.%u.%u.%u", &a, &b, &c, &d) != 4 || a > 255 ||
      b > 255 || c > 255 || d > 255)
    throw std::invalid_argument("bad IPv4 address: " + s);
  out = {static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b),
         static_cast<std::uint8_t>(c), static_cast<std::uint8_t>(d)};
  return out;
}

inline void push_le32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back(x & 0xFF);
  v.push_back((x >> 8) & 0xFF);
  v.push_back((x >> 16) & 0xFF);
  v.push_back((x >> 24) & 0xFF);
}

inline void push_le16(std::vector<std::uint8_t>& v, std::uint16_t x) {
  v.push_back(x & 0xFF);
  v.push_back((x >> 8) & 0xFF);
}

inline void push_net16(std::vector<std::uint8_t>& v, std::uint16_t x) {
  v.push_back((x >> 8) & 0xFF);
  v.push_back(x & 0xFF);
}

inline std::uint16_t inet_checksum(std::span<const std::uint8_t> data,
                                   std::uint32_t seed = 0) {
  std::uint32_t sum = seed;
  for (std::size_t i = 0; i + 1 < data.size(); i += 2)
    sum += static_cast<std::uint32_t>((data[i] << 8) | data[i + 1]);
  if (data.size() % 2) sum += static_cast<std::uint32_t>(data.back() << 8);
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum);
}

}  // namespace detail

inline std::vector<std::uint8_t> capture_header() {
  std::vector<std::uint8_t> out;
  detail::push_le32(out, 0xA1B2C3D4);
  detail::push_le16(out, 2);   // version major
  detail::push_le16(out, 4);   // version minor
  detail::push_le32(out, 0);   // thiszone
  detail::push_le32(out, 0);   // sigfigs
  detail::push_le32(out, 65535);
  detail::push_le32(out, 1);   // Ethernet
  return out;
}

inline void append_packet(std::vector<std::uint8_t>& out, const WirePacket& p) {
  const auto src = detail::ipv4_from_string(p.src_addr);
  const auto dst = detail::ipv4_from_string(p.dst_addr);
  const bool tcp = p.transport == Transport::TCP;
  const std::size_t l4_len = (tcp ? 20 : 8) + p.payload.size();
  const std::size_t ip_len = 20 + l4_len;
  const std::size_t frame_len = 14 + ip_len;

  std::vector<std::uint8_t> frame;
  frame.reserve(frame_len);
  // Ethernet: locally administered MACs derived from the last address octet
  for (int i = 0; i < 2; ++i) {
    const auto& a = i == 0 ? dst : src;
    frame.insert(frame.end(), {0x02, 0x00, 0x00, 0x00, 0x00, a[3]});
  }
  detail::push_net16(frame, 0x0800);

  // IPv4, no options
  std::vector<std::uint8_t> ip;
  ip.push_back(0x45);
  ip.push_back(0);
  detail::push_net16(ip, static_cast<std::uint16_t>(ip_len));
  detail::push_net16(ip, 0);       // identification
  detail::push_net16(ip, 0x4000);  // don't fragment
  ip.push_back(64);                // ttl
  ip.push_back(tcp ? 6 : 17);
  detail::push_net16(ip, 0);       // checksum placeholder
  ip.insert(ip.end(), src.begin(), src.end());
  ip.insert(ip.end(), dst.begin(), dst.end());
  const std::uint16_t ip_ck = detail::inet_checksum(ip);
  ip[10] = ip_ck >> 8;
  ip[11] = ip_ck & 0xFF;

  std::vector<std::uint8_t> l4;
  if (tcp) {
    detail::push_net16(l4, p.src_port);
    detail::push_net16(l4, p.dst_port);
    detail::push_le32(l4, 0);  // seq (zeroed; reader ignores)
    detail::push_le32(l4, 0);  // ack
    l4.push_back(0x50);        // data offset 5
    l4.push_back(0x18);        // PSH|ACK
    detail::push_net16(l4, 1024);
    detail::push_net16(l4, 0);  // checksum placeholder
    detail::push_net16(l4, 0);  // urgent
    l4.insert(l4.end(), p.payload.begin(), p.payload.end());
  } else {
    detail::push_net16(l4, p.src_port);
    detail::push_net16(l4, p.dst_port);
    detail::push_net16(l4, static_cast<std::uint16_t>(l4_len));
    detail::push_net16(l4, 0);  // checksum placeholder
    l4.insert(l4.end(), p.payload.begin(), p.payload.end());
  }
  // pseudo-header seed: src + dst + proto + l4 length
  std::uint32_t seed = 0;
  seed += static_cast<std::uint32_t>((src[0] << 8) | src[1]);
  seed += static_cast<std::uint32_t>((src[2] << 8) | src[3]);
  seed += static_cast<std::uint32_t>((dst[0] << 8) | dst[1]);
  seed += static_cast<std::uint32_t>((dst[2] << 8) | dst[3]);
  seed += tcp ? 6 : 17;
  seed += static_cast<std::uint32_t>(l4_len);
  const std::uint16_t l4_ck = detail::inet_checksum(l4, seed);
  const std::size_t ck_off = tcp ? 16 : 6;
  l4[ck_off] = l4_ck >> 8;
  l4[ck_off + 1] = l4_ck & 0xFF;

  frame.insert(frame.end(), ip.begin(), ip.end());
  frame.insert(frame.end(), l4.begin(), l4.end());

  detail::push_le32(out, static_cast<std::uint32_t>(p.ts.us / 1000000ull));
  detail::push_le32(out, static_cast<std::uint32_t>(p.ts.us % 1000000ull));
  detail::push_le32(out, static_cast<std::uint32_t>(frame.size()));
  detail::push_le32(out, static_cast<std::uint32_t>(frame.size()));
  out.insert(out.end(), frame.begin(), frame.end());
}

}  // namespace triadcep
