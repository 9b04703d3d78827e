#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "triadcep/core.hpp"

// Modbus/TCP decoding: MBAP header + the PDU subset the rules care about
// (read holding registers, single/multiple register writes). Anything else
// is kept as an opaque frame. A structurally broken payload yields nullopt —
// the packet survives, just without a decoded frame.

namespace triadcep {

inline constexpr std::uint16_t modbus_port = 502;
inline constexpr std::size_t mbap_size = 7;

namespace detail {

inline std::uint16_t be16(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
}

}  // namespace detail

// `to_server` distinguishes request from response; the caller knows which
// side owns port 502.
inline std::optional<ModbusFrame> parse_modbus(std::span<const std::uint8_t> payload,
                                               bool to_server) {
  if (payload.size() < mbap_size + 1) return std::nullopt;
  const std::uint16_t protocol_id = detail::be16(payload, 2);
  if (protocol_id != 0) return std::nullopt;
  const std::uint16_t length = detail::be16(payload, 4);
  // length counts unit id + PDU
  if (length < 2 || static_cast<std::size_t>(length) + 6 != payload.size())
    return std::nullopt;

  ModbusFrame f;
  f.transaction_id = detail::be16(payload, 0);
  f.unit_id = payload[6];
  f.function_code = payload[7];
  f.is_response = !to_server;

  auto pdu = payload.subspan(8);  // bytes after the function code

  switch (f.function_code) {
    case 3:
      if (!f.is_response) {
        if (pdu.size() != 4) return std::nullopt;
        f.register_address = detail::be16(pdu, 0);
      } else {
        if (pdu.size() < 1) return std::nullopt;
        const std::uint8_t byte_count = pdu[0];
        if (byte_count % 2 != 0 || pdu.size() != 1u + byte_count) return std::nullopt;
        for (std::size_t i = 0; i < byte_count; i += 2)
          f.values.push_back(detail::be16(pdu, 1 + i));
      }
      break;
    case 6:
      // request and response share the layout (the response echoes)
      if (pdu.size() != 4) return std::nullopt;
      f.register_address = detail::be16(pdu, 0);
      f.values.push_back(detail::be16(pdu, 2));
      break;
    case 16:
      if (!f.is_response) {
        if (pdu.size() < 5) return std::nullopt;
        f.register_address = detail::be16(pdu, 0);
        const std::uint16_t count = detail::be16(pdu, 2);
        const std::uint8_t byte_count = pdu[4];
        if (count < 1 || count > 123 || byte_count != count * 2 ||
            pdu.size() != 5u + byte_count)
          return std::nullopt;
        for (std::uint16_t i = 0; i < count; ++i)
          f.values.push_back(detail::be16(pdu, 5 + 2u * i));
      } else {
        if (pdu.size() != 4) return std::nullopt;
        f.register_address = detail::be16(pdu, 0);
      }
      break;
    default:
      break;  // opaque: code recorded, values stay empty
  }
  return f;
}

// Encoders, used by the scenario generator and the golden-decode tests.

namespace detail {

inline void push_be16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_mbap(std::uint16_t transaction_id,
                                             std::uint8_t unit_id,
                                             std::span<const std::uint8_t> pdu) {
  std::vector<std::uint8_t> out;
  detail::push_be16(out, transaction_id);
  detail::push_be16(out, 0);  // protocol id
  detail::push_be16(out, static_cast<std::uint16_t>(pdu.size() + 1));
  out.push_back(unit_id);
  out.insert(out.end(), pdu.begin(), pdu.end());
  return out;
}

inline std::vector<std::uint8_t> encode_read_request(std::uint16_t tid, std::uint8_t uid,
                                                     std::uint16_t addr,
                                                     std::uint16_t count) {
  std::vector<std::uint8_t> pdu{3};
  detail::push_be16(pdu, addr);
  detail::push_be16(pdu, count);
  return encode_mbap(tid, uid, pdu);
}

inline std::vector<std::uint8_t> encode_read_response(
    std::uint16_t tid, std::uint8_t uid, std::span<const std::uint16_t> values) {
  std::vector<std::uint8_t> pdu{3};
  pdu.push_back(static_cast<std::uint8_t>(values.size() * 2));
  for (auto v : values) detail::push_be16(pdu, v);
  return encode_mbap(tid, uid, pdu);
}

inline std::vector<std::uint8_t> encode_write_single(std::uint16_t tid, std::uint8_t uid,
                                                     std::uint16_t addr,
                                                     std::uint16_t value) {
  std::vector<std::uint8_t> pdu{6};
  detail::push_be16(pdu, addr);
  detail::push_be16(pdu, value);
  return encode_mbap(tid, uid, pdu);  // responses echo this layout
}

inline std::vector<std::uint8_t> encode_write_multiple_request(
    std::uint16_t tid, std::uint8_t uid, std::uint16_t addr,
    std::span<const std::uint16_t> values) {
  std::vector<std::uint8_t> pdu{16};
  detail::push_be16(pdu, addr);
  detail::push_be16(pdu, static_cast<std::uint16_t>(values.size()));
  pdu.push_back(static_cast<std::uint8_t>(values.size() * 2));
  for (auto v : values) detail::push_be16(pdu, v);
  return encode_mbap(tid, uid, pdu);
}

inline std::vector<std::uint8_t> encode_write_multiple_response(std::uint16_t tid,
                                                                std::uint8_t uid,
                                                                std::uint16_t addr,
                                                                std::uint16_t count) {
  std::vector<std::uint8_t> pdu{16};
  detail::push_be16(pdu, addr);
  detail::push_be16(pdu, count);
  return encode_mbap(tid, uid, pdu);
}

}  // namespace triadcep
