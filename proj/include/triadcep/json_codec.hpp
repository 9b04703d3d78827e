#pragma once

#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "triadcep/core.hpp"

// JSON-lines ingest for cause/effect records and the address->host map,
// plus the canonical serializers the generator and report writer share.

namespace triadcep {

using ojson = nlohmann::ordered_json;

struct ParseError {
  std::size_t line_no = 0;
  std::string reason;

  bool operator==(const ParseError&) const = default;
};

// Address -> host identity. Explicit entries (--hosts) win over bindings
// learned from record fields; unmapped addresses fall back to the address
// string itself. One address never resolves to two host_ids within a run.
class HostMap {
 public:
  void set_explicit(const std::string& addr, const std::string& host_id) {
    explicit_[addr] = host_id;
  }

  // Learn (addr, host_id) from a record. Rejects a pair that contradicts an
  // earlier binding or an explicit entry.
  std::optional<InvariantViolation> bind(const std::string& addr,
                                         const std::string& host_id) {
    if (addr.empty() || host_id.empty()) return std::nullopt;
    if (auto it = explicit_.find(addr); it != explicit_.end()) {
      if (it->second != host_id)
        return InvariantViolation{"addr", "address " + addr + " is mapped to " +
                                              it->second + ", record says " + host_id};
      return std::nullopt;
    }
    auto [it, inserted] = learned_.emplace(addr, host_id);
    if (!inserted && it->second != host_id)
      return InvariantViolation{"addr", "address " + addr + " already bound to " +
                                            it->second + ", record says " + host_id};
    return std::nullopt;
  }

  std::string resolve(const std::string& addr) const {
    if (auto it = explicit_.find(addr); it != explicit_.end()) return it->second;
    if (auto it = learned_.find(addr); it != learned_.end()) return it->second;
    return addr;
  }

  bool operator==(const HostMap&) const = default;

 private:
  std::map<std::string, std::string> explicit_;
  std::map<std::string, std::string> learned_;
};

namespace detail {

inline std::string need_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw std::runtime_error(std::string(key) + ": missing");
  if (!j[key].is_string()) throw std::runtime_error(std::string(key) + ": not a string");
  return j[key].get<std::string>();
}

inline std::uint64_t need_u64(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw std::runtime_error(std::string(key) + ": missing");
  const auto& v = j[key];
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<std::int64_t>() < 0))
    throw std::runtime_error(std::string(key) + ": not a non-negative integer");
  return v.get<std::uint64_t>();
}

inline std::uint16_t need_port(const nlohmann::json& j, const char* key) {
  auto v = need_u64(j, key);
  if (v > 65535) throw std::runtime_error(std::string(key) + ": port out of range");
  return static_cast<std::uint16_t>(v);
}

inline std::map<std::string, std::string> need_payload(const nlohmann::json& j,
                                                       const char* key) {
  if (!j.contains(key)) throw std::runtime_error(std::string(key) + ": missing");
  if (!j[key].is_object()) throw std::runtime_error(std::string(key) + ": not an object");
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : j[key].items()) {
    if (!v.is_string())
      throw std::runtime_error(std::string(key) + "." + k + ": not a string");
    out[k] = v.get<std::string>();
  }
  return out;
}

}  // namespace detail

inline CauseRecord cause_from_json(const nlohmann::json& j) {
  CauseRecord r;
  r.id = detail::need_string(j, "id");
  r.timestamp = Timestamp{detail::need_u64(j, "ts_us")};
  r.origin = Endpoint{detail::need_string(j, "origin_host"),
                      detail::need_string(j, "origin_addr"),
                      detail::need_port(j, "origin_port")};
  auto kind = parse_cause_kind(detail::need_string(j, "kind"));
  if (!kind) throw std::runtime_error("kind: unknown cause kind");
  r.kind = *kind;
  r.subject = Endpoint{detail::need_string(j, "subject_host"),
                       detail::need_string(j, "subject_addr"),
                       detail::need_port(j, "subject_port")};
  r.payload = detail::need_payload(j, "payload");
  return r;
}

inline EffectRecord effect_from_json(const nlohmann::json& j) {
  EffectRecord r;
  r.id = detail::need_string(j, "id");
  r.timestamp = Timestamp{detail::need_u64(j, "ts_us")};
  r.host = Endpoint{detail::need_string(j, "host"), detail::need_string(j, "addr"),
                    detail::need_port(j, "port")};
  auto kind = parse_effect_kind(detail::need_string(j, "kind"));
  if (!kind) throw std::runtime_error("kind: unknown effect kind");
  r.kind = *kind;
  auto sev = parse_severity(detail::need_string(j, "severity"));
  if (!sev) throw std::runtime_error("severity: unknown severity");
  r.severity = *sev;
  r.payload = detail::need_payload(j, "payload");
  return r;
}

inline ojson cause_to_json(const CauseRecord& r) {
  ojson j;
  j["type"] = "cause";
  j["id"] = r.id;
  j["ts_us"] = r.timestamp.us;
  j["origin_host"] = r.origin.host_id;
  j["origin_addr"] = r.origin.address;
  j["origin_port"] = r.origin.port;
  j["kind"] = to_string(r.kind);
  j["subject_host"] = r.subject.host_id;
  j["subject_addr"] = r.subject.address;
  j["subject_port"] = r.subject.port;
  j["payload"] = ojson::object();
  for (const auto& [k, v] : r.payload) j["payload"][k] = v;
  return j;
}

inline ojson effect_to_json(const EffectRecord& r) {
  ojson j;
  j["type"] = "effect";
  j["id"] = r.id;
  j["ts_us"] = r.timestamp.us;
  j["host"] = r.host.host_id;
  j["addr"] = r.host.address;
  j["port"] = r.host.port;
  j["kind"] = to_string(r.kind);
  j["severity"] = to_string(r.severity);
  j["payload"] = ojson::object();
  for (const auto& [k, v] : r.payload) j["payload"][k] = v;
  return j;
}

inline std::string cause_line(const CauseRecord& r) { return cause_to_json(r).dump(); }
inline std::string effect_line(const EffectRecord& r) { return effect_to_json(r).dump(); }

struct RecordStream {
  std::vector<CauseRecord> causes;
  std::vector<EffectRecord> effects;
  std::vector<ParseError> errors;
};

// One JSON object per line, "type" picks the schema. Bad lines turn into
// ParseErrors; neighbors are unaffected. Blank lines are skipped.
inline RecordStream parse_record_stream(std::istream& in) {
  RecordStream out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw std::runtime_error("line is not a JSON object");
      auto type = detail::need_string(j, "type");
      if (type == "cause") {
        auto r = cause_from_json(j);
        if (auto v = validate_record(r))
          throw std::runtime_error(v->field + ": " + v->reason);
        out.causes.push_back(std::move(r));
      } else if (type == "effect") {
        auto r = effect_from_json(j);
        if (auto v = validate_record(r))
          throw std::runtime_error(v->field + ": " + v->reason);
        out.effects.push_back(std::move(r));
      } else {
        throw std::runtime_error("type: must be \"cause\" or \"effect\"");
      }
    } catch (const std::exception& e) {
      out.errors.push_back(ParseError{line_no, e.what()});
    }
  }
  return out;
}

inline RecordStream parse_record_stream(const std::string& text) {
  std::istringstream in(text);
  return parse_record_stream(in);
}

// Host-map lines: {"addr": "10.0.0.1", "host_id": "tech-0"}.
inline std::vector<ParseError> parse_hosts_stream(std::istream& in, HostMap& map) {
  std::vector<ParseError> errors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw std::runtime_error("line is not a JSON object");
      auto addr = detail::need_string(j, "addr");
      auto host = detail::need_string(j, "host_id");
      if (addr.empty()) throw std::runtime_error("addr: must be non-empty");
      if (host.empty()) throw std::runtime_error("host_id: must be non-empty");
      map.set_explicit(addr, host);
    } catch (const std::exception& e) {
      errors.push_back(ParseError{line_no, e.what()});
    }
  }
  return errors;
}

inline std::string hosts_line(const std::string& addr, const std::string& host_id) {
  ojson j;
  j["addr"] = addr;
  j["host_id"] = host_id;
  return j.dump();
}

}  // namespace triadcep
