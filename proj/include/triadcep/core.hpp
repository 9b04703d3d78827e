#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

// Core data model: the three-column (cause / traffic / effect), three-level
// (record / trace / graph) grid every other component operates on.

namespace triadcep {

// Microseconds since the Unix epoch. Integer on purpose: equality and
// ordering stay exact.
struct Timestamp {
  std::uint64_t us = 0;

  auto operator<=>(const Timestamp&) const = default;
};

// Signed duration in microseconds.
inline std::int64_t micros_between(Timestamp from, Timestamp to) {
  return static_cast<std::int64_t>(to.us) - static_cast<std::int64_t>(from.us);
}

inline Timestamp shifted(Timestamp t, std::int64_t delta_us) {
  return Timestamp{t.us + static_cast<std::uint64_t>(delta_us)};
}

// host_id is the stable machine identity; the IPv4 address is what the wire
// shows. The two are distinct because relayed traffic can hide the machine
// behind an address.
struct Endpoint {
  std::string host_id;
  std::string address;  // dotted quad
  std::uint16_t port = 0;

  auto operator<=>(const Endpoint&) const = default;
};

enum class CauseKind { ConfigEntry, TicketIssued, TicketAccepted, Parameterization };
enum class EffectKind { LogEntry, SyscallEntry, RegisterSetting, MachineSetting };
enum class Severity { Info, Warning, Error };
enum class Transport { TCP, UDP };
enum class Completeness { Full, MissingCause, MissingEffect, TrafficOnly };
enum class NodeRole { Cause, Effect, Both, TrafficOnly };

enum class RuleId {
  R1_TicketWithoutError,
  R2_SettingDrift,
  R3_ParameterizationWithoutCause,
  R4_DegreeOutlier,
  R5_ErrorRateOutlier,
  R6_RareSetting,
};

enum class FindingSeverity { Notice, Suspicious, Alert };

inline const char* to_string(CauseKind k) {
  switch (k) {
    case CauseKind::ConfigEntry: return "ConfigEntry";
    case CauseKind::TicketIssued: return "TicketIssued";
    case CauseKind::TicketAccepted: return "TicketAccepted";
    case CauseKind::Parameterization: return "Parameterization";
  }
  return "?";
}

inline const char* to_string(EffectKind k) {
  switch (k) {
    case EffectKind::LogEntry: return "LogEntry";
    case EffectKind::SyscallEntry: return "SyscallEntry";
    case EffectKind::RegisterSetting: return "RegisterSetting";
    case EffectKind::MachineSetting: return "MachineSetting";
  }
  return "?";
}

inline const char* to_string(Severity s) {
  switch (s) {
    case Severity::Info: return "Info";
    case Severity::Warning: return "Warning";
    case Severity::Error: return "Error";
  }
  return "?";
}

inline const char* to_string(Transport t) {
  return t == Transport::TCP ? "TCP" : "UDP";
}

inline const char* to_string(Completeness c) {
  switch (c) {
    case Completeness::Full: return "Full";
    case Completeness::MissingCause: return "MissingCause";
    case Completeness::MissingEffect: return "MissingEffect";
    case Completeness::TrafficOnly: return "TrafficOnly";
  }
  return "?";
}

inline const char* to_string(NodeRole r) {
  switch (r) {
    case NodeRole::Cause: return "Cause";
    case NodeRole::Effect: return "Effect";
    case NodeRole::Both: return "Both";
    case NodeRole::TrafficOnly: return "TrafficOnly";
  }
  return "?";
}

inline const char* to_string(RuleId r) {
  switch (r) {
    case RuleId::R1_TicketWithoutError: return "R1_TicketWithoutError";
    case RuleId::R2_SettingDrift: return "R2_SettingDrift";
    case RuleId::R3_ParameterizationWithoutCause: return "R3_ParameterizationWithoutCause";
    case RuleId::R4_DegreeOutlier: return "R4_DegreeOutlier";
    case RuleId::R5_ErrorRateOutlier: return "R5_ErrorRateOutlier";
    case RuleId::R6_RareSetting: return "R6_RareSetting";
  }
  return "?";
}

inline const char* to_string(FindingSeverity s) {
  switch (s) {
    case FindingSeverity::Notice: return "Notice";
    case FindingSeverity::Suspicious: return "Suspicious";
    case FindingSeverity::Alert: return "Alert";
  }
  return "?";
}

inline std::optional<CauseKind> parse_cause_kind(const std::string& s) {
  if (s == "ConfigEntry") return CauseKind::ConfigEntry;
  if (s == "TicketIssued") return CauseKind::TicketIssued;
  if (s == "TicketAccepted") return CauseKind::TicketAccepted;
  if (s == "Parameterization") return CauseKind::Parameterization;
  return std::nullopt;
}

inline std::optional<EffectKind> parse_effect_kind(const std::string& s) {
  if (s == "LogEntry") return EffectKind::LogEntry;
  if (s == "SyscallEntry") return EffectKind::SyscallEntry;
  if (s == "RegisterSetting") return EffectKind::RegisterSetting;
  if (s == "MachineSetting") return EffectKind::MachineSetting;
  return std::nullopt;
}

inline std::optional<Severity> parse_severity(const std::string& s) {
  if (s == "Info") return Severity::Info;
  if (s == "Warning") return Severity::Warning;
  if (s == "Error") return Severity::Error;
  return std::nullopt;
}

inline std::optional<Transport> parse_transport(const std::string& s) {
  if (s == "TCP") return Transport::TCP;
  if (s == "UDP") return Transport::UDP;
  return std::nullopt;
}

inline std::optional<Completeness> parse_completeness(const std::string& s) {
  if (s == "Full") return Completeness::Full;
  if (s == "MissingCause") return Completeness::MissingCause;
  if (s == "MissingEffect") return Completeness::MissingEffect;
  if (s == "TrafficOnly") return Completeness::TrafficOnly;
  return std::nullopt;
}

inline std::optional<NodeRole> parse_node_role(const std::string& s) {
  if (s == "Cause") return NodeRole::Cause;
  if (s == "Effect") return NodeRole::Effect;
  if (s == "Both") return NodeRole::Both;
  if (s == "TrafficOnly") return NodeRole::TrafficOnly;
  return std::nullopt;
}

inline std::optional<RuleId> parse_rule_id(const std::string& s) {
  if (s == "R1_TicketWithoutError") return RuleId::R1_TicketWithoutError;
  if (s == "R2_SettingDrift") return RuleId::R2_SettingDrift;
  if (s == "R3_ParameterizationWithoutCause") return RuleId::R3_ParameterizationWithoutCause;
  if (s == "R4_DegreeOutlier") return RuleId::R4_DegreeOutlier;
  if (s == "R5_ErrorRateOutlier") return RuleId::R5_ErrorRateOutlier;
  if (s == "R6_RareSetting") return RuleId::R6_RareSetting;
  return std::nullopt;
}

inline std::optional<FindingSeverity> parse_finding_severity(const std::string& s) {
  if (s == "Notice") return FindingSeverity::Notice;
  if (s == "Suspicious") return FindingSeverity::Suspicious;
  if (s == "Alert") return FindingSeverity::Alert;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Level 1 records
// ---------------------------------------------------------------------------

// Cause column, level 1: the command or action that triggers traffic and a
// remote reaction. `subject` is the machine the action targets.
struct CauseRecord {
  std::string id;
  Timestamp timestamp;
  Endpoint origin;
  CauseKind kind = CauseKind::ConfigEntry;
  Endpoint subject;
  std::map<std::string, std::string> payload;

  bool operator==(const CauseRecord&) const = default;
};

// Known Modbus function codes. Anything else is kept as an opaque frame:
// code recorded, values empty.
enum class ModbusFunction : std::uint8_t {
  ReadHoldingRegisters = 3,
  WriteSingleRegister = 6,
  WriteMultipleRegisters = 16,
};

inline bool modbus_function_known(std::uint8_t code) {
  return code == 3 || code == 6 || code == 16;
}

inline bool modbus_is_write(std::uint8_t code) {
  return code == 6 || code == 16;
}

struct ModbusFrame {
  std::uint16_t transaction_id = 0;
  std::uint8_t unit_id = 0;
  std::uint8_t function_code = 0;  // raw code; see ModbusFunction for the decoded subset
  std::uint16_t register_address = 0;
  std::vector<std::uint16_t> values;
  bool is_response = false;

  bool operator==(const ModbusFrame&) const = default;
};

// Traffic column, level 1.
struct PacketRecord {
  std::string id;
  Timestamp timestamp;
  Endpoint src;
  Endpoint dst;
  Transport transport = Transport::TCP;
  std::uint64_t length_bytes = 0;
  std::optional<ModbusFrame> modbus;

  bool operator==(const PacketRecord&) const = default;
};

// Effect column, level 1: what happened on the remote machine.
struct EffectRecord {
  std::string id;
  Timestamp timestamp;
  Endpoint host;
  EffectKind kind = EffectKind::LogEntry;
  Severity severity = Severity::Info;
  std::map<std::string, std::string> payload;

  bool operator==(const EffectRecord&) const = default;
};

// One correlated (cause, traffic, effect) binding. Member records are
// referenced by id; the traffic burst is never empty.
struct TriadEvent {
  std::string id;
  std::optional<std::string> cause_id;
  std::vector<std::string> traffic_ids;
  std::optional<std::string> effect_id;
  Timestamp window_start;
  Timestamp window_end;
  Completeness completeness = Completeness::TrafficOnly;

  bool operator==(const TriadEvent&) const = default;
};

// ---------------------------------------------------------------------------
// Level 2 aggregates
// ---------------------------------------------------------------------------

struct FlowKey {
  Endpoint src;
  Endpoint dst;
  Transport transport = Transport::TCP;

  auto operator<=>(const FlowKey&) const = default;
};

// Traffic column, level 2. Keeps member packet ids so the aggregate can be
// exploded back to the exact record set.
struct Flow {
  FlowKey key;
  Timestamp first_seen;
  Timestamp last_seen;
  std::uint64_t packet_count = 0;
  std::uint64_t byte_count = 0;
  std::map<std::uint8_t, std::uint64_t> modbus_functions;  // function code -> frames seen
  std::vector<std::string> packet_ids;

  bool operator==(const Flow&) const = default;
};

// Cause column, level 2: everything that targeted one machine, in time
// order. Ticket history plus the latest intended parameter values.
struct CauseTrace {
  Endpoint subject;
  std::vector<std::string> entries;  // CauseRecord ids, time-ordered
  std::uint64_t ticket_count = 0;
  std::map<std::string, std::string> last_settings;

  bool operator==(const CauseTrace&) const = default;
};

// Effect column, level 2: per-host log trace and setting history. Each
// history element is the full settings snapshot after one setting record.
struct EffectTrace {
  Endpoint host;
  std::vector<std::string> entries;  // EffectRecord ids, time-ordered
  std::uint64_t error_count = 0;
  std::uint64_t warning_count = 0;
  std::vector<std::pair<Timestamp, std::map<std::string, std::string>>> setting_history;

  bool operator==(const EffectTrace&) const = default;
};

// ---------------------------------------------------------------------------
// Level 3 graph
// ---------------------------------------------------------------------------

struct CauseSummary {
  std::map<CauseKind, std::uint64_t> kind_counts;
  std::uint64_t ticket_count = 0;

  bool operator==(const CauseSummary&) const = default;
};

struct EffectSummary {
  std::map<Severity, std::uint64_t> severity_counts;
  std::uint64_t distinct_setting_count = 0;

  bool operator==(const EffectSummary&) const = default;
};

// Counts only. Whatever the number of level-1 records behind a node, its
// summary stays the same handful of integers.
struct NodeSummary {
  std::string host_id;
  std::set<NodeRole> roles;
  CauseSummary cause_summary;
  EffectSummary effect_summary;

  bool operator==(const NodeSummary&) const = default;
};

struct EdgeSummary {
  std::uint64_t flow_count = 0;
  std::uint64_t packet_count = 0;
  std::uint64_t byte_count = 0;
  Timestamp first_seen;
  Timestamp last_seen;

  bool operator==(const EdgeSummary&) const = default;
};

struct TopologyGraph {
  std::map<std::string, NodeSummary> nodes;
  std::map<std::pair<std::string, std::string>, EdgeSummary> edges;

  bool operator==(const TopologyGraph&) const = default;
};

// ---------------------------------------------------------------------------
// Findings
// ---------------------------------------------------------------------------

struct Finding {
  RuleId rule_id = RuleId::R1_TicketWithoutError;
  FindingSeverity severity = FindingSeverity::Notice;
  std::string subject;                // host_id or "src->dst" edge key
  std::vector<std::string> evidence;  // record or aggregate ids, never empty
  std::string message;

  bool operator==(const Finding&) const = default;
};

// Alert > Suspicious > Notice.
inline int severity_rank(FindingSeverity s) {
  switch (s) {
    case FindingSeverity::Notice: return 0;
    case FindingSeverity::Suspicious: return 1;
    case FindingSeverity::Alert: return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct InvariantViolation {
  std::string field;
  std::string reason;
};

inline std::optional<InvariantViolation> validate_endpoint(const Endpoint& e,
                                                           const std::string& field) {
  if (e.host_id.empty())
    return InvariantViolation{field, "host_id must be non-empty"};
  return std::nullopt;
}

inline std::optional<InvariantViolation> validate_record(const CauseRecord& r) {
  if (r.id.empty()) return InvariantViolation{"id", "must be non-empty"};
  if (auto v = validate_endpoint(r.origin, "origin")) return v;
  if (auto v = validate_endpoint(r.subject, "subject")) return v;
  if ((r.kind == CauseKind::ConfigEntry || r.kind == CauseKind::Parameterization) &&
      r.payload.empty())
    return InvariantViolation{"payload", std::string("must be non-empty for kind=") +
                                             to_string(r.kind)};
  return std::nullopt;
}

inline std::optional<InvariantViolation> validate_frame(const ModbusFrame& f) {
  if (f.function_code == 6 && f.values.size() != 1)
    return InvariantViolation{"values", "WriteSingleRegister carries exactly one value"};
  if (f.function_code == 16 && !f.is_response &&
      (f.values.empty() || f.values.size() > 123))
    return InvariantViolation{"values", "WriteMultipleRegisters carries 1..123 values"};
  if (!modbus_function_known(f.function_code) && !f.values.empty())
    return InvariantViolation{"values", "opaque frames carry no decoded values"};
  return std::nullopt;
}

inline std::optional<InvariantViolation> validate_record(const PacketRecord& r) {
  if (r.id.empty()) return InvariantViolation{"id", "must be non-empty"};
  if (auto v = validate_endpoint(r.src, "src")) return v;
  if (auto v = validate_endpoint(r.dst, "dst")) return v;
  if (r.src == r.dst)
    return InvariantViolation{"dst", "src and dst must differ (no self-loop packets)"};
  if (r.length_bytes < 1)
    return InvariantViolation{"length_bytes", "must be >= 1"};
  if (r.modbus)
    if (auto v = validate_frame(*r.modbus)) return v;
  return std::nullopt;
}

inline std::optional<InvariantViolation> validate_record(const EffectRecord& r) {
  if (r.id.empty()) return InvariantViolation{"id", "must be non-empty"};
  if (auto v = validate_endpoint(r.host, "host")) return v;
  if (r.kind == EffectKind::RegisterSetting &&
      (!r.payload.count("register") || !r.payload.count("value")))
    return InvariantViolation{"payload",
                              "RegisterSetting needs \"register\" and \"value\" keys"};
  return std::nullopt;
}

}  // namespace triadcep
