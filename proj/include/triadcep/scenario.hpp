#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "triadcep/core.hpp"
#include "triadcep/json_codec.hpp"
#include "triadcep/modbus.hpp"
#include "triadcep/pcap.hpp"

// Deterministic corpus generator: two profiles (remote maintenance,
// PLC fieldbus) with ground-truth manifests and injectable anomalies, one
// anomaly kind per rule. Same seed and spec always produce byte-identical
// output, so corpora double as test oracles.

namespace triadcep {

// splitmix64. The exact update, so corpora can be regenerated bit-for-bit
// by any implementation:
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
// bounded(n) reduces by plain modulo; the bias is irrelevant at these range
// sizes and keeps the reduction trivially portable.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t bounded(std::uint64_t n) { return next() % n; }

  // inclusive range
  std::int64_t in_range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(bounded(static_cast<std::uint64_t>(hi - lo + 1)));
  }
};

enum class Profile { RemoteMaintenance, PlcFieldbus };

inline const char* to_string(Profile p) {
  return p == Profile::RemoteMaintenance ? "maintenance" : "plc";
}

inline std::optional<Profile> parse_profile(const std::string& s) {
  if (s == "maintenance") return Profile::RemoteMaintenance;
  if (s == "plc") return Profile::PlcFieldbus;
  return std::nullopt;
}

enum class AnomalyKind {
  InconsistentTicket,   // -> R1
  Misconfiguration,     // -> R2
  SpoofedWrite,         // -> R3
  LowDegreeIcs,         // -> R4
  HighErrorHost,        // -> R5
  UniqueSetting,        // -> R6
};

inline const char* to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::InconsistentTicket: return "InconsistentTicket";
    case AnomalyKind::Misconfiguration: return "Misconfiguration";
    case AnomalyKind::SpoofedWrite: return "SpoofedWrite";
    case AnomalyKind::LowDegreeIcs: return "LowDegreeIcs";
    case AnomalyKind::HighErrorHost: return "HighErrorHost";
    case AnomalyKind::UniqueSetting: return "UniqueSetting";
  }
  return "?";
}

inline std::optional<AnomalyKind> parse_anomaly_kind(const std::string& s) {
  if (s == "InconsistentTicket") return AnomalyKind::InconsistentTicket;
  if (s == "Misconfiguration") return AnomalyKind::Misconfiguration;
  if (s == "SpoofedWrite") return AnomalyKind::SpoofedWrite;
  if (s == "LowDegreeIcs") return AnomalyKind::LowDegreeIcs;
  if (s == "HighErrorHost") return AnomalyKind::HighErrorHost;
  if (s == "UniqueSetting") return AnomalyKind::UniqueSetting;
  return std::nullopt;
}

inline RuleId rule_for(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::InconsistentTicket: return RuleId::R1_TicketWithoutError;
    case AnomalyKind::Misconfiguration: return RuleId::R2_SettingDrift;
    case AnomalyKind::SpoofedWrite: return RuleId::R3_ParameterizationWithoutCause;
    case AnomalyKind::LowDegreeIcs: return RuleId::R4_DegreeOutlier;
    case AnomalyKind::HighErrorHost: return RuleId::R5_ErrorRateOutlier;
    case AnomalyKind::UniqueSetting: return RuleId::R6_RareSetting;
  }
  return RuleId::R1_TicketWithoutError;
}

struct AnomalySpec {
  AnomalyKind kind = AnomalyKind::InconsistentTicket;
  // maintenance: machine index (1-based). plc: PLC index for SpoofedWrite/
  // UniqueSetting, controller index for LowDegreeIcs (0-based).
  std::uint32_t target = 0;
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  Profile profile = Profile::RemoteMaintenance;
  std::uint32_t host_count = 5;
  std::uint32_t unit_count = 12;  // maintenance sessions or register writes
  std::vector<AnomalySpec> injected;
};

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Corpus {
  std::vector<std::string> cause_lines;
  std::vector<std::string> effect_lines;
  std::vector<std::uint8_t> capture;
  std::vector<std::string> hosts_lines;
  ojson manifest;
};

namespace gen_detail {

inline constexpr std::uint64_t base_ts_us = 1'600'000'000'000'000ull;
inline constexpr std::size_t tcp_overhead = 54;  // eth + ip + tcp, no options

inline std::string seq_id(const char* prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%06zu", prefix, n);
  return buf;
}

struct HostDef {
  std::string host_id;
  std::string addr;
};

struct EdgeStat {
  std::uint64_t flows = 0;
  std::uint64_t packets = 0;
  std::uint64_t bytes = 0;
};

// Everything generated before serialization, so injections can edit records
// in place without disturbing ids.
struct Build {
  std::vector<CauseRecord> causes;
  std::vector<EffectRecord> effects;
  std::set<std::size_t> removed_effects;
  std::vector<WirePacket> packets;
  std::map<std::pair<std::string, std::string>, EdgeStat> edges;
  std::uint64_t bursts = 0;
  std::uint32_t next_eph = 0;

  std::string add_cause(CauseRecord c) {
    c.id = seq_id("c", causes.size() + 1);
    causes.push_back(std::move(c));
    return causes.back().id;
  }

  std::string add_effect(EffectRecord e) {
    e.id = seq_id("e", effects.size() + 1);
    effects.push_back(std::move(e));
    return effects.back().id;
  }

  std::string add_packet(const HostDef& src, const HostDef& dst, WirePacket p) {
    p.src_addr = src.addr;
    p.dst_addr = dst.addr;
    auto& edge = edges[{src.host_id, dst.host_id}];
    ++edge.packets;
    edge.bytes += tcp_overhead + p.payload.size();
    packets.push_back(std::move(p));
    return seq_id("pkt", packets.size());
  }

  std::uint16_t fresh_port() {
    return static_cast<std::uint16_t>(49152 + (next_eph++ % 16383));
  }

  void count_burst(const HostDef& src, const HostDef& dst) {
    ++bursts;
    ++edges[{src.host_id, dst.host_id}].flows;
  }
};

inline std::vector<std::uint8_t> filler_payload(std::size_t n, std::size_t salt) {
  std::vector<std::uint8_t> out(n);
  for (std::size_t j = 0; j < n; ++j)
    out[j] = static_cast<std::uint8_t>((salt * 31 + j * 7) & 0xFF);
  return out;
}

template <typename Injection>
Corpus finish(const ScenarioSpec& spec, Build& b, const std::vector<HostDef>& hosts,
              const std::vector<Injection>& applied);

}  // namespace gen_detail

inline std::optional<AnomalyKind> anomaly_for_profile_check(Profile p, AnomalyKind k) {
  const bool maintenance = k == AnomalyKind::InconsistentTicket ||
                           k == AnomalyKind::Misconfiguration ||
                           k == AnomalyKind::HighErrorHost;
  if (maintenance != (p == Profile::RemoteMaintenance)) return k;
  return std::nullopt;
}

Corpus generate(const ScenarioSpec& spec);

namespace gen_detail {

// --------------------------------------------------------------------------
// Remote-maintenance profile: monitor polls a machine, its owner files a
// ticket, a technician accepts, works over the maintenance port, and the
// machine reports its new settings. Four bursts per session, one of four
// effects is an Error — a uniform error rate across machines.
// --------------------------------------------------------------------------

inline Corpus generate_maintenance(const ScenarioSpec& spec) {
  const std::uint32_t machines = spec.host_count - 1;
  const std::uint32_t sessions = spec.unit_count;
  // rounds rotate between one and two parameter keys; two keys only when
  // every machine will see both, which keeps every (key, value) pair on at
  // least two machines in a clean corpus
  const std::uint32_t key_rounds = sessions >= 2 * machines ? 2 : 1;

  std::optional<std::uint32_t> drop_malfunction_of;   // machine index
  std::optional<std::uint32_t> misconfigure;          // machine index
  std::optional<std::uint32_t> error_flood;           // machine index
  for (const auto& a : spec.injected) {
    if (a.kind == AnomalyKind::InconsistentTicket) drop_malfunction_of = a.target;
    if (a.kind == AnomalyKind::Misconfiguration) misconfigure = a.target;
    if (a.kind == AnomalyKind::HighErrorHost) error_flood = a.target;
  }

  HostDef tech{"tech-0", "10.0.0.1"};
  HostDef monitor{"monitor-0", "10.0.0.200"};
  HostDef ticketing{"ticketing-0", "10.0.0.250"};
  std::vector<HostDef> machine_defs;
  for (std::uint32_t m = 1; m <= machines; ++m)
    machine_defs.push_back(HostDef{"machine-" + std::to_string(m),
                                   "10.0.0." + std::to_string(1 + m)});

  SplitMix64 rng(spec.seed);
  Build b;

  struct Injection {
    AnomalyKind kind;
    std::string target_host;
    std::vector<std::string> record_ids;
  };
  std::vector<Injection> applied;
  std::optional<Injection> inj_ticket, inj_misconfig, inj_errors;
  if (drop_malfunction_of)
    inj_ticket = Injection{AnomalyKind::InconsistentTicket,
                           machine_defs[*drop_malfunction_of - 1].host_id,
                           {}};
  if (misconfigure)
    inj_misconfig = Injection{AnomalyKind::Misconfiguration,
                              machine_defs[*misconfigure - 1].host_id,
                              {}};
  if (error_flood)
    inj_errors = Injection{AnomalyKind::HighErrorHost,
                           machine_defs[*error_flood - 1].host_id,
                           {}};

  auto burst = [&](const HostDef& src, const HostDef& dst, std::uint16_t dst_port,
                   Timestamp start) {
    const std::uint16_t sport = b.fresh_port();
    b.count_burst(src, dst);
    const std::size_t n = 2 + rng.bounded(3);
    Timestamp t = start;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) t = shifted(t, rng.in_range(1'000, 50'000));
      WirePacket p;
      p.ts = t;
      p.src_port = sport;
      p.dst_port = dst_port;
      p.transport = Transport::TCP;
      p.payload = filler_payload(16 + rng.bounded(113), b.packets.size() + 1);
      b.add_packet(src, dst, p);
    }
    return t;  // last packet timestamp
  };

  for (std::uint32_t s = 0; s < sessions; ++s) {
    const std::uint32_t m = s % machines;            // 0-based machine slot
    const HostDef& machine = machine_defs[m];
    const std::uint32_t round = s / machines;
    const std::string param_key = "param-" + std::to_string(round % key_rounds);
    const std::string param_value = "level-" + std::to_string(round % key_rounds);
    const bool first_session_of_target_1 =
        drop_malfunction_of && m + 1 == *drop_malfunction_of && round == 0;
    const bool first_session_of_target_2 =
        misconfigure && m + 1 == *misconfigure && round == 0;
    const bool flood_this = error_flood && m + 1 == *error_flood;

    const Timestamp t0{base_ts_us + static_cast<std::uint64_t>(s) * 35'000'000ull};

    // health poll, then the malfunction the owner notices
    const Timestamp poll_end = burst(monitor, machine, 8080, t0);
    const Timestamp t_mal = shifted(poll_end, rng.in_range(10'000, 200'000));
    const std::string code = "E" + std::to_string(10 + rng.bounded(90));
    EffectRecord mal;
    mal.timestamp = t_mal;
    mal.host = Endpoint{machine.host_id, machine.addr, 0};
    mal.kind = EffectKind::LogEntry;
    mal.severity = Severity::Error;
    mal.payload = {{"event", "malfunction"}, {"code", code}};
    const std::string mal_id = b.add_effect(std::move(mal));

    CauseRecord ticket;
    ticket.timestamp = shifted(t_mal, rng.in_range(1'000'000, 3'000'000));
    ticket.origin = Endpoint{ticketing.host_id, ticketing.addr, 0};
    ticket.kind = CauseKind::TicketIssued;
    ticket.subject = Endpoint{machine.host_id, machine.addr, 22};
    ticket.payload = {{"problem", "malfunction"}, {"code", code}};
    const Timestamp t_ticket = ticket.timestamp;
    const std::string ticket_id = b.add_cause(std::move(ticket));

    // technician connects to diagnose
    const Timestamp diag_start = shifted(t_ticket, rng.in_range(50'000, 500'000));
    const Timestamp diag_end = burst(tech, machine, 22, diag_start);
    EffectRecord opened;
    opened.timestamp = shifted(diag_end, rng.in_range(10'000, 200'000));
    opened.host = Endpoint{machine.host_id, machine.addr, 0};
    opened.kind = EffectKind::LogEntry;
    opened.severity = flood_this ? Severity::Error : Severity::Info;
    opened.payload = {{"event", "remote-session-opened"}};
    const Timestamp t_opened = opened.timestamp;
    const std::string opened_id = b.add_effect(std::move(opened));

    CauseRecord accept;
    accept.timestamp = shifted(t_opened, rng.in_range(1'000'000, 2'000'000));
    accept.origin = Endpoint{tech.host_id, tech.addr, 0};
    accept.kind = CauseKind::TicketAccepted;
    accept.subject = Endpoint{machine.host_id, machine.addr, 22};
    accept.payload = {{param_key, param_value}};
    const Timestamp t_accept = accept.timestamp;
    const std::string accept_id = b.add_cause(std::move(accept));

    // the maintenance work itself
    const Timestamp work_start = shifted(t_accept, rng.in_range(50'000, 500'000));
    const Timestamp work_end = burst(tech, machine, 22, work_start);
    EffectRecord worked;
    worked.timestamp = shifted(work_end, rng.in_range(10'000, 200'000));
    worked.host = Endpoint{machine.host_id, machine.addr, 0};
    worked.kind = EffectKind::LogEntry;
    worked.severity = flood_this ? Severity::Error : Severity::Info;
    worked.payload = {{"event", "maintenance-performed"}};
    const Timestamp t_worked = worked.timestamp;
    const std::string worked_id = b.add_effect(std::move(worked));

    CauseRecord param;
    param.timestamp = shifted(t_worked, rng.in_range(1'000'000, 2'000'000));
    param.origin = Endpoint{tech.host_id, tech.addr, 0};
    param.kind = CauseKind::Parameterization;
    param.subject = Endpoint{machine.host_id, machine.addr, 22};
    param.payload = {{param_key, param_value}};
    const Timestamp t_param = param.timestamp;
    b.add_cause(std::move(param));

    const Timestamp apply_start = shifted(t_param, rng.in_range(50'000, 500'000));
    const Timestamp apply_end = burst(tech, machine, 22, apply_start);
    EffectRecord setting;
    setting.timestamp = shifted(apply_end, rng.in_range(10'000, 200'000));
    setting.host = Endpoint{machine.host_id, machine.addr, 0};
    setting.kind = EffectKind::MachineSetting;
    setting.severity = Severity::Info;
    setting.payload = {{param_key, param_value}};
    if (first_session_of_target_2) {
      // the machine picked up one key nobody announced; the value itself is
      // common fleet-wide so only the drift rule should react
      setting.payload.emplace("param-1", "level-1");
    }
    const std::string setting_id = b.add_effect(std::move(setting));

    if (first_session_of_target_1) {
      b.removed_effects.insert(b.effects.size() - 4);  // the malfunction entry
      inj_ticket->record_ids = {ticket_id, mal_id};
    }
    if (first_session_of_target_2) inj_misconfig->record_ids = {accept_id, setting_id};
    if (flood_this) {
      inj_errors->record_ids.push_back(opened_id);
      inj_errors->record_ids.push_back(worked_id);
    }
  }

  if (inj_ticket) applied.push_back(std::move(*inj_ticket));
  if (inj_misconfig) applied.push_back(std::move(*inj_misconfig));
  if (inj_errors) applied.push_back(std::move(*inj_errors));

  std::vector<HostDef> all_hosts{tech};
  all_hosts.insert(all_hosts.end(), machine_defs.begin(), machine_defs.end());
  all_hosts.push_back(monitor);
  all_hosts.push_back(ticketing);
  return finish(spec, b, all_hosts, applied);
}

// --------------------------------------------------------------------------
// PLC-fieldbus profile: controllers parameterize PLCs round-robin over
// Modbus/TCP; each write is announced, performed, read back, and reported
// as a register setting.
// --------------------------------------------------------------------------

inline Corpus generate_plc(const ScenarioSpec& spec) {
  const std::uint32_t controllers = std::max<std::uint32_t>(1, spec.host_count / 4);
  const std::uint32_t plcs = spec.host_count - controllers;
  const std::uint32_t writes = spec.unit_count;
  const std::uint32_t cycle = controllers * plcs;
  const std::uint32_t register_rounds =
      writes / cycle == 0 ? 1 : std::min<std::uint32_t>(writes / cycle, 4);

  std::optional<std::uint32_t> spoof_plc, low_degree_ics, unique_plc;
  for (const auto& a : spec.injected) {
    if (a.kind == AnomalyKind::SpoofedWrite) spoof_plc = a.target;
    if (a.kind == AnomalyKind::LowDegreeIcs) low_degree_ics = a.target;
    if (a.kind == AnomalyKind::UniqueSetting) unique_plc = a.target;
  }

  std::vector<HostDef> ics_defs, plc_defs;
  for (std::uint32_t i = 0; i < controllers; ++i)
    ics_defs.push_back(HostDef{"ics-" + std::to_string(i),
                               "10.1.0." + std::to_string(1 + i)});
  for (std::uint32_t p = 0; p < plcs; ++p)
    plc_defs.push_back(HostDef{"plc-" + std::to_string(p),
                               "10.1.1." + std::to_string(1 + p)});

  // plan first: anomalies that reroute or retune writes edit the plan, so
  // record ids and the random stream stay aligned with the clean corpus
  struct PlannedWrite {
    std::uint32_t ics;
    std::uint32_t plc;
    std::uint32_t reg_index;
    std::uint16_t value;
    bool redirected = false;
    bool retuned = false;
  };
  std::vector<PlannedWrite> plan;
  for (std::uint32_t k = 0; k < writes; ++k) {
    PlannedWrite w;
    w.ics = k % controllers;
    w.plc = (k / controllers) % plcs;
    w.reg_index = (k / cycle) % register_rounds;
    w.value = static_cast<std::uint16_t>(512 + 16 * w.reg_index);
    plan.push_back(w);
  }
  if (low_degree_ics)
    for (auto& w : plan)
      if (w.ics == *low_degree_ics && w.plc != 0) {
        w.plc = 0;
        w.redirected = true;
      }
  std::optional<std::size_t> retuned_write;
  if (unique_plc) {
    for (std::size_t k = 0; k < plan.size(); ++k)
      if (plan[k].plc == *unique_plc) retuned_write = k;
    if (!retuned_write)
      throw ScenarioError("UniqueSetting target plc-" + std::to_string(*unique_plc) +
                          " receives no writes");
    plan[*retuned_write].value = 0xBEEF;
    plan[*retuned_write].retuned = true;
  }

  SplitMix64 rng(spec.seed);
  Build b;

  struct Injection {
    AnomalyKind kind;
    std::string target_host;
    std::vector<std::string> record_ids;
  };
  std::vector<Injection> applied;
  std::optional<Injection> inj_low, inj_unique, inj_spoof;
  if (low_degree_ics)
    inj_low = Injection{AnomalyKind::LowDegreeIcs, ics_defs[*low_degree_ics].host_id, {}};
  if (unique_plc)
    inj_unique = Injection{AnomalyKind::UniqueSetting, plc_defs[*unique_plc].host_id, {}};
  if (spoof_plc)
    inj_spoof = Injection{AnomalyKind::SpoofedWrite, plc_defs[*spoof_plc].host_id, {}};

  Timestamp last_packet_ts{base_ts_us};
  for (std::uint32_t k = 0; k < writes; ++k) {
    const PlannedWrite& w = plan[k];
    const HostDef& ics = ics_defs[w.ics];
    const HostDef& plc = plc_defs[w.plc];
    const std::uint16_t reg_addr = static_cast<std::uint16_t>(16 + w.reg_index);
    const std::string reg_str = std::to_string(reg_addr);
    const std::string val_str = std::to_string(w.value);
    const Timestamp t0{base_ts_us + static_cast<std::uint64_t>(k) * 20'000'000ull};

    CauseRecord param;
    param.timestamp = t0;
    param.origin = Endpoint{ics.host_id, ics.addr, 0};
    param.kind = CauseKind::Parameterization;
    param.subject = Endpoint{plc.host_id, plc.addr, modbus_port};
    param.payload = {{"register", reg_str}, {"value", val_str}};
    const std::string cause_id = b.add_cause(std::move(param));

    const std::uint16_t sport = b.fresh_port();
    const std::uint16_t tid_write = static_cast<std::uint16_t>((2 * k) & 0xFFFF);
    const std::uint16_t tid_read = static_cast<std::uint16_t>((2 * k + 1) & 0xFFFF);
    const bool multi = k % 2 == 1;
    const std::uint16_t one[1] = {w.value};

    b.count_burst(ics, plc);   // write request + read-back request
    b.count_burst(plc, ics);   // their responses

    WirePacket req;
    req.ts = shifted(t0, rng.in_range(50'000, 500'000));
    req.src_port = sport;
    req.dst_port = modbus_port;
    req.transport = Transport::TCP;
    req.payload = multi ? encode_write_multiple_request(tid_write, 1, reg_addr, one)
                        : encode_write_single(tid_write, 1, reg_addr, w.value);
    const std::string req_id = b.add_packet(ics, plc, req);

    WirePacket resp;
    resp.ts = shifted(req.ts, rng.in_range(1'000, 50'000));
    resp.src_port = modbus_port;
    resp.dst_port = sport;
    resp.transport = Transport::TCP;
    resp.payload = multi ? encode_write_multiple_response(tid_write, 1, reg_addr, 1)
                         : encode_write_single(tid_write, 1, reg_addr, w.value);
    const std::string resp_id = b.add_packet(plc, ics, resp);

    WirePacket read_req;
    read_req.ts = shifted(resp.ts, rng.in_range(1'000, 50'000));
    read_req.src_port = sport;
    read_req.dst_port = modbus_port;
    read_req.transport = Transport::TCP;
    read_req.payload = encode_read_request(tid_read, 1, reg_addr, 1);
    const std::string read_req_id = b.add_packet(ics, plc, read_req);

    WirePacket read_resp;
    read_resp.ts = shifted(read_req.ts, rng.in_range(1'000, 50'000));
    read_resp.src_port = modbus_port;
    read_resp.dst_port = sport;
    read_resp.transport = Transport::TCP;
    read_resp.payload = encode_read_response(tid_read, 1, one);
    const std::string read_resp_id = b.add_packet(plc, ics, read_resp);
    last_packet_ts = read_resp.ts;

    EffectRecord setting;
    setting.timestamp = shifted(read_resp.ts, rng.in_range(10'000, 200'000));
    setting.host = Endpoint{plc.host_id, plc.addr, modbus_port};
    setting.kind = EffectKind::RegisterSetting;
    setting.severity = Severity::Info;
    setting.payload = {{"register", reg_str}, {"value", val_str}};
    const std::string effect_id = b.add_effect(std::move(setting));

    if (w.redirected) {
      inj_low->record_ids.push_back(cause_id);
      inj_low->record_ids.push_back(req_id);
      inj_low->record_ids.push_back(resp_id);
      inj_low->record_ids.push_back(read_req_id);
      inj_low->record_ids.push_back(read_resp_id);
      inj_low->record_ids.push_back(effect_id);
    }
    if (w.retuned) {
      inj_unique->record_ids = {cause_id, req_id, resp_id, read_resp_id, effect_id};
    }
  }

  if (spoof_plc) {
    // an unannounced write, long after legitimate traffic has gone quiet;
    // it rewrites the canonical value so only the missing cause stands out
    const HostDef& ics = ics_defs[0];
    const HostDef& plc = plc_defs[*spoof_plc];
    const std::uint16_t sport = b.fresh_port();
    b.count_burst(ics, plc);
    WirePacket req;
    req.ts = shifted(last_packet_ts, 15'000'000);
    req.src_port = sport;
    req.dst_port = modbus_port;
    req.transport = Transport::TCP;
    req.payload = encode_write_single(static_cast<std::uint16_t>((2 * writes) & 0xFFFF),
                                      1, 16, 512);
    const std::string req_id = b.add_packet(ics, plc, req);

    EffectRecord setting;
    setting.timestamp = shifted(req.ts, rng.in_range(10'000, 200'000));
    setting.host = Endpoint{plc.host_id, plc.addr, modbus_port};
    setting.kind = EffectKind::RegisterSetting;
    setting.severity = Severity::Info;
    setting.payload = {{"register", "16"}, {"value", "512"}};
    const std::string effect_id = b.add_effect(std::move(setting));
    inj_spoof->record_ids = {req_id, effect_id};
  }

  if (inj_low) applied.push_back(std::move(*inj_low));
  if (inj_unique) applied.push_back(std::move(*inj_unique));
  if (inj_spoof) applied.push_back(std::move(*inj_spoof));

  std::vector<HostDef> all_hosts = ics_defs;
  all_hosts.insert(all_hosts.end(), plc_defs.begin(), plc_defs.end());
  return finish(spec, b, all_hosts, applied);
}

template <typename Injection>
inline Corpus finish(const ScenarioSpec& spec, Build& b,
                     const std::vector<HostDef>& hosts,
                     const std::vector<Injection>& applied) {
  Corpus out;
  for (std::size_t i = 0; i < b.causes.size(); ++i)
    out.cause_lines.push_back(cause_line(b.causes[i]));
  for (std::size_t i = 0; i < b.effects.size(); ++i)
    if (!b.removed_effects.count(i))
      out.effect_lines.push_back(effect_line(b.effects[i]));
  out.capture = capture_header();
  for (const auto& p : b.packets) append_packet(out.capture, p);
  for (const auto& h : hosts) out.hosts_lines.push_back(hosts_line(h.addr, h.host_id));

  ojson m;
  m["profile"] = to_string(spec.profile);
  m["seed"] = spec.seed;
  m["host_count"] = spec.host_count;
  m["unit_count"] = spec.unit_count;
  m["hosts"] = ojson::array();
  for (const auto& h : hosts) m["hosts"].push_back({{"host_id", h.host_id}, {"addr", h.addr}});
  m["records"] = {{"causes", out.cause_lines.size()},
                  {"effects", out.effect_lines.size()},
                  {"packets", b.packets.size()},
                  {"bursts", b.bursts}};

  // ground-truth topology, from the generator's own bookkeeping
  std::set<std::string> nodes;
  std::set<std::string> cause_subjects, effect_hosts;
  for (const auto& c : b.causes) cause_subjects.insert(c.subject.host_id);
  for (std::size_t i = 0; i < b.effects.size(); ++i)
    if (!b.removed_effects.count(i)) effect_hosts.insert(b.effects[i].host.host_id);
  for (const auto& [key, stat] : b.edges) {
    nodes.insert(key.first);
    nodes.insert(key.second);
  }
  for (const auto& h : cause_subjects) nodes.insert(h);
  for (const auto& h : effect_hosts) nodes.insert(h);

  m["topology"]["nodes"] = std::vector<std::string>(nodes.begin(), nodes.end());
  m["topology"]["edges"] = ojson::array();
  std::map<std::string, std::uint64_t> out_degrees;
  for (const auto& n : nodes) out_degrees[n] = 0;
  for (const auto& [key, stat] : b.edges) {
    m["topology"]["edges"].push_back({{"src", key.first},
                                      {"dst", key.second},
                                      {"flows", stat.flows},
                                      {"packets", stat.packets},
                                      {"bytes", stat.bytes}});
    ++out_degrees[key.first];
  }
  m["topology"]["out_degrees"] = ojson::object();
  for (const auto& [h, d] : out_degrees) m["topology"]["out_degrees"][h] = d;

  m["injected"] = ojson::array();
  for (const auto& inj : applied)
    m["injected"].push_back({{"kind", to_string(inj.kind)},
                             {"target", inj.target_host},
                             {"record_ids", inj.record_ids}});

  m["expected_findings"] = ojson::object();
  std::map<RuleId, std::uint64_t> expect;
  for (const auto& inj : applied) ++expect[rule_for(inj.kind)];
  for (auto r : {RuleId::R1_TicketWithoutError, RuleId::R2_SettingDrift,
                 RuleId::R3_ParameterizationWithoutCause, RuleId::R4_DegreeOutlier,
                 RuleId::R5_ErrorRateOutlier, RuleId::R6_RareSetting}) {
    auto it = expect.find(r);
    m["expected_findings"][to_string(r)] = it == expect.end() ? 0 : it->second;
  }

  out.manifest = std::move(m);
  return out;
}

inline void validate_spec(const ScenarioSpec& spec) {
  const bool maintenance = spec.profile == Profile::RemoteMaintenance;
  if (spec.host_count < 3)
    throw ScenarioError("host_count must be at least 3");
  if (spec.host_count > 150)
    throw ScenarioError("host_count must be at most 150");

  const std::uint32_t machines = spec.host_count - 1;
  const std::uint32_t controllers = std::max<std::uint32_t>(1, spec.host_count / 4);
  const std::uint32_t plcs = spec.host_count - controllers;
  const std::uint32_t w = spec.unit_count;

  if (maintenance) {
    if (w == 1)
      throw ScenarioError(
          "maintenance corpora need at least 2 sessions for clean-scenario guarantees");
  } else {
    if (w > 0 && w < controllers + 1)
      throw ScenarioError(
          "plc corpora need at least controllers+1 writes for clean-scenario guarantees");
  }

  std::set<AnomalyKind> kinds;
  std::set<std::uint32_t> machine_targets, plc_targets, ics_targets;
  for (const auto& a : spec.injected) {
    if (w == 0) throw ScenarioError("anomalies need a non-empty corpus");
    if (anomaly_for_profile_check(spec.profile, a.kind))
      throw ScenarioError(std::string(to_string(a.kind)) + " does not apply to the " +
                          to_string(spec.profile) + " profile");
    if (!kinds.insert(a.kind).second)
      throw ScenarioError(std::string("duplicate anomaly kind ") + to_string(a.kind));
    switch (a.kind) {
      case AnomalyKind::InconsistentTicket:
        if (a.target < 1 || a.target > machines)
          throw ScenarioError("InconsistentTicket target out of range");
        if (w < a.target)
          throw ScenarioError("InconsistentTicket target machine has no session");
        if (!machine_targets.insert(a.target).second)
          throw ScenarioError("duplicate anomaly target");
        break;
      case AnomalyKind::Misconfiguration:
        if (a.target < 1 || a.target > machines)
          throw ScenarioError("Misconfiguration target out of range");
        if (w < 2 * machines)
          throw ScenarioError(
              "Misconfiguration needs at least 2 sessions per machine (unit_count >= 2*machines)");
        if (!machine_targets.insert(a.target).second)
          throw ScenarioError("duplicate anomaly target");
        break;
      case AnomalyKind::HighErrorHost:
        if (a.target < 1 || a.target > machines)
          throw ScenarioError("HighErrorHost target out of range");
        if (machines < 6)
          throw ScenarioError("HighErrorHost needs at least 6 machines to stand out");
        if (w < machines)
          throw ScenarioError("HighErrorHost needs every machine to have a session");
        if (!machine_targets.insert(a.target).second)
          throw ScenarioError("duplicate anomaly target");
        break;
      case AnomalyKind::SpoofedWrite:
        if (a.target >= plcs) throw ScenarioError("SpoofedWrite target out of range");
        if (!plc_targets.insert(a.target).second)
          throw ScenarioError("duplicate anomaly target");
        break;
      case AnomalyKind::LowDegreeIcs:
        if (a.target >= controllers) throw ScenarioError("LowDegreeIcs target out of range");
        if (controllers < 3 || plcs < 4)
          throw ScenarioError("LowDegreeIcs needs at least 3 controllers and 4 PLCs");
        if (w < controllers * plcs)
          throw ScenarioError("LowDegreeIcs needs a full write cycle (unit_count >= controllers*plcs)");
        if (!ics_targets.insert(a.target).second)
          throw ScenarioError("duplicate anomaly target");
        break;
      case AnomalyKind::UniqueSetting:
        if (a.target >= plcs) throw ScenarioError("UniqueSetting target out of range");
        if (plcs < 3)
          throw ScenarioError("UniqueSetting needs at least 3 PLCs");
        if (w < controllers * plcs)
          throw ScenarioError("UniqueSetting needs a full write cycle (unit_count >= controllers*plcs)");
        if (!plc_targets.insert(a.target).second)
          throw ScenarioError("duplicate anomaly target");
        break;
    }
  }
}

}  // namespace gen_detail

inline Corpus generate(const ScenarioSpec& spec) {
  gen_detail::validate_spec(spec);
  return spec.profile == Profile::RemoteMaintenance ? gen_detail::generate_maintenance(spec)
                                                    : gen_detail::generate_plc(spec);
}

inline void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write_lines = [&](const char* name, const std::vector<std::string>& lines) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error(std::string("cannot write ") + name);
    for (const auto& l : lines) out << l << '\n';
  };
  write_lines("causes.jsonl", corpus.cause_lines);
  write_lines("effects.jsonl", corpus.effect_lines);
  write_lines("hosts.jsonl", corpus.hosts_lines);
  std::ofstream pcap(dir / "traffic.pcap", std::ios::binary);
  if (!pcap) throw std::runtime_error("cannot write traffic.pcap");
  pcap.write(reinterpret_cast<const char*>(corpus.capture.data()),
             static_cast<std::streamsize>(corpus.capture.size()));
  std::ofstream manifest(dir / "manifest.json", std::ios::binary);
  if (!manifest) throw std::runtime_error("cannot write manifest.json");
  manifest << corpus.manifest.dump(2) << '\n';
}

}  // namespace triadcep
