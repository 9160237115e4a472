#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/regex.hpp>

#include "idfw/types.hpp"

namespace idfw {

enum class EventKind { Login, Logoff, FailedLogin };

std::string to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

/// Normalized authentication event. `event_id` keeps the raw Windows event id
/// when the event came from a replay record, for correlation matching.
struct SessionEvent {
    EventKind kind = EventKind::Login;
    std::string username;
    Ipv4 ip;
    Timestamp ts;
    std::string source;
    std::optional<int> event_id;

    bool operator==(const SessionEvent&) const = default;
};

/// One line of a replay file before kind mapping.
struct RawReplayRecord {
    Timestamp ts;
    int event_id = 0;
    std::string username;
    Ipv4 ip;
    std::string source;
};

/// Windows event-id to event-kind mapping; config-extensible (pre-Vista
/// defaults 540/538/529).
struct EventIdMap {
    std::vector<int> login{540};
    std::vector<int> logoff{538};
    std::vector<int> failed{529};

    std::optional<EventKind> kind_for(int event_id) const;
};

struct Skip {};
struct ParseError {
    std::string message;
};

using ReplayParseResult = std::variant<SessionEvent, Skip, ParseError>;
using RawParseResult = std::variant<RawReplayRecord, ParseError>;

/// Parse one replay line without kind mapping (all event ids accepted).
RawParseResult parse_raw_replay_line(std::string_view line);

/// Parse one replay line; unmapped event ids yield Skip, never an error.
ReplayParseResult parse_replay_line(std::string_view line, const EventIdMap& id_map = {});

/// Inverse of parse_replay_line for mapped events (round-trip support).
std::string serialize_replay_line(const SessionEvent& event, const EventIdMap& id_map = {});

/// Compiled syslog message matcher. The regex must expose a named capture
/// `user` for login/logoff kinds.
struct SyslogPattern {
    std::string name;
    boost::regex regex;
    EventKind kind = EventKind::Login;
};

SyslogPattern make_syslog_pattern(const std::string& name, const std::string& regex,
                                  EventKind kind);

/// Built-in sshd patterns (Accepted password / session closed / Failed password).
std::vector<SyslogPattern> default_syslog_patterns();

/// Match a syslog datagram against the pattern list. The binding IP is always
/// the datagram sender, never anything extracted from the message body.
ReplayParseResult parse_syslog_datagram(std::string_view payload, Ipv4 sender_ip,
                                        const std::vector<SyslogPattern>& patterns,
                                        Timestamp receive_time);

}  // namespace idfw
