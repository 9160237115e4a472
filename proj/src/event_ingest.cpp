#include "idfw/event_ingest.hpp"

#include <algorithm>

#include <json.hpp>

namespace idfw {

std::string to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Login: return "login";
        case EventKind::Logoff: return "logoff";
        case EventKind::FailedLogin: return "failed-login";
    }
    return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
    if (text == "login") return EventKind::Login;
    if (text == "logoff") return EventKind::Logoff;
    if (text == "failed-login") return EventKind::FailedLogin;
    return std::nullopt;
}

std::optional<EventKind> EventIdMap::kind_for(int event_id) const {
    auto has = [event_id](const std::vector<int>& ids) {
        return std::find(ids.begin(), ids.end(), event_id) != ids.end();
    };
    if (has(login)) return EventKind::Login;
    if (has(logoff)) return EventKind::Logoff;
    if (has(failed)) return EventKind::FailedLogin;
    return std::nullopt;
}

RawParseResult parse_raw_replay_line(std::string_view line) {
    nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        return ParseError{"malformed JSON record"};
    }
    for (const char* field : {"ts", "event_id", "username", "ip", "source"}) {
        if (!doc.contains(field)) {
            return ParseError{std::string("missing field: ") + field};
        }
    }
    if (!doc["ts"].is_string() || !doc["event_id"].is_number_integer() ||
        !doc["username"].is_string() || !doc["ip"].is_string() || !doc["source"].is_string()) {
        return ParseError{"field has wrong type"};
    }
    RawReplayRecord record;
    auto ts = parse_timestamp(doc["ts"].get<std::string>());
    if (!ts) return ParseError{"unparseable timestamp: " + doc["ts"].get<std::string>()};
    record.ts = *ts;
    record.event_id = doc["event_id"].get<int>();
    record.username = doc["username"].get<std::string>();
    auto ip = Ipv4::parse(doc["ip"].get<std::string>());
    if (!ip) return ParseError{"invalid IPv4 address: " + doc["ip"].get<std::string>()};
    record.ip = *ip;
    record.source = doc["source"].get<std::string>();
    return record;
}

ReplayParseResult parse_replay_line(std::string_view line, const EventIdMap& id_map) {
    auto raw = parse_raw_replay_line(line);
    if (auto* err = std::get_if<ParseError>(&raw)) return *err;
    const auto& record = std::get<RawReplayRecord>(raw);
    auto kind = id_map.kind_for(record.event_id);
    if (!kind) return Skip{};
    SessionEvent event;
    event.kind = *kind;
    event.username = record.username;
    event.ip = record.ip;
    event.ts = record.ts;
    event.source = record.source;
    event.event_id = record.event_id;
    return event;
}

std::string serialize_replay_line(const SessionEvent& event, const EventIdMap& id_map) {
    int event_id;
    if (event.event_id) {
        event_id = *event.event_id;
    } else {
        switch (event.kind) {
            case EventKind::Login: event_id = id_map.login.at(0); break;
            case EventKind::Logoff: event_id = id_map.logoff.at(0); break;
            case EventKind::FailedLogin: event_id = id_map.failed.at(0); break;
            default: event_id = 0;
        }
    }
    nlohmann::json doc{{"ts", format_timestamp(event.ts)},
                       {"event_id", event_id},
                       {"username", event.username},
                       {"ip", event.ip.to_string()},
                       {"source", event.source}};
    return doc.dump();
}

SyslogPattern make_syslog_pattern(const std::string& name, const std::string& regex,
                                  EventKind kind) {
    SyslogPattern pattern;
    pattern.name = name;
    pattern.regex = boost::regex(regex);  // throws boost::regex_error on bad pattern
    pattern.kind = kind;
    if (kind != EventKind::FailedLogin && regex.find("?<user>") == std::string::npos) {
        throw IdfwError("syslog pattern '" + name + "' lacks the (?<user>...) capture");
    }
    return pattern;
}

std::vector<SyslogPattern> default_syslog_patterns() {
    return {
        make_syslog_pattern("sshd-accept",
                            R"(sshd\[\d+\]: Accepted \S+ for (?<user>\S+) from)",
                            EventKind::Login),
        make_syslog_pattern("sshd-close",
                            R"(sshd\[\d+\]: pam_unix\(sshd:session\): session closed for user (?<user>\S+))",
                            EventKind::Logoff),
        make_syslog_pattern("sshd-failed",
                            R"(sshd\[\d+\]: Failed \S+ for (invalid user )?(?<user>\S+) from)",
                            EventKind::FailedLogin),
    };
}

namespace {

// Strip the optional RFC 3164 "<PRI>" header; tolerate its absence.
std::string_view strip_pri(std::string_view payload) {
    if (payload.empty() || payload.front() != '<') return payload;
    auto close = payload.find('>');
    if (close == std::string_view::npos || close == 1 || close > 4) return payload;
    for (std::size_t i = 1; i < close; ++i) {
        if (payload[i] < '0' || payload[i] > '9') return payload;
    }
    return payload.substr(close + 1);
}

}  // namespace

ReplayParseResult parse_syslog_datagram(std::string_view payload, Ipv4 sender_ip,
                                        const std::vector<SyslogPattern>& patterns,
                                        Timestamp receive_time) {
    // Reject embedded NULs and non-UTF-8-ish control garbage up front.
    for (unsigned char c : payload) {
        if (c == 0) return ParseError{"NUL byte in datagram"};
    }
    std::string body(strip_pri(payload));
    for (const auto& pattern : patterns) {
        boost::smatch match;
        if (!boost::regex_search(body, match, pattern.regex)) continue;
        SessionEvent event;
        event.kind = pattern.kind;
        event.ip = sender_ip;  // always the sender, never a body-extracted IP
        event.ts = receive_time;
        event.source = sender_ip.to_string();
        auto user = match["user"];
        if (user.matched) {
            event.username = user.str();
        } else if (pattern.kind != EventKind::FailedLogin) {
            return ParseError{"pattern '" + pattern.name + "' matched without a user capture"};
        }
        return event;
    }
    return Skip{};
}

}  // namespace idfw
