#include "idfw/types.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <ctime>

namespace idfw {

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
    std::array<std::uint32_t, 4> octets{};
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        if (pos >= text.size()) return std::nullopt;
        const char* begin = text.data() + pos;
        const char* end = text.data() + text.size();
        std::uint32_t value = 0;
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{} || ptr == begin || value > 255) return std::nullopt;
        // reject leading zeros like "01" but allow plain "0"
        if (ptr - begin > 1 && *begin == '0') return std::nullopt;
        octets[i] = value;
        pos = ptr - text.data();
        if (i < 3) {
            if (pos >= text.size() || text[pos] != '.') return std::nullopt;
            ++pos;
        }
    }
    if (pos != text.size()) return std::nullopt;
    return Ipv4((octets[0] << 24) | (octets[1] << 16) | (octets[2] << 8) | octets[3]);
}

std::string Ipv4::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (value_ >> 24) & 0xff, (value_ >> 16) & 0xff,
                  (value_ >> 8) & 0xff, value_ & 0xff);
    return buf;
}

namespace {
std::uint32_t prefix_mask(int prefix) {
    return prefix == 0 ? 0u : ~0u << (32 - prefix);
}
}  // namespace

Cidr::Cidr(Ipv4 network, int prefix)
    : network_(Ipv4(network.value() & prefix_mask(prefix))), prefix_(prefix) {
    if (prefix < 0 || prefix > 32) throw IdfwError("CIDR prefix out of range");
}

std::optional<Cidr> Cidr::parse(std::string_view text) {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        auto ip = Ipv4::parse(text);
        if (!ip) return std::nullopt;
        return Cidr(*ip, 32);
    }
    auto ip = Ipv4::parse(text.substr(0, slash));
    if (!ip) return std::nullopt;
    auto prefix_text = text.substr(slash + 1);
    int prefix = -1;
    auto [ptr, ec] =
        std::from_chars(prefix_text.data(), prefix_text.data() + prefix_text.size(), prefix);
    if (ec != std::errc{} || ptr != prefix_text.data() + prefix_text.size()) return std::nullopt;
    if (prefix < 0 || prefix > 32) return std::nullopt;
    return Cidr(*ip, prefix);
}

bool Cidr::contains(Ipv4 ip) const {
    return (ip.value() & prefix_mask(prefix_)) == network_.value();
}

std::string Cidr::to_string() const {
    return network_.to_string() + "/" + std::to_string(prefix_);
}

std::string to_string(Proto p) {
    switch (p) {
        case Proto::Tcp: return "tcp";
        case Proto::Udp: return "udp";
        case Proto::Any: return "any";
    }
    return "?";
}

std::string to_string(Action a) {
    return a == Action::Permit ? "permit" : "deny";
}

std::optional<Proto> parse_proto(std::string_view text) {
    if (text == "tcp") return Proto::Tcp;
    if (text == "udp") return Proto::Udp;
    if (text == "any") return Proto::Any;
    return std::nullopt;
}

std::optional<Action> parse_action(std::string_view text) {
    if (text == "permit") return Action::Permit;
    if (text == "deny") return Action::Deny;
    return std::nullopt;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    int year, month, day, hour, minute, second;
    int consumed = 0;
    std::string buf(text);
    if (std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &year, &month, &day, &hour, &minute,
                    &second, &consumed) != 6) {
        return std::nullopt;
    }
    std::size_t pos = static_cast<std::size_t>(consumed);
    long millis = 0;
    if (pos < buf.size() && buf[pos] == '.') {
        ++pos;
        int digits = 0;
        long frac = 0;
        while (pos < buf.size() && buf[pos] >= '0' && buf[pos] <= '9') {
            if (digits < 3) frac = frac * 10 + (buf[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) return std::nullopt;
        while (digits < 3) {
            frac *= 10;
            ++digits;
        }
        millis = frac;
    }
    if (pos >= buf.size() || (buf[pos] != 'Z' && buf[pos] != 'z') || pos + 1 != buf.size()) {
        return std::nullopt;
    }
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60) {
        return std::nullopt;
    }
    std::tm tm{};
    tm.tm_year = year - 1900;
    tm.tm_mon = month - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = minute;
    tm.tm_sec = second;
    std::time_t t = timegm(&tm);
    if (t == static_cast<std::time_t>(-1)) return std::nullopt;
    return Timestamp(std::chrono::seconds(t) + std::chrono::milliseconds(millis));
}

std::string format_timestamp(Timestamp ts) {
    auto secs = std::chrono::floor<std::chrono::seconds>(ts);
    auto millis = (ts - secs).count();
    std::time_t t = Clock::to_time_t(std::chrono::time_point_cast<Clock::duration>(secs));
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    if (millis > 0) {
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03ldZ", tm.tm_year + 1900,
                      tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
    } else {
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                      tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    }
    return buf;
}

std::optional<Duration> parse_duration(std::string_view text) {
    long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr == text.data() || value < 0) return std::nullopt;
    std::string_view unit(ptr, text.data() + text.size() - ptr);
    if (unit == "ms") return Duration(value);
    if (unit == "s" || unit.empty()) return std::chrono::duration_cast<Duration>(std::chrono::seconds(value));
    if (unit == "m") return std::chrono::duration_cast<Duration>(std::chrono::minutes(value));
    if (unit == "h") return std::chrono::duration_cast<Duration>(std::chrono::hours(value));
    return std::nullopt;
}

}  // namespace idfw
