#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace idfw {

using Clock = std::chrono::system_clock;
using Timestamp = std::chrono::time_point<Clock, std::chrono::milliseconds>;
using Duration = std::chrono::milliseconds;

/// Dotted-quad IPv4 address, stored in host byte order for cheap ordering.
class Ipv4 {
public:
    constexpr Ipv4() = default;
    constexpr explicit Ipv4(std::uint32_t value) : value_(value) {}

    static std::optional<Ipv4> parse(std::string_view text);

    constexpr std::uint32_t value() const { return value_; }
    std::string to_string() const;

    auto operator<=>(const Ipv4&) const = default;

private:
    std::uint32_t value_ = 0;
};

/// IPv4 CIDR block. Prefix 0 matches everything.
class Cidr {
public:
    constexpr Cidr() = default;
    Cidr(Ipv4 network, int prefix);

    static std::optional<Cidr> parse(std::string_view text);
    static Cidr host(Ipv4 ip) { return Cidr(ip, 32); }
    static Cidr any() { return Cidr(Ipv4(0), 0); }

    bool contains(Ipv4 ip) const;
    Ipv4 network() const { return network_; }
    int prefix() const { return prefix_; }
    std::string to_string() const;

    auto operator<=>(const Cidr&) const = default;

private:
    Ipv4 network_;
    int prefix_ = 0;
};

enum class Proto { Tcp, Udp, Any };
enum class Action { Permit, Deny };

/// L4 service selector: protocol plus destination port (nullopt = any port).
struct Service {
    Proto proto = Proto::Any;
    std::optional<std::uint16_t> dport;

    auto operator<=>(const Service&) const = default;
};

std::string to_string(Proto p);
std::string to_string(Action a);
std::optional<Proto> parse_proto(std::string_view text);
std::optional<Action> parse_action(std::string_view text);

/// RFC 3339 UTC timestamp, millisecond precision ("2024-01-01T10:00:00Z").
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

/// Parse a duration literal like "60s", "15m", "10h", "250ms".
std::optional<Duration> parse_duration(std::string_view text);

struct IdfwError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace idfw
