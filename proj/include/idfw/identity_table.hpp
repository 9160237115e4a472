#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "idfw/event_ingest.hpp"
#include "idfw/types.hpp"

namespace idfw {

/// Live username<->IP association created by a login event.
struct IdentityBinding {
    std::string username;  // display case as received
    Ipv4 ip;
    Timestamp login_ts;
    Timestamp lease_expiry;

    bool operator==(const IdentityBinding&) const = default;
};

/// Immutable copy of the table handed to the compiler.
struct IdentitySnapshot {
    std::vector<IdentityBinding> bindings;  // sorted ascending by IP
    std::uint64_t version = 0;

    bool operator==(const IdentitySnapshot&) const = default;
};

struct ChangeSummary {
    std::vector<IdentityBinding> added;
    std::vector<IdentityBinding> removed;
    std::vector<IdentityBinding> replaced;  // same user re-login, lease refreshed

    bool empty() const { return added.empty() && removed.empty() && replaced.empty(); }
};

/// Normalize a username for comparison: trim whitespace, lowercase.
/// Windows account names are case-insensitive.
std::string canonical_username(std::string_view username);

/// The Layer7-to-Layer3 translation state. One binding per IP at any instant;
/// a user may hold several IPs. Single-writer, see module docs.
class IdentityTable {
public:
    explicit IdentityTable(Duration lease = std::chrono::hours(10)) : lease_(lease) {}

    ChangeSummary apply_event(const SessionEvent& event, Timestamp now);
    ChangeSummary expire_stale(Timestamp now);
    std::vector<Ipv4> lookup_ips(std::string_view username) const;
    IdentitySnapshot snapshot() const;

    Duration lease() const { return lease_; }
    std::uint64_t version() const { return version_; }

private:
    Duration lease_;
    std::map<Ipv4, IdentityBinding> by_ip_;
    std::uint64_t version_ = 0;
};

}  // namespace idfw
