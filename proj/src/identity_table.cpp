#include "idfw/identity_table.hpp"

#include <algorithm>
#include <cctype>

namespace idfw {

std::string canonical_username(std::string_view username) {
    auto begin = username.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return {};
    auto end = username.find_last_not_of(" \t\r\n");
    std::string out(username.substr(begin, end - begin + 1));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

ChangeSummary IdentityTable::apply_event(const SessionEvent& event, [[maybe_unused]] Timestamp now) {
    ChangeSummary summary;
    if (event.kind == EventKind::FailedLogin) {
        return summary;  // correlation input only, never a binding
    }
    // Binding times derive from the event timestamp so replays are
    // deterministic under any wall clock.
    if (event.kind == EventKind::Login) {
        IdentityBinding binding{event.username, event.ip, event.ts, event.ts + lease_};
        auto it = by_ip_.find(event.ip);
        if (it == by_ip_.end()) {
            by_ip_.emplace(event.ip, binding);
            summary.added.push_back(binding);
        } else if (canonical_username(it->second.username) == canonical_username(event.username)) {
            it->second = binding;
            summary.replaced.push_back(binding);
        } else {
            // one user per IP: evict the stale holder
            summary.removed.push_back(it->second);
            it->second = binding;
            summary.added.push_back(binding);
        }
    } else {  // Logoff
        auto it = by_ip_.find(event.ip);
        if (it != by_ip_.end() &&
            canonical_username(it->second.username) == canonical_username(event.username)) {
            summary.removed.push_back(it->second);
            by_ip_.erase(it);
        }
    }
    if (!summary.empty()) ++version_;
    return summary;
}

ChangeSummary IdentityTable::expire_stale(Timestamp now) {
    ChangeSummary summary;
    for (auto it = by_ip_.begin(); it != by_ip_.end();) {
        if (it->second.lease_expiry <= now) {
            summary.removed.push_back(it->second);
            it = by_ip_.erase(it);
        } else {
            ++it;
        }
    }
    if (!summary.empty()) ++version_;
    return summary;
}

std::vector<Ipv4> IdentityTable::lookup_ips(std::string_view username) const {
    std::vector<Ipv4> ips;
    auto wanted = canonical_username(username);
    for (const auto& [ip, binding] : by_ip_) {
        if (canonical_username(binding.username) == wanted) ips.push_back(ip);
    }
    // map iteration is already ascending by numeric IP
    return ips;
}

IdentitySnapshot IdentityTable::snapshot() const {
    IdentitySnapshot snap;
    snap.version = version_;
    snap.bindings.reserve(by_ip_.size());
    for (const auto& [ip, binding] : by_ip_) snap.bindings.push_back(binding);
    return snap;
}

}  // namespace idfw
