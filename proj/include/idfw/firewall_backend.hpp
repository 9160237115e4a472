#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "idfw/compiler.hpp"
#include "idfw/types.hpp"

namespace idfw {

struct PacketQuery {
    Ipv4 src;
    Ipv4 dst;
    Proto proto = Proto::Tcp;  // concrete: tcp or udp, never any
    std::uint16_t dport = 0;
};

struct Decision {
    Action action = Action::Deny;
    int matched_priority = 0;
    std::string origin_rule_id;
    std::uint64_t generation = 0;

    bool operator==(const Decision&) const = default;
};

struct InstallReceipt {
    std::uint64_t generation = 0;
    Timestamp ts;
};

struct StaleGeneration : IdfwError {
    using IdfwError::IdfwError;
};
struct NoPolicy : IdfwError {
    using IdfwError::IdfwError;
};

bool rule_matches(const ConcreteRule& rule, const PacketQuery& query);

/// First-match evaluation over a sorted ruleset; the compiled default
/// guarantees a match.
Decision evaluate_ruleset(const ConcreteRuleset& ruleset, const PacketQuery& query);

/// In-memory enforcement point. install() swaps the active ruleset atomically;
/// evaluate() is callable concurrently and always sees exactly one generation.
class FirewallBackend {
public:
    InstallReceipt install(ConcreteRuleset ruleset);
    Decision evaluate(const PacketQuery& query) const;
    std::uint64_t active_generation() const;  // 0 = nothing installed

private:
    mutable std::mutex mutex_;  // guards the pointer swap only
    std::shared_ptr<const ConcreteRuleset> active_;
};

/// emit_text output written via temp file + rename; the previous file stays
/// intact if the write dies partway.
void write_rule_file(const ConcreteRuleset& ruleset, const std::string& path);

/// Parse a rule file written by write_rule_file (offline `query` mode).
ConcreteRuleset parse_rule_file(const std::string& path);

}  // namespace idfw
