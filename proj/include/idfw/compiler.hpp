#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "idfw/identity_table.hpp"
#include "idfw/meta_policy.hpp"
#include "idfw/types.hpp"

namespace idfw {

inline constexpr const char* kBlockRuleId = "__block__";
inline constexpr const char* kDefaultRuleId = "__default__";

/// Active correlation block handed to the compiler as tier-1 input.
struct BlockedIp {
    Ipv4 ip;
    Timestamp expires;

    bool operator==(const BlockedIp&) const = default;
};

struct ConcreteRule {
    int priority = 0;  // ascending = earlier match
    Action action = Action::Deny;
    Cidr src;
    Cidr dst;
    Proto proto = Proto::Any;
    std::optional<std::uint16_t> dport;  // nullopt = any
    std::string origin_rule_id;
    std::string origin_user;  // empty = not identity-derived

    bool operator==(const ConcreteRule&) const = default;
};

struct ConcreteRuleset {
    std::vector<ConcreteRule> rules;  // sorted strictly ascending by priority
    std::uint64_t generation = 0;
    int policy_version = 0;
    std::uint64_t snapshot_version = 0;
    Timestamp compiled_at;

    bool operator==(const ConcreteRuleset&) const = default;
};

/// Join policy + identity snapshot + active blocks into a concrete ruleset.
/// Tier order: block denies, meta rules in document order (identity rules
/// expanded per bound IP), then the default catch-all. Pure function.
ConcreteRuleset compile(const MetaPolicy& policy, const IdentitySnapshot& snapshot,
                        const std::vector<BlockedIp>& blocks, std::uint64_t generation,
                        Timestamp now);

struct BlockChange {
    std::vector<BlockedIp> added;
    std::vector<BlockedIp> removed;

    bool empty() const { return added.empty() && removed.empty(); }
};

/// Change-detection + full recompile. Returns nullopt (Unchanged) for an
/// empty change summary; otherwise a fresh compile at previous_generation+1.
std::optional<ConcreteRuleset> recompile_on_change(const ChangeSummary& change,
                                                   const MetaPolicy& policy,
                                                   const IdentityTable& table,
                                                   const std::vector<BlockedIp>& blocks,
                                                   std::uint64_t previous_generation,
                                                   Timestamp now);
std::optional<ConcreteRuleset> recompile_on_change(const BlockChange& change,
                                                   const MetaPolicy& policy,
                                                   const IdentityTable& table,
                                                   const std::vector<BlockedIp>& blocks,
                                                   std::uint64_t previous_generation,
                                                   Timestamp now);

/// Deterministic line-per-rule rendering; byte-identical for equal rulesets.
std::string emit_text(const ConcreteRuleset& ruleset);

/// Render one rule in the emitted grammar (no trailing newline).
std::string emit_rule_line(const ConcreteRule& rule);

}  // namespace idfw
