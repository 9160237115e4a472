#pragma once

#include <string>
#include <variant>
#include <vector>

#include "idfw/types.hpp"

namespace idfw {

/// Rule keyed by user identity; the source CIDR is resolved at compile time
/// from the identity table.
struct IdentityRule {
    std::string id;
    Action action = Action::Permit;
    std::string user;
    Cidr destination;
    Service service;

    bool operator==(const IdentityRule&) const = default;
};

/// Plain L3 rule for guests and unauthenticated devices.
struct L3Rule {
    std::string id;
    Action action = Action::Permit;
    Cidr source;
    Cidr destination;
    Service service;

    bool operator==(const L3Rule&) const = default;
};

using MetaRule = std::variant<IdentityRule, L3Rule>;

/// Ordered template policy; document order defines match priority after
/// compilation.
struct MetaPolicy {
    int version = 1;
    std::vector<MetaRule> rules;
    Action default_action = Action::Deny;

    bool operator==(const MetaPolicy&) const = default;
};

struct ValidationReport {
    std::vector<std::string> violations;
};

using PolicyParseResult = std::variant<MetaPolicy, ValidationReport>;

PolicyParseResult parse_meta_policy(const std::string& document);

/// Canonical XML rendering; parse(emit(p)) == p.
std::string emit_meta_policy_xml(const MetaPolicy& policy);

/// Lint pass: one warning per identity rule whose user is unknown.
std::vector<std::string> validate_against_directory(const MetaPolicy& policy,
                                                    const std::vector<std::string>& known_users);

const std::string& rule_id(const MetaRule& rule);

}  // namespace idfw
