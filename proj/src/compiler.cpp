#include "idfw/compiler.hpp"

#include <algorithm>

namespace idfw {

namespace {

std::vector<Ipv4> snapshot_ips_for(const IdentitySnapshot& snapshot, std::string_view user) {
    std::vector<Ipv4> ips;
    auto wanted = canonical_username(user);
    for (const auto& binding : snapshot.bindings) {
        if (canonical_username(binding.username) == wanted) ips.push_back(binding.ip);
    }
    std::sort(ips.begin(), ips.end());
    return ips;
}

}  // namespace

ConcreteRuleset compile(const MetaPolicy& policy, const IdentitySnapshot& snapshot,
                        const std::vector<BlockedIp>& blocks, std::uint64_t generation,
                        Timestamp now) {
    ConcreteRuleset out;
    out.generation = generation;
    out.policy_version = policy.version;
    out.snapshot_version = snapshot.version;
    out.compiled_at = now;

    int priority = 10;
    auto push = [&](ConcreteRule rule) {
        rule.priority = priority;
        priority += 10;
        out.rules.push_back(std::move(rule));
    };

    // Tier 1: correlation blocks, sorted by IP. These must outrank any permit.
    std::vector<Ipv4> block_ips;
    for (const auto& block : blocks) block_ips.push_back(block.ip);
    std::sort(block_ips.begin(), block_ips.end());
    block_ips.erase(std::unique(block_ips.begin(), block_ips.end()), block_ips.end());
    for (Ipv4 ip : block_ips) {
        push({0, Action::Deny, Cidr::host(ip), Cidr::any(), Proto::Any, std::nullopt,
              kBlockRuleId, ""});
    }

    // Tier 2: meta rules in document order; identity rules expand per bound IP.
    for (const auto& rule : policy.rules) {
        if (const auto* ir = std::get_if<IdentityRule>(&rule)) {
            for (Ipv4 ip : snapshot_ips_for(snapshot, ir->user)) {
                push({0, ir->action, Cidr::host(ip), ir->destination, ir->service.proto,
                      ir->service.dport, ir->id, ir->user});
            }
        } else {
            const auto& l3 = std::get<L3Rule>(rule);
            push({0, l3.action, l3.source, l3.destination, l3.service.proto, l3.service.dport,
                  l3.id, ""});
        }
    }

    // Tier 3: catch-all default.
    push({0, policy.default_action, Cidr::any(), Cidr::any(), Proto::Any, std::nullopt,
          kDefaultRuleId, ""});
    return out;
}

std::optional<ConcreteRuleset> recompile_on_change(const ChangeSummary& change,
                                                   const MetaPolicy& policy,
                                                   const IdentityTable& table,
                                                   const std::vector<BlockedIp>& blocks,
                                                   std::uint64_t previous_generation,
                                                   Timestamp now) {
    if (change.empty()) return std::nullopt;
    return compile(policy, table.snapshot(), blocks, previous_generation + 1, now);
}

std::optional<ConcreteRuleset> recompile_on_change(const BlockChange& change,
                                                   const MetaPolicy& policy,
                                                   const IdentityTable& table,
                                                   const std::vector<BlockedIp>& blocks,
                                                   std::uint64_t previous_generation,
                                                   Timestamp now) {
    if (change.empty()) return std::nullopt;
    return compile(policy, table.snapshot(), blocks, previous_generation + 1, now);
}

std::string emit_rule_line(const ConcreteRule& rule) {
    std::string line = std::to_string(rule.priority);
    line += ' ';
    line += to_string(rule.action);
    line += " src " + rule.src.to_string();
    line += " dst " + rule.dst.to_string();
    line += " proto " + to_string(rule.proto);
    line += " dport " + (rule.dport ? std::to_string(*rule.dport) : std::string("any"));
    line += " # origin=" + rule.origin_rule_id;
    line += " user=" + (rule.origin_user.empty() ? std::string("-") : rule.origin_user);
    return line;
}

std::string emit_text(const ConcreteRuleset& ruleset) {
    std::string out;
    out += "# generation " + std::to_string(ruleset.generation) + "\n";
    out += "# policy_version " + std::to_string(ruleset.policy_version) + "\n";
    out += "# snapshot_version " + std::to_string(ruleset.snapshot_version) + "\n";
    out += "# compiled_at " + format_timestamp(ruleset.compiled_at) + "\n";
    for (const auto& rule : ruleset.rules) {
        out += emit_rule_line(rule);
        out += '\n';
    }
    return out;
}

}  // namespace idfw
