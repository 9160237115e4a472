#include "idfw/firewall_backend.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace idfw {

bool rule_matches(const ConcreteRule& rule, const PacketQuery& query) {
    if (!rule.src.contains(query.src)) return false;
    if (!rule.dst.contains(query.dst)) return false;
    if (rule.proto != Proto::Any && rule.proto != query.proto) return false;
    if (rule.dport && *rule.dport != query.dport) return false;
    return true;
}

Decision evaluate_ruleset(const ConcreteRuleset& ruleset, const PacketQuery& query) {
    for (const auto& rule : ruleset.rules) {
        if (rule_matches(rule, query)) {
            return Decision{rule.action, rule.priority, rule.origin_rule_id, ruleset.generation};
        }
    }
    // compiled rulesets always end in a catch-all; reaching here means the
    // ruleset was built by hand without one
    throw IdfwError("ruleset has no matching rule (missing default)");
}

InstallReceipt FirewallBackend::install(ConcreteRuleset ruleset) {
    auto fresh = std::make_shared<const ConcreteRuleset>(std::move(ruleset));
    std::lock_guard lock(mutex_);
    if (active_ && fresh->generation <= active_->generation) {
        throw StaleGeneration("install of generation " + std::to_string(fresh->generation) +
                              " while generation " + std::to_string(active_->generation) +
                              " is active");
    }
    active_ = std::move(fresh);
    return InstallReceipt{active_->generation,
                          std::chrono::time_point_cast<Duration>(Clock::now())};
}

Decision FirewallBackend::evaluate(const PacketQuery& query) const {
    std::shared_ptr<const ConcreteRuleset> ruleset;
    {
        std::lock_guard lock(mutex_);
        ruleset = active_;
    }
    if (!ruleset) throw NoPolicy("no ruleset installed");
    return evaluate_ruleset(*ruleset, query);
}

std::uint64_t FirewallBackend::active_generation() const {
    std::lock_guard lock(mutex_);
    return active_ ? active_->generation : 0;
}

void write_rule_file(const ConcreteRuleset& ruleset, const std::string& path) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        if (!out) throw IdfwError("cannot open " + tmp + " for writing");
        out << emit_text(ruleset);
        out.flush();
        if (!out) throw IdfwError("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw IdfwError("rename " + tmp + " -> " + path + ": " + std::strerror(errno));
    }
}

ConcreteRuleset parse_rule_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IdfwError("cannot open rule file " + path);
    ConcreteRuleset ruleset;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream header(line);
            std::string hash, key, value;
            header >> hash >> key >> value;
            if (key == "generation") ruleset.generation = std::stoull(value);
            else if (key == "policy_version") ruleset.policy_version = std::stoi(value);
            else if (key == "snapshot_version") ruleset.snapshot_version = std::stoull(value);
            else if (key == "compiled_at") {
                if (auto ts = parse_timestamp(value)) ruleset.compiled_at = *ts;
            }
            continue;
        }
        std::istringstream fields(line);
        ConcreteRule rule;
        std::string action, kw, src, dst, proto, dport;
        fields >> rule.priority >> action >> kw >> src >> kw >> dst >> kw >> proto >> kw >> dport;
        if (!fields) throw IdfwError("malformed rule line: " + line);
        auto parsed_action = parse_action(action);
        auto parsed_src = Cidr::parse(src);
        auto parsed_dst = Cidr::parse(dst);
        auto parsed_proto = parse_proto(proto);
        if (!parsed_action || !parsed_src || !parsed_dst || !parsed_proto) {
            throw IdfwError("malformed rule line: " + line);
        }
        rule.action = *parsed_action;
        rule.src = *parsed_src;
        rule.dst = *parsed_dst;
        rule.proto = *parsed_proto;
        if (dport != "any") rule.dport = static_cast<std::uint16_t>(std::stoi(dport));
        std::string token;
        while (fields >> token) {
            if (token.rfind("origin=", 0) == 0) rule.origin_rule_id = token.substr(7);
            else if (token.rfind("user=", 0) == 0 && token != "user=-") {
                rule.origin_user = token.substr(5);
            }
        }
        ruleset.rules.push_back(std::move(rule));
    }
    return ruleset;
}

}  // namespace idfw
