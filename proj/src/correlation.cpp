#include "idfw/correlation.hpp"

#include <algorithm>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

namespace idfw {

namespace pt = boost::property_tree;

namespace {

std::optional<EventPredicate> parse_match_node(const pt::ptree& node, const std::string& rule_id,
                                               std::vector<std::string>& violations) {
    EventPredicate predicate;
    if (auto kind_text = node.get_optional<std::string>("<xmlattr>.kind")) {
        auto kind = parse_event_kind(*kind_text);
        if (!kind) {
            violations.push_back("rule '" + rule_id + "': unknown event kind '" + *kind_text + "'");
            return std::nullopt;
        }
        predicate.kind = kind;
    }
    if (auto id_text = node.get_optional<int>("<xmlattr>.event-id")) {
        predicate.event_id = *id_text;
    }
    if (auto user = node.get_optional<std::string>("<xmlattr>.user")) {
        predicate.username = *user;
    }
    if (!predicate.constrained()) {
        violations.push_back("rule '" + rule_id + "': <match> constrains nothing");
        return std::nullopt;
    }
    return predicate;
}

std::optional<Duration> parse_duration_attr(const pt::ptree& node, const std::string& attr,
                                            const std::string& rule_id,
                                            std::vector<std::string>& violations) {
    auto text = node.get_optional<std::string>("<xmlattr>." + attr);
    if (!text) return std::nullopt;
    auto duration = parse_duration(*text);
    if (!duration || duration->count() <= 0) {
        violations.push_back("rule '" + rule_id + "': bad " + attr + " '" + *text + "'");
        return std::nullopt;
    }
    return duration;
}

}  // namespace

CorrelationParseResult load_correlation_rules(const std::string& document) {
    pt::ptree tree;
    std::istringstream stream(document);
    try {
        pt::read_xml(stream, tree);
    } catch (const pt::xml_parser_error& e) {
        return ValidationReport{{std::string("XML parse error: ") + e.what()}};
    }
    auto root = tree.get_child_optional("correlation");
    if (!root) return ValidationReport{{"missing <correlation> root element"}};

    std::vector<CorrelationRule> rules;
    std::vector<std::string> violations;
    std::vector<std::string> seen_ids;

    for (const auto& [name, node] : *root) {
        if (name == "<xmlattr>") continue;
        if (name != "rule") {
            violations.push_back("unknown element <" + name + ">");
            continue;
        }
        auto id = node.get_optional<std::string>("<xmlattr>.id");
        if (!id || id->empty()) {
            violations.push_back("<rule> without an id attribute");
            continue;
        }
        if (std::find(seen_ids.begin(), seen_ids.end(), *id) != seen_ids.end()) {
            violations.push_back("duplicate rule id '" + *id + "'");
            continue;
        }
        seen_ids.push_back(*id);

        CorrelationRule rule;
        rule.id = *id;
        if (auto block = parse_duration_attr(node, "block", *id, violations)) {
            rule.block_duration = *block;
        }

        auto mode = node.get<std::string>("<xmlattr>.mode", "");
        if (mode == "threshold") {
            rule.mode = CorrelationRule::Mode::Threshold;
            rule.count = node.get<int>("<xmlattr>.count", 0);
            if (rule.count < 2) {
                violations.push_back("rule '" + *id + "': threshold count must be >= 2");
            }
            auto window = parse_duration_attr(node, "window", *id, violations);
            if (!window) {
                violations.push_back("rule '" + *id + "': threshold needs a window");
            } else {
                rule.window = *window;
            }
            auto match = node.get_child_optional("match");
            if (!match) {
                violations.push_back("rule '" + *id + "': threshold needs a <match>");
            } else if (auto predicate = parse_match_node(*match, *id, violations)) {
                rule.steps.push_back({*predicate, std::nullopt});
            }
        } else if (mode == "sequence") {
            rule.mode = CorrelationRule::Mode::Sequence;
            bool first = true;
            for (const auto& [child_name, child] : node) {
                if (child_name != "step") continue;
                SequenceStep step;
                auto match = child.get_child_optional("match");
                if (!match) {
                    violations.push_back("rule '" + *id + "': step without a <match>");
                    continue;
                }
                auto predicate = parse_match_node(*match, *id, violations);
                if (!predicate) continue;
                step.predicate = *predicate;
                step.max_gap = parse_duration_attr(child, "max-gap", *id, violations);
                if (first && step.max_gap) {
                    violations.push_back("rule '" + *id + "': first step cannot have max-gap");
                }
                first = false;
                rule.steps.push_back(std::move(step));
            }
            if (rule.steps.size() < 2) {
                violations.push_back("rule '" + *id + "': sequence needs at least 2 steps");
            }
        } else {
            violations.push_back("rule '" + *id + "': unknown mode '" + mode + "'");
            continue;
        }
        rules.push_back(std::move(rule));
    }

    if (!violations.empty()) return ValidationReport{std::move(violations)};
    return rules;
}

bool CorrelationEngine::matches(const EventPredicate& predicate, const MatchEvent& event) {
    if (predicate.kind && event.kind != predicate.kind) return false;
    if (predicate.event_id && event.event_id != predicate.event_id) return false;
    if (predicate.username &&
        canonical_username(event.username) != canonical_username(*predicate.username)) {
        return false;
    }
    return true;
}

std::vector<BlockEntry> CorrelationEngine::feed(const MatchEvent& event, Timestamp now) {
    std::vector<BlockEntry> triggered;
    for (const auto& rule : rules_) {
        auto key = std::make_pair(rule.id, event.ip);
        if (rule.mode == CorrelationRule::Mode::Threshold) {
            if (!matches(rule.steps.front().predicate, event)) continue;
            auto& state = threshold_state_[key];
            state.hits.push_back(event.ts);
            // drop hits that fell out of the window ending at this event
            std::erase_if(state.hits,
                          [&](Timestamp hit) { return event.ts - hit > rule.window; });
            if (static_cast<int>(state.hits.size()) >= rule.count) {
                triggered.push_back({event.ip, now + rule.block_duration, rule.id});
                state.hits.clear();  // window resets after firing
            }
        } else {
            auto& state = sequence_state_[key];
            if (state.next_step > 0) {
                const auto& step = rule.steps[state.next_step];
                if (matches(step.predicate, event)) {
                    bool gap_ok = !step.max_gap || event.ts - state.last_match_ts <= *step.max_gap;
                    if (gap_ok) {
                        state.last_match_ts = event.ts;
                        if (++state.next_step == rule.steps.size()) {
                            triggered.push_back({event.ip, now + rule.block_duration, rule.id});
                            state.next_step = 0;
                        }
                        continue;
                    }
                    state.next_step = 0;  // gap violated; fall through to step 1
                } else {
                    continue;  // unrelated event, cursor holds
                }
            }
            if (matches(rule.steps.front().predicate, event)) {
                state.next_step = 1;
                state.last_match_ts = event.ts;
            }
        }
    }
    blocks_.insert(blocks_.end(), triggered.begin(), triggered.end());
    if (blocks_.size() > 4096) {
        std::erase_if(blocks_, [&](const BlockEntry& b) { return b.expires <= now; });
    }
    return triggered;
}

std::vector<BlockEntry> CorrelationEngine::observe(const SessionEvent& event, Timestamp now) {
    return feed({event.kind, event.event_id, event.username, event.ip, event.ts}, now);
}

std::vector<BlockEntry> CorrelationEngine::observe_raw(const RawReplayRecord& record,
                                                       Timestamp now) {
    return feed({std::nullopt, record.event_id, record.username, record.ip, record.ts}, now);
}

std::vector<BlockedIp> CorrelationEngine::active_blocks(Timestamp now) const {
    std::map<Ipv4, Timestamp> latest;
    for (const auto& block : blocks_) {
        if (block.expires <= now) continue;
        auto [it, inserted] = latest.try_emplace(block.ip, block.expires);
        if (!inserted && block.expires > it->second) it->second = block.expires;
    }
    std::vector<BlockedIp> out;
    out.reserve(latest.size());
    for (const auto& [ip, expires] : latest) out.push_back({ip, expires});
    return out;
}

}  // namespace idfw
