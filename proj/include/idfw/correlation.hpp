#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "idfw/compiler.hpp"
#include "idfw/event_ingest.hpp"
#include "idfw/meta_policy.hpp"
#include "idfw/types.hpp"

namespace idfw {

/// Predicate over an observed event; at least one field must be constrained.
struct EventPredicate {
    std::optional<EventKind> kind;  // nullopt = any kind
    std::optional<int> event_id;
    std::optional<std::string> username;

    bool constrained() const { return kind || event_id || username; }
};

struct SequenceStep {
    EventPredicate predicate;
    std::optional<Duration> max_gap;  // gap from the previous matched step; none on step 1
};

struct CorrelationRule {
    enum class Mode { Threshold, Sequence };

    std::string id;
    Mode mode = Mode::Threshold;
    // Threshold: steps.front().predicate, count, window
    // Sequence: the ordered steps
    std::vector<SequenceStep> steps;
    int count = 0;
    Duration window{0};
    Duration block_duration{std::chrono::minutes(15)};
};

struct BlockEntry {
    Ipv4 ip;
    Timestamp expires;
    std::string rule_id;

    bool operator==(const BlockEntry&) const = default;
};

using CorrelationParseResult = std::variant<std::vector<CorrelationRule>, ValidationReport>;

CorrelationParseResult load_correlation_rules(const std::string& document);

/// Sliding-window threshold and step-sequence matcher, keyed by source IP.
class CorrelationEngine {
public:
    explicit CorrelationEngine(std::vector<CorrelationRule> rules) : rules_(std::move(rules)) {}
    CorrelationEngine() = default;

    /// Feed one normalized event; returns blocks triggered by it.
    std::vector<BlockEntry> observe(const SessionEvent& event, Timestamp now);

    /// Feed a replay record whose event id maps to no session kind. These
    /// still drive event-id predicates (service warnings and the like).
    std::vector<BlockEntry> observe_raw(const RawReplayRecord& record, Timestamp now);

    /// Non-expired blocks, deduplicated by IP (latest expiry wins).
    std::vector<BlockedIp> active_blocks(Timestamp now) const;

    const std::vector<CorrelationRule>& rules() const { return rules_; }

private:
    struct MatchEvent {
        std::optional<EventKind> kind;
        std::optional<int> event_id;
        std::string username;
        Ipv4 ip;
        Timestamp ts;
    };

    struct ThresholdState {
        std::vector<Timestamp> hits;
    };
    struct SequenceState {
        std::size_t next_step = 0;
        Timestamp last_match_ts;
    };

    std::vector<BlockEntry> feed(const MatchEvent& event, Timestamp now);
    static bool matches(const EventPredicate& predicate, const MatchEvent& event);

    std::vector<CorrelationRule> rules_;
    std::map<std::pair<std::string, Ipv4>, ThresholdState> threshold_state_;
    std::map<std::pair<std::string, Ipv4>, SequenceState> sequence_state_;
    std::vector<BlockEntry> blocks_;
};

}  // namespace idfw
