#pragma once

#include <optional>
#include <string>
#include <vector>

#include "idfw/event_ingest.hpp"
#include "idfw/types.hpp"

namespace idfw {

/// Everything the daemon needs, merged from the JSON config file and CLI flag
/// overrides (flags win).
struct PipelineConfig {
    // event_ingest
    std::optional<std::string> replay_path;
    std::optional<std::string> syslog_bind;  // "host:port"
    std::vector<SyslogPattern> syslog_patterns = default_syslog_patterns();
    EventIdMap id_map;

    // identity_table
    Duration lease = std::chrono::hours(10);
    Duration sweep_interval = std::chrono::seconds(30);
    std::optional<std::string> state_file;

    // policy / correlation
    std::string policy_path;
    std::optional<std::string> correlation_rules_path;

    // installer
    std::optional<std::string> rule_file;

    // bench
    Duration bench_timeout = std::chrono::seconds(10);
    Duration bench_poll_interval = std::chrono::milliseconds(1);
    Duration batch_window{0};  // experimental install coalescing, 0 = off

    static PipelineConfig from_file(const std::string& path);
    static PipelineConfig from_json_text(const std::string& text);

    /// Checks referenced files exist and durations are positive; returns the
    /// list of problems (empty = valid).
    std::vector<std::string> validate() const;
};

std::optional<std::pair<std::string, std::uint16_t>> split_host_port(const std::string& text);

}  // namespace idfw
