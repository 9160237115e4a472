#include "idfw/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace idfw {

namespace {

Duration get_duration(const nlohmann::json& obj, const char* key, Duration fallback) {
    if (!obj.contains(key)) return fallback;
    auto text = obj.at(key).get<std::string>();
    auto parsed = parse_duration(text);
    if (!parsed) throw IdfwError(std::string("config: bad duration for ") + key + ": " + text);
    return *parsed;
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    PipelineConfig config;

    if (doc.contains("replay")) {
        const auto& replay = doc.at("replay");
        if (replay.contains("path")) config.replay_path = replay.at("path").get<std::string>();
    }
    if (doc.contains("syslog")) {
        const auto& syslog = doc.at("syslog");
        if (syslog.contains("bind")) config.syslog_bind = syslog.at("bind").get<std::string>();
        if (syslog.contains("patterns")) {
            config.syslog_patterns.clear();
            for (const auto& entry : syslog.at("patterns")) {
                auto kind = parse_event_kind(entry.at("kind").get<std::string>());
                if (!kind) {
                    throw IdfwError("config: unknown syslog pattern kind: " +
                                    entry.at("kind").get<std::string>());
                }
                config.syslog_patterns.push_back(make_syslog_pattern(
                    entry.at("name").get<std::string>(), entry.at("regex").get<std::string>(),
                    *kind));
            }
        }
    }
    if (doc.contains("eventlog") && doc.at("eventlog").contains("id_map")) {
        const auto& map = doc.at("eventlog").at("id_map");
        if (map.contains("login")) config.id_map.login = map.at("login").get<std::vector<int>>();
        if (map.contains("logoff")) config.id_map.logoff = map.at("logoff").get<std::vector<int>>();
        if (map.contains("failed")) config.id_map.failed = map.at("failed").get<std::vector<int>>();
    }
    if (doc.contains("identity")) {
        const auto& identity = doc.at("identity");
        config.lease = get_duration(identity, "lease", config.lease);
        config.sweep_interval = get_duration(identity, "sweep_interval", config.sweep_interval);
        if (identity.contains("state_file")) {
            config.state_file = identity.at("state_file").get<std::string>();
        }
    }
    if (doc.contains("policy") && doc.at("policy").contains("path")) {
        config.policy_path = doc.at("policy").at("path").get<std::string>();
    }
    if (doc.contains("correlation") && doc.at("correlation").contains("rules_path")) {
        config.correlation_rules_path = doc.at("correlation").at("rules_path").get<std::string>();
    }
    if (doc.contains("installer") && doc.at("installer").contains("rule_file")) {
        config.rule_file = doc.at("installer").at("rule_file").get<std::string>();
    }
    if (doc.contains("bench")) {
        const auto& bench = doc.at("bench");
        config.bench_timeout = get_duration(bench, "timeout", config.bench_timeout);
        config.bench_poll_interval =
            get_duration(bench, "poll_interval", config.bench_poll_interval);
        config.batch_window = get_duration(bench, "batch_window", config.batch_window);
    }
    return config;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IdfwError("cannot open config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

std::vector<std::string> PipelineConfig::validate() const {
    std::vector<std::string> problems;
    auto require_file = [&](const std::optional<std::string>& path, const char* what) {
        if (path && !std::filesystem::exists(*path)) {
            problems.push_back(std::string(what) + " does not exist: " + *path);
        }
    };
    if (policy_path.empty()) {
        problems.push_back("policy.path is required");
    } else if (!std::filesystem::exists(policy_path)) {
        problems.push_back("policy file does not exist: " + policy_path);
    }
    require_file(replay_path, "replay file");
    require_file(correlation_rules_path, "correlation rules file");
    if (lease.count() <= 0) problems.push_back("identity.lease must be positive");
    if (sweep_interval.count() <= 0) problems.push_back("identity.sweep_interval must be positive");
    if (bench_timeout.count() <= 0) problems.push_back("bench.timeout must be positive");
    if (bench_poll_interval.count() <= 0) {
        problems.push_back("bench.poll_interval must be positive");
    }
    if (syslog_bind && !split_host_port(*syslog_bind)) {
        problems.push_back("syslog.bind is not host:port: " + *syslog_bind);
    }
    return problems;
}

std::optional<std::pair<std::string, std::uint16_t>> split_host_port(const std::string& text) {
    auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= text.size()) return std::nullopt;
    try {
        int port = std::stoi(text.substr(colon + 1));
        if (port < 0 || port > 65535) return std::nullopt;
        return std::make_pair(text.substr(0, colon), static_cast<std::uint16_t>(port));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace idfw
