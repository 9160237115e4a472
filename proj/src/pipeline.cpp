#include "idfw/pipeline.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace idfw {

namespace {

Timestamp wall_now() {
    return std::chrono::time_point_cast<Duration>(Clock::now());
}

MetaPolicy load_policy_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IdfwError("cannot open policy file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    auto result = parse_meta_policy(buffer.str());
    if (auto* report = std::get_if<ValidationReport>(&result)) {
        std::string message = "policy " + path + " failed validation:";
        for (const auto& violation : report->violations) message += "\n  " + violation;
        throw IdfwError(message);
    }
    return std::get<MetaPolicy>(result);
}

std::vector<CorrelationRule> load_correlation_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IdfwError("cannot open correlation rules file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    auto result = load_correlation_rules(buffer.str());
    if (auto* report = std::get_if<ValidationReport>(&result)) {
        std::string message = "correlation rules " + path + " failed validation:";
        for (const auto& violation : report->violations) message += "\n  " + violation;
        throw IdfwError(message);
    }
    return std::get<std::vector<CorrelationRule>>(result);
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config)
    : config_(std::move(config)),
      policy_(load_policy_or_throw(config_.policy_path)),
      table_(config_.lease) {
    if (config_.correlation_rules_path) {
        correlation_ = CorrelationEngine(load_correlation_or_throw(*config_.correlation_rules_path));
    }
    // install the initial (empty-table) ruleset so evaluate() works from the
    // first instant
    recompile_and_install(wall_now());
}

Pipeline::~Pipeline() {
    stop();
}

void Pipeline::submit(SessionEvent event) {
    {
        std::lock_guard lock(queue_mutex_);
        queue_.push_back({std::move(event)});
        idle_ = false;
    }
    queue_cv_.notify_one();
}

void Pipeline::submit_raw(RawReplayRecord record) {
    {
        std::lock_guard lock(queue_mutex_);
        queue_.push_back({std::move(record)});
        idle_ = false;
    }
    queue_cv_.notify_one();
}

void Pipeline::start() {
    if (worker_.joinable()) return;
    {
        std::lock_guard lock(queue_mutex_);
        stopping_ = false;
    }
    worker_ = std::thread([this] { process_loop(); });
    if (config_.syslog_bind) {
        auto bind = split_host_port(*config_.syslog_bind);
        if (!bind) throw IdfwError("syslog.bind is not host:port: " + *config_.syslog_bind);
        listener_ = std::make_unique<SyslogListener>(
            bind->first, bind->second, config_.syslog_patterns,
            [this](SessionEvent event) { submit(std::move(event)); });
        listener_->start();
    }
}

void Pipeline::stop() {
    if (listener_) {
        listener_->stop();
        listener_.reset();
    }
    {
        std::lock_guard lock(queue_mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

void Pipeline::drain() {
    std::unique_lock lock(queue_mutex_);
    drained_cv_.wait(lock, [this] { return queue_.empty() && idle_; });
}

void Pipeline::process_loop() {
    const bool batching = config_.batch_window.count() > 0;
    for (;;) {
        std::vector<QueueItem> batch;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (queue_.empty()) {
                if (stopping_) return;
                continue;
            }
            if (batching) {
                // experimental coalescing: collect everything arriving inside
                // the window and install once
                auto deadline = std::chrono::steady_clock::now() + config_.batch_window;
                while (std::chrono::steady_clock::now() < deadline && !stopping_) {
                    queue_cv_.wait_until(lock, deadline);
                }
                batch.assign(std::make_move_iterator(queue_.begin()),
                             std::make_move_iterator(queue_.end()));
                queue_.clear();
            } else {
                batch.push_back(std::move(queue_.front()));
                queue_.pop_front();
            }
        }
        auto now = wall_now();
        if (batch.size() > 1) {
            {
                std::lock_guard lock(state_mutex_);
                defer_installs_ = true;
                install_pending_ = false;
            }
            for (const auto& item : batch) handle(item, now);
            std::lock_guard lock(state_mutex_);
            defer_installs_ = false;
            if (install_pending_) recompile_and_install(now);
            install_pending_ = false;
        } else {
            for (const auto& item : batch) handle(item, now);
        }
        {
            std::lock_guard lock(queue_mutex_);
            if (queue_.empty()) {
                idle_ = true;
                drained_cv_.notify_all();
            }
        }
    }
}

void Pipeline::handle(const QueueItem& item, Timestamp now) {
    try {
        if (const auto* event = std::get_if<SessionEvent>(&item.payload)) {
            handle_event(*event, now);
        } else {
            const auto& record = std::get<RawReplayRecord>(item.payload);
            std::lock_guard lock(state_mutex_);
            auto triggered = correlation_.observe_raw(record, now);
            if (!triggered.empty()) recompile_and_install(now);
        }
    } catch (const std::exception& e) {
        std::cerr << "idfw: event dropped: " << e.what() << "\n";
    }
}

void Pipeline::handle_event(const SessionEvent& event, Timestamp now) {
    events_.fetch_add(1);
    std::lock_guard lock(state_mutex_);
    ChangeSummary summary;
    if (event.kind != EventKind::FailedLogin) {
        summary = table_.apply_event(event, now);
    }
    auto triggered = correlation_.observe(event, now);
    if (!summary.empty() || !triggered.empty()) {
        recompile_and_install(now);
    }
}

void Pipeline::sweep(Timestamp now) {
    std::lock_guard lock(state_mutex_);
    auto summary = table_.expire_stale(now);
    auto blocks = correlation_.active_blocks(now);
    if (!summary.empty() || blocks != last_blocks_) {
        recompile_and_install(now);
    }
}

void Pipeline::recompile_and_install(Timestamp now) {
    if (defer_installs_) {
        install_pending_ = true;
        return;
    }
    last_blocks_ = correlation_.active_blocks(now);
    auto ruleset = compile(policy_, table_.snapshot(), last_blocks_, generation_ + 1, now);
    generation_ = ruleset.generation;
    if (config_.rule_file) write_rule_file(ruleset, *config_.rule_file);
    backend_.install(std::move(ruleset));
    installs_.fetch_add(1);
    write_state_file();
}

std::size_t Pipeline::run_replay_sync(const std::string& path) {
    if (worker_.joinable()) throw IdfwError("run_replay_sync is only valid before start()");
    std::ifstream in(path);
    if (!in) throw IdfwError("cannot open replay file " + path);
    std::size_t errors = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto raw = parse_raw_replay_line(line);
        if (auto* err = std::get_if<ParseError>(&raw)) {
            std::cerr << "idfw: replay: " << err->message << "\n";
            ++errors;
            parse_errors_.fetch_add(1);
            continue;
        }
        const auto& record = std::get<RawReplayRecord>(raw);
        // event time is the clock in replay mode, keeping runs deterministic
        auto kind = config_.id_map.kind_for(record.event_id);
        if (kind) {
            SessionEvent event{*kind, record.username, record.ip,
                               record.ts, record.source, record.event_id};
            handle_event(event, record.ts);
        } else {
            std::lock_guard lock(state_mutex_);
            auto triggered = correlation_.observe_raw(record, record.ts);
            if (!triggered.empty()) recompile_and_install(record.ts);
        }
    }
    return errors;
}

IdentitySnapshot Pipeline::table_snapshot() {
    std::lock_guard lock(state_mutex_);
    return table_.snapshot();
}

std::string Pipeline::state_json() {
    auto snapshot = table_snapshot();
    nlohmann::json doc;
    doc["version"] = snapshot.version;
    doc["bindings"] = nlohmann::json::array();
    for (const auto& binding : snapshot.bindings) {
        doc["bindings"].push_back({{"username", binding.username},
                                   {"ip", binding.ip.to_string()},
                                   {"login_ts", format_timestamp(binding.login_ts)},
                                   {"lease_expiry", format_timestamp(binding.lease_expiry)}});
    }
    return doc.dump(2);
}

void Pipeline::write_state_file() {
    if (!config_.state_file) return;
    auto snapshot = table_.snapshot();
    nlohmann::json doc;
    doc["version"] = snapshot.version;
    doc["bindings"] = nlohmann::json::array();
    for (const auto& binding : snapshot.bindings) {
        doc["bindings"].push_back({{"username", binding.username},
                                   {"ip", binding.ip.to_string()},
                                   {"login_ts", format_timestamp(binding.login_ts)},
                                   {"lease_expiry", format_timestamp(binding.lease_expiry)}});
    }
    std::string tmp = *config_.state_file + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << doc.dump(2) << "\n";
    }
    std::rename(tmp.c_str(), config_.state_file->c_str());
}

}  // namespace idfw
