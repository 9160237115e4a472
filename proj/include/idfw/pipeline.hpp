#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>
#include <variant>

#include "idfw/config.hpp"
#include "idfw/correlation.hpp"
#include "idfw/firewall_backend.hpp"
#include "idfw/identity_table.hpp"
#include "idfw/syslog_listener.hpp"

namespace idfw {

/// The event-driven loop: events flow source -> identity table / correlation
/// -> recompile -> install. One processing thread owns all mutable state;
/// ingestion sources enqueue, evaluate() is read from anywhere.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);
    ~Pipeline();

    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    /// Thread-safe enqueue from any source.
    void submit(SessionEvent event);
    void submit_raw(RawReplayRecord record);

    /// Start the processing thread (and the syslog listener when configured).
    void start();
    /// Drain the queue, flush the rule file, stop threads.
    void stop();

    /// Process a replay file inline on the calling thread. Only valid before
    /// start(); event timestamps drive the clock, so the result is
    /// deterministic. Returns the number of parse errors.
    std::size_t run_replay_sync(const std::string& path);

    /// One lease sweep at the given instant (the run loop calls this on the
    /// configured interval with the wall clock).
    void sweep(Timestamp now);

    /// Block until the queue is empty and the last event is fully applied.
    void drain();

    FirewallBackend& backend() { return backend_; }
    const MetaPolicy& policy() const { return policy_; }
    IdentitySnapshot table_snapshot();
    std::uint64_t install_count() const { return installs_.load(); }
    std::uint64_t event_count() const { return events_.load(); }
    std::uint64_t parse_error_count() const { return parse_errors_.load(); }
    std::uint64_t active_generation() const { return backend_.active_generation(); }

    /// Dump the current identity table as JSON (the `state` surface).
    std::string state_json();

private:
    struct QueueItem {
        std::variant<SessionEvent, RawReplayRecord> payload;
    };

    void process_loop();
    void handle(const QueueItem& item, Timestamp now);
    void handle_event(const SessionEvent& event, Timestamp now);
    void recompile_and_install(Timestamp now);
    void write_state_file();

    PipelineConfig config_;
    MetaPolicy policy_;
    IdentityTable table_;
    CorrelationEngine correlation_;
    FirewallBackend backend_;
    std::uint64_t generation_ = 0;
    std::vector<BlockedIp> last_blocks_;
    bool defer_installs_ = false;   // set while coalescing a batch window
    bool install_pending_ = false;

    std::mutex state_mutex_;  // guards table_/correlation_ for cross-thread reads

    std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::condition_variable drained_cv_;
    std::deque<QueueItem> queue_;
    bool stopping_ = false;
    bool idle_ = true;

    std::thread worker_;
    std::unique_ptr<SyslogListener> listener_;
    std::atomic<std::uint64_t> installs_{0};
    std::atomic<std::uint64_t> events_{0};
    std::atomic<std::uint64_t> parse_errors_{0};
};

}  // namespace idfw
