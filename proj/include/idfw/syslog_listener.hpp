#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>

#include "idfw/event_ingest.hpp"

namespace idfw {

/// UDP syslog receiver. Binds at construction (bind failure throws), runs a
/// reader thread until stop(). Datagrams above 8 KiB are truncated per the
/// transport contract.
class SyslogListener {
public:
    using Sink = std::function<void(SessionEvent)>;

    SyslogListener(const std::string& host, std::uint16_t port,
                   std::vector<SyslogPattern> patterns, Sink sink);
    ~SyslogListener();

    SyslogListener(const SyslogListener&) = delete;
    SyslogListener& operator=(const SyslogListener&) = delete;

    void start();
    void stop();

    /// Port actually bound (useful when constructed with port 0).
    std::uint16_t port() const { return port_; }
    std::uint64_t error_count() const { return errors_.load(); }
    std::uint64_t skip_count() const { return skips_.load(); }

private:
    void run();

    int fd_ = -1;
    std::uint16_t port_ = 0;
    std::vector<SyslogPattern> patterns_;
    Sink sink_;
    std::thread thread_;
    std::atomic<bool> running_{false};
    std::atomic<std::uint64_t> errors_{0};
    std::atomic<std::uint64_t> skips_{0};
};

}  // namespace idfw
