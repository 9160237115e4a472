#pragma once

#include <string>
#include <vector>

#include "idfw/config.hpp"
#include "idfw/types.hpp"

namespace idfw {

struct BenchSample {
    int client_index = 0;
    Timestamp t_event;   // login event enqueued
    Timestamp t_active;  // first permitted probe query
    std::chrono::microseconds latency{0};
    bool failed = false;
};

struct BenchReport {
    int clients = 0;
    std::vector<BenchSample> samples;
    double avg_ms = 0.0;
    double total_serialized_ms = 0.0;  // avg * clients, the serialized-install figure
    int failed = 0;
    bool complete = true;
};

struct BenchOptions {
    Duration timeout = std::chrono::seconds(10);
    Duration poll_interval = std::chrono::milliseconds(1);
    Duration batch_window{0};
};

/// Measure login-to-policy-active latency: emit one login per synthetic
/// client, poll the backend with that client's probe query until it permits.
BenchReport run_bench(int clients, const BenchOptions& options = {});

std::string bench_csv(const std::vector<BenchReport>& reports);
void emit_bench_csv(const std::vector<BenchReport>& reports, const std::string& path);

/// Literature averages for the solutions the measurements are compared
/// against (seconds): classic firewall and agent-based identity firewall.
inline constexpr double kClassicAvgSeconds = 120.0;
inline constexpr double kAgentAvgSeconds = 7.0;

/// Reference-comparison CSV: measured averages next to the literature
/// constants, totals = avg * clients throughout.
std::string reference_csv(const std::vector<BenchReport>& reports);

}  // namespace idfw
