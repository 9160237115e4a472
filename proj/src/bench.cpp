#include "idfw/bench.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

#include "idfw/pipeline.hpp"

namespace idfw {

namespace {

Timestamp wall_now() {
    return std::chrono::time_point_cast<Duration>(Clock::now());
}

Ipv4 client_ip(int index) {
    return Ipv4((10u << 24) | (100u << 16) | static_cast<std::uint32_t>(index + 1));
}

constexpr const char* kProbeDst = "10.200.0.1";
constexpr std::uint16_t kProbePort = 443;

/// One identity rule per synthetic client, all pointed at the probe host.
/// Index -1 is the warmup client exercised before measurement starts.
std::string bench_policy_xml(int clients) {
    std::string xml = "<metapolicy version=\"1\">\n";
    for (int i = -1; i < clients; ++i) {
        std::string id = i < 0 ? "warmup" : "bench" + std::to_string(i);
        std::string user = i < 0 ? "warmup" : "user" + std::to_string(i);
        xml += "  <identity-rule id=\"" + id + "\" action=\"permit\">\n";
        xml += "    <user>" + user + "</user>\n";
        xml += "    <destination>" + std::string(kProbeDst) + "/32</destination>\n";
        xml += "    <service proto=\"tcp\" port=\"" + std::to_string(kProbePort) + "\"/>\n";
        xml += "  </identity-rule>\n";
    }
    xml += "  <default action=\"deny\"/>\n</metapolicy>\n";
    return xml;
}

double mean_ms(const std::vector<BenchSample>& samples) {
    double sum = 0.0;
    int counted = 0;
    for (const auto& sample : samples) {
        if (sample.failed) continue;
        sum += static_cast<double>(sample.latency.count()) / 1000.0;
        ++counted;
    }
    return counted == 0 ? 0.0 : sum / counted;
}

}  // namespace

BenchReport run_bench(int clients, const BenchOptions& options) {
    if (clients < 1) throw IdfwError("bench needs at least one client");

    auto policy_path = std::filesystem::temp_directory_path() /
                       ("idfw-bench-policy-" + std::to_string(::getpid()) + ".xml");
    {
        std::ofstream out(policy_path);
        out << bench_policy_xml(clients);
    }

    PipelineConfig config;
    config.policy_path = policy_path.string();
    config.batch_window = options.batch_window;
    Pipeline pipeline(std::move(config));
    pipeline.start();

    BenchReport report;
    report.clients = clients;
    Ipv4 probe_dst = *Ipv4::parse(kProbeDst);

    auto measure = [&](const std::string& user, Ipv4 src) {
        BenchSample sample;
        sample.t_event = wall_now();
        auto t0 = std::chrono::steady_clock::now();

        pipeline.submit({EventKind::Login, user, src, sample.t_event, "bench", std::nullopt});

        PacketQuery probe{src, probe_dst, Proto::Tcp, kProbePort};
        auto deadline = t0 + options.timeout;
        for (;;) {
            // a real external prober only observes state at poll ticks, so the
            // first check happens one interval after the login was sent
            std::this_thread::sleep_for(options.poll_interval);
            auto now = std::chrono::steady_clock::now();
            if (now >= deadline) {
                sample.failed = true;
                break;
            }
            try {
                if (pipeline.backend().evaluate(probe).action == Action::Permit) {
                    sample.t_active = wall_now();
                    sample.latency =
                        std::chrono::duration_cast<std::chrono::microseconds>(now - t0);
                    break;
                }
            } catch (const NoPolicy&) {
                // nothing installed yet; keep polling
            }
        }
        return sample;
    };

    // untimed warmup: pulls the worker thread, allocator, and backend paths
    // into a steady state before the first measured client
    measure("warmup", *Ipv4::parse("10.100.200.1"));

    for (int i = 0; i < clients; ++i) {
        BenchSample sample = measure("user" + std::to_string(i), client_ip(i));
        sample.client_index = i;
        if (sample.failed) {
            ++report.failed;
            report.complete = false;
        }
        report.samples.push_back(sample);
    }

    pipeline.stop();
    std::filesystem::remove(policy_path);

    report.avg_ms = mean_ms(report.samples);
    report.total_serialized_ms = report.avg_ms * clients;
    return report;
}

std::string bench_csv(const std::vector<BenchReport>& reports) {
    std::string out = "clients,avg_ms,total_ms,failed\n";
    char row[128];
    for (const auto& report : reports) {
        std::snprintf(row, sizeof(row), "%d,%.3f,%.3f,%d\n", report.clients, report.avg_ms,
                      report.total_serialized_ms, report.failed);
        out += row;
    }
    return out;
}

void emit_bench_csv(const std::vector<BenchReport>& reports, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IdfwError("cannot open bench CSV for writing: " + path);
    out << bench_csv(reports);
    if (!out) throw IdfwError("write failed for bench CSV: " + path);
}

std::string reference_csv(const std::vector<BenchReport>& reports) {
    // classic/agent columns are literature constants, not measurements
    std::string out =
        "clients,measured_avg_s,measured_total_s,"
        "agent_avg_s_literature,agent_total_s,classic_avg_s_literature,classic_total_s\n";
    char row[192];
    for (const auto& report : reports) {
        double avg_s = report.avg_ms / 1000.0;
        std::snprintf(row, sizeof(row), "%d,%.4f,%.4f,%.1f,%.1f,%.1f,%.1f\n", report.clients,
                      avg_s, avg_s * report.clients, kAgentAvgSeconds,
                      kAgentAvgSeconds * report.clients, kClassicAvgSeconds,
                      kClassicAvgSeconds * report.clients);
        out += row;
    }
    return out;
}

}  // namespace idfw
