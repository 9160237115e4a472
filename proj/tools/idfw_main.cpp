#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "idfw/bench.hpp"
#include "idfw/pipeline.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void on_interrupt(int) {
    g_interrupted.store(true);
}

idfw::PipelineConfig load_config(const std::string& flag_path) {
    std::string path = flag_path;
    if (path.empty()) {
        if (const char* env = std::getenv("IDFW_CONFIG")) path = env;
    }
    if (path.empty()) return {};
    return idfw::PipelineConfig::from_file(path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw idfw::IdfwError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

idfw::IdentitySnapshot load_bindings(const std::string& path) {
    auto doc = nlohmann::json::parse(read_file(path));
    idfw::IdentitySnapshot snapshot;
    snapshot.version = doc.value("version", 0);
    for (const auto& entry : doc.at("bindings")) {
        idfw::IdentityBinding binding;
        binding.username = entry.at("username").get<std::string>();
        auto ip = idfw::Ipv4::parse(entry.at("ip").get<std::string>());
        if (!ip) throw idfw::IdfwError("bad IP in bindings file: " + entry.at("ip").dump());
        binding.ip = *ip;
        if (entry.contains("login_ts")) {
            if (auto ts = idfw::parse_timestamp(entry.at("login_ts").get<std::string>())) {
                binding.login_ts = *ts;
            }
        }
        if (entry.contains("lease_expiry")) {
            if (auto ts = idfw::parse_timestamp(entry.at("lease_expiry").get<std::string>())) {
                binding.lease_expiry = *ts;
            }
        }
        snapshot.bindings.push_back(std::move(binding));
    }
    std::sort(snapshot.bindings.begin(), snapshot.bindings.end(),
              [](const auto& a, const auto& b) { return a.ip < b.ip; });
    return snapshot;
}

int cmd_check(const std::string& policy_path) {
    auto result = idfw::parse_meta_policy(read_file(policy_path));
    if (auto* report = std::get_if<idfw::ValidationReport>(&result)) {
        std::cerr << policy_path << ": invalid\n";
        for (const auto& violation : report->violations) {
            std::cerr << "  " << violation << "\n";
        }
        return 2;
    }
    const auto& policy = std::get<idfw::MetaPolicy>(result);
    std::cout << policy_path << ": ok (" << policy.rules.size() << " rules, default "
              << idfw::to_string(policy.default_action) << ")\n";
    return 0;
}

int cmd_compile(const std::string& policy_path, const std::string& bindings_path,
                const std::string& out_path) {
    auto result = idfw::parse_meta_policy(read_file(policy_path));
    if (auto* report = std::get_if<idfw::ValidationReport>(&result)) {
        for (const auto& violation : report->violations) {
            std::cerr << "  " << violation << "\n";
        }
        return 2;
    }
    const auto& policy = std::get<idfw::MetaPolicy>(result);
    idfw::IdentitySnapshot snapshot;
    if (!bindings_path.empty()) snapshot = load_bindings(bindings_path);
    auto ruleset = idfw::compile(policy, snapshot, {}, 1,
                                 std::chrono::time_point_cast<idfw::Duration>(
                                     idfw::Clock::now()));
    if (out_path.empty()) {
        std::cout << idfw::emit_text(ruleset);
    } else {
        idfw::write_rule_file(ruleset, out_path);
    }
    return 0;
}

int cmd_query(const std::string& rules_path, const std::string& src, const std::string& dst,
              const std::string& proto, int dport) {
    auto src_ip = idfw::Ipv4::parse(src);
    auto dst_ip = idfw::Ipv4::parse(dst);
    auto proto_parsed = idfw::parse_proto(proto);
    if (!src_ip || !dst_ip || !proto_parsed || *proto_parsed == idfw::Proto::Any || dport < 1 ||
        dport > 65535) {
        std::cerr << "query needs concrete --src/--dst IPs, --proto tcp|udp and --dport 1-65535\n";
        return 2;
    }
    auto ruleset = idfw::parse_rule_file(rules_path);
    auto decision = idfw::evaluate_ruleset(
        ruleset, {*src_ip, *dst_ip, *proto_parsed, static_cast<std::uint16_t>(dport)});
    std::cout << idfw::to_string(decision.action) << " priority=" << decision.matched_priority
              << " origin=" << decision.origin_rule_id << " generation=" << decision.generation
              << "\n";
    return 0;
}

int cmd_run(idfw::PipelineConfig config) {
    auto problems = config.validate();
    if (!problems.empty()) {
        for (const auto& problem : problems) std::cerr << "config: " << problem << "\n";
        return 2;
    }
    auto sweep_interval = config.sweep_interval;
    auto replay = config.replay_path;
    idfw::Pipeline pipeline(std::move(config));
    if (replay) {
        auto errors = pipeline.run_replay_sync(*replay);
        if (errors > 0) std::cerr << "idfw: " << errors << " replay parse errors\n";
    }
    pipeline.start();

    std::signal(SIGINT, on_interrupt);
    std::signal(SIGTERM, on_interrupt);
    std::cerr << "idfw: running, generation " << pipeline.active_generation() << "\n";

    auto next_sweep = std::chrono::steady_clock::now() + sweep_interval;
    while (!g_interrupted.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        if (std::chrono::steady_clock::now() >= next_sweep) {
            pipeline.sweep(std::chrono::time_point_cast<idfw::Duration>(idfw::Clock::now()));
            next_sweep += sweep_interval;
        }
    }
    pipeline.drain();
    pipeline.stop();
    std::cerr << "idfw: shut down, final generation " << pipeline.active_generation() << "\n";
    return 0;
}

int cmd_state(const idfw::PipelineConfig& config) {
    if (!config.state_file) {
        std::cerr << "identity.state_file is not configured\n";
        return 2;
    }
    std::cout << read_file(*config.state_file);
    return 0;
}

int cmd_bench(const std::vector<int>& client_counts, const std::string& out_path, bool reference,
              idfw::BenchOptions options) {
    std::vector<idfw::BenchReport> reports;
    for (int clients : client_counts) {
        auto report = idfw::run_bench(clients, options);
        std::cerr << "bench: clients=" << report.clients << " avg=" << report.avg_ms
                  << "ms total=" << report.total_serialized_ms << "ms failed=" << report.failed
                  << "\n";
        reports.push_back(std::move(report));
    }
    if (out_path.empty()) {
        std::cout << idfw::bench_csv(reports);
    } else {
        idfw::emit_bench_csv(reports, out_path);
    }
    if (reference) {
        std::cout << idfw::reference_csv(reports);
    }
    for (const auto& report : reports) {
        if (!report.complete) return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"agentless identity-based firewall engine"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "config file (JSON); IDFW_CONFIG is the fallback");

    auto* run = app.add_subcommand("run", "run the event pipeline until interrupted");

    auto* check = app.add_subcommand("check", "validate a meta-policy document");
    std::string check_policy;
    check->add_option("policy", check_policy, "policy XML file")->required();

    auto* compile_cmd = app.add_subcommand("compile", "one-shot offline compilation");
    std::string compile_policy, compile_bindings, compile_out;
    compile_cmd->add_option("--policy", compile_policy, "policy XML file")->required();
    compile_cmd->add_option("--bindings", compile_bindings, "identity bindings JSON");
    compile_cmd->add_option("--out", compile_out, "output rule file (default stdout)");

    auto* query = app.add_subcommand("query", "evaluate a packet against the persisted rule file");
    std::string query_rules, query_src, query_dst, query_proto = "tcp";
    int query_dport = 0;
    query->add_option("--rules", query_rules, "rule file (default: installer.rule_file)");
    query->add_option("--src", query_src, "source IPv4")->required();
    query->add_option("--dst", query_dst, "destination IPv4")->required();
    query->add_option("--proto", query_proto, "tcp or udp");
    query->add_option("--dport", query_dport, "destination port")->required();

    auto* state = app.add_subcommand("state", "dump the current identity table as JSON");

    auto* bench = app.add_subcommand("bench", "measure login-to-policy-active latency");
    std::vector<int> bench_clients{10, 15, 20, 25, 30};
    std::string bench_out, bench_timeout = "10s", bench_batch = "0s";
    bool bench_reference = false;
    bench->add_option("--clients", bench_clients, "client counts to test");
    bench->add_option("--out", bench_out, "CSV output path (default stdout)");
    bench->add_option("--timeout", bench_timeout, "per-client timeout");
    bench->add_option("--batch-window", bench_batch, "experimental install coalescing window");
    bench->add_flag("--reference", bench_reference,
                    "also print comparison against literature constants");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) return cmd_check(check_policy);
        if (compile_cmd->parsed()) return cmd_compile(compile_policy, compile_bindings, compile_out);

        auto config = load_config(config_path);
        if (run->parsed()) return cmd_run(std::move(config));
        if (state->parsed()) return cmd_state(config);
        if (query->parsed()) {
            std::string rules = query_rules;
            if (rules.empty() && config.rule_file) rules = *config.rule_file;
            if (rules.empty()) {
                std::cerr << "no rule file: pass --rules or configure installer.rule_file\n";
                return 2;
            }
            return cmd_query(rules, query_src, query_dst, query_proto, query_dport);
        }
        if (bench->parsed()) {
            idfw::BenchOptions options;
            auto timeout = idfw::parse_duration(bench_timeout);
            auto batch = idfw::parse_duration(bench_batch);
            if (!timeout || !batch) {
                std::cerr << "bad duration flag\n";
                return 2;
            }
            options.timeout = *timeout;
            options.batch_window = *batch;
            return cmd_bench(bench_clients, bench_out, bench_reference, options);
        }
    } catch (const std::exception& e) {
        std::cerr << "idfw: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
