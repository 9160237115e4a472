#include <pybind11/chrono.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "idfw/bench.hpp"
#include "idfw/compiler.hpp"
#include "idfw/correlation.hpp"
#include "idfw/event_ingest.hpp"
#include "idfw/firewall_backend.hpp"
#include "idfw/identity_table.hpp"
#include "idfw/meta_policy.hpp"
#include "idfw/types.hpp"

namespace py = pybind11;
using namespace idfw;

namespace {

Ipv4 ipv4_from_str(const std::string& text) {
    auto parsed = Ipv4::parse(text);
    if (!parsed) throw py::value_error("invalid IPv4 address: " + text);
    return *parsed;
}

Cidr cidr_from_str(const std::string& text) {
    auto parsed = Cidr::parse(text);
    if (!parsed) throw py::value_error("invalid CIDR: " + text);
    return *parsed;
}

std::string joined_violations(const ValidationReport& report) {
    std::string message;
    for (const auto& violation : report.violations) {
        if (!message.empty()) message += "; ";
        message += violation;
    }
    return message;
}

py::object replay_result_to_py(ReplayParseResult result) {
    if (auto* event = std::get_if<SessionEvent>(&result)) return py::cast(*event);
    if (std::holds_alternative<Skip>(result)) return py::none();
    throw py::value_error(std::get<ParseError>(result).message);
}

}  // namespace

PYBIND11_MODULE(_idfw, m) {
    m.doc() = "identity-based firewall engine";

    auto base = py::register_exception<IdfwError>(m, "Error", PyExc_RuntimeError);
    py::register_exception<StaleGeneration>(m, "StaleGeneration", base);
    py::register_exception<NoPolicy>(m, "NoPolicy", base);

    py::class_<Ipv4>(m, "Ipv4")
        .def(py::init<>())
        .def(py::init(&ipv4_from_str))
        .def(py::init<std::uint32_t>())
        .def_property_readonly("value", &Ipv4::value)
        .def("__str__", &Ipv4::to_string)
        .def("__repr__", [](const Ipv4& ip) { return "Ipv4('" + ip.to_string() + "')"; })
        .def("__eq__", [](const Ipv4& a, const Ipv4& b) { return a == b; })
        .def("__lt__", [](const Ipv4& a, const Ipv4& b) { return a < b; })
        .def("__hash__", [](const Ipv4& ip) { return std::hash<std::uint32_t>{}(ip.value()); });

    py::class_<Cidr>(m, "Cidr")
        .def(py::init<>())
        .def(py::init(&cidr_from_str))
        .def_static("host", &Cidr::host)
        .def_static("any", &Cidr::any)
        .def("contains", &Cidr::contains)
        .def_property_readonly("network", &Cidr::network)
        .def_property_readonly("prefix", &Cidr::prefix)
        .def("__str__", &Cidr::to_string)
        .def("__repr__", [](const Cidr& c) { return "Cidr('" + c.to_string() + "')"; })
        .def("__eq__", [](const Cidr& a, const Cidr& b) { return a == b; });

    py::enum_<Proto>(m, "Proto")
        .value("TCP", Proto::Tcp)
        .value("UDP", Proto::Udp)
        .value("ANY", Proto::Any);
    py::enum_<Action>(m, "Action").value("PERMIT", Action::Permit).value("DENY", Action::Deny);
    py::enum_<EventKind>(m, "EventKind")
        .value("LOGIN", EventKind::Login)
        .value("LOGOFF", EventKind::Logoff)
        .value("FAILED_LOGIN", EventKind::FailedLogin);

    py::class_<Service>(m, "Service")
        .def(py::init([](Proto proto, std::optional<std::uint16_t> dport) {
                 return Service{proto, dport};
             }),
             py::arg("proto") = Proto::Any, py::arg("dport") = std::nullopt)
        .def_readwrite("proto", &Service::proto)
        .def_readwrite("dport", &Service::dport);

    m.def("parse_timestamp", [](const std::string& text) {
        auto parsed = parse_timestamp(text);
        if (!parsed) throw py::value_error("invalid timestamp: " + text);
        return *parsed;
    });
    m.def("format_timestamp", &format_timestamp);
    m.def("parse_duration", [](const std::string& text) {
        auto parsed = parse_duration(text);
        if (!parsed) throw py::value_error("invalid duration: " + text);
        return *parsed;
    });

    // event ingestion
    py::class_<SessionEvent>(m, "SessionEvent")
        .def(py::init([](EventKind kind, std::string username, Ipv4 ip, Timestamp ts,
                         std::string source, std::optional<int> event_id) {
                 return SessionEvent{kind, std::move(username), ip, ts, std::move(source),
                                     event_id};
             }),
             py::arg("kind"), py::arg("username"), py::arg("ip"), py::arg("ts"),
             py::arg("source") = "python", py::arg("event_id") = std::nullopt)
        .def_readwrite("kind", &SessionEvent::kind)
        .def_readwrite("username", &SessionEvent::username)
        .def_readwrite("ip", &SessionEvent::ip)
        .def_readwrite("ts", &SessionEvent::ts)
        .def_readwrite("source", &SessionEvent::source)
        .def_readwrite("event_id", &SessionEvent::event_id)
        .def("__eq__", [](const SessionEvent& a, const SessionEvent& b) { return a == b; });

    py::class_<RawReplayRecord>(m, "RawReplayRecord")
        .def_readwrite("ts", &RawReplayRecord::ts)
        .def_readwrite("event_id", &RawReplayRecord::event_id)
        .def_readwrite("username", &RawReplayRecord::username)
        .def_readwrite("ip", &RawReplayRecord::ip)
        .def_readwrite("source", &RawReplayRecord::source);

    py::class_<EventIdMap>(m, "EventIdMap")
        .def(py::init<>())
        .def_readwrite("login", &EventIdMap::login)
        .def_readwrite("logoff", &EventIdMap::logoff)
        .def_readwrite("failed", &EventIdMap::failed)
        .def("kind_for", &EventIdMap::kind_for);

    m.def(
        "parse_replay_line",
        [](const std::string& line, const EventIdMap& id_map) {
            return replay_result_to_py(parse_replay_line(line, id_map));
        },
        py::arg("line"), py::arg("id_map") = EventIdMap{},
        "Parse one replay JSON line; returns a SessionEvent, or None for an "
        "unmapped event id. Raises ValueError on malformed input.");
    m.def("serialize_replay_line", &serialize_replay_line, py::arg("event"),
          py::arg("id_map") = EventIdMap{});

    py::class_<SyslogPattern>(m, "SyslogPattern")
        .def(py::init(&make_syslog_pattern), py::arg("name"), py::arg("regex"), py::arg("kind"))
        .def_readonly("name", &SyslogPattern::name)
        .def_readonly("kind", &SyslogPattern::kind);
    m.def("default_syslog_patterns", &default_syslog_patterns);
    m.def(
        "parse_syslog_datagram",
        [](const std::string& payload, Ipv4 sender_ip, Timestamp receive_time,
           const std::vector<SyslogPattern>& patterns) {
            return replay_result_to_py(
                parse_syslog_datagram(payload, sender_ip, patterns, receive_time));
        },
        py::arg("payload"), py::arg("sender_ip"), py::arg("receive_time"),
        py::arg("patterns") = default_syslog_patterns(),
        "Match a syslog payload; the binding IP is always the sender address.");

    // identity table
    py::class_<IdentityBinding>(m, "IdentityBinding")
        .def_readwrite("username", &IdentityBinding::username)
        .def_readwrite("ip", &IdentityBinding::ip)
        .def_readwrite("login_ts", &IdentityBinding::login_ts)
        .def_readwrite("lease_expiry", &IdentityBinding::lease_expiry)
        .def("__eq__", [](const IdentityBinding& a, const IdentityBinding& b) { return a == b; });
    py::class_<IdentitySnapshot>(m, "IdentitySnapshot")
        .def(py::init<>())
        .def_readwrite("bindings", &IdentitySnapshot::bindings)
        .def_readwrite("version", &IdentitySnapshot::version);
    py::class_<ChangeSummary>(m, "ChangeSummary")
        .def_readonly("added", &ChangeSummary::added)
        .def_readonly("removed", &ChangeSummary::removed)
        .def_readonly("replaced", &ChangeSummary::replaced)
        .def("empty", &ChangeSummary::empty)
        .def("__bool__", [](const ChangeSummary& c) { return !c.empty(); });
    m.def("canonical_username",
          [](const std::string& name) { return canonical_username(name); });

    py::class_<IdentityTable>(m, "IdentityTable")
        .def(py::init<Duration>(), py::arg("lease") = Duration(std::chrono::hours(10)))
        .def("apply_event", &IdentityTable::apply_event, py::arg("event"), py::arg("now"))
        .def("expire_stale", &IdentityTable::expire_stale, py::arg("now"))
        .def("lookup_ips",
             [](const IdentityTable& table, const std::string& username) {
                 return table.lookup_ips(username);
             })
        .def("snapshot", &IdentityTable::snapshot)
        .def_property_readonly("lease", &IdentityTable::lease)
        .def_property_readonly("version", &IdentityTable::version);

    // meta-policy
    py::class_<IdentityRule>(m, "IdentityRule")
        .def(py::init([](std::string id, Action action, std::string user, Cidr destination,
                         Service service) {
                 return IdentityRule{std::move(id), action, std::move(user), destination,
                                     service};
             }),
             py::arg("id"), py::arg("action"), py::arg("user"), py::arg("destination"),
             py::arg("service"))
        .def_readwrite("id", &IdentityRule::id)
        .def_readwrite("action", &IdentityRule::action)
        .def_readwrite("user", &IdentityRule::user)
        .def_readwrite("destination", &IdentityRule::destination)
        .def_readwrite("service", &IdentityRule::service);
    py::class_<L3Rule>(m, "L3Rule")
        .def(py::init([](std::string id, Action action, Cidr source, Cidr destination,
                         Service service) {
                 return L3Rule{std::move(id), action, source, destination, service};
             }),
             py::arg("id"), py::arg("action"), py::arg("source"), py::arg("destination"),
             py::arg("service"))
        .def_readwrite("id", &L3Rule::id)
        .def_readwrite("action", &L3Rule::action)
        .def_readwrite("source", &L3Rule::source)
        .def_readwrite("destination", &L3Rule::destination)
        .def_readwrite("service", &L3Rule::service);
    py::class_<MetaPolicy>(m, "MetaPolicy")
        .def(py::init<>())
        .def_readwrite("version", &MetaPolicy::version)
        .def_readwrite("rules", &MetaPolicy::rules)
        .def_readwrite("default_action", &MetaPolicy::default_action);

    m.def(
        "parse_meta_policy",
        [](const std::string& document) {
            auto result = parse_meta_policy(document);
            if (auto* policy = std::get_if<MetaPolicy>(&result)) return *policy;
            throw py::value_error(joined_violations(std::get<ValidationReport>(result)));
        },
        py::arg("document"), "Parse meta-policy XML; raises ValueError listing all violations.");
    m.def("emit_meta_policy_xml", &emit_meta_policy_xml);
    m.def("validate_against_directory", &validate_against_directory, py::arg("policy"),
          py::arg("known_users"));

    // compiler
    m.attr("BLOCK_RULE_ID") = kBlockRuleId;
    m.attr("DEFAULT_RULE_ID") = kDefaultRuleId;
    py::class_<BlockedIp>(m, "BlockedIp")
        .def(py::init([](Ipv4 ip, Timestamp expires) { return BlockedIp{ip, expires}; }),
             py::arg("ip"), py::arg("expires"))
        .def_readwrite("ip", &BlockedIp::ip)
        .def_readwrite("expires", &BlockedIp::expires);
    py::class_<ConcreteRule>(m, "ConcreteRule")
        .def_readonly("priority", &ConcreteRule::priority)
        .def_readonly("action", &ConcreteRule::action)
        .def_readonly("src", &ConcreteRule::src)
        .def_readonly("dst", &ConcreteRule::dst)
        .def_readonly("proto", &ConcreteRule::proto)
        .def_readonly("dport", &ConcreteRule::dport)
        .def_readonly("origin_rule_id", &ConcreteRule::origin_rule_id)
        .def_readonly("origin_user", &ConcreteRule::origin_user)
        .def("__str__", &emit_rule_line);
    py::class_<ConcreteRuleset>(m, "ConcreteRuleset")
        .def_readonly("rules", &ConcreteRuleset::rules)
        .def_readonly("generation", &ConcreteRuleset::generation)
        .def_readonly("policy_version", &ConcreteRuleset::policy_version)
        .def_readonly("snapshot_version", &ConcreteRuleset::snapshot_version)
        .def_readonly("compiled_at", &ConcreteRuleset::compiled_at)
        .def("__len__", [](const ConcreteRuleset& rs) { return rs.rules.size(); })
        .def("__eq__",
             [](const ConcreteRuleset& a, const ConcreteRuleset& b) { return a == b; });

    m.def("compile", &compile, py::arg("policy"), py::arg("snapshot"),
          py::arg("blocks") = std::vector<BlockedIp>{}, py::arg("generation") = 1,
          py::arg("now") = Timestamp{},
          "Join policy, identity snapshot, and active blocks into a concrete ruleset.");
    m.def("emit_text", &emit_text);
    m.def("emit_rule_line", &emit_rule_line);

    // firewall backend
    py::class_<PacketQuery>(m, "PacketQuery")
        .def(py::init([](Ipv4 src, Ipv4 dst, Proto proto, std::uint16_t dport) {
                 return PacketQuery{src, dst, proto, dport};
             }),
             py::arg("src"), py::arg("dst"), py::arg("proto"), py::arg("dport"))
        .def_readwrite("src", &PacketQuery::src)
        .def_readwrite("dst", &PacketQuery::dst)
        .def_readwrite("proto", &PacketQuery::proto)
        .def_readwrite("dport", &PacketQuery::dport);
    py::class_<Decision>(m, "Decision")
        .def_readonly("action", &Decision::action)
        .def_readonly("matched_priority", &Decision::matched_priority)
        .def_readonly("origin_rule_id", &Decision::origin_rule_id)
        .def_readonly("generation", &Decision::generation);
    py::class_<InstallReceipt>(m, "InstallReceipt")
        .def_readonly("generation", &InstallReceipt::generation)
        .def_readonly("ts", &InstallReceipt::ts);

    py::class_<FirewallBackend>(m, "FirewallBackend")
        .def(py::init<>())
        .def("install", &FirewallBackend::install, py::arg("ruleset"))
        .def("evaluate", &FirewallBackend::evaluate, py::arg("query"),
             py::call_guard<py::gil_scoped_release>())
        .def_property_readonly("active_generation", &FirewallBackend::active_generation);

    m.def("evaluate_ruleset", &evaluate_ruleset, py::arg("ruleset"), py::arg("query"));
    m.def("write_rule_file", &write_rule_file, py::arg("ruleset"), py::arg("path"));
    m.def("parse_rule_file", &parse_rule_file, py::arg("path"));

    // correlation
    py::class_<BlockEntry>(m, "BlockEntry")
        .def_readonly("ip", &BlockEntry::ip)
        .def_readonly("expires", &BlockEntry::expires)
        .def_readonly("rule_id", &BlockEntry::rule_id);
    py::class_<CorrelationRule>(m, "CorrelationRule")
        .def_readonly("id", &CorrelationRule::id)
        .def_readonly("count", &CorrelationRule::count)
        .def_readonly("window", &CorrelationRule::window)
        .def_readonly("block_duration", &CorrelationRule::block_duration);

    m.def(
        "load_correlation_rules",
        [](const std::string& document) {
            auto result = load_correlation_rules(document);
            if (auto* rules = std::get_if<std::vector<CorrelationRule>>(&result)) return *rules;
            throw py::value_error(joined_violations(std::get<ValidationReport>(result)));
        },
        py::arg("document"),
        "Parse correlation-rule XML; raises ValueError listing all violations.");

    py::class_<CorrelationEngine>(m, "CorrelationEngine")
        .def(py::init<std::vector<CorrelationRule>>(), py::arg("rules"))
        .def("observe", &CorrelationEngine::observe, py::arg("event"), py::arg("now"))
        .def("observe_raw", &CorrelationEngine::observe_raw, py::arg("record"), py::arg("now"))
        .def("active_blocks", &CorrelationEngine::active_blocks, py::arg("now"));

    // bench
    py::class_<BenchSample>(m, "BenchSample")
        .def_readonly("client_index", &BenchSample::client_index)
        .def_readonly("t_event", &BenchSample::t_event)
        .def_readonly("t_active", &BenchSample::t_active)
        .def_readonly("latency", &BenchSample::latency)
        .def_readonly("failed", &BenchSample::failed);
    py::class_<BenchReport>(m, "BenchReport")
        .def_readonly("clients", &BenchReport::clients)
        .def_readonly("samples", &BenchReport::samples)
        .def_readonly("avg_ms", &BenchReport::avg_ms)
        .def_readonly("total_serialized_ms", &BenchReport::total_serialized_ms)
        .def_readonly("failed", &BenchReport::failed)
        .def_readonly("complete", &BenchReport::complete);

    m.def(
        "run_bench",
        [](int clients) {
            py::gil_scoped_release release;
            return run_bench(clients);
        },
        py::arg("clients"),
        "Measure login-to-policy-active latency for the given client count.");
    m.def("bench_csv", &bench_csv);
    m.def("reference_csv", &reference_csv);
    m.attr("CLASSIC_AVG_SECONDS") = kClassicAvgSeconds;
    m.attr("AGENT_AVG_SECONDS") = kAgentAvgSeconds;
}
