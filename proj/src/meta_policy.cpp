#include "idfw/meta_policy.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "idfw/identity_table.hpp"

namespace idfw {

namespace pt = boost::property_tree;

namespace {

std::optional<Service> parse_service_node(const pt::ptree& node, const std::string& rule_id,
                                          std::vector<std::string>& violations) {
    Service service;
    auto proto_text = node.get_optional<std::string>("<xmlattr>.proto");
    if (!proto_text) {
        violations.push_back("rule '" + rule_id + "': service missing proto attribute");
        return std::nullopt;
    }
    auto proto = parse_proto(*proto_text);
    if (!proto) {
        violations.push_back("rule '" + rule_id + "': unknown proto '" + *proto_text + "'");
        return std::nullopt;
    }
    service.proto = *proto;
    auto port_text = node.get_optional<std::string>("<xmlattr>.port");
    if (port_text && *port_text != "any") {
        int port = 0;
        try {
            port = std::stoi(*port_text);
        } catch (const std::exception&) {
            port = 0;
        }
        if (port < 1 || port > 65535) {
            violations.push_back("rule '" + rule_id + "': port out of range: '" + *port_text + "'");
            return std::nullopt;
        }
        service.dport = static_cast<std::uint16_t>(port);
    }
    return service;
}

std::optional<Cidr> parse_cidr_child(const pt::ptree& node, const std::string& child,
                                     const std::string& rule_id,
                                     std::vector<std::string>& violations) {
    auto text = node.get_optional<std::string>(child);
    if (!text) {
        violations.push_back("rule '" + rule_id + "': missing <" + child + ">");
        return std::nullopt;
    }
    auto cidr = Cidr::parse(*text);
    if (!cidr) {
        violations.push_back("rule '" + rule_id + "': invalid CIDR '" + *text + "'");
        return std::nullopt;
    }
    return cidr;
}

std::optional<Action> parse_action_attr(const pt::ptree& node, const std::string& context,
                                        std::vector<std::string>& violations) {
    auto text = node.get_optional<std::string>("<xmlattr>.action");
    if (!text) {
        violations.push_back(context + ": missing action attribute");
        return std::nullopt;
    }
    auto action = parse_action(*text);
    if (!action) {
        violations.push_back(context + ": unknown action '" + *text + "'");
        return std::nullopt;
    }
    return action;
}

std::string service_to_xml(const Service& service) {
    std::string out = "<service proto=\"" + to_string(service.proto) + "\"";
    if (service.dport) out += " port=\"" + std::to_string(*service.dport) + "\"";
    return out + "/>";
}

}  // namespace

PolicyParseResult parse_meta_policy(const std::string& document) {
    pt::ptree tree;
    std::istringstream stream(document);
    try {
        pt::read_xml(stream, tree);
    } catch (const pt::xml_parser_error& e) {
        return ValidationReport{{std::string("XML parse error: ") + e.what()}};
    }
    auto root = tree.get_child_optional("metapolicy");
    if (!root) {
        return ValidationReport{{"missing <metapolicy> root element"}};
    }

    MetaPolicy policy;
    std::vector<std::string> violations;
    policy.version = root->get<int>("<xmlattr>.version", 1);

    std::set<std::string> seen_ids;
    bool saw_default = false;

    for (const auto& [name, node] : *root) {
        if (name == "<xmlattr>") continue;
        if (name == "default") {
            if (auto action = parse_action_attr(node, "<default>", violations)) {
                policy.default_action = *action;
                saw_default = true;
            }
            continue;
        }
        if (name != "identity-rule" && name != "l3-rule") {
            violations.push_back("unknown element <" + name + ">");
            continue;
        }
        auto id = node.get_optional<std::string>("<xmlattr>.id");
        if (!id || id->empty()) {
            violations.push_back("<" + name + "> without an id attribute");
            continue;
        }
        if (!seen_ids.insert(*id).second) {
            violations.push_back("duplicate rule id '" + *id + "'");
            continue;
        }
        auto action = parse_action_attr(node, "rule '" + *id + "'", violations);
        auto destination = parse_cidr_child(node, "destination", *id, violations);
        std::optional<Service> service;
        if (auto svc = node.get_child_optional("service")) {
            service = parse_service_node(*svc, *id, violations);
        } else {
            violations.push_back("rule '" + *id + "': missing <service>");
        }
        if (name == "identity-rule") {
            auto user = node.get_optional<std::string>("user");
            if (!user || user->empty()) {
                violations.push_back("rule '" + *id + "': missing <user>");
                continue;
            }
            if (action && destination && service) {
                policy.rules.push_back(IdentityRule{*id, *action, *user, *destination, *service});
            }
        } else {
            auto source = parse_cidr_child(node, "source", *id, violations);
            if (action && source && destination && service) {
                policy.rules.push_back(L3Rule{*id, *action, *source, *destination, *service});
            }
        }
    }

    if (!saw_default) {
        violations.push_back("missing <default> action");
    }
    if (!violations.empty()) {
        return ValidationReport{std::move(violations)};
    }
    return policy;
}

std::string emit_meta_policy_xml(const MetaPolicy& policy) {
    std::string out = "<metapolicy version=\"" + std::to_string(policy.version) + "\">\n";
    for (const auto& rule : policy.rules) {
        if (const auto* ir = std::get_if<IdentityRule>(&rule)) {
            out += "  <identity-rule id=\"" + ir->id + "\" action=\"" + to_string(ir->action) +
                   "\">\n";
            out += "    <user>" + ir->user + "</user>\n";
            out += "    <destination>" + ir->destination.to_string() + "</destination>\n";
            out += "    " + service_to_xml(ir->service) + "\n";
            out += "  </identity-rule>\n";
        } else {
            const auto& l3 = std::get<L3Rule>(rule);
            out += "  <l3-rule id=\"" + l3.id + "\" action=\"" + to_string(l3.action) + "\">\n";
            out += "    <source>" + l3.source.to_string() + "</source>\n";
            out += "    <destination>" + l3.destination.to_string() + "</destination>\n";
            out += "    " + service_to_xml(l3.service) + "\n";
            out += "  </l3-rule>\n";
        }
    }
    out += "  <default action=\"" + to_string(policy.default_action) + "\"/>\n";
    out += "</metapolicy>\n";
    return out;
}

std::vector<std::string> validate_against_directory(const MetaPolicy& policy,
                                                    const std::vector<std::string>& known_users) {
    std::set<std::string> known;
    for (const auto& user : known_users) known.insert(canonical_username(user));
    std::vector<std::string> warnings;
    for (const auto& rule : policy.rules) {
        if (const auto* ir = std::get_if<IdentityRule>(&rule)) {
            if (!known.count(canonical_username(ir->user))) {
                warnings.push_back("rule '" + ir->id + "': user '" + ir->user +
                                   "' not found in directory");
            }
        }
    }
    return warnings;
}

const std::string& rule_id(const MetaRule& rule) {
    return std::visit([](const auto& r) -> const std::string& { return r.id; }, rule);
}

}  // namespace idfw
