#include <doctest.h>

#include <algorithm>
#include <random>

#include "idfw/correlation.hpp"
#include "test_util.hpp"

using namespace idfw;
using namespace idfw::testutil;

namespace {

CorrelationRule bruteforce_rule(int count = 3, long window_s = 60, long block_s = 900) {
    CorrelationRule rule;
    rule.id = "bruteforce";
    rule.mode = CorrelationRule::Mode::Threshold;
    rule.steps.push_back({EventPredicate{EventKind::FailedLogin, {}, {}}, {}});
    rule.count = count;
    rule.window = std::chrono::seconds(window_s);
    rule.block_duration = std::chrono::seconds(block_s);
    return rule;
}

CorrelationRule login_then_7001(long gap_s = 30) {
    CorrelationRule rule;
    rule.id = "svc-attack";
    rule.mode = CorrelationRule::Mode::Sequence;
    rule.steps.push_back({EventPredicate{EventKind::Login, {}, {}}, {}});
    rule.steps.push_back({EventPredicate{{}, 7001, {}}, std::chrono::seconds(gap_s)});
    rule.block_duration = std::chrono::seconds(900);
    return rule;
}

RawReplayRecord raw(int event_id, const std::string& addr, long at) {
    return {ts(at), event_id, "", ip(addr), "test"};
}

}  // namespace

TEST_CASE("threshold fires on the third failed login within the window") {
    CorrelationEngine engine({bruteforce_rule()});
    CHECK(engine.observe(failed_login("10.0.0.8", 0), ts(0)).empty());
    CHECK(engine.observe(failed_login("10.0.0.8", 10), ts(10)).empty());
    auto blocks = engine.observe(failed_login("10.0.0.8", 20), ts(20));
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].ip == ip("10.0.0.8"));
    CHECK(blocks[0].rule_id == "bruteforce");
    CHECK(blocks[0].expires == ts(20) + std::chrono::seconds(900));
}

TEST_CASE("two failures never block") {
    CorrelationEngine engine({bruteforce_rule()});
    engine.observe(failed_login("10.0.0.8", 0), ts(0));
    engine.observe(failed_login("10.0.0.8", 10), ts(10));
    CHECK(engine.active_blocks(ts(1000)).empty());
}

TEST_CASE("failures outside the window do not count") {
    CorrelationEngine engine({bruteforce_rule()});
    engine.observe(failed_login("10.0.0.8", 0), ts(0));
    engine.observe(failed_login("10.0.0.8", 30), ts(30));
    // first failure fell out of the 60s window by t=70
    CHECK(engine.observe(failed_login("10.0.0.8", 70), ts(70)).empty());
    // but 30 and 70 plus this one fire
    CHECK(engine.observe(failed_login("10.0.0.8", 80), ts(80)).size() == 1);
}

TEST_CASE("threshold is keyed by source IP") {
    CorrelationEngine engine({bruteforce_rule()});
    engine.observe(failed_login("10.0.0.8", 0), ts(0));
    engine.observe(failed_login("10.0.0.9", 1), ts(1));
    engine.observe(failed_login("10.0.0.8", 2), ts(2));
    CHECK(engine.observe(failed_login("10.0.0.9", 3), ts(3)).empty());
    CHECK(engine.observe(failed_login("10.0.0.8", 4), ts(4)).size() == 1);
}

TEST_CASE("window resets after firing; a fresh burst can fire again") {
    CorrelationEngine engine({bruteforce_rule()});
    for (long t : {0, 1, 2}) engine.observe(failed_login("10.0.0.8", t), ts(t));
    // the burst is consumed: two more failures reuse nothing from it
    CHECK(engine.observe(failed_login("10.0.0.8", 3), ts(3)).empty());
    CHECK(engine.observe(failed_login("10.0.0.8", 4), ts(4)).empty());
    CHECK(engine.observe(failed_login("10.0.0.8", 5), ts(5)).size() == 1);
}

TEST_CASE("sequence: login then event 7001 within the gap blocks; outside does not") {
    CorrelationEngine engine({login_then_7001()});
    engine.observe(login("alice", "10.0.0.8", 0), ts(0));
    auto blocks = engine.observe_raw(raw(7001, "10.0.0.8", 29), ts(29));
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].ip == ip("10.0.0.8"));

    CorrelationEngine late({login_then_7001()});
    late.observe(login("alice", "10.0.0.8", 0), ts(0));
    CHECK(late.observe_raw(raw(7001, "10.0.0.8", 31), ts(31)).empty());
}

TEST_CASE("sequence: gap violation re-evaluates the event against step one") {
    CorrelationRule rule;
    rule.id = "login-login";
    rule.mode = CorrelationRule::Mode::Sequence;
    rule.steps.push_back({EventPredicate{EventKind::Login, {}, {}}, {}});
    rule.steps.push_back({EventPredicate{EventKind::Login, {}, {}}, std::chrono::seconds(10)});
    CorrelationEngine engine({rule});

    engine.observe(login("a", "10.0.0.8", 0), ts(0));
    // 50s later: gap violated, but this login restarts the sequence at step 1
    CHECK(engine.observe(login("a", "10.0.0.8", 50), ts(50)).empty());
    // so a login 5s after it completes the restarted sequence
    CHECK(engine.observe(login("a", "10.0.0.8", 55), ts(55)).size() == 1);
}

TEST_CASE("sequence ignores unrelated interleaved events") {
    CorrelationEngine engine({login_then_7001()});
    engine.observe(login("alice", "10.0.0.8", 0), ts(0));
    engine.observe_raw(raw(4242, "10.0.0.8", 5), ts(5));
    engine.observe(failed_login("10.0.0.8", 6), ts(6));
    CHECK(engine.observe_raw(raw(7001, "10.0.0.8", 10), ts(10)).size() == 1);
}

TEST_CASE("permuting the sequence events never triggers") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 100; ++i) {
        CorrelationEngine engine({login_then_7001()});
        // 7001 before the login: wrong order in every timing
        long t1 = static_cast<long>(rng() % 100);
        long t2 = t1 + 1 + static_cast<long>(rng() % 20);
        auto fired1 = engine.observe_raw(raw(7001, "10.0.0.8", t1), ts(t1));
        auto fired2 = engine.observe(login("a", "10.0.0.8", t2), ts(t2));
        CHECK(fired1.empty());
        CHECK(fired2.empty());
    }
}

TEST_CASE("active_blocks: expiry filtering and max-expiry dedupe") {
    CorrelationEngine engine({bruteforce_rule(2, 60, 100), login_then_7001()});
    // fire the threshold rule (block until t+100)
    engine.observe(failed_login("10.0.0.8", 0), ts(0));
    engine.observe(failed_login("10.0.0.8", 1), ts(1));
    REQUIRE(engine.active_blocks(ts(2)).size() == 1);

    // same IP blocked again later by the sequence rule with a longer expiry
    engine.observe(login("a", "10.0.0.8", 10), ts(10));
    engine.observe_raw(raw(7001, "10.0.0.8", 12), ts(12));

    auto blocks = engine.active_blocks(ts(13));
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].expires == ts(12) + std::chrono::seconds(900));  // latest wins

    CHECK(engine.active_blocks(ts(12) + std::chrono::seconds(900)).empty());
    CHECK(engine.active_blocks(ts(12) + std::chrono::seconds(899)).size() == 1);
}

TEST_CASE("property: engine fire count equals the brute-force window scanner") {
    std::mt19937_64 seed_rng(404);
    for (int trial = 0; trial < 1000; ++trial) {
        int count = 2 + static_cast<int>(seed_rng() % 4);
        long window = 1 + static_cast<long>(seed_rng() % 120);
        CorrelationEngine engine({bruteforce_rule(count, window)});

        std::vector<long> times;
        long t = 0;
        int events = 1 + static_cast<int>(seed_rng() % 40);
        for (int i = 0; i < events; ++i) {
            t += static_cast<long>(seed_rng() % 50);
            times.push_back(t);
        }

        int fired = 0;
        for (long at : times) {
            fired += static_cast<int>(engine.observe(failed_login("10.0.0.8", at), ts(at)).size());
        }
        CHECK(fired == oracle_threshold_fires(times, count, window));
    }
}

TEST_CASE("rule document parsing: the canonical example") {
    auto result = load_correlation_rules(R"(<correlation version="1">
      <rule id="bruteforce" mode="threshold" count="3" window="60s" block="900s">
        <match kind="failed-login"/>
      </rule>
      <rule id="svc-attack" mode="sequence" block="900s">
        <step><match kind="login"/></step>
        <step max-gap="30s"><match event-id="7001"/></step>
      </rule>
    </correlation>)");
    auto* rules = std::get_if<std::vector<CorrelationRule>>(&result);
    REQUIRE(rules);
    REQUIRE(rules->size() == 2);

    CHECK((*rules)[0].mode == CorrelationRule::Mode::Threshold);
    CHECK((*rules)[0].count == 3);
    CHECK((*rules)[0].window == std::chrono::seconds(60));
    CHECK((*rules)[0].block_duration == std::chrono::seconds(900));
    CHECK((*rules)[0].steps[0].predicate.kind == EventKind::FailedLogin);

    CHECK((*rules)[1].mode == CorrelationRule::Mode::Sequence);
    REQUIRE((*rules)[1].steps.size() == 2);
    CHECK((*rules)[1].steps[1].predicate.event_id == 7001);
    CHECK((*rules)[1].steps[1].max_gap == std::chrono::seconds(30));
}

TEST_CASE("rule document validation failures") {
    auto n1 = load_correlation_rules(R"(<correlation version="1">
      <rule id="x" mode="threshold" count="1" window="60s"><match kind="failed-login"/></rule>
    </correlation>)");
    auto* report = std::get_if<ValidationReport>(&n1);
    REQUIRE(report);
    CHECK(report->violations[0].find(">= 2") != std::string::npos);

    auto one_step = load_correlation_rules(R"(<correlation version="1">
      <rule id="x" mode="sequence"><step><match kind="login"/></step></rule>
    </correlation>)");
    REQUIRE(std::holds_alternative<ValidationReport>(one_step));

    auto bad_mode = load_correlation_rules(R"(<correlation version="1">
      <rule id="x" mode="sideways"><match kind="login"/></rule>
    </correlation>)");
    REQUIRE(std::holds_alternative<ValidationReport>(bad_mode));

    auto unconstrained = load_correlation_rules(R"(<correlation version="1">
      <rule id="x" mode="threshold" count="3" window="60s"><match/></rule>
    </correlation>)");
    REQUIRE(std::holds_alternative<ValidationReport>(unconstrained));
}
