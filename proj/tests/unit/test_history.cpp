#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "abi/errors.hpp"
#include "abi/history.hpp"
#include "fixtures.hpp"
#include "scenario.hpp"

using abi_engine::EventKind;
using abi_engine::EventLog;
using nlohmann::json;

namespace {

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string &name) {
        path = std::filesystem::temp_directory_path() / ("abi_test_" + name + "_" + std::to_string(::getpid()) + ".jsonl");
        std::filesystem::remove(path);
    }
    ~TempFile() { std::filesystem::remove(path); }
};

std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json problem_payload() { return {{"problem", abi_engine::problem_to_json(fixtures::sunk_cost())}}; }

json choice_payload(const std::string &choice_id, const std::string &alt, const std::string &agent = "ana") {
    abi_engine::Choice c{choice_id, "sunk-cost", agent, alt, abi_engine::ChoicePhase::initial, ""};
    return {{"session_id", "s-" + agent},
            {"agent_id", agent},
            {"problem_id", "sunk-cost"},
            {"agent", abi_engine::agent_to_json({agent, "", {}})},
            {"choice", abi_engine::choice_to_json(c)},
            {"flow", "experiment"}};
}

std::vector<abi_engine::Event> random_events(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    EventLog log(scenario::counting_clock());
    abi_engine::AbiService service(log);
    scenario::random_history(rng, service, 2, 4);
    return log.events();
}

} // namespace

TEST_CASE("append assigns seq and timestamps") {
    std::vector<std::string> times{"2024-01-01T00:00:02.000Z", "2024-01-01T00:00:01.000Z"};
    std::size_t i = 0;
    EventLog log([&] { return times[i++]; });
    CHECK(log.append(EventKind::problem_created, problem_payload()) == 1);
    CHECK(log.append(EventKind::choice_made, choice_payload("c1", "alt2")) == 2);
    auto events = log.events();
    REQUIRE(events.size() == 2);
    CHECK(events[0].ts == "2024-01-01T00:00:02.000Z");
    CHECK(events[1].ts == events[0].ts); // clock went backwards
    CHECK(events[1].payload["choice"]["timestamp"] == events[1].ts);
    CHECK(events[1].agent_id() == "ana");
    CHECK(events[1].problem_id() == "sunk-cost");
}

TEST_CASE("appends are validated against the log") {
    EventLog log;
    CHECK_THROWS_AS(log.append(EventKind::choice_made, choice_payload("c1", "alt2")), abi_engine::ReferentialError);
    log.append(EventKind::problem_created, problem_payload());
    CHECK_THROWS_AS(log.append(EventKind::problem_created, problem_payload()), abi_engine::DuplicateError);
    CHECK_THROWS_AS(log.append(EventKind::choice_made, choice_payload("c1", "alt9")), abi_engine::ReferentialError);
    log.append(EventKind::choice_made, choice_payload("c1", "alt2"));
    CHECK_THROWS_AS(log.append(EventKind::choice_made, choice_payload("c2", "alt1")), abi_engine::DuplicateError);
    CHECK_THROWS_AS(log.append(EventKind::choice_made, choice_payload("c1", "alt1", "bob")), abi_engine::DuplicateError);
    CHECK_THROWS_AS(log.append(EventKind::alert_acknowledged, json{{"session_id", "s"}}), abi_engine::SchemaError);
    CHECK_THROWS_AS(log.append(EventKind::alert_acknowledged,
                               {{"session_id", "s"}, {"agent_id", "ana"}, {"problem_id", "sunk-cost"}, {"choice_id", "zz"}}),
                    abi_engine::ReferentialError);
    json bad_rating{{"session_id", "s-ana"},
                    {"agent_id", "ana"},
                    {"problem_id", "sunk-cost"},
                    {"rating", {{"choice_id", "c1"}, {"phase", "before_alert"}, {"ratings", {{"alt1", 3}}}}},
                    {"awareness_level", 0}};
    CHECK_THROWS_AS(log.append(EventKind::ratings_recorded, bad_rating), abi_engine::SchemaError);
    CHECK(log.size() == 2);
}

TEST_CASE("filters") {
    auto events = random_events(1);
    auto log = EventLog::from_events(events);
    auto choices = log->events({EventKind::choice_made, std::nullopt, std::nullopt});
    for (const auto &e : choices) CHECK(e.kind == EventKind::choice_made);
    std::vector<abi_engine::Event> expected;
    for (const auto &e : events) {
        if (e.kind == EventKind::choice_made) expected.push_back(e);
    }
    CHECK(choices == expected);
}

TEST_CASE("JSON Lines parsing errors name the line") {
    auto text = abi_engine::export_jsonl(random_events(2));
    REQUIRE(text.size() > 0);
    auto first_nl = text.find('\n');

    std::string unknown = text;
    unknown.replace(unknown.find("\"kind\":\"ProblemCreated\""), 23, "\"kind\":\"ProblemErased\"");
    CHECK_THROWS_WITH_AS(abi_engine::parse_jsonl(unknown, false), doctest::Contains("line 1"), abi_engine::SchemaError);

    std::string version = text;
    version.replace(version.find("\"v\":1"), 5, "\"v\":2");
    CHECK_THROWS_AS(abi_engine::parse_jsonl(version, false), abi_engine::SchemaError);

    std::string garbage = text.substr(0, first_nl + 1) + "{not json\n" + text.substr(first_nl + 1);
    CHECK_THROWS_WITH_AS(abi_engine::parse_jsonl(garbage, true), doctest::Contains("line 2"), abi_engine::CorruptLog);

    std::string torn = text + "{\"v\":1,\"seq\":";
    CHECK_THROWS_AS(abi_engine::parse_jsonl(torn, false), abi_engine::CorruptLog);
    auto tolerated = abi_engine::parse_jsonl(torn, true);
    CHECK(tolerated.warnings.size() == 1);
    CHECK(tolerated.valid_bytes == text.size());
    CHECK_THROWS_AS(abi_engine::import_jsonl(torn), abi_engine::CorruptLog);
}

TEST_CASE("file-backed log persists, truncates a torn tail and keeps appending") {
    TempFile file("persist");
    std::vector<abi_engine::Event> written;
    {
        EventLog log(file.path);
        log.append(EventKind::problem_created, problem_payload());
        log.append(EventKind::choice_made, choice_payload("c1", "alt2"));
        written = log.events();
    }
    {
        std::ofstream out(file.path, std::ios::binary | std::ios::app);
        out << "{\"v\":1,\"seq\":3,\"ts\":\"2024";
    }
    {
        EventLog log(file.path);
        CHECK(log.events() == written);
        CHECK(log.warnings().size() == 1);
        log.append(EventKind::choice_made, choice_payload("c2", "alt1", "bob"));
    }
    auto loaded = abi_engine::load_events(file.path);
    CHECK(loaded.warnings.empty());
    REQUIRE(loaded.events.size() == 3);
    CHECK(loaded.events[2].agent_id() == "bob");
    auto bob = abi_engine::load_events(file.path, {std::nullopt, "bob", std::nullopt});
    CHECK(bob.events.size() == 1);
}

TEST_CASE("a complete but unterminated last line is kept") {
    TempFile file("unterminated");
    {
        EventLog log(file.path);
        log.append(EventKind::problem_created, problem_payload());
    }
    std::string bytes = slurp(file.path);
    bytes.pop_back();
    std::ofstream(file.path, std::ios::binary | std::ios::trunc) << bytes;
    {
        EventLog log(file.path);
        CHECK(log.size() == 1);
        log.append(EventKind::choice_made, choice_payload("c1", "alt2"));
    }
    CHECK(abi_engine::load_events(file.path).events.size() == 2);
}

TEST_CASE("a missing file loads as empty") {
    CHECK(abi_engine::load_events("/nonexistent/dir/history.jsonl").events.empty());
}

TEST_CASE("export and import round-trip") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto events = random_events(seed);
        auto text = abi_engine::export_jsonl(events);
        auto imported = abi_engine::import_jsonl(text);
        REQUIRE(imported->events() == events);
        REQUIRE(abi_engine::export_jsonl(*imported) == text);
    }
}

TEST_CASE("relational projection is deterministic") {
    for (std::uint64_t seed = 1000; seed < 2000; ++seed) {
        auto events = random_events(seed);
        auto a = abi_engine::project_relational(events);
        auto b = abi_engine::project_relational(abi_engine::import_jsonl(abi_engine::export_jsonl(events))->events());
        REQUIRE(a == b);
        REQUIRE(abi_engine::to_json(a).dump() == abi_engine::to_json(b).dump());
    }
}

TEST_CASE("relational projection content") {
    EventLog log(scenario::counting_clock());
    abi_engine::AbiService service(log);
    service.create_problem(json::parse(fixtures::kSunkCostJson));
    auto sid = service.create_session({{"agent_id", "ana"}, {"problem_id", "sunk-cost"}}).body.at("session_id").get<std::string>();
    service.make_choice(sid, {{"alternative_id", "alt2"}});
    service.record_ratings(sid, {{"ratings", {{"alt1", 2}, {"alt2", 9}}}});
    service.acknowledge(sid);
    service.record_agreement(sid, {{"q1", 4}, {"q2", 5}});
    service.record_ratings(sid, {{"ratings", {{"alt1", 9}, {"alt2", 2}}}});
    service.revise(sid, {{"alternative_id", "alt1"}});

    auto s = abi_engine::project_relational(log.events());
    CHECK(s.agent.size() == 1);
    CHECK(s.decision_problem.size() == 1);
    CHECK(s.alternative.size() == 2);
    CHECK(s.outcome.size() == 3);
    REQUIRE(s.choice.size() == 2);
    CHECK(s.choice[0].phase == "initial");
    CHECK(s.choice[1].phase == "revised");
    REQUIRE(s.decision_session.size() == 1);
    CHECK(s.decision_session[0].initial_choice_id == s.choice[0].id);
    CHECK(s.decision_session[0].final_choice_id == s.choice[1].id);
    REQUIRE(s.rational_value_ascription.size() == 2);
    CHECK(s.rational_value_ascription[0].expected_value_minor == "-20000000");
    CHECK(s.rational_value_ascription[1].expected_value_minor == "-22500000");
    REQUIRE(s.risk_assessment.size() == 1);
    CHECK(s.risk_assessment[0].risk_seeking_for_losses);
    CHECK(s.risk_assessment[0].predicted_preference == "risk_seeking");
    REQUIRE(s.awareness_measurement.size() == 2);
    CHECK(s.awareness_measurement[0].awareness_level == 0);
    CHECK(s.awareness_measurement[1].awareness_level == 1);
    REQUIRE(s.agreement_response.size() == 1);
    CHECK(s.agreement_response[0].q2_insight_agreement == 5);
}
