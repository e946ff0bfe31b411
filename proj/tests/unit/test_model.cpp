#include <doctest.h>

#include <random>

#include "abi/model.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using nlohmann::json;

namespace {

bool has_issue(const std::vector<abi_engine::ValidationIssue> &issues, abi_engine::IssueCode code, const std::string &path = "") {
    for (const auto &i : issues) {
        if (i.code == code && (path.empty() || i.path == path)) return true;
    }
    return false;
}

} // namespace

TEST_CASE("valid problems pass") {
    CHECK(abi_engine::check_problem(fixtures::sure_loss()).empty());
    CHECK(abi_engine::check_problem(fixtures::sunk_cost()).empty());
    CHECK_NOTHROW(abi_engine::validate_problem(fixtures::sunk_cost()));
}

TEST_CASE("every violation is reported") {
    auto p = fixtures::sunk_cost();
    p.alternatives[1].outcomes[1].probability = abi_engine::Probability::parse("5");
    p.alternatives[0].outcomes[0].value.currency = "USD";
    p.alternatives.push_back(fixtures::alternative("alt1", {fixtures::outcome(-1, "100", "BRL")}));
    auto issues = abi_engine::check_problem(p);
    CHECK(has_issue(issues, abi_engine::IssueCode::probability_sum, "/alternatives/1/outcomes"));
    CHECK(has_issue(issues, abi_engine::IssueCode::currency_mismatch, "/alternatives/0/outcomes/0"));
    CHECK(has_issue(issues, abi_engine::IssueCode::arity, "/alternatives"));
    CHECK(has_issue(issues, abi_engine::IssueCode::duplicate_id, "/alternatives/2/id"));
    try {
        abi_engine::validate_problem(p);
        FAIL("expected ValidationError");
    } catch (const abi_engine::ValidationError &e) {
        CHECK(e.issues().size() == issues.size());
    }
}

TEST_CASE("probability sum message names the total") {
    auto p = fixtures::sure_loss();
    p.alternatives[1].outcomes[1].probability = abi_engine::Probability::parse("4.5");
    auto issues = abi_engine::check_problem(p);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].message == "outcome probabilities total 99.5, expected 100");
}

TEST_CASE("outcome arity and currency code") {
    auto p = fixtures::sure_loss();
    p.alternatives[0].outcomes.clear();
    p.currency = "usd";
    auto issues = abi_engine::check_problem(p);
    CHECK(has_issue(issues, abi_engine::IssueCode::arity, "/alternatives/0/outcomes"));
    CHECK(has_issue(issues, abi_engine::IssueCode::range, "/currency"));
}

TEST_CASE("two-slot view pads a sure alternative") {
    auto view = abi_engine::two_slot_view(fixtures::sure_loss().alternatives[0]);
    CHECK(view.a.value.amount_minor == -950000);
    CHECK(view.a.probability.is_certain());
    CHECK(view.b.value.amount_minor == 0);
    CHECK(view.b.probability.is_zero());
}

TEST_CASE("problem JSON accepts string and integer probabilities") {
    auto j = json::parse(fixtures::kSunkCostJson);
    auto p = abi_engine::problem_from_json(j);
    CHECK(p.alternatives[1].outcomes[0].probability.hundredths() == 9000);
    j["alternatives"][1]["outcomes"][0]["probability_pct"] = 90;
    CHECK(abi_engine::problem_from_json(j) == p);
    j["alternatives"][1]["outcomes"][0]["amount_minor"] = "-25000000";
    CHECK_THROWS_AS(abi_engine::problem_from_json(j), abi_engine::ValidationError);
}

TEST_CASE("problem JSON reports schema and invariant issues together") {
    auto j = json::parse(fixtures::kSunkCostJson);
    j["alternatives"].push_back(j["alternatives"][0]);
    j["alternatives"][2]["id"] = "alt3";
    try {
        abi_engine::problem_from_json(j);
        FAIL("expected ValidationError");
    } catch (const abi_engine::ValidationError &e) {
        CHECK(has_issue(e.issues(), abi_engine::IssueCode::arity));
    }
}

TEST_CASE("problem file parsing") {
    auto problems = abi_engine::parse_problem_file(std::string("{\"problems\": [") + fixtures::kSunkCostJson + "]}");
    REQUIRE(problems.size() == 1);
    CHECK(problems[0].id == "sunk-cost");
    CHECK(abi_engine::parse_problem_file("[]").empty());
    CHECK(abi_engine::parse_problem_file("{\"problems\": []}").empty());

    try {
        abi_engine::parse_problem_file("{\n  \"problems\": [\n    {,}\n  ]\n}");
        FAIL("expected ProblemSyntaxError");
    } catch (const abi_engine::ProblemSyntaxError &e) {
        CHECK(e.line() == 3);
        CHECK(e.column() == 6);
    }

    std::string dup = std::string("[") + fixtures::kSunkCostJson + "," + fixtures::kSunkCostJson + "]";
    try {
        abi_engine::parse_problem_file(dup);
        FAIL("expected ProblemFileError");
    } catch (const abi_engine::ProblemFileError &e) {
        REQUIRE(e.by_index().count(1) == 1);
        CHECK(e.by_index().at(1)[0].code == abi_engine::IssueCode::duplicate_id);
    }
    CHECK_THROWS_AS(abi_engine::parse_problem_file("{\"other\": 1}"), abi_engine::ProblemFileError);
}

TEST_CASE("problem files round-trip") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        std::vector<abi_engine::DecisionProblem> problems{oracle::random_problem(rng, "a" + std::to_string(i)),
                                                   oracle::random_problem(rng, "b" + std::to_string(i))};
        REQUIRE(abi_engine::parse_problem_file(abi_engine::serialize_problem_file(problems)) == problems);
    }
}

TEST_CASE("choice and agent JSON round-trip") {
    abi_engine::Choice c{"choice-1", "sunk-cost", "agent-7", "alt2", abi_engine::ChoicePhase::revised, "2024-01-01T00:00:00.000Z"};
    CHECK(abi_engine::choice_from_json(abi_engine::choice_to_json(c)) == c);
    abi_engine::Agent a{"agent-7", "Ana", {{"role", "manager"}}};
    CHECK(abi_engine::agent_from_json(abi_engine::agent_to_json(a)) == a);
    CHECK_THROWS_AS(abi_engine::choice_phase_from_string("final"), std::invalid_argument);
}
