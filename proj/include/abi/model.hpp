#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "abi/decimal.hpp"

namespace abi_engine {

/// Amount in minor currency units (cents). Losses are negative.
struct Money {
    std::int64_t amount_minor = 0;
    std::string currency;

    friend bool operator==(const Money &, const Money &) = default;
};

struct Outcome {
    Money value;
    Probability probability;

    friend bool operator==(const Outcome &, const Outcome &) = default;
};

/// One option of a decision problem (the value bearer). Holds one or two
/// outcomes whose probabilities total exactly 100.
struct Alternative {
    std::string id;
    std::string label;
    std::vector<Outcome> outcomes;

    friend bool operator==(const Alternative &, const Alternative &) = default;
};

/// A binary financial choice under risk.
struct DecisionProblem {
    std::string id;
    std::string statement;
    std::string currency;
    std::vector<Alternative> alternatives;

    const Alternative *find_alternative(std::string_view alternative_id) const;
    std::optional<std::size_t> index_of(std::string_view alternative_id) const;

    friend bool operator==(const DecisionProblem &, const DecisionProblem &) = default;
};

enum class ChoicePhase { initial, revised };

struct Choice {
    std::string id;
    std::string problem_id;
    std::string agent_id;
    std::string chosen_alternative_id;
    ChoicePhase phase = ChoicePhase::initial;
    std::string timestamp;

    friend bool operator==(const Choice &, const Choice &) = default;
};

struct Agent {
    std::string id;
    std::string display_name;
    std::map<std::string, std::string> profile;

    friend bool operator==(const Agent &, const Agent &) = default;
};

enum class IssueCode {
    probability_sum,
    arity,
    currency_mismatch,
    range,
    duplicate_id,
    schema,
};

std::string_view to_string(IssueCode code);

struct ValidationIssue {
    IssueCode code;
    std::string path; // JSON-pointer-like location, e.g. "/alternatives/1/outcomes/0"
    std::string message;
};

/// Carries the complete list of violations, never just the first.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<ValidationIssue> issues);
    const std::vector<ValidationIssue> &issues() const noexcept { return issues_; }

private:
    std::vector<ValidationIssue> issues_;
};

/// Malformed JSON in a problem file. Line and column are 1-based.
class ProblemSyntaxError : public std::runtime_error {
public:
    ProblemSyntaxError(std::size_t line, std::size_t column, const std::string &detail);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Well-formed JSON whose problems fail validation; issues keyed by index.
class ProblemFileError : public std::runtime_error {
public:
    explicit ProblemFileError(std::map<std::size_t, std::vector<ValidationIssue>> by_index);
    const std::map<std::size_t, std::vector<ValidationIssue>> &by_index() const noexcept {
        return by_index_;
    }

private:
    std::map<std::size_t, std::vector<ValidationIssue>> by_index_;
};

/// Every invariant violation of `candidate`; empty when valid.
std::vector<ValidationIssue> check_problem(const DecisionProblem &candidate);

/// Returns `candidate` unchanged when valid, otherwise throws ValidationError.
DecisionProblem validate_problem(DecisionProblem candidate);

/// Alternative viewed as exactly two (outcome, probability) slots; a sure
/// alternative stored with one outcome becomes ((x, 100), (0, 0)).
struct TwoSlotView {
    Outcome a;
    Outcome b;
};
TwoSlotView two_slot_view(const Alternative &alternative);

// JSON mapping (problem file schema).
nlohmann::json problem_to_json(const DecisionProblem &problem);
/// Builds and validates; schema and invariant issues are reported together.
DecisionProblem problem_from_json(const nlohmann::json &j);

std::vector<DecisionProblem> parse_problem_file(std::string_view bytes);
std::string serialize_problem_file(const std::vector<DecisionProblem> &problems);

nlohmann::json choice_to_json(const Choice &choice);
Choice choice_from_json(const nlohmann::json &j);
std::string_view to_string(ChoicePhase phase);
ChoicePhase choice_phase_from_string(std::string_view text);

nlohmann::json agent_to_json(const Agent &agent);
Agent agent_from_json(const nlohmann::json &j);

nlohmann::json issues_to_json(const std::vector<ValidationIssue> &issues);

} // namespace abi_engine
