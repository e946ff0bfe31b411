#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "abi/model.hpp"
#include "abi/valuation.hpp"

namespace abi_engine {

/// How the two alternatives map onto the rule's (option 1, option 2) slots.
///  - canonical: option 1 is the sure alternative, option 2 the gamble,
///    wherever they are stored in the problem.
///  - strict: stored order is taken literally, as in the original tabular
///    layout (sure option first, gamble second).
enum class RuleMode { canonical, strict };

std::string_view to_string(RuleMode mode);
RuleMode rule_mode_from_string(std::string_view text);

struct PredicateResult {
    std::string name;
    std::vector<std::string> operands;
    bool result = false;

    friend bool operator==(const PredicateResult &, const PredicateResult &) = default;
};

/// The eight predicates of the risk-seeking-for-losses rule, always all
/// evaluated, in rule order.
struct PredicateTrace {
    std::vector<PredicateResult> entries;

    bool verdict() const;
    friend bool operator==(const PredicateTrace &, const PredicateTrace &) = default;
};

inline constexpr std::size_t kRulePredicateCount = 8;

/// Names of the rule predicates in evaluation order.
const std::vector<std::string> &rule_predicate_names();

struct CanonicalPair {
    Alternative sure;
    Alternative gamble;
    bool chosen_is_gamble = false;
};

/// Sure/gamble decomposition independent of storage order; none unless
/// exactly one alternative is sure. Throws UnknownAlternative.
std::optional<CanonicalPair> canonicalize(const DecisionProblem &problem,
                                          std::string_view chosen_alternative_id);

struct RuleVerdict {
    bool risk_seeking = false;
    PredicateTrace trace;
};

/// Evaluates the rule "option 2 has risk seeking preference for medium to
/// high probabilities of losses" for the chosen alternative.
///
/// Slots: a1/b1 are option 1's outcomes and a2/b2 option 2's, in the two-slot
/// view. In canonical mode a1 is the sure outcome and a2 the gamble's
/// principal outcome (b2 is the remaining branch). When no sure/gamble
/// decomposition exists canonical mode falls back to the stored order, where
/// the rule can never fire. Throws UnknownAlternative.
RuleVerdict is_risk_seeking_for_losses_choice(const DecisionProblem &problem,
                                              std::string_view chosen_alternative_id,
                                              RuleMode mode = RuleMode::canonical);

struct RiskAssessment {
    std::string problem_id;
    std::string choice_id;
    std::string chosen_alternative_id;
    std::vector<std::pair<std::string, ExpectedValue>> ev_per_alternative; // problem order
    std::optional<FourfoldCell> fourfold_cell;
    bool risk_seeking_for_losses = false;
    PredicateTrace trace;
    RuleMode mode = RuleMode::canonical;
    std::string unbiased_best_alternative_id;

    const ExpectedValue *ev_of(std::string_view alternative_id) const;
    friend bool operator==(const RiskAssessment &, const RiskAssessment &) = default;
};

/// Full assessment of one choice: EVs, fourfold cell, rule verdict with trace
/// and the alternative an EV maximizer would pick (sure alternative on ties).
RiskAssessment assess(const DecisionProblem &problem, const Choice &choice,
                      RuleMode mode = RuleMode::canonical);

nlohmann::json to_json(const PredicateTrace &trace);
nlohmann::json to_json(const RiskAssessment &assessment);
RiskAssessment risk_assessment_from_json(const nlohmann::json &j);

} // namespace abi_engine
