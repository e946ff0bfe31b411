#include "abi/bias_engine.hpp"

#include <stdexcept>

#include "abi/errors.hpp"

namespace abi_engine {
namespace {

// The rule's view of one option: outcome slots a and b plus its EV.
struct OptionSlots {
    std::string id;
    Outcome a;
    Outcome b;
    Rational ev;
};

Outcome zero_outcome(const std::string &currency) { return Outcome{Money{0, currency}, Probability{}}; }

OptionSlots literal_slots(const Alternative &alt) {
    auto view = two_slot_view(alt);
    return {alt.id, view.a, view.b, expected_value(alt).amount};
}

// Sure option: a is the certain outcome, b whatever else is stored.
OptionSlots sure_slots(const Alternative &alt) {
    OptionSlots slots{alt.id, {}, {}, expected_value(alt).amount};
    const std::string &currency = alt.outcomes.front().value.currency;
    std::size_t certain = 0;
    for (std::size_t i = 0; i < alt.outcomes.size(); ++i) {
        if (alt.outcomes[i].probability.is_certain()) {
            certain = i;
            break;
        }
    }
    slots.a = alt.outcomes[certain];
    slots.b = alt.outcomes.size() > 1 ? alt.outcomes[1 - certain] : zero_outcome(currency);
    return slots;
}

// Gamble option: a is the principal outcome, b the remaining branch.
OptionSlots gamble_slots(const Alternative &alt) {
    OptionSlots slots{alt.id, {}, {}, expected_value(alt).amount};
    const std::string &currency = alt.outcomes.front().value.currency;
    std::size_t principal_index = 0;
    if (auto principal = principal_outcome(alt)) {
        for (std::size_t i = 0; i < alt.outcomes.size(); ++i) {
            if (alt.outcomes[i] == *principal) {
                principal_index = i;
                break;
            }
        }
    }
    slots.a = alt.outcomes[principal_index];
    slots.b = alt.outcomes.size() > 1 ? alt.outcomes[1 - principal_index] : zero_outcome(currency);
    return slots;
}

std::string amount_text(const Outcome &o) { return std::to_string(o.value.amount_minor); }

int128 magnitude(std::int64_t v) { return v < 0 ? -int128(v) : int128(v); }

RuleVerdict evaluate_rule(const OptionSlots &option1, const OptionSlots &option2,
                          std::string_view chosen_id) {
    const auto &names = rule_predicate_names();
    RuleVerdict verdict;
    auto &entries = verdict.trace.entries;
    entries.reserve(kRulePredicateCount);

    const Probability high = high_probability_threshold();
    const Probability p_a1 = option1.a.probability;
    const Probability p_a2 = option2.a.probability;
    const std::int64_t a1 = option1.a.value.amount_minor;
    const std::int64_t a2 = option2.a.value.amount_minor;
    const std::int64_t b2 = option2.b.value.amount_minor;

    entries.push_back({names[0], {std::string(chosen_id), option2.id}, chosen_id == option2.id});
    entries.push_back({names[1], {p_a1.to_string()}, p_a1.is_certain()});
    entries.push_back({names[2], {amount_text(option1.a)}, a1 < 0});
    entries.push_back({names[3], {p_a2.to_string()}, p_a2 >= high && !p_a2.is_certain()});
    entries.push_back({names[4], {amount_text(option2.a)}, a2 < 0});
    entries.push_back({names[5], {amount_text(option2.b)}, b2 <= 0});
    entries.push_back({names[6],
                       {amount_text(option2.a), amount_text(option1.a)},
                       magnitude(a2) > magnitude(a1)});
    entries.push_back({names[7], {option1.ev.to_string(), option2.ev.to_string()}, option1.ev >= option2.ev});

    verdict.risk_seeking = verdict.trace.verdict();
    return verdict;
}

} // namespace

std::string_view to_string(RuleMode mode) { return mode == RuleMode::canonical ? "canonical" : "strict"; }

RuleMode rule_mode_from_string(std::string_view text) {
    if (text == "canonical") return RuleMode::canonical;
    if (text == "strict") return RuleMode::strict;
    throw std::invalid_argument("unknown rule mode \"" + std::string(text) + "\"");
}

bool PredicateTrace::verdict() const {
    if (entries.size() != kRulePredicateCount) {
        return false;
    }
    for (const auto &e : entries) {
        if (!e.result) {
            return false;
        }
    }
    return true;
}

const std::vector<std::string> &rule_predicate_names() {
    static const std::vector<std::string> names{
        "chosen_is_gamble",
        "isProbability100_a1",
        "isNegativeValue_a1",
        "isProbabilityHighAndLess100_a2",
        "isNegativeValue_a2",
        "isNegativeOrZeroValue_b2",
        "isAbsValuea2GreaterAbsValuea1",
        "isEV1GreaterEqualsEV2",
    };
    return names;
}

std::optional<CanonicalPair> canonicalize(const DecisionProblem &problem,
                                          std::string_view chosen_alternative_id) {
    if (!problem.index_of(chosen_alternative_id)) {
        throw UnknownAlternative("alternative \"" + std::string(chosen_alternative_id) +
                                 "\" is not part of problem \"" + problem.id + "\"");
    }
    auto sure = sure_alternative_index(problem);
    if (!sure || problem.alternatives.size() != 2) {
        return std::nullopt;
    }
    const Alternative &sure_alt = problem.alternatives[*sure];
    const Alternative &gamble_alt = problem.alternatives[1 - *sure];
    return CanonicalPair{sure_alt, gamble_alt, gamble_alt.id == chosen_alternative_id};
}

RuleVerdict is_risk_seeking_for_losses_choice(const DecisionProblem &problem,
                                              std::string_view chosen_alternative_id,
                                              RuleMode mode) {
    if (!problem.index_of(chosen_alternative_id)) {
        throw UnknownAlternative("alternative \"" + std::string(chosen_alternative_id) +
                                 "\" is not part of problem \"" + problem.id + "\"");
    }
    if (problem.alternatives.size() != 2) {
        throw UnsupportedShape("the rule applies to binary problems only");
    }
    if (mode == RuleMode::canonical) {
        if (auto pair = canonicalize(problem, chosen_alternative_id)) {
            return evaluate_rule(sure_slots(pair->sure), gamble_slots(pair->gamble), chosen_alternative_id);
        }
    }
    return evaluate_rule(literal_slots(problem.alternatives[0]), literal_slots(problem.alternatives[1]),
                         chosen_alternative_id);
}

const ExpectedValue *RiskAssessment::ev_of(std::string_view alternative_id) const {
    for (const auto &[id, ev] : ev_per_alternative) {
        if (id == alternative_id) {
            return &ev;
        }
    }
    return nullptr;
}

RiskAssessment assess(const DecisionProblem &problem, const Choice &choice, RuleMode mode) {
    if (choice.problem_id != problem.id) {
        throw ReferentialError("choice \"" + choice.id + "\" refers to problem \"" + choice.problem_id +
                               "\", not \"" + problem.id + "\"");
    }
    RiskAssessment out;
    out.problem_id = problem.id;
    out.choice_id = choice.id;
    out.chosen_alternative_id = choice.chosen_alternative_id;
    out.mode = mode;
    for (const auto &alt : problem.alternatives) {
        out.ev_per_alternative.emplace_back(alt.id, expected_value(alt));
    }

    auto verdict = is_risk_seeking_for_losses_choice(problem, choice.chosen_alternative_id, mode);
    out.risk_seeking_for_losses = verdict.risk_seeking;
    out.trace = std::move(verdict.trace);

    auto sure = sure_alternative_index(problem);
    if (sure) {
        try {
            out.fourfold_cell = classify_risk_context(problem, 1 - *sure);
        } catch (const UnsupportedShape &) {
            // mixed or neutral gamble: no cell
        }
    }

    const Rational &ev0 = out.ev_per_alternative[0].second.amount;
    const Rational &ev1 = out.ev_per_alternative[1].second.amount;
    if (ev0 > ev1) {
        out.unbiased_best_alternative_id = problem.alternatives[0].id;
    } else if (ev1 > ev0) {
        out.unbiased_best_alternative_id = problem.alternatives[1].id;
    } else {
        out.unbiased_best_alternative_id = problem.alternatives[sure.value_or(0)].id;
    }
    return out;
}

nlohmann::json to_json(const PredicateTrace &trace) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto &e : trace.entries) {
        out.push_back({{"predicate", e.name}, {"operands", e.operands}, {"result", e.result}});
    }
    return out;
}

nlohmann::json to_json(const RiskAssessment &a) {
    nlohmann::json evs = nlohmann::json::array();
    for (const auto &[id, ev] : a.ev_per_alternative) {
        evs.push_back({{"alternative_id", id}, {"amount_minor", ev.amount.to_string()}, {"currency", ev.currency}});
    }
    return {{"problem_id", a.problem_id},
            {"choice_id", a.choice_id},
            {"chosen_alternative_id", a.chosen_alternative_id},
            {"ev_per_alternative", evs},
            {"fourfold_cell", a.fourfold_cell ? to_json(*a.fourfold_cell) : nlohmann::json(nullptr)},
            {"risk_seeking_for_losses", a.risk_seeking_for_losses},
            {"trace", to_json(a.trace)},
            {"mode", to_string(a.mode)},
            {"unbiased_best_alternative_id", a.unbiased_best_alternative_id}};
}

RiskAssessment risk_assessment_from_json(const nlohmann::json &j) {
    RiskAssessment a;
    a.problem_id = j.at("problem_id").get<std::string>();
    a.choice_id = j.at("choice_id").get<std::string>();
    a.chosen_alternative_id = j.at("chosen_alternative_id").get<std::string>();
    for (const auto &ev : j.at("ev_per_alternative")) {
        a.ev_per_alternative.emplace_back(
            ev.at("alternative_id").get<std::string>(),
            ExpectedValue{Rational::parse(ev.at("amount_minor").get<std::string>()),
                          ev.at("currency").get<std::string>()});
    }
    if (!j.at("fourfold_cell").is_null()) {
        a.fourfold_cell = fourfold_cell_from_json(j.at("fourfold_cell"));
    }
    a.risk_seeking_for_losses = j.at("risk_seeking_for_losses").get<bool>();
    for (const auto &e : j.at("trace")) {
        a.trace.entries.push_back({e.at("predicate").get<std::string>(),
                                   e.at("operands").get<std::vector<std::string>>(),
                                   e.at("result").get<bool>()});
    }
    a.mode = rule_mode_from_string(j.at("mode").get<std::string>());
    a.unbiased_best_alternative_id = j.at("unbiased_best_alternative_id").get<std::string>();
    return a;
}

} // namespace abi_engine
