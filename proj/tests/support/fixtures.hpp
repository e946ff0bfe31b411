#pragma once

#include <string>

#include "abi/model.hpp"

namespace fixtures {

inline abi_engine::Outcome outcome(std::int64_t amount_minor, const char *pct, const std::string &currency) {
    return {abi_engine::Money{amount_minor, currency}, abi_engine::Probability::parse(pct)};
}

inline abi_engine::Alternative alternative(std::string id, std::vector<abi_engine::Outcome> outcomes) {
    abi_engine::Alternative a;
    a.id = id;
    a.label = std::move(id);
    a.outcomes = std::move(outcomes);
    return a;
}

inline abi_engine::DecisionProblem binary(std::string id, const std::string &currency, abi_engine::Alternative first,
                                   abi_engine::Alternative second) {
    abi_engine::DecisionProblem p;
    p.id = std::move(id);
    p.statement = "";
    p.currency = currency;
    p.alternatives = {std::move(first), std::move(second)};
    return p;
}

// Lose 9,500 for sure vs 95% chance to lose 10,000.
inline abi_engine::DecisionProblem sure_loss() {
    return binary("1", "USD", alternative("option1", {outcome(-950000, "100", "USD")}),
                  alternative("option2", {outcome(-1000000, "95", "USD"), outcome(0, "5", "USD")}));
}

// The sunk-cost project problem: lose R$ 200,000 for sure vs 90% chance to
// lose R$ 250,000 and 10% to lose nothing.
inline abi_engine::DecisionProblem sunk_cost() {
    auto p = binary("sunk-cost", "BRL", alternative("alt1", {outcome(-20000000, "100", "BRL")}),
                    alternative("alt2", {outcome(-25000000, "90", "BRL"), outcome(0, "10", "BRL")}));
    p.statement = "Cancel the project or invest a further R$ 50,000.";
    return p;
}

// Same shape with every amount positive.
inline abi_engine::DecisionProblem gains_mirror() {
    return binary("mirror", "USD", alternative("option1", {outcome(950000, "100", "USD")}),
                  alternative("option2", {outcome(1000000, "95", "USD"), outcome(0, "5", "USD")}));
}

inline const char *kSunkCostJson = R"({
  "id": "sunk-cost",
  "statement": "Cancel the project or invest a further R$ 50,000.",
  "currency": "BRL",
  "alternatives": [
    {"id": "alt1", "label": "Cancel the project", "outcomes": [{"amount_minor": -20000000, "probability_pct": "100"}]},
    {"id": "alt2", "label": "Continue the project", "outcomes": [
      {"amount_minor": -25000000, "probability_pct": "90"}, {"amount_minor": 0, "probability_pct": "10"}]}
  ]
})";

} // namespace fixtures
