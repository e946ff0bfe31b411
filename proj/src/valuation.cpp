#include "abi/valuation.hpp"

#include "abi/errors.hpp"

namespace abi_engine {

ExpectedValue expected_value(const Alternative &alternative) {
    ExpectedValue ev;
    if (!alternative.outcomes.empty()) {
        ev.currency = alternative.outcomes.front().value.currency;
    }
    int128 scaled = 0; // sum of amount * hundredths-of-percent
    for (const auto &o : alternative.outcomes) {
        scaled += int128(o.value.amount_minor) * o.probability.hundredths();
    }
    ev.amount = Rational(scaled, Probability::kMaxHundredths);
    return ev;
}

DecisionWeightTable::DecisionWeightTable()
    : anchors_{{
          {Probability::from_percent(50), Rational(45)},
          {Probability::from_percent(60), Rational(52)},
          {Probability::from_percent(75), Rational(63)},
          {Probability::from_percent(80), Rational(67)},
          {Probability::from_percent(90), Rational(155, 2)},
          {Probability::from_percent(95), Rational(85)},
          {Probability::from_percent(98), Rational(183, 2)},
          {Probability::from_percent(99), Rational(189, 2)},
          {Probability::from_percent(100), Rational(100)},
      }} {}

const DecisionWeightTable &DecisionWeightTable::losses() {
    static const DecisionWeightTable table;
    return table;
}

Rational DecisionWeightTable::weight_at(Probability p) const {
    if (p < anchors_.front().probability) {
        throw OutOfTableRange("no decision weight below " + anchors_.front().probability.to_string() +
                              "% (got " + p.to_string() + "%)");
    }
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
        if (anchors_[i].probability == p) {
            return anchors_[i].weight;
        }
        if (anchors_[i].probability > p) {
            const auto &lo = anchors_[i - 1];
            const auto &hi = anchors_[i];
            Rational span = hi.probability.as_percent() - lo.probability.as_percent();
            Rational t = (p.as_percent() - lo.probability.as_percent()) / span;
            return lo.weight + t * (hi.weight - lo.weight);
        }
    }
    // p <= 100 always holds for a Probability, and 100 is the last anchor.
    return anchors_.back().weight;
}

std::optional<std::size_t> DecisionWeightTable::anchor_index(Probability p) const {
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
        if (anchors_[i].probability == p) {
            return i;
        }
    }
    return std::nullopt;
}

Rational decision_weight_for_loss(Probability p) { return DecisionWeightTable::losses().weight_at(p); }

std::string_view to_string(Domain d) {
    switch (d) {
    case Domain::gains: return "gains";
    case Domain::losses: return "losses";
    case Domain::mixed: return "mixed";
    case Domain::neutral: return "neutral";
    }
    return "?";
}

std::string_view to_string(ProbabilityBand b) { return b == ProbabilityBand::high ? "high" : "low"; }

std::string_view to_string(RiskPreference r) {
    return r == RiskPreference::risk_averse ? "risk_averse" : "risk_seeking";
}

std::string_view to_string(ProbabilityEffect e) {
    return e == ProbabilityEffect::certainty ? "certainty" : "possibility";
}

FourfoldCell fourfold_cell(Domain domain, ProbabilityBand band) {
    if (domain != Domain::gains && domain != Domain::losses) {
        throw UnsupportedShape("fourfold pattern covers gains or losses only, got " +
                               std::string(to_string(domain)));
    }
    FourfoldCell cell;
    cell.domain = domain;
    cell.band = band;
    cell.effect = band == ProbabilityBand::high ? ProbabilityEffect::certainty
                                                : ProbabilityEffect::possibility;
    // Risk averse for likely gains and unlikely losses; risk seeking otherwise.
    bool averse = (domain == Domain::gains) == (band == ProbabilityBand::high);
    cell.predicted_preference = averse ? RiskPreference::risk_averse : RiskPreference::risk_seeking;
    return cell;
}

std::vector<Outcome> effective_outcomes(const Alternative &alternative) {
    std::vector<Outcome> out;
    for (const auto &o : alternative.outcomes) {
        if (!o.probability.is_zero()) {
            out.push_back(o);
        }
    }
    return out;
}

Domain classify_alternative_domain(const Alternative &alternative) {
    bool any_negative = false;
    bool any_positive = false;
    for (const auto &o : effective_outcomes(alternative)) {
        any_negative |= o.value.amount_minor < 0;
        any_positive |= o.value.amount_minor > 0;
    }
    if (any_negative && any_positive) return Domain::mixed;
    if (any_negative) return Domain::losses;
    if (any_positive) return Domain::gains;
    return Domain::neutral;
}

bool is_sure(const Alternative &alternative) {
    auto effective = effective_outcomes(alternative);
    return effective.size() == 1 && effective.front().probability.is_certain();
}

std::optional<Outcome> principal_outcome(const Alternative &alternative) {
    std::optional<Outcome> best;
    auto magnitude = [](const Outcome &o) {
        return o.value.amount_minor < 0 ? -int128(o.value.amount_minor) : int128(o.value.amount_minor);
    };
    for (const auto &o : effective_outcomes(alternative)) {
        if (o.value.amount_minor == 0) {
            continue;
        }
        if (!best || magnitude(o) > magnitude(*best) ||
            (magnitude(o) == magnitude(*best) && o.probability > best->probability)) {
            best = o;
        }
    }
    return best;
}

std::optional<std::size_t> sure_alternative_index(const DecisionProblem &problem) {
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < problem.alternatives.size(); ++i) {
        if (is_sure(problem.alternatives[i])) {
            if (found) {
                return std::nullopt;
            }
            found = i;
        }
    }
    return found;
}

FourfoldCell classify_risk_context(const DecisionProblem &problem, std::size_t gamble_index) {
    if (gamble_index >= problem.alternatives.size()) {
        throw UnsupportedShape("gamble index out of range");
    }
    const Alternative &gamble = problem.alternatives[gamble_index];
    if (is_sure(gamble)) {
        throw UnsupportedShape("alternative \"" + gamble.id + "\" is a sure prospect, not a gamble");
    }
    Domain domain = classify_alternative_domain(gamble);
    if (domain != Domain::gains && domain != Domain::losses) {
        throw UnsupportedShape("gamble \"" + gamble.id + "\" has a " + std::string(to_string(domain)) +
                               " domain");
    }
    auto principal = principal_outcome(gamble);
    ProbabilityBand band = principal->probability >= high_probability_threshold()
                               ? ProbabilityBand::high
                               : ProbabilityBand::low;
    return fourfold_cell(domain, band);
}

nlohmann::json to_json(const ExpectedValue &ev) {
    return {{"amount_minor", ev.amount.to_string()}, {"currency", ev.currency}};
}

nlohmann::json to_json(const FourfoldCell &cell) {
    return {{"domain", to_string(cell.domain)},
            {"probability_band", to_string(cell.band)},
            {"predicted_preference", to_string(cell.predicted_preference)},
            {"effect", to_string(cell.effect)}};
}

FourfoldCell fourfold_cell_from_json(const nlohmann::json &j) {
    auto domain_text = j.at("domain").get<std::string>();
    Domain domain = domain_text == "gains" ? Domain::gains : Domain::losses;
    if (domain_text != "gains" && domain_text != "losses") {
        throw SchemaError("fourfold domain must be gains or losses");
    }
    ProbabilityBand band =
        j.at("probability_band").get<std::string>() == "high" ? ProbabilityBand::high : ProbabilityBand::low;
    return fourfold_cell(domain, band);
}

} // namespace abi_engine
