#include "abi/explainer.hpp"

#include <array>
#include <sstream>

#include "abi/errors.hpp"
#include "abi/valuation.hpp"

namespace abi_engine {
namespace {

constexpr std::string_view kPurposeText =
    "The system has identified that your preference is \"TO SEEK RISK.\" Your decision can be "
    "critical if you do not have a correct perception of how you may have been influenced to seek "
    "risk. This alert aims to inform and explain that you may be biased towards SEEKING RISK. It "
    "did not consider other information and perceptions you had when making the final decision.";

constexpr std::string_view kContextText =
    "Decisions under risk and uncertainty, where the alternatives involve significant financial "
    "losses, can lead the decision-maker to a risk-seeking preference.";

constexpr std::string_view kLossAversion =
    "The decision-maker has LOSS AVERSION: a loss hurts more than an equivalent gain brings "
    "pleasure. A sure loss is too painful.";

constexpr std::string_view kWeighting =
    "The decision-maker assigns a lower weight to the high probability of further losses.";

constexpr std::string_view kSureTag = "High loss for sure";
constexpr std::string_view kGambleTag = "High probability of higher loss";

AlternativeSummary summarize(const Alternative &alt) {
    return {alt.id, alt.label, effective_outcomes(alt)};
}

std::string alternative_name(const std::string &id) { return "alternative " + id; }

const std::array<LocaleFormat, 3> &locales() {
    static const std::array<LocaleFormat, 3> table{{
        {"en", false, ',', '.'},
        {"en-US", true, ',', '.'},
        {"pt-BR", true, '.', ','},
    }};
    return table;
}

std::string_view currency_symbol(std::string_view code) {
    if (code == "USD") return "$";
    if (code == "BRL") return "R$";
    if (code == "EUR") return "\xE2\x82\xAC";
    if (code == "GBP") return "\xC2\xA3";
    return code;
}

std::string magnitude_text(std::int64_t amount_minor, std::string_view currency, const LocaleFormat &locale,
                           bool always_minor = false) {
    std::int64_t magnitude = amount_minor < 0 ? -amount_minor : amount_minor;
    return format_money(magnitude, currency, locale, always_minor);
}

// "90% chance of losing R$ 250,000"
std::string restate(const Outcome &o, const LocaleFormat &locale) {
    std::string out = o.probability.to_string() + "% chance of ";
    if (o.value.amount_minor == 0) {
        return out + "losing nothing";
    }
    out += o.value.amount_minor < 0 ? "losing " : "winning ";
    return out + magnitude_text(o.value.amount_minor, o.value.currency, locale);
}

std::string restate(const AlternativeSummary &summary, const LocaleFormat &locale) {
    std::string out;
    for (const auto &o : summary.outcomes) {
        if (!out.empty()) {
            out += " AND ";
        }
        out += restate(o, locale);
    }
    return out;
}

std::string reference_statement(const Outcome &best, const std::string &sure_id, const LocaleFormat &locale) {
    std::string what = best.value.amount_minor == 0
                           ? "LOSING NOTHING"
                           : "LOSING ONLY " + magnitude_text(best.value.amount_minor, best.value.currency, locale);
    return "Your REFERENCE POINT is \"" + what + "\" as that is a gain compared to the " +
           alternative_name(sure_id);
}

nlohmann::json outcomes_json(const std::vector<Outcome> &outcomes) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto &o : outcomes) {
        out.push_back({{"amount_minor", o.value.amount_minor}, {"probability_pct", o.probability.to_string()}});
    }
    return out;
}

nlohmann::json summary_json(const AlternativeSummary &s) {
    return {{"alternative_id", s.alternative_id}, {"label", s.label}, {"outcomes", outcomes_json(s.outcomes)}};
}

} // namespace

AlertContent build_alert(const DecisionProblem &problem, const Choice &choice,
                         const RiskAssessment &assessment) {
    if (!assessment.risk_seeking_for_losses) {
        throw NotFlagged("choice \"" + choice.id + "\" was not flagged as risk seeking for losses");
    }
    if (assessment.problem_id != problem.id || choice.problem_id != problem.id) {
        throw ReferentialError("assessment, choice and problem do not refer to the same problem");
    }
    auto pair = canonicalize(problem, choice.chosen_alternative_id);
    if (!pair) {
        throw UnsupportedShape("flagged problem \"" + problem.id + "\" has no sure/gamble decomposition");
    }

    AlertContent content;
    content.part1.purpose_text = kPurposeText;
    content.part1.problem_statement = problem.statement;
    content.part1.currency = problem.currency;
    for (const auto &alt : problem.alternatives) {
        content.part1.alternative_summaries.push_back(summarize(alt));
    }
    content.part1.chosen_alternative_id = choice.chosen_alternative_id;

    auto &p2 = content.part2;
    p2.context_text = std::string(kContextText) + " In this problem that is choosing " +
                      alternative_name(pair->gamble.id) + ".";
    p2.sure_summary = summarize(pair->sure);
    p2.sure_tag = kSureTag;
    p2.gamble_summary = summarize(pair->gamble);
    p2.gamble_tag = kGambleTag;
    p2.loss_aversion_statement = kLossAversion;
    p2.avoidance_statement = "The decision-maker seeks to avoid the sure loss in " +
                             alternative_name(pair->sure.id) + " and hopes to not lose anything in " +
                             alternative_name(pair->gamble.id) + ".";

    // Reference point: the gamble's best outcome.
    auto effective = effective_outcomes(pair->gamble);
    Outcome best = effective.front();
    for (const auto &o : effective) {
        if (o.value.amount_minor > best.value.amount_minor) {
            best = o;
        }
    }
    p2.reference_point.outcome = best;
    p2.reference_point.statement = reference_statement(best, pair->sure.id, *find_locale("en"));
    p2.weighting_statement = std::string(kWeighting);

    auto principal = principal_outcome(pair->gamble);
    const Probability p = principal->probability;
    if (p >= high_probability_threshold()) {
        p2.decision_weight_row = DecisionWeightRow{p, decision_weight_for_loss(p),
                                                   DecisionWeightTable::losses().anchor_index(p)};
    }
    return content;
}

std::optional<LocaleFormat> find_locale(std::string_view tag) {
    for (const auto &l : locales()) {
        if (l.tag == tag) {
            return l;
        }
    }
    return std::nullopt;
}

std::string format_money(std::int64_t amount_minor, std::string_view currency, const LocaleFormat &locale,
                         bool always_minor) {
    int128 value = amount_minor;
    bool negative = value < 0;
    if (negative) {
        value = -value;
    }
    std::string whole = int128_to_string(value / 100);
    int minor = static_cast<int>(value % 100);

    std::string grouped;
    int count = 0;
    for (auto it = whole.rbegin(); it != whole.rend(); ++it) {
        if (count > 0 && count % 3 == 0) {
            grouped.insert(grouped.begin(), locale.group_separator);
        }
        grouped.insert(grouped.begin(), *it);
        ++count;
    }
    std::string out;
    if (negative) {
        out.push_back('-');
    }
    out += locale.use_symbol ? currency_symbol(currency) : currency;
    out.push_back(' ');
    out += grouped;
    if (always_minor || minor != 0) {
        out.push_back(locale.decimal_separator);
        out.push_back(static_cast<char>('0' + minor / 10));
        out.push_back(static_cast<char>('0' + minor % 10));
    }
    return out;
}

nlohmann::json to_json(const AlertContent &c) {
    nlohmann::json summaries = nlohmann::json::array();
    for (const auto &s : c.part1.alternative_summaries) {
        summaries.push_back(summary_json(s));
    }
    nlohmann::json table = nlohmann::json::array();
    for (const auto &anchor : DecisionWeightTable::losses().anchors()) {
        table.push_back({anchor.probability.as_percent().to_double(), anchor.weight.to_double()});
    }
    auto sure = summary_json(c.part2.sure_summary);
    sure["tag"] = c.part2.sure_tag;
    auto gamble = summary_json(c.part2.gamble_summary);
    gamble["tag"] = c.part2.gamble_tag;
    const auto &row = c.part2.decision_weight_row;
    const auto &ref = c.part2.reference_point;
    nlohmann::json row_json = nullptr;
    nlohmann::json highlighted = nullptr;
    if (row) {
        row_json = {{"probability_pct", row->probability.to_string()}, {"weight", row->weight.to_string(6)}};
        highlighted = row->probability.as_percent().to_double();
    }
    return {
        {"part1",
         {{"purpose_text", c.part1.purpose_text},
          {"problem_statement", c.part1.problem_statement},
          {"currency", c.part1.currency},
          {"alternative_summaries", summaries},
          {"chosen_alternative_id", c.part1.chosen_alternative_id}}},
        {"part2",
         {{"context_text", c.part2.context_text},
          {"sure_summary", sure},
          {"gamble_summary", gamble},
          {"loss_aversion_statement", c.part2.loss_aversion_statement},
          {"avoidance_statement", c.part2.avoidance_statement},
          {"reference_point",
           {{"amount_minor", ref.outcome.value.amount_minor},
            {"probability_pct", ref.outcome.probability.to_string()},
            {"statement", ref.statement}}},
          {"weighting_statement", c.part2.weighting_statement},
          {"decision_weight_row", row_json},
          {"decision_weight_table", table},
          {"highlighted_probability", highlighted}}},
    };
}

RenderedAlert render_alert_text(const AlertContent &c, std::string_view locale_tag) {
    RenderedAlert out;
    auto locale = find_locale(locale_tag);
    if (!locale) {
        out.locale_fallback = true;
        locale = find_locale("en");
    }
    out.locale = locale->tag;

    std::ostringstream p1;
    p1 << "Decision Module: ALERT\n\n"
       << "Please READ THIS ALERT carefully!\n\n"
       << c.part1.purpose_text << "\n\n"
       << "This alert refers to the selection of " << alternative_name(c.part1.chosen_alternative_id)
       << " in the problem below:\n\n"
       << c.part1.problem_statement << "\n";
    for (const auto &s : c.part1.alternative_summaries) {
        p1 << "\nAlternative " << s.alternative_id << "\n";
        if (!s.label.empty()) {
            p1 << s.label << "\n";
        }
        p1 << "In other words: " << restate(s, *locale) << ".\n";
    }

    const auto &p2c = c.part2;
    std::ostringstream p2;
    p2 << p2c.context_text << "\n\n";
    p2 << "Alternative " << p2c.sure_summary.alternative_id << ":\n" << p2c.sure_tag << "\n";
    for (const auto &o : p2c.sure_summary.outcomes) {
        p2 << o.probability.to_string() << "% chance to lose\n"
           << magnitude_text(o.value.amount_minor, o.value.currency, *locale, true) << "\n";
    }
    p2 << "\nAlternative " << p2c.gamble_summary.alternative_id << ":\n" << p2c.gamble_tag << "\n";
    bool first = true;
    for (const auto &o : p2c.gamble_summary.outcomes) {
        if (!first) {
            p2 << " and\n";
        }
        first = false;
        if (o.value.amount_minor == 0) {
            p2 << o.probability.to_string() << "% chance to lose nothing";
        } else {
            p2 << o.probability.to_string() << "% chance to " << (o.value.amount_minor < 0 ? "lose" : "win")
               << "\n"
               << magnitude_text(o.value.amount_minor, o.value.currency, *locale, true);
        }
    }
    p2 << "\n\nHow can your preference be biased towards seeking risk?\n\n"
       << p2c.loss_aversion_statement << "\n\n"
       << p2c.avoidance_statement << "\n\n"
       << reference_statement(p2c.reference_point.outcome, p2c.sure_summary.alternative_id, *locale) << "\n\n"
       << p2c.weighting_statement << "\n\n";

    if (p2c.decision_weight_row) {
        const auto &row = *p2c.decision_weight_row;
        std::ostringstream header;
        std::ostringstream weights;
        header << "Probability (%)";
        weights << "Decision weight for losses";
        for (std::size_t i = 0; i < DecisionWeightTable::losses().anchors().size(); ++i) {
            const auto &anchor = DecisionWeightTable::losses().anchors()[i];
            bool highlight = row.anchor_index && *row.anchor_index == i;
            std::string p = anchor.probability.to_string();
            std::string w = anchor.weight.to_string(2);
            if (highlight) {
                p = "[" + p + "]";
                w = "[" + w + "]";
            }
            header << '\t' << p;
            weights << '\t' << w;
        }
        p2 << header.str() << "\n" << weights.str() << "\n";
        if (!row.anchor_index) {
            p2 << "At " << row.probability.to_string() << "% the decision weight is about "
               << row.weight.to_string(2) << ".\n";
        }
    }

    out.text = p1.str() + "\n" + p2.str();
    out.json = {{"content", to_json(c)},
                {"locale", out.locale},
                {"locale_fallback", out.locale_fallback},
                {"text", {{"part1", p1.str()}, {"part2", p2.str()}}}};
    return out;
}

} // namespace abi_engine
