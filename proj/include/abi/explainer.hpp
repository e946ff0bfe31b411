#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "abi/bias_engine.hpp"
#include "abi/model.hpp"

namespace abi_engine {

struct AlternativeSummary {
    std::string alternative_id;
    std::string label;
    std::vector<Outcome> outcomes; // as stored, zero-probability slots dropped
};

struct ReferencePoint {
    Outcome outcome; // the gamble's best (least negative) outcome
    std::string statement;
};

struct DecisionWeightRow {
    Probability probability;               // gamble principal probability
    Rational weight;                        // decision_weight_for_loss(probability)
    std::optional<std::size_t> anchor_index; // column to highlight, when on an anchor
};

/// Structured content of the two-part bias alert. Every number is copied from
/// the problem, the assessment or the decision-weight table.
struct AlertContent {
    struct PartOne {
        std::string purpose_text;
        std::string problem_statement;
        std::string currency;
        std::vector<AlternativeSummary> alternative_summaries;
        std::string chosen_alternative_id;
    } part1;

    struct PartTwo {
        std::string context_text;
        AlternativeSummary sure_summary;
        std::string sure_tag;
        AlternativeSummary gamble_summary;
        std::string gamble_tag;
        std::string loss_aversion_statement;
        std::string avoidance_statement;
        ReferencePoint reference_point;
        std::string weighting_statement;
        std::optional<DecisionWeightRow> decision_weight_row; // principal probability >= 50 only
    } part2;
};

/// Throws NotFlagged unless the assessment flagged the choice.
AlertContent build_alert(const DecisionProblem &problem, const Choice &choice,
                         const RiskAssessment &assessment);

/// Number and currency presentation. Template text is English throughout.
struct LocaleFormat {
    std::string tag;
    bool use_symbol = false;   // "R$ 200,000.00" instead of "BRL 200,000.00"
    char group_separator = ',';
    char decimal_separator = '.';
};

/// Known tags: "en" (default, currency codes), "en-US", "pt-BR".
std::optional<LocaleFormat> find_locale(std::string_view tag);

/// "BRL 200,000" (whole amounts drop the minor part unless `always_minor`).
std::string format_money(std::int64_t amount_minor, std::string_view currency,
                         const LocaleFormat &locale, bool always_minor = false);

struct RenderedAlert {
    std::string text;
    nlohmann::json json;
    std::string locale;           // the locale actually used
    bool locale_fallback = false; // requested tag unknown; default used
};

RenderedAlert render_alert_text(const AlertContent &content, std::string_view locale_tag = "en");

/// Canonical machine representation (locale independent).
nlohmann::json to_json(const AlertContent &content);

} // namespace abi_engine
