#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "abi/decimal.hpp"
#include "abi/model.hpp"

namespace abi_engine {

/// Exact expected value in minor currency units (fractions allowed).
struct ExpectedValue {
    Rational amount;
    std::string currency;

    friend bool operator==(const ExpectedValue &, const ExpectedValue &) = default;
};

/// Probability-weighted sum of the alternative's outcomes. Never rounds.
ExpectedValue expected_value(const Alternative &alternative);

struct WeightAnchor {
    Probability probability;
    Rational weight;
};

/// Decision weights for losses at the nine published anchors, with linear
/// interpolation in between. Defined on [50, 100] only.
class DecisionWeightTable {
public:
    static const DecisionWeightTable &losses();

    std::span<const WeightAnchor> anchors() const noexcept { return anchors_; }

    /// Throws OutOfTableRange below the first anchor.
    Rational weight_at(Probability p) const;

    /// Anchor equal to `p`, if any (used to highlight a table column).
    std::optional<std::size_t> anchor_index(Probability p) const;

private:
    DecisionWeightTable();
    std::array<WeightAnchor, 9> anchors_;
};

Rational decision_weight_for_loss(Probability p);

enum class Domain { gains, losses, mixed, neutral };
enum class ProbabilityBand { high, low };
enum class RiskPreference { risk_averse, risk_seeking };
enum class ProbabilityEffect { certainty, possibility };

std::string_view to_string(Domain d);
std::string_view to_string(ProbabilityBand b);
std::string_view to_string(RiskPreference r);
std::string_view to_string(ProbabilityEffect e);

/// One cell of the fourfold pattern of risk attitudes.
struct FourfoldCell {
    Domain domain = Domain::losses; // gains or losses only
    ProbabilityBand band = ProbabilityBand::high;
    RiskPreference predicted_preference = RiskPreference::risk_seeking;
    ProbabilityEffect effect = ProbabilityEffect::certainty;

    friend bool operator==(const FourfoldCell &, const FourfoldCell &) = default;
};

/// The fourfold cell for (domain, band). Domain must be gains or losses.
FourfoldCell fourfold_cell(Domain domain, ProbabilityBand band);

/// Probability at or above which a loss or gain counts as "high".
inline Probability high_probability_threshold() { return Probability::from_percent(50); }

/// Sign classification relative to the zero status quo, over outcomes with
/// nonzero probability.
Domain classify_alternative_domain(const Alternative &alternative);

/// Outcomes with nonzero probability, in stored order.
std::vector<Outcome> effective_outcomes(const Alternative &alternative);

/// True when the single effective outcome has probability 100.
bool is_sure(const Alternative &alternative);

/// The nonzero-amount effective outcome with the largest magnitude; ties go
/// to the higher probability, then to stored order.
std::optional<Outcome> principal_outcome(const Alternative &alternative);

/// Index of the only sure alternative; none if zero or both are sure.
std::optional<std::size_t> sure_alternative_index(const DecisionProblem &problem);

/// Throws UnsupportedShape for a sure gamble or a mixed/neutral domain.
FourfoldCell classify_risk_context(const DecisionProblem &problem, std::size_t gamble_index);

nlohmann::json to_json(const ExpectedValue &ev);
nlohmann::json to_json(const FourfoldCell &cell);
FourfoldCell fourfold_cell_from_json(const nlohmann::json &j);

} // namespace abi_engine
