#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "abi/bias_engine.hpp"
#include "abi/history.hpp"

namespace abi_engine {

enum class RatingPhase { before_alert, after_alert };
std::string_view to_string(RatingPhase phase);
RatingPhase rating_phase_from_string(std::string_view text);

/// 0..10 score per alternative, collected right after a choice (and again
/// after the alert).
struct AwarenessRating {
    std::string choice_id;
    RatingPhase phase = RatingPhase::before_alert;
    std::map<std::string, int> ratings;
};

/// Level 1: the best (unbiased) alternative strictly outrates every other.
enum class AwarenessLevel : int { none = 0, conscious = 1 };

struct AgreementResponse {
    std::string choice_id;
    int q1_bias_agreement = 0;    // 1 = strongly disagree .. 5 = strongly agree
    int q2_insight_agreement = 0;
};

inline constexpr int kMinRating = 0;
inline constexpr int kMaxRating = 10;
inline constexpr int kMinLikert = 1;
inline constexpr int kMaxLikert = 5;

/// Throws MissingRating when an alternative is unrated, std::out_of_range
/// when a score lies outside [0, 10] or an unknown alternative is rated.
void check_rating(const AwarenessRating &rating, const std::vector<std::string> &alternative_ids);
/// Throws std::out_of_range outside [1, 5].
void check_agreement(const AgreementResponse &response);

AwarenessLevel awareness_level(const AwarenessRating &rating, const RiskAssessment &assessment);

nlohmann::json to_json(const AwarenessRating &rating);
AwarenessRating awareness_rating_from_json(const nlohmann::json &j);
nlohmann::json to_json(const AgreementResponse &response);
AgreementResponse agreement_from_json(const nlohmann::json &j);

// ---------------------------------------------------------------------------
// Nonparametric tests

enum class Tail { two_sided, greater, less };
std::string_view to_string(Tail tail);
Tail tail_from_string(std::string_view text);

struct TestResult {
    std::string method;
    double statistic = 0.0;
    double p_value = 1.0;
    Tail alternative = Tail::two_sided;
    int n_effective = 0;
    bool exact = false;
    std::optional<int> degrees_of_freedom;
};

nlohmann::json to_json(const TestResult &result);

/// Largest effective n for which the Wilcoxon null is enumerated exactly.
inline constexpr int kWilcoxonExactMaxN = 25;
/// Largest n_a + n_b for which the Mann-Whitney null is enumerated exactly.
inline constexpr int kMannWhitneyExactMaxN = 12;

/// Wilcoxon signed-rank on d = after - before. Zero differences are
/// discarded; tied |d| share average ranks. The statistic is W+ (sum of
/// positive ranks). `greater` tests whether `after` tends to exceed
/// `before`. Throws AllZeroDifferences when nothing is left to rank.
TestResult wilcoxon_signed_rank(std::span<const std::pair<double, double>> pairs,
                                Tail alternative = Tail::greater);

/// Mann-Whitney U; statistic is U of sample_a. `greater` tests whether
/// sample_a tends to exceed sample_b. Throws EmptySample.
TestResult mann_whitney_u(std::span<const double> sample_a, std::span<const double> sample_b,
                          Tail alternative = Tail::two_sided);

/// Pearson chi-square test of independence (no continuity correction).
/// Throws DegenerateTable for a zero marginal or a table smaller than 2x2.
TestResult chi_square_independence(const std::vector<std::vector<double>> &table);

/// P(X > x) for X ~ chi-square with `dof` degrees of freedom.
double chi_square_survival(double x, double dof);
/// Regularized upper incomplete gamma Q(a, x).
double regularized_gamma_q(double a, double x);
double standard_normal_cdf(double z);

// ---------------------------------------------------------------------------
// History summary

struct SessionSummary {
    std::string session_id;
    std::string agent_id;
    std::string problem_id;
    std::string initial_choice_id;
    std::string initial_alternative_id;
    bool flagged = false;
    std::optional<int> before_level;
    std::optional<int> after_level;
    std::optional<int> q1;
    std::optional<int> q2;
    std::optional<std::string> final_alternative_id;
};

struct AwarenessReport {
    std::size_t agents = 0;          // distinct agents with an initial choice
    std::size_t initial_choices = 0;
    std::size_t flagged_count = 0;
    double flagged_fraction = 0.0;
    std::vector<SessionSummary> sessions;
    std::vector<std::pair<int, int>> awareness_pairs; // (before, after) of flagged sessions
    std::optional<TestResult> wilcoxon;
    std::string wilcoxon_note;
    std::array<std::size_t, 5> q1_histogram{};
    std::array<std::size_t, 5> q2_histogram{};
    // Rows: Likert 1..5. Columns: awareness not improved, improved (0 -> 1).
    std::vector<std::vector<std::size_t>> q1_by_awareness_change;
    std::vector<std::vector<std::size_t>> q2_by_awareness_change;
    std::optional<TestResult> q1_chi_square;
    std::optional<TestResult> q2_chi_square;
};

AwarenessReport summarize_history(const std::vector<Event> &events);
nlohmann::json to_json(const AwarenessReport &report);

} // namespace abi_engine
