#include "abi/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "abi/errors.hpp"

namespace abi_engine {

using nlohmann::json;

std::string_view to_string(RatingPhase phase) {
    return phase == RatingPhase::before_alert ? "before_alert" : "after_alert";
}

RatingPhase rating_phase_from_string(std::string_view text) {
    if (text == "before_alert") return RatingPhase::before_alert;
    if (text == "after_alert") return RatingPhase::after_alert;
    throw std::invalid_argument("unknown rating phase \"" + std::string(text) + "\"");
}

void check_rating(const AwarenessRating &rating, const std::vector<std::string> &alternative_ids) {
    for (const auto &id : alternative_ids) {
        if (!rating.ratings.count(id)) {
            throw MissingRating("alternative \"" + id + "\" was not rated");
        }
    }
    for (const auto &[id, score] : rating.ratings) {
        if (std::find(alternative_ids.begin(), alternative_ids.end(), id) == alternative_ids.end()) {
            throw std::out_of_range("rating for unknown alternative \"" + id + "\"");
        }
        if (score < kMinRating || score > kMaxRating) {
            throw std::out_of_range("rating " + std::to_string(score) + " for \"" + id + "\" outside [0, 10]");
        }
    }
}

void check_agreement(const AgreementResponse &response) {
    for (int q : {response.q1_bias_agreement, response.q2_insight_agreement}) {
        if (q < kMinLikert || q > kMaxLikert) {
            throw std::out_of_range("agreement " + std::to_string(q) + " outside [1, 5]");
        }
    }
}

AwarenessLevel awareness_level(const AwarenessRating &rating, const RiskAssessment &assessment) {
    std::vector<std::string> ids;
    for (const auto &[id, ev] : assessment.ev_per_alternative) {
        ids.push_back(id);
    }
    for (const auto &id : ids) {
        if (!rating.ratings.count(id)) {
            throw MissingRating("alternative \"" + id + "\" was not rated");
        }
    }
    const std::string &best = assessment.unbiased_best_alternative_id;
    const int best_score = rating.ratings.at(best);
    for (const auto &id : ids) {
        if (id != best && rating.ratings.at(id) >= best_score) {
            return AwarenessLevel::none;
        }
    }
    return AwarenessLevel::conscious;
}

json to_json(const AwarenessRating &rating) {
    return {{"choice_id", rating.choice_id}, {"phase", to_string(rating.phase)}, {"ratings", rating.ratings}};
}

AwarenessRating awareness_rating_from_json(const json &j) {
    AwarenessRating r;
    r.choice_id = j.at("choice_id").get<std::string>();
    r.phase = rating_phase_from_string(j.at("phase").get<std::string>());
    for (const auto &[id, score] : j.at("ratings").items()) {
        if (!score.is_number_integer()) {
            throw std::invalid_argument("rating for \"" + id + "\" must be an integer");
        }
        r.ratings[id] = score.get<int>();
    }
    return r;
}

json to_json(const AgreementResponse &response) {
    return {{"choice_id", response.choice_id},
            {"q1_bias_agreement", response.q1_bias_agreement},
            {"q2_insight_agreement", response.q2_insight_agreement}};
}

AgreementResponse agreement_from_json(const json &j) {
    AgreementResponse r;
    r.choice_id = j.at("choice_id").get<std::string>();
    r.q1_bias_agreement = j.at("q1_bias_agreement").get<int>();
    r.q2_insight_agreement = j.at("q2_insight_agreement").get<int>();
    return r;
}

// ---------------------------------------------------------------------------
// Special functions

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double regularized_gamma_q(double a, double x) {
    if (a <= 0.0) {
        throw std::domain_error("gamma shape must be positive");
    }
    if (x <= 0.0) {
        return 1.0;
    }
    constexpr int kMaxIterations = 10000;
    constexpr double kEps = 1e-16;
    const double log_prefix = a * std::log(x) - x - std::lgamma(a);

    if (x < a + 1.0) {
        // Series for P(a, x); Q = 1 - P.
        double term = 1.0 / a;
        double sum = term;
        for (int n = 1; n < kMaxIterations; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * kEps) {
                break;
            }
        }
        return 1.0 - sum * std::exp(log_prefix);
    }

    // Continued fraction for Q(a, x), modified Lentz.
    constexpr double kTiny = std::numeric_limits<double>::min() / kEps;
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIterations; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) {
            break;
        }
    }
    return std::exp(log_prefix) * h;
}

double chi_square_survival(double x, double dof) {
    if (dof <= 0) {
        throw std::domain_error("degrees of freedom must be positive");
    }
    return regularized_gamma_q(dof / 2.0, x / 2.0);
}

// ---------------------------------------------------------------------------
// Tests

std::string_view to_string(Tail tail) {
    switch (tail) {
    case Tail::two_sided: return "two_sided";
    case Tail::greater: return "greater";
    case Tail::less: return "less";
    }
    return "?";
}

Tail tail_from_string(std::string_view text) {
    if (text == "two_sided" || text == "two-sided") return Tail::two_sided;
    if (text == "greater") return Tail::greater;
    if (text == "less") return Tail::less;
    throw std::invalid_argument("unknown alternative \"" + std::string(text) + "\"");
}

json to_json(const TestResult &r) {
    return {{"method", r.method},
            {"statistic", r.statistic},
            {"p_value", r.p_value},
            {"alternative", to_string(r.alternative)},
            {"n_effective", r.n_effective},
            {"exact", r.exact},
            {"degrees_of_freedom", r.degrees_of_freedom ? json(*r.degrees_of_freedom) : json(nullptr)}};
}

namespace {

bool nearly_equal(double a, double b) {
    return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

struct Ranked {
    std::vector<double> ranks;   // average ranks, in input order
    std::vector<int> tie_sizes;  // size of every tie group (including 1s)
};

Ranked average_ranks(const std::vector<double> &values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    Ranked out;
    out.ranks.assign(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && nearly_equal(values[order[j]], values[order[i]])) {
            ++j;
        }
        double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            out.ranks[order[k]] = avg;
        }
        out.tie_sizes.push_back(static_cast<int>(j - i));
        i = j;
    }
    return out;
}

double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

double tail_p(double p_upper, double p_lower, Tail tail) {
    switch (tail) {
    case Tail::greater: return clamp_p(p_upper);
    case Tail::less: return clamp_p(p_lower);
    case Tail::two_sided: return clamp_p(2.0 * std::min(p_upper, p_lower));
    }
    return 1.0;
}

} // namespace

TestResult wilcoxon_signed_rank(std::span<const std::pair<double, double>> pairs, Tail alternative) {
    if (pairs.empty()) {
        throw EmptySample("wilcoxon_signed_rank needs at least one pair");
    }
    std::vector<double> diffs;
    for (const auto &[before, after] : pairs) {
        double d = after - before;
        if (d != 0.0) {
            diffs.push_back(d);
        }
    }
    if (diffs.empty()) {
        throw AllZeroDifferences("every pair has a zero difference; the test is undefined");
    }
    const int n = static_cast<int>(diffs.size());
    std::vector<double> magnitudes(diffs.size());
    std::transform(diffs.begin(), diffs.end(), magnitudes.begin(), [](double d) { return std::fabs(d); });
    Ranked ranked = average_ranks(magnitudes);

    double w_plus = 0.0;
    for (int i = 0; i < n; ++i) {
        if (diffs[i] > 0) {
            w_plus += ranked.ranks[i];
        }
    }

    TestResult r;
    r.method = "wilcoxon_signed_rank";
    r.statistic = w_plus;
    r.alternative = alternative;
    r.n_effective = n;

    if (n <= kWilcoxonExactMaxN) {
        // Null: each rank independently signed +/-. Doubled ranks are integers
        // even with average ranks, so count subsets by doubled rank sum.
        std::vector<int> doubled(n);
        int total = 0;
        for (int i = 0; i < n; ++i) {
            doubled[i] = static_cast<int>(std::lround(ranked.ranks[i] * 2.0));
            total += doubled[i];
        }
        std::vector<double> counts(total + 1, 0.0);
        counts[0] = 1.0;
        for (int rank2 : doubled) {
            for (int s = total; s >= rank2; --s) {
                counts[s] += counts[s - rank2];
            }
        }
        const int observed = static_cast<int>(std::lround(w_plus * 2.0));
        const double all = std::ldexp(1.0, n);
        double upper = 0.0;
        double lower = 0.0;
        for (int s = 0; s <= total; ++s) {
            if (s >= observed) upper += counts[s];
            if (s <= observed) lower += counts[s];
        }
        r.p_value = tail_p(upper / all, lower / all, alternative);
        r.exact = true;
        return r;
    }

    const double nn = n;
    const double mean = nn * (nn + 1.0) / 4.0;
    double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    for (int t : ranked.tie_sizes) {
        variance -= (static_cast<double>(t) * t * t - t) / 48.0;
    }
    const double sd = std::sqrt(variance);
    const double upper = 1.0 - standard_normal_cdf((w_plus - mean - 0.5) / sd);
    const double lower = standard_normal_cdf((w_plus - mean + 0.5) / sd);
    r.p_value = tail_p(upper, lower, alternative);
    r.exact = false;
    return r;
}

TestResult mann_whitney_u(std::span<const double> sample_a, std::span<const double> sample_b, Tail alternative) {
    if (sample_a.empty() || sample_b.empty()) {
        throw EmptySample("mann_whitney_u needs two nonempty samples");
    }
    const int na = static_cast<int>(sample_a.size());
    const int nb = static_cast<int>(sample_b.size());
    const int n = na + nb;
    std::vector<double> pooled(sample_a.begin(), sample_a.end());
    pooled.insert(pooled.end(), sample_b.begin(), sample_b.end());
    Ranked ranked = average_ranks(pooled);

    double rank_sum_a = 0.0;
    for (int i = 0; i < na; ++i) {
        rank_sum_a += ranked.ranks[i];
    }
    const double u_a = rank_sum_a - na * (na + 1.0) / 2.0;
    const bool has_ties = std::any_of(ranked.tie_sizes.begin(), ranked.tie_sizes.end(), [](int t) { return t > 1; });

    TestResult r;
    r.method = "mann_whitney_u";
    r.statistic = u_a;
    r.alternative = alternative;
    r.n_effective = n;

    if (n <= kMannWhitneyExactMaxN && !has_ties) {
        // counts[k][u]: ways to pick k of the ranks seen so far with U-sum u.
        const int max_u = na * nb;
        std::vector<std::vector<double>> counts(na + 1, std::vector<double>(max_u + 1, 0.0));
        counts[0][0] = 1.0;
        // Placing element at sorted position `pos` into sample a contributes
        // (pos - k) to U, where k is the number of a's already placed.
        for (int pos = 0; pos < n; ++pos) {
            for (int k = std::min(pos, na - 1); k >= 0; --k) {
                int contribution = pos - k;
                if (contribution > nb) continue;
                for (int u = max_u - contribution; u >= 0; --u) {
                    if (counts[k][u] != 0.0) {
                        counts[k + 1][u + contribution] += counts[k][u];
                    }
                }
            }
        }
        const int observed = static_cast<int>(std::lround(u_a));
        double total = 0.0;
        double upper = 0.0;
        double lower = 0.0;
        for (int u = 0; u <= max_u; ++u) {
            total += counts[na][u];
            if (u >= observed) upper += counts[na][u];
            if (u <= observed) lower += counts[na][u];
        }
        r.p_value = tail_p(upper / total, lower / total, alternative);
        r.exact = true;
        return r;
    }

    const double mean = na * static_cast<double>(nb) / 2.0;
    double tie_term = 0.0;
    for (int t : ranked.tie_sizes) {
        tie_term += static_cast<double>(t) * t * t - t;
    }
    const double variance =
        na * static_cast<double>(nb) / 12.0 * ((n + 1.0) - tie_term / (static_cast<double>(n) * (n - 1.0)));
    r.exact = false;
    if (variance <= 0.0) {
        r.p_value = 1.0; // every observation tied
        return r;
    }
    const double sd = std::sqrt(variance);
    const double upper = 1.0 - standard_normal_cdf((u_a - mean - 0.5) / sd);
    const double lower = standard_normal_cdf((u_a - mean + 0.5) / sd);
    r.p_value = tail_p(upper, lower, alternative);
    return r;
}

TestResult chi_square_independence(const std::vector<std::vector<double>> &table) {
    const std::size_t rows = table.size();
    if (rows < 2) {
        throw DegenerateTable("contingency table needs at least 2 rows");
    }
    const std::size_t cols = table.front().size();
    if (cols < 2) {
        throw DegenerateTable("contingency table needs at least 2 columns");
    }
    std::vector<double> row_sum(rows, 0.0);
    std::vector<double> col_sum(cols, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        if (table[i].size() != cols) {
            throw std::invalid_argument("contingency table rows differ in length");
        }
        for (std::size_t j = 0; j < cols; ++j) {
            double v = table[i][j];
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw std::invalid_argument("contingency counts must be finite and nonnegative");
            }
            row_sum[i] += v;
            col_sum[j] += v;
            total += v;
        }
    }
    for (std::size_t i = 0; i < rows; ++i) {
        if (row_sum[i] <= 0.0) throw DegenerateTable("row " + std::to_string(i) + " sums to zero");
    }
    for (std::size_t j = 0; j < cols; ++j) {
        if (col_sum[j] <= 0.0) throw DegenerateTable("column " + std::to_string(j) + " sums to zero");
    }
    double statistic = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            double expected = row_sum[i] * col_sum[j] / total;
            double diff = table[i][j] - expected;
            statistic += diff * diff / expected;
        }
    }
    TestResult r;
    r.method = "chi_square_independence";
    r.statistic = statistic;
    r.degrees_of_freedom = static_cast<int>((rows - 1) * (cols - 1));
    r.p_value = clamp_p(chi_square_survival(statistic, *r.degrees_of_freedom));
    r.alternative = Tail::greater;
    r.n_effective = static_cast<int>(std::lround(total));
    r.exact = false;
    return r;
}

// ---------------------------------------------------------------------------
// History summary

namespace {

struct SessionTrack {
    SessionSummary summary;
    std::optional<RiskAssessment> assessment;
};

std::optional<TestResult> chi_square_pruned(const std::vector<std::vector<std::size_t>> &counts) {
    std::vector<std::size_t> keep_cols;
    for (std::size_t j = 0; j < counts.front().size(); ++j) {
        std::size_t sum = 0;
        for (const auto &row : counts) sum += row[j];
        if (sum > 0) keep_cols.push_back(j);
    }
    std::vector<std::vector<double>> table;
    for (const auto &row : counts) {
        std::vector<double> kept;
        double sum = 0;
        for (std::size_t j : keep_cols) {
            kept.push_back(static_cast<double>(row[j]));
            sum += row[j];
        }
        if (sum > 0) table.push_back(std::move(kept));
    }
    if (table.size() < 2 || keep_cols.size() < 2) {
        return std::nullopt;
    }
    return chi_square_independence(table);
}

} // namespace

AwarenessReport summarize_history(const std::vector<Event> &events) {
    AwarenessReport report;
    report.q1_by_awareness_change.assign(5, std::vector<std::size_t>(2, 0));
    report.q2_by_awareness_change.assign(5, std::vector<std::size_t>(2, 0));

    std::vector<SessionTrack> tracks;
    std::map<std::string, std::size_t> by_session;
    std::set<std::string> agents;

    for (const auto &e : events) {
        const json &p = e.payload;
        if (e.kind == EventKind::problem_created) {
            continue;
        }
        const std::string session_id = p.at("session_id").get<std::string>();
        if (e.kind == EventKind::choice_made) {
            Choice c = choice_from_json(p.at("choice"));
            SessionTrack t;
            t.summary.session_id = session_id;
            t.summary.agent_id = c.agent_id;
            t.summary.problem_id = c.problem_id;
            t.summary.initial_choice_id = c.id;
            t.summary.initial_alternative_id = c.chosen_alternative_id;
            by_session[session_id] = tracks.size();
            tracks.push_back(std::move(t));
            agents.insert(c.agent_id);
            continue;
        }
        auto it = by_session.find(session_id);
        if (it == by_session.end()) {
            continue;
        }
        SessionTrack &t = tracks[it->second];
        switch (e.kind) {
        case EventKind::assessment_issued:
            t.assessment = risk_assessment_from_json(p.at("assessment"));
            t.summary.flagged = t.assessment->risk_seeking_for_losses;
            break;
        case EventKind::ratings_recorded: {
            AwarenessRating rating = awareness_rating_from_json(p.at("rating"));
            if (!t.assessment) break;
            int level = static_cast<int>(awareness_level(rating, *t.assessment));
            (rating.phase == RatingPhase::before_alert ? t.summary.before_level : t.summary.after_level) = level;
            break;
        }
        case EventKind::agreement_recorded: {
            AgreementResponse a = agreement_from_json(p.at("agreement"));
            t.summary.q1 = a.q1_bias_agreement;
            t.summary.q2 = a.q2_insight_agreement;
            break;
        }
        case EventKind::choice_revised:
            t.summary.final_alternative_id = choice_from_json(p.at("choice")).chosen_alternative_id;
            break;
        default:
            break;
        }
    }

    report.agents = agents.size();
    report.initial_choices = tracks.size();
    std::vector<std::pair<double, double>> pairs;
    for (const auto &t : tracks) {
        const auto &s = t.summary;
        if (s.flagged) {
            ++report.flagged_count;
            if (s.before_level && s.after_level) {
                report.awareness_pairs.emplace_back(*s.before_level, *s.after_level);
                pairs.emplace_back(*s.before_level, *s.after_level);
            }
        }
        bool improved = s.before_level && s.after_level && *s.after_level > *s.before_level;
        if (s.q1) {
            ++report.q1_histogram[*s.q1 - 1];
            ++report.q1_by_awareness_change[*s.q1 - 1][improved ? 1 : 0];
        }
        if (s.q2) {
            ++report.q2_histogram[*s.q2 - 1];
            ++report.q2_by_awareness_change[*s.q2 - 1][improved ? 1 : 0];
        }
        report.sessions.push_back(s);
    }
    report.flagged_fraction = report.initial_choices == 0
                                  ? 0.0
                                  : static_cast<double>(report.flagged_count) / report.initial_choices;

    if (pairs.empty()) {
        report.wilcoxon_note = "no flagged session has both awareness measurements";
    } else {
        try {
            report.wilcoxon = wilcoxon_signed_rank(pairs, Tail::greater);
        } catch (const AllZeroDifferences &e) {
            report.wilcoxon_note = e.what();
        }
    }
    report.q1_chi_square = chi_square_pruned(report.q1_by_awareness_change);
    report.q2_chi_square = chi_square_pruned(report.q2_by_awareness_change);
    return report;
}

json to_json(const AwarenessReport &r) {
    json sessions = json::array();
    auto opt = [](const auto &v) { return v ? json(*v) : json(nullptr); };
    for (const auto &s : r.sessions) {
        sessions.push_back({{"session_id", s.session_id},
                            {"agent_id", s.agent_id},
                            {"problem_id", s.problem_id},
                            {"initial_choice_id", s.initial_choice_id},
                            {"initial_alternative_id", s.initial_alternative_id},
                            {"flagged", s.flagged},
                            {"before_level", opt(s.before_level)},
                            {"after_level", opt(s.after_level)},
                            {"q1", opt(s.q1)},
                            {"q2", opt(s.q2)},
                            {"final_alternative_id", opt(s.final_alternative_id)}});
    }
    json pairs = json::array();
    for (const auto &[b, a] : r.awareness_pairs) {
        pairs.push_back({b, a});
    }
    return {{"agents", r.agents},
            {"initial_choices", r.initial_choices},
            {"flagged_count", r.flagged_count},
            {"flagged_fraction", r.flagged_fraction},
            {"sessions", sessions},
            {"awareness_pairs", pairs},
            {"wilcoxon", r.wilcoxon ? to_json(*r.wilcoxon) : json(nullptr)},
            {"wilcoxon_note", r.wilcoxon_note},
            {"q1_histogram", r.q1_histogram},
            {"q2_histogram", r.q2_histogram},
            {"q1_by_awareness_change", r.q1_by_awareness_change},
            {"q2_by_awareness_change", r.q2_by_awareness_change},
            {"q1_chi_square", r.q1_chi_square ? to_json(*r.q1_chi_square) : json(nullptr)},
            {"q2_chi_square", r.q2_chi_square ? to_json(*r.q2_chi_square) : json(nullptr)}};
}

} // namespace abi_engine
