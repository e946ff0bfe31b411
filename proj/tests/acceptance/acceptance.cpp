// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

#include "abi/analytics.hpp"
#include "abi/bias_engine.hpp"
#include "abi/history.hpp"
#include "abi/service.hpp"
#include "abi/valuation.hpp"
#include "fixtures.hpp"
#include "http_harness.hpp"
#include "oracles.hpp"
#include "scenario.hpp"

using nlohmann::json;
using fixtures::alternative;
using fixtures::outcome;

namespace {

int failures = 0;

void report(const std::string &name, bool ok, const std::string &detail) {
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  " << detail << std::endl;
    if (!ok) ++failures;
}

template <typename Fn> void criterion(const std::string &name, Fn fn) {
    try {
        std::string detail;
        bool ok = fn(detail);
        report(name, ok, detail);
    } catch (const std::exception &e) {
        report(name, false, std::string("exception: ") + e.what());
    }
}

bool flagged(const abi_engine::DecisionProblem &p, const std::string &alt, abi_engine::RuleMode mode = abi_engine::RuleMode::canonical) {
    return abi_engine::is_risk_seeking_for_losses_choice(p, alt, mode).risk_seeking;
}

abi_engine::DecisionProblem valid_random_problem(std::mt19937_64 &rng, const std::string &id = "p") {
    abi_engine::DecisionProblem p;
    do {
        p = oracle::random_problem(rng, id);
    } while (!abi_engine::check_problem(p).empty());
    return p;
}

bool ev_golden(std::string &detail) {
    auto ev = [](const abi_engine::Alternative &a) { return abi_engine::expected_value(a).amount; };
    auto gain = alternative("g", {outcome(10000, "80", "USD"), outcome(1000, "20", "USD")});
    auto sure = alternative("a", {outcome(-100000, "100", "USD")});
    auto gamble = alternative("b", {outcome(-250000, "50", "USD"), outcome(0, "50", "USD")});
    auto p = fixtures::sunk_cost();
    bool ok = ev(gain) == abi_engine::Rational(8200) && ev(sure) == abi_engine::Rational(-100000) &&
              ev(gamble) == abi_engine::Rational(-125000) && ev(p.alternatives[0]) == abi_engine::Rational(-20000000) &&
              ev(p.alternatives[1]) == abi_engine::Rational(-22500000);
    detail = "$" + (ev(gain) / abi_engine::Rational(100)).to_string() + ", $" + (ev(sure) / abi_engine::Rational(100)).to_string() +
             "/$" + (ev(gamble) / abi_engine::Rational(100)).to_string() + ", R$" +
             (ev(p.alternatives[0]) / abi_engine::Rational(100)).to_string() + "/R$" +
             (ev(p.alternatives[1]) / abi_engine::Rational(100)).to_string();
    return ok;
}

bool rule_golden(std::string &detail) {
    bool a = flagged(fixtures::sure_loss(), "option2");
    bool b = flagged(fixtures::sure_loss(), "option1");
    bool c = flagged(fixtures::sunk_cost(), "alt2");
    bool d = flagged(fixtures::gains_mirror(), "option2");
    std::ostringstream s;
    s << std::boolalpha << "problem 1 option 2=" << a << ", option 1=" << b << ", project alt2=" << c
      << ", gains mirror=" << d;
    detail = s.str();
    return a && !b && c && !d;
}

bool fourfold(std::string &detail) {
    struct Case {
        std::int64_t sure;
        std::int64_t gamble;
        const char *p;
        const char *q;
        abi_engine::Domain domain;
        abi_engine::ProbabilityBand band;
        abi_engine::RiskPreference preference;
        abi_engine::ProbabilityEffect effect;
    };
    using abi_engine::Domain, abi_engine::ProbabilityBand, abi_engine::RiskPreference, abi_engine::ProbabilityEffect;
    const Case cases[] = {
        {950000, 1000000, "95", "5", Domain::gains, ProbabilityBand::high, RiskPreference::risk_averse,
         ProbabilityEffect::certainty},
        {-950000, -1000000, "95", "5", Domain::losses, ProbabilityBand::high, RiskPreference::risk_seeking,
         ProbabilityEffect::certainty},
        {50000, 1000000, "5", "95", Domain::gains, ProbabilityBand::low, RiskPreference::risk_seeking,
         ProbabilityEffect::possibility},
        {-50000, -1000000, "5", "95", Domain::losses, ProbabilityBand::low, RiskPreference::risk_averse,
         ProbabilityEffect::possibility},
    };
    int matched = 0;
    for (const auto &c : cases) {
        auto problem = fixtures::binary("t", "USD", alternative("sure", {outcome(c.sure, "100", "USD")}),
                                        alternative("gamble", {outcome(c.gamble, c.p, "USD"), outcome(0, c.q, "USD")}));
        auto cell = abi_engine::classify_risk_context(problem, 1);
        matched += cell.domain == c.domain && cell.band == c.band && cell.predicted_preference == c.preference &&
                   cell.effect == c.effect;
    }
    detail = std::to_string(matched) + "/4 cells";
    return matched == 4;
}

bool weights(std::string &detail) {
    const std::pair<const char *, const char *> anchors[] = {{"50", "45"}, {"60", "52"},   {"75", "63"},
                                                            {"80", "67"}, {"90", "77.5"}, {"95", "85"},
                                                            {"98", "91.5"}, {"99", "94.5"}, {"100", "100"}};
    int exact = 0;
    for (const auto &[p, w] : anchors) {
        exact += abi_engine::decision_weight_for_loss(abi_engine::Probability::parse(p)) == abi_engine::Rational::parse(w);
    }
    bool monotone = true;
    abi_engine::Rational previous(0);
    int points = 0;
    for (int h = 5000; h <= 10000; h += 50) {
        auto w = abi_engine::decision_weight_for_loss(abi_engine::Probability::from_hundredths(h));
        monotone &= w >= previous;
        previous = w;
        ++points;
    }
    detail = std::to_string(exact) + "/9 anchors exact; " + std::to_string(points) + "-point sweep " +
             (monotone ? "nondecreasing" : "NOT monotone");
    return exact == 9 && monotone;
}

bool statistics(std::string &detail) {
    auto start = std::chrono::steady_clock::now();
    std::vector<std::pair<double, double>> pairs(93, {0.0, 0.0});
    for (int i = 0; i < 8; ++i) pairs.emplace_back(0.0, 1.0);
    auto r = abi_engine::wilcoxon_signed_rank(pairs, abi_engine::Tail::greater);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream s;
    s.precision(12);
    s << "n=" << r.n_effective << " W+=" << r.statistic << " p=" << r.p_value << (r.exact ? " exact" : " approx")
      << " in " << seconds * 1000 << " ms";
    detail = s.str();
    return r.exact && r.n_effective == 8 && std::fabs(r.p_value - 0.00390625) <= 1e-9 && seconds < 1.0;
}

bool oracles(std::string &detail) {
    std::mt19937_64 rng(9001);
    int rule_cases = 0, rule_mismatch = 0;
    for (; rule_cases < 10000; ++rule_cases) {
        auto p = valid_random_problem(rng, "r" + std::to_string(rule_cases));
        for (const auto &alt : p.alternatives) {
            for (auto mode : {abi_engine::RuleMode::canonical, abi_engine::RuleMode::strict}) {
                rule_mismatch += flagged(p, alt.id, mode) != oracle::rule(p, alt.id, mode == abi_engine::RuleMode::canonical);
            }
        }
    }

    int wil_cases = 0, wil_mismatch = 0;
    std::uniform_int_distribution<int> value(-4, 4);
    for (int n = 1; n <= 10; ++n) {
        for (int rep = 0; rep < 100; ++rep, ++wil_cases) {
            std::vector<std::pair<double, double>> pairs;
            std::vector<double> diffs;
            while (static_cast<int>(diffs.size()) < n) {
                int v = value(rng);
                if (v == 0) continue;
                diffs.push_back(v);
                pairs.emplace_back(0.0, v);
            }
            auto t = oracle::wilcoxon_tails(diffs);
            auto close = [](double a, double b) { return std::fabs(a - b) <= 1e-12; };
            wil_mismatch += !close(abi_engine::wilcoxon_signed_rank(pairs, abi_engine::Tail::greater).p_value, t.upper) ||
                            !close(abi_engine::wilcoxon_signed_rank(pairs, abi_engine::Tail::less).p_value, t.lower) ||
                            !close(abi_engine::wilcoxon_signed_rank(pairs, abi_engine::Tail::two_sided).p_value, oracle::two_sided(t));
        }
    }

    int mw_cases = 0, mw_mismatch = 0;
    for (int total = 2; total <= 8; ++total) {
        for (int na = 1; na < total; ++na) {
            for (int rep = 0; rep < 30; ++rep, ++mw_cases) {
                std::vector<double> pool(total);
                for (int i = 0; i < total; ++i) pool[i] = i;
                std::shuffle(pool.begin(), pool.end(), rng);
                std::vector<double> a(pool.begin(), pool.begin() + na), b(pool.begin() + na, pool.end());
                auto t = oracle::mann_whitney_tails(a, b);
                auto close = [](double x, double y) { return std::fabs(x - y) <= 1e-12; };
                mw_mismatch += !close(abi_engine::mann_whitney_u(a, b, abi_engine::Tail::greater).p_value, t.upper) ||
                               !close(abi_engine::mann_whitney_u(a, b, abi_engine::Tail::less).p_value, t.lower) ||
                               !close(abi_engine::mann_whitney_u(a, b, abi_engine::Tail::two_sided).p_value, oracle::two_sided(t));
            }
        }
    }

    int chi_cases = 0, chi_mismatch = 0;
    std::uniform_int_distribution<int> count(1, 50), dim(2, 6);
    for (; chi_cases < 2000; ++chi_cases) {
        std::vector<std::vector<double>> table(dim(rng), std::vector<double>(dim(rng)));
        for (auto &row : table) {
            for (auto &c : row) c = count(rng);
        }
        double x = oracle::chi_square_statistic(table);
        double got = abi_engine::chi_square_independence(table).statistic;
        chi_mismatch += std::fabs(got - x) > 1e-12 * std::max(std::fabs(x), 1e-300);
    }

    detail = "rule " + std::to_string(rule_mismatch) + "/" + std::to_string(rule_cases) + " problems, wilcoxon " +
             std::to_string(wil_mismatch) + "/" + std::to_string(wil_cases) + ", mann-whitney " +
             std::to_string(mw_mismatch) + "/" + std::to_string(mw_cases) + ", chi-square " +
             std::to_string(chi_mismatch) + "/" + std::to_string(chi_cases) + " mismatches";
    return rule_mismatch == 0 && wil_mismatch == 0 && mw_mismatch == 0 && chi_mismatch == 0;
}

bool properties(std::string &detail) {
    constexpr int kCases = 1000;
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<std::int64_t> factor(1, 10000);
    int scaling = 0, swapping = 0, sure_flagged = 0, round_trip = 0, projection = 0;
    for (int i = 0; i < kCases; ++i) {
        auto p = valid_random_problem(rng);
        auto scaled = p;
        std::int64_t k = factor(rng);
        for (auto &alt : scaled.alternatives) {
            for (auto &o : alt.outcomes) o.value.amount_minor *= k;
        }
        auto swapped = p;
        std::swap(swapped.alternatives[0], swapped.alternatives[1]);
        for (const auto &alt : p.alternatives) {
            bool base = flagged(p, alt.id);
            scaling += flagged(scaled, alt.id) != base;
            swapping += flagged(swapped, alt.id) != base;
            if (abi_engine::is_sure(alt)) {
                sure_flagged += base || flagged(p, alt.id, abi_engine::RuleMode::strict);
            }
        }
    }
    for (int i = 0; i < kCases; ++i) {
        abi_engine::EventLog log(scenario::counting_clock());
        abi_engine::AbiService service(log);
        scenario::random_history(rng, service, 2, 4);
        auto events = log.events();
        auto text = abi_engine::export_jsonl(events);
        auto imported = abi_engine::import_jsonl(text);
        round_trip += imported->events() != events || abi_engine::export_jsonl(*imported) != text;
        projection += !(abi_engine::project_relational(events) == abi_engine::project_relational(imported->events())) ||
                      abi_engine::to_json(abi_engine::project_relational(events)).dump() !=
                          abi_engine::to_json(abi_engine::project_relational(events)).dump();
    }
    detail = std::to_string(kCases) + " cases each; violations: scaling " + std::to_string(scaling) + ", swap " +
             std::to_string(swapping) + ", sure flagged " + std::to_string(sure_flagged) + ", log round-trip " +
             std::to_string(round_trip) + ", projection " + std::to_string(projection);
    return scaling + swapping + sure_flagged + round_trip + projection == 0;
}

bool end_to_end(std::string &detail) {
    abi_engine::EventLog log;
    abi_engine::AbiService service(log);
    harness::LiveServer server(service);
    harness::Client http(server.port());
    std::vector<std::string> problems;
    auto expect = [&](const harness::Reply &r, int status, const std::string &step) {
        if (r.status != status) problems.push_back(step + " returned " + std::to_string(r.status));
        return r;
    };

    expect(http.post("/api/problems", json::parse(fixtures::kSunkCostJson)), 201, "create problem");
    auto session = expect(http.post("/api/sessions", {{"agent_id", "participant-1"}, {"problem_id", "sunk-cost"}}), 201,
                          "open session");
    const std::string base = "/api/sessions/" + session.body.value("session_id", "?");
    auto chose = expect(http.post(base + "/choice", {{"alternative_id", "alt2"}}), 200, "choice");
    if (chose.body.contains("alert")) problems.push_back("alert delivered before ratings");
    auto pre = expect(http.post(base + "/ratings", {{"ratings", {{"alt1", 4}, {"alt2", 8}}}}), 200, "pre-ratings");
    const json alert = pre.body.value("alert", json::object());
    const json part2 = alert.value("content", json::object()).value("part2", json::object());
    const json row = part2.value("decision_weight_row", json());
    if (!(row.is_object() && row.value("probability_pct", "") == "90" && row.value("weight", "") == "77.5")) {
        problems.push_back("alert weight row is not (90, 77.5)");
    }
    const std::string reference = part2.value("reference_point", json::object()).value("statement", "");
    if (reference.find("LOSING NOTHING") == std::string::npos) problems.push_back("reference point missing");
    expect(http.post(base + "/acknowledge"), 200, "acknowledge");
    expect(http.post(base + "/agreement", {{"q1", 4}, {"q2", 5}}), 200, "agreement");
    expect(http.post(base + "/ratings", {{"ratings", {{"alt1", 9}, {"alt2", 3}}}}), 200, "post-ratings");
    auto revised = expect(http.post(base + "/revision", {{"alternative_id", "alt1"}}), 200, "revision");
    if (revised.body.value("state", "") != "completed") problems.push_back("session not completed");

    auto summary = abi_engine::summarize_history(abi_engine::import_jsonl(http.get("/api/history/export").raw)->events());
    std::vector<std::pair<int, int>> expected{{0, 1}};
    if (summary.awareness_pairs != expected) problems.push_back("awareness pairs differ from [(0,1)]");
    auto served = http.get("/api/analytics/report").body;
    if (served.value("awareness_pairs", json()) != json::array({json::array({0, 1})})) {
        problems.push_back("served report pairs differ");
    }

    std::ostringstream s;
    s << log.size() << " events; pairs [";
    for (const auto &[b, a] : summary.awareness_pairs) s << "(" << b << "," << a << ")";
    s << "]";
    for (const auto &p : problems) s << "; " << p;
    detail = s.str();
    return problems.empty();
}

} // namespace

int main() {
    criterion("ev-golden-values", ev_golden);
    criterion("rule-golden-cases", rule_golden);
    criterion("fourfold-reproduction", fourfold);
    criterion("decision-weight-table", weights);
    criterion("statistics-reproduction", statistics);
    criterion("oracle-equivalence", oracles);
    criterion("property-suite", properties);
    criterion("end-to-end-session", end_to_end);
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
