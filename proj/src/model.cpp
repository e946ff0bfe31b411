#include "abi/model.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace abi_engine {

using nlohmann::json;

namespace {

bool is_currency_code(std::string_view code) {
    return code.size() == 3 &&
           std::all_of(code.begin(), code.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

std::string join_path(const std::string &base, std::string_view key) {
    return base + "/" + std::string(key);
}

std::string join_path(const std::string &base, std::size_t index) {
    return base + "/" + std::to_string(index);
}

std::string summarize(const std::vector<ValidationIssue> &issues) {
    std::string out = std::to_string(issues.size()) + " validation issue(s)";
    for (const auto &issue : issues) {
        out += "; ";
        out += std::string(to_string(issue.code)) + " at " +
               (issue.path.empty() ? "/" : issue.path) + ": " + issue.message;
    }
    return out;
}

// Reads a string member, recording a schema issue when absent or mistyped.
std::string read_string(const json &j, std::string_view key, const std::string &path,
                        std::vector<ValidationIssue> &issues, bool required = true) {
    auto it = j.find(key);
    if (it == j.end()) {
        if (required) {
            issues.push_back({IssueCode::schema, join_path(path, key),
                              "missing field \"" + std::string(key) + "\""});
        }
        return {};
    }
    if (!it->is_string()) {
        issues.push_back({IssueCode::schema, join_path(path, key), "expected a string"});
        return {};
    }
    return it->get<std::string>();
}

std::optional<Outcome> read_outcome(const json &j, const std::string &path,
                                    const std::string &currency,
                                    std::vector<ValidationIssue> &issues) {
    if (!j.is_object()) {
        issues.push_back({IssueCode::schema, path, "outcome must be an object"});
        return std::nullopt;
    }
    Outcome outcome;
    outcome.value.currency = currency;
    bool ok = true;

    auto amount = j.find("amount_minor");
    if (amount == j.end()) {
        issues.push_back({IssueCode::schema, join_path(path, "amount_minor"),
                          "missing field \"amount_minor\""});
        ok = false;
    } else if (amount->is_number_integer()) {
        if (amount->is_number_unsigned() &&
            amount->get<std::uint64_t>() >
                static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            issues.push_back({IssueCode::range, join_path(path, "amount_minor"),
                              "amount exceeds the 64-bit signed range"});
            ok = false;
        } else {
            outcome.value.amount_minor = amount->get<std::int64_t>();
        }
    } else {
        issues.push_back({IssueCode::schema, join_path(path, "amount_minor"),
                          "amount_minor must be an integer number of minor units"});
        ok = false;
    }

    auto prob = j.find("probability_pct");
    if (prob == j.end()) {
        issues.push_back({IssueCode::schema, join_path(path, "probability_pct"),
                          "missing field \"probability_pct\""});
        ok = false;
    } else {
        try {
            if (prob->is_string()) {
                outcome.probability = Probability::parse(prob->get<std::string>());
            } else if (prob->is_number_integer()) {
                outcome.probability = Probability::from_percent(prob->get<std::int64_t>());
            } else {
                issues.push_back({IssueCode::schema, join_path(path, "probability_pct"),
                                  "probability_pct must be a decimal string"});
                ok = false;
            }
        } catch (const std::out_of_range &e) {
            issues.push_back({IssueCode::range, join_path(path, "probability_pct"), e.what()});
            ok = false;
        } catch (const std::invalid_argument &e) {
            issues.push_back({IssueCode::range, join_path(path, "probability_pct"), e.what()});
            ok = false;
        }
    }
    if (!ok) {
        return std::nullopt;
    }
    return outcome;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view bytes, std::size_t offset) {
    std::size_t line = 1;
    std::size_t column = 1;
    offset = std::min(offset, bytes.size());
    for (std::size_t i = 0; i < offset; ++i) {
        if (bytes[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

} // namespace

std::string_view to_string(IssueCode code) {
    switch (code) {
    case IssueCode::probability_sum: return "ProbabilitySumError";
    case IssueCode::arity: return "ArityError";
    case IssueCode::currency_mismatch: return "CurrencyMismatch";
    case IssueCode::range: return "RangeError";
    case IssueCode::duplicate_id: return "DuplicateIdError";
    case IssueCode::schema: return "SchemaError";
    }
    return "Unknown";
}

ValidationError::ValidationError(std::vector<ValidationIssue> issues)
    : std::runtime_error(summarize(issues)), issues_(std::move(issues)) {}

ProblemSyntaxError::ProblemSyntaxError(std::size_t line, std::size_t column,
                                       const std::string &detail)
    : std::runtime_error("syntax error at line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + detail),
      line_(line), column_(column) {}

ProblemFileError::ProblemFileError(std::map<std::size_t, std::vector<ValidationIssue>> by_index)
    : std::runtime_error([&] {
          std::string msg = "invalid problems in file:";
          for (const auto &[index, issues] : by_index) {
              msg += " [" + std::to_string(index) + "] " + summarize(issues);
          }
          return msg;
      }()),
      by_index_(std::move(by_index)) {}

const Alternative *DecisionProblem::find_alternative(std::string_view alternative_id) const {
    for (const auto &alt : alternatives) {
        if (alt.id == alternative_id) {
            return &alt;
        }
    }
    return nullptr;
}

std::optional<std::size_t> DecisionProblem::index_of(std::string_view alternative_id) const {
    for (std::size_t i = 0; i < alternatives.size(); ++i) {
        if (alternatives[i].id == alternative_id) {
            return i;
        }
    }
    return std::nullopt;
}

std::vector<ValidationIssue> check_problem(const DecisionProblem &candidate) {
    std::vector<ValidationIssue> issues;
    if (candidate.id.empty()) {
        issues.push_back({IssueCode::schema, "/id", "problem id must be non-empty"});
    }
    bool currency_ok = is_currency_code(candidate.currency);
    if (!currency_ok) {
        issues.push_back({IssueCode::range, "/currency",
                          "currency must be a 3-letter uppercase code, got \"" +
                              candidate.currency + "\""});
    }
    if (candidate.alternatives.size() != 2) {
        issues.push_back({IssueCode::arity, "/alternatives",
                          "expected exactly 2 alternatives, got " +
                              std::to_string(candidate.alternatives.size())});
    }

    std::set<std::string> seen_ids;
    for (std::size_t i = 0; i < candidate.alternatives.size(); ++i) {
        const auto &alt = candidate.alternatives[i];
        const std::string path = join_path("/alternatives", i);
        if (alt.id.empty()) {
            issues.push_back({IssueCode::schema, path + "/id", "alternative id must be non-empty"});
        } else if (!seen_ids.insert(alt.id).second) {
            issues.push_back({IssueCode::duplicate_id, path + "/id",
                              "duplicate alternative id \"" + alt.id + "\""});
        }
        if (alt.outcomes.empty() || alt.outcomes.size() > 2) {
            issues.push_back({IssueCode::arity, path + "/outcomes",
                              "an alternative holds 1 or 2 outcomes, got " +
                                  std::to_string(alt.outcomes.size())});
        }
        std::int64_t total = 0;
        for (std::size_t k = 0; k < alt.outcomes.size(); ++k) {
            const auto &outcome = alt.outcomes[k];
            total += outcome.probability.hundredths();
            if (currency_ok && outcome.value.currency != candidate.currency) {
                issues.push_back({IssueCode::currency_mismatch, join_path(path + "/outcomes", k),
                                  "outcome currency \"" + outcome.value.currency +
                                      "\" differs from problem currency \"" +
                                      candidate.currency + "\""});
            }
        }
        if (!alt.outcomes.empty() && total != Probability::kMaxHundredths) {
            issues.push_back({IssueCode::probability_sum, path + "/outcomes",
                              "outcome probabilities total " +
                                  Rational(total, Probability::kScale).to_string() +
                                  ", expected 100"});
        }
    }
    return issues;
}

DecisionProblem validate_problem(DecisionProblem candidate) {
    auto issues = check_problem(candidate);
    if (!issues.empty()) {
        throw ValidationError(std::move(issues));
    }
    return candidate;
}

TwoSlotView two_slot_view(const Alternative &alternative) {
    TwoSlotView view;
    const std::string &currency =
        alternative.outcomes.empty() ? std::string() : alternative.outcomes.front().value.currency;
    view.a = alternative.outcomes.empty() ? Outcome{} : alternative.outcomes[0];
    view.b = alternative.outcomes.size() > 1 ? alternative.outcomes[1]
                                             : Outcome{Money{0, currency}, Probability{}};
    return view;
}

json problem_to_json(const DecisionProblem &problem) {
    json alternatives = json::array();
    for (const auto &alt : problem.alternatives) {
        json outcomes = json::array();
        for (const auto &o : alt.outcomes) {
            outcomes.push_back({{"amount_minor", o.value.amount_minor},
                                {"probability_pct", o.probability.to_string()}});
        }
        alternatives.push_back({{"id", alt.id}, {"label", alt.label}, {"outcomes", outcomes}});
    }
    return {{"id", problem.id},
            {"statement", problem.statement},
            {"currency", problem.currency},
            {"alternatives", alternatives}};
}

DecisionProblem problem_from_json(const json &j) {
    std::vector<ValidationIssue> issues;
    if (!j.is_object()) {
        throw ValidationError({{IssueCode::schema, "", "problem must be a JSON object"}});
    }
    DecisionProblem problem;
    problem.id = read_string(j, "id", "", issues);
    problem.statement = read_string(j, "statement", "", issues, false);
    problem.currency = read_string(j, "currency", "", issues);

    bool shape_ok = issues.empty();
    auto alts = j.find("alternatives");
    if (alts == j.end() || !alts->is_array()) {
        issues.push_back({IssueCode::schema, "/alternatives", "alternatives must be an array"});
        throw ValidationError(std::move(issues));
    }
    for (std::size_t i = 0; i < alts->size(); ++i) {
        const json &aj = (*alts)[i];
        const std::string path = join_path("/alternatives", i);
        if (!aj.is_object()) {
            issues.push_back({IssueCode::schema, path, "alternative must be an object"});
            shape_ok = false;
            continue;
        }
        Alternative alt;
        std::size_t before = issues.size();
        alt.id = read_string(aj, "id", path, issues);
        alt.label = read_string(aj, "label", path, issues, false);
        auto outs = aj.find("outcomes");
        if (outs == aj.end() || !outs->is_array()) {
            issues.push_back({IssueCode::schema, path + "/outcomes", "outcomes must be an array"});
        } else {
            for (std::size_t k = 0; k < outs->size(); ++k) {
                auto outcome =
                    read_outcome((*outs)[k], join_path(path + "/outcomes", k), problem.currency, issues);
                if (outcome) {
                    alt.outcomes.push_back(*outcome);
                }
            }
        }
        if (issues.size() != before) {
            shape_ok = false;
        }
        problem.alternatives.push_back(std::move(alt));
    }

    // Invariant checks are meaningful only over a fully-read structure; arity
    // and currency are reported regardless since they do not depend on it.
    auto invariant_issues = check_problem(problem);
    for (auto &issue : invariant_issues) {
        if (shape_ok || issue.code == IssueCode::arity || issue.code == IssueCode::range ||
            issue.code == IssueCode::duplicate_id) {
            bool already = std::any_of(issues.begin(), issues.end(), [&](const ValidationIssue &v) {
                return v.path == issue.path && v.code == issue.code;
            });
            if (!already) {
                issues.push_back(std::move(issue));
            }
        }
    }
    if (!issues.empty()) {
        throw ValidationError(std::move(issues));
    }
    return problem;
}

std::vector<DecisionProblem> parse_problem_file(std::string_view bytes) {
    json doc;
    try {
        doc = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error &e) {
        auto [line, column] = line_column(bytes, e.byte == 0 ? 0 : e.byte - 1);
        throw ProblemSyntaxError(line, column, e.what());
    }
    const json *list = nullptr;
    if (doc.is_object() && doc.contains("problems")) {
        list = &doc["problems"];
    } else if (doc.is_array()) {
        list = &doc;
    }
    if (list == nullptr || !list->is_array()) {
        throw ProblemFileError(
            {{0, {{IssueCode::schema, "/problems", "document must hold a \"problems\" array"}}}});
    }

    std::vector<DecisionProblem> problems;
    std::map<std::size_t, std::vector<ValidationIssue>> failures;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < list->size(); ++i) {
        try {
            auto problem = problem_from_json((*list)[i]);
            if (!ids.insert(problem.id).second) {
                failures[i].push_back(
                    {IssueCode::duplicate_id, "/id", "duplicate problem id \"" + problem.id + "\""});
                continue;
            }
            problems.push_back(std::move(problem));
        } catch (const ValidationError &e) {
            failures[i] = e.issues();
        }
    }
    if (!failures.empty()) {
        throw ProblemFileError(std::move(failures));
    }
    return problems;
}

std::string serialize_problem_file(const std::vector<DecisionProblem> &problems) {
    json list = json::array();
    for (const auto &p : problems) {
        list.push_back(problem_to_json(p));
    }
    return json{{"problems", list}}.dump(2) + "\n";
}

std::string_view to_string(ChoicePhase phase) {
    return phase == ChoicePhase::initial ? "initial" : "revised";
}

ChoicePhase choice_phase_from_string(std::string_view text) {
    if (text == "initial") return ChoicePhase::initial;
    if (text == "revised") return ChoicePhase::revised;
    throw std::invalid_argument("unknown choice phase \"" + std::string(text) + "\"");
}

json choice_to_json(const Choice &choice) {
    return {{"id", choice.id},
            {"problem_id", choice.problem_id},
            {"agent_id", choice.agent_id},
            {"chosen_alternative_id", choice.chosen_alternative_id},
            {"phase", to_string(choice.phase)},
            {"timestamp", choice.timestamp}};
}

Choice choice_from_json(const json &j) {
    Choice c;
    c.id = j.at("id").get<std::string>();
    c.problem_id = j.at("problem_id").get<std::string>();
    c.agent_id = j.at("agent_id").get<std::string>();
    c.chosen_alternative_id = j.at("chosen_alternative_id").get<std::string>();
    c.phase = choice_phase_from_string(j.at("phase").get<std::string>());
    c.timestamp = j.value("timestamp", "");
    return c;
}

json agent_to_json(const Agent &agent) {
    return {{"id", agent.id}, {"display_name", agent.display_name}, {"profile", agent.profile}};
}

Agent agent_from_json(const json &j) {
    Agent a;
    a.id = j.at("id").get<std::string>();
    a.display_name = j.value("display_name", "");
    if (auto it = j.find("profile"); it != j.end() && it->is_object()) {
        for (const auto &[k, v] : it->items()) {
            a.profile[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    return a;
}

json issues_to_json(const std::vector<ValidationIssue> &issues) {
    json out = json::array();
    for (const auto &issue : issues) {
        out.push_back({{"code", to_string(issue.code)}, {"path", issue.path}, {"message", issue.message}});
    }
    return out;
}

} // namespace abi_engine
