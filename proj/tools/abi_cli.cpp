#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>

#include "abi/errors.hpp"
#include "abi/explainer.hpp"
#include "abi/service.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct IoFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoFailure("cannot read " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string major_units(const abi_engine::Rational &minor) { return (minor / abi_engine::Rational(100)).to_string(2); }

void print_issues(const std::vector<abi_engine::ValidationIssue> &issues, const std::string &prefix) {
    for (const auto &issue : issues) {
        std::cerr << prefix << abi_engine::to_string(issue.code) << " at " << issue.path << ": " << issue.message << "\n";
    }
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyRow {
    std::string problem_id;
    int option = 0; // 1 or 2 in rule slot order
    std::string alternative_id;
    abi_engine::TwoSlotView slot1;
    abi_engine::TwoSlotView slot2;
    abi_engine::Rational ev1;
    abi_engine::Rational ev2;
    abi_engine::RuleVerdict verdict;
};

std::vector<ClassifyRow> classify_problem(const abi_engine::DecisionProblem &problem, abi_engine::RuleMode mode) {
    const abi_engine::Alternative *first = &problem.alternatives[0];
    const abi_engine::Alternative *second = &problem.alternatives[1];
    if (mode == abi_engine::RuleMode::canonical) {
        if (auto idx = abi_engine::sure_alternative_index(problem)) {
            first = &problem.alternatives[*idx];
            second = &problem.alternatives[1 - *idx];
            if (abi_engine::is_sure(*second)) {
                first = &problem.alternatives[0];
                second = &problem.alternatives[1];
            }
        }
    }
    std::vector<ClassifyRow> rows;
    for (const abi_engine::Alternative *chosen : {first, second}) {
        ClassifyRow row;
        row.problem_id = problem.id;
        row.option = chosen == first ? 1 : 2;
        row.alternative_id = chosen->id;
        row.slot1 = abi_engine::two_slot_view(*first);
        row.slot2 = abi_engine::two_slot_view(*second);
        row.ev1 = abi_engine::expected_value(*first).amount;
        row.ev2 = abi_engine::expected_value(*second).amount;
        row.verdict = abi_engine::is_risk_seeking_for_losses_choice(problem, chosen->id, mode);
        rows.push_back(std::move(row));
    }
    return rows;
}

json row_json(const ClassifyRow &row) {
    auto slot = [](const abi_engine::TwoSlotView &v) {
        return json{{"a", {{"amount_minor", v.a.value.amount_minor}, {"probability_pct", v.a.probability.to_string()}}},
                    {"b", {{"amount_minor", v.b.value.amount_minor}, {"probability_pct", v.b.probability.to_string()}}}};
    };
    return {{"problem_id", row.problem_id},
            {"option", row.option},
            {"alternative_id", row.alternative_id},
            {"option1", slot(row.slot1)},
            {"option2", slot(row.slot2)},
            {"ev1_minor", row.ev1.to_string()},
            {"ev2_minor", row.ev2.to_string()},
            {"risk_seeking_for_losses", row.verdict.risk_seeking},
            {"trace", abi_engine::to_json(row.verdict.trace)}};
}

void print_rows(const std::vector<ClassifyRow> &rows) {
    const std::vector<std::string> header{"problem", "choice",    "a1", "p(a1)", "b1", "p(b1)", "EV1",
                                          "a2",      "p(a2)",     "b2", "p(b2)", "EV2", "risk seeking for losses"};
    std::vector<std::vector<std::string>> table{header};
    for (const auto &r : rows) {
        table.push_back({"problem " + r.problem_id,
                         "option " + std::to_string(r.option) + " (" + r.alternative_id + ")",
                         major_units(r.slot1.a.value.amount_minor), r.slot1.a.probability.to_string(),
                         major_units(r.slot1.b.value.amount_minor), r.slot1.b.probability.to_string(),
                         major_units(r.ev1),
                         major_units(r.slot2.a.value.amount_minor), r.slot2.a.probability.to_string(),
                         major_units(r.slot2.b.value.amount_minor), r.slot2.b.probability.to_string(),
                         major_units(r.ev2),
                         r.verdict.risk_seeking ? "Yes" : "No"});
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto &line : table) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            width[i] = std::max(width[i], line[i].size());
        }
    }
    auto print_line = [&](const std::vector<std::string> &line) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            std::cout << std::left << std::setw(static_cast<int>(width[i]) + 2) << line[i];
        }
        std::cout << "\n";
    };
    print_line(table[0]);
    for (std::size_t i = 1; i < table.size(); ++i) {
        print_line(table[i]);
        for (const auto &p : rows[i - 1].verdict.trace.entries) {
            std::cout << "    " << (p.result ? "TRUE " : "FALSE") << "  " << p.name << "(";
            for (std::size_t k = 0; k < p.operands.size(); ++k) {
                std::cout << (k ? ", " : "") << p.operands[k];
            }
            std::cout << ")\n";
        }
    }
}

int run_classify(const std::string &file, const std::string &mode_text, bool as_json) {
    const abi_engine::RuleMode mode = abi_engine::rule_mode_from_string(mode_text);
    std::vector<abi_engine::DecisionProblem> problems;
    try {
        problems = abi_engine::parse_problem_file(read_file(file));
    } catch (const abi_engine::ProblemSyntaxError &e) {
        std::cerr << file << ":" << e.line() << ":" << e.column() << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const abi_engine::ProblemFileError &e) {
        for (const auto &[index, issues] : e.by_index()) {
            print_issues(issues, file + ": problem " + std::to_string(index) + ": ");
        }
        return kExitValidation;
    }
    std::vector<ClassifyRow> rows;
    for (const auto &problem : problems) {
        auto more = classify_problem(problem, mode);
        rows.insert(rows.end(), more.begin(), more.end());
    }
    if (as_json) {
        json out = json::array();
        for (const auto &r : rows) {
            out.push_back(row_json(r));
        }
        std::cout << json{{"mode", abi_engine::to_string(mode)}, {"rows", out}}.dump(2) << "\n";
    } else {
        print_rows(rows);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

void print_report(const abi_engine::AwarenessReport &r) {
    std::cout << "agents:           " << r.agents << "\n"
              << "initial choices:  " << r.initial_choices << "\n"
              << "flagged:          " << r.flagged_count << " (" << std::fixed << std::setprecision(1)
              << r.flagged_fraction * 100.0 << "%)\n"
              << std::defaultfloat;
    std::cout << "awareness pairs (before, after):";
    for (const auto &[b, a] : r.awareness_pairs) {
        std::cout << " (" << b << "," << a << ")";
    }
    std::cout << "\n\nWilcoxon signed-rank (after > before)\n";
    if (r.wilcoxon) {
        std::cout << "  n effective: " << r.wilcoxon->n_effective << "\n"
                  << "  W+:          " << r.wilcoxon->statistic << "\n"
                  << "  p-value:     " << std::setprecision(10) << r.wilcoxon->p_value << std::defaultfloat
                  << (r.wilcoxon->exact ? " (exact)" : " (normal approximation)") << "\n";
    } else {
        std::cout << "  not computed: " << r.wilcoxon_note << "\n";
    }
    auto histogram = [](const char *name, const std::array<std::size_t, 5> &h) {
        std::cout << name;
        for (std::size_t i = 0; i < h.size(); ++i) {
            std::cout << " " << i + 1 << ":" << h[i];
        }
        std::cout << "\n";
    };
    std::cout << "\nAgreement\n";
    histogram("  q1 (bias)   ", r.q1_histogram);
    histogram("  q2 (insight)", r.q2_histogram);
    auto chi = [](const char *name, const std::optional<abi_engine::TestResult> &t) {
        std::cout << "  " << name << " x awareness change: ";
        if (t) {
            std::cout << "chi2=" << t->statistic << " dof=" << t->degrees_of_freedom.value_or(0)
                      << " p=" << t->p_value << "\n";
        } else {
            std::cout << "not computed\n";
        }
    };
    chi("q1", r.q1_chi_square);
    chi("q2", r.q2_chi_square);
}

int run_analyze(const std::string &store, bool as_json) {
    if (!std::filesystem::exists(store)) {
        throw IoFailure("store " + store + " does not exist");
    }
    abi_engine::LoadResult loaded = abi_engine::load_events(store);
    for (const auto &w : loaded.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    abi_engine::AwarenessReport report = abi_engine::summarize_history(loaded.events);
    if (as_json) {
        std::cout << abi_engine::to_json(report).dump(2) << "\n";
    } else {
        print_report(report);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// demo

constexpr const char *kDemoProblem = R"({
  "id": "sunk-cost",
  "statement": "Consider that you work in a small-sized company that has R$ 150,000 available for investment. The company has already invested R$ 200,000 in a project to create a new product in the market. On the initially planned date to complete the product development, the reported situation is that the project is behind schedule and would need an additional R$ 50,000 to complete the product. You need to make a recommendation to the decision-maker by choosing one of the two alternatives below. There are no other alternatives. Which alternative do you choose?",
  "currency": "BRL",
  "alternatives": [
    {"id": "alt1", "label": "Cancel the project and lose the R$ 200,000 already invested.",
     "outcomes": [{"amount_minor": -20000000, "probability_pct": "100"}]},
    {"id": "alt2", "label": "Continue with the project by investing an additional R$ 50,000.",
     "outcomes": [{"amount_minor": -25000000, "probability_pct": "90"},
                  {"amount_minor": 0, "probability_pct": "10"}]}
  ]
})";

int run_demo(const std::string &store, const std::string &locale) {
    std::unique_ptr<abi_engine::EventLog> log = store.empty() ? std::make_unique<abi_engine::EventLog>()
                                                       : std::make_unique<abi_engine::EventLog>(std::filesystem::path(store));
    abi_engine::AbiService service(*log, {abi_engine::Flow::experiment, abi_engine::RuleMode::canonical, locale});

    auto step = [](const std::string &name, const abi_engine::Response &r) {
        std::cout << "[" << r.status << "] " << name << "\n";
        if (r.status >= 300) {
            std::cout << r.body.dump(2) << "\n";
            throw std::runtime_error(name + " failed");
        }
        return r.body;
    };

    step("create problem sunk-cost", service.create_problem(json::parse(kDemoProblem)));
    json session = step("open session", service.create_session({{"agent_id", "demo-agent"}, {"problem_id", "sunk-cost"}}));
    const std::string id = session.at("session_id");
    step("choose alt2", service.make_choice(id, {{"alternative_id", "alt2"}}));
    json rated = step("pre-alert ratings", service.record_ratings(id, {{"ratings", {{"alt1", 4}, {"alt2", 8}}}}));
    std::cout << "\n" << rated.at("alert").at("text").at("part1").get<std::string>() << "\n\n"
              << rated.at("alert").at("text").at("part2").get<std::string>() << "\n\n";
    step("acknowledge alert", service.acknowledge(id));
    step("agreement q1=4 q2=5", service.record_agreement(id, {{"q1", 4}, {"q2", 5}}));
    step("post-alert ratings", service.record_ratings(id, {{"ratings", {{"alt1", 9}, {"alt2", 3}}}}));
    step("revise to alt1", service.revise(id, {{"alternative_id", "alt1"}}));
    std::cout << "\n";
    print_report(abi_engine::summarize_history(log->events()));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// serve

int run_serve(const std::string &host, int port, const std::string &store, const abi_engine::ServiceOptions &options) {
    abi_engine::EventLog log{std::filesystem::path(store)};
    for (const auto &w : log.warnings()) {
        std::cerr << "warning: " << w << "\n";
    }
    abi_engine::AbiService service(log, options);
    httplib::Server server;
    abi_engine::mount_routes(server, service);
    std::cerr << "abi: serving " << store << " on http://" << host << ":" << port << " ("
              << abi_engine::to_string(options.flow) << " flow, " << abi_engine::to_string(options.mode) << " mode)\n";
    if (!server.listen(host, port)) {
        std::cerr << "abi: cannot listen on " << host << ":" << port << "\n";
        return kExitIo;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Risk-seeking-for-losses assessment engine"};
    app.require_subcommand(1);

    const char *env_store = std::getenv("ABI_STORE");
    std::string store = env_store ? env_store : "";
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string flow = "experiment";
    std::string mode = "canonical";
    std::string locale = "en";
    std::string file;
    std::string demo_store;
    bool as_json = false;

    auto *serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--host", host);
    serve->add_option("--port", port)->check(CLI::Range(1, 65535));
    serve->add_option("--store", store, "History file (default: $ABI_STORE)");
    serve->add_option("--flow", flow)->check(CLI::IsMember({"experiment", "production"}));
    serve->add_option("--mode", mode)->check(CLI::IsMember({"canonical", "strict"}));
    serve->add_option("--locale", locale);

    auto *classify = app.add_subcommand("classify", "Run the rule over every alternative of a problem file");
    classify->add_option("file", file)->required();
    classify->add_option("--mode", mode)->check(CLI::IsMember({"canonical", "strict"}));
    classify->add_flag("--json", as_json);

    auto *analyze = app.add_subcommand("analyze", "Summarize a history file");
    analyze->add_option("store", store, "History file (default: $ABI_STORE)");
    analyze->add_flag("--json", as_json);

    auto *demo = app.add_subcommand("demo", "Replay a scripted session");
    demo->add_option("--store", demo_store, "Write the demo history here instead of memory");
    demo->add_option("--locale", locale);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*classify) {
            return run_classify(file, mode, as_json);
        }
        if (*analyze) {
            if (store.empty()) {
                std::cerr << "analyze: no store given and ABI_STORE is unset\n";
                return kExitValidation;
            }
            return run_analyze(store, as_json);
        }
        if (*demo) {
            return run_demo(demo_store, locale);
        }
        if (store.empty()) {
            std::cerr << "serve: no store given and ABI_STORE is unset\n";
            return kExitValidation;
        }
        return run_serve(host, port, store, {abi_engine::flow_from_string(flow), abi_engine::rule_mode_from_string(mode), locale});
    } catch (const IoFailure &e) {
        std::cerr << "abi: " << e.what() << "\n";
        return kExitIo;
    } catch (const abi_engine::StorageError &e) {
        std::cerr << "abi: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error &e) {
        std::cerr << "abi: " << e.what() << "\n";
        return kExitIo;
    } catch (const abi_engine::ValidationError &e) {
        print_issues(e.issues(), "abi: ");
        return kExitValidation;
    } catch (const std::exception &e) {
        std::cerr << "abi: " << e.what() << "\n";
        return kExitValidation;
    }
}
