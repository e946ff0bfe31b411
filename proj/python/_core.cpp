#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "abi/analytics.hpp"
#include "abi/errors.hpp"
#include "abi/bias_engine.hpp"
#include "abi/explainer.hpp"
#include "abi/history.hpp"
#include "abi/service.hpp"
#include "abi/valuation.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

abi_engine::DecisionProblem problem_of(const std::string &text) {
    return abi_engine::validate_problem(abi_engine::problem_from_json(json::parse(text)));
}

abi_engine::Choice choice_of(const abi_engine::DecisionProblem &problem, const std::string &alternative_id) {
    abi_engine::Choice c;
    c.id = "choice-1";
    c.problem_id = problem.id;
    c.agent_id = "agent-1";
    c.chosen_alternative_id = alternative_id;
    return c;
}

std::string classify(const std::string &problem_json, const std::string &alternative_id, const std::string &mode) {
    auto problem = problem_of(problem_json);
    auto verdict = abi_engine::is_risk_seeking_for_losses_choice(problem, alternative_id, abi_engine::rule_mode_from_string(mode));
    return json{{"risk_seeking_for_losses", verdict.risk_seeking}, {"trace", abi_engine::to_json(verdict.trace)}}.dump();
}

std::string assess(const std::string &problem_json, const std::string &alternative_id, const std::string &mode) {
    auto problem = problem_of(problem_json);
    return abi_engine::to_json(abi_engine::assess(problem, choice_of(problem, alternative_id), abi_engine::rule_mode_from_string(mode)))
        .dump();
}

std::string expected_values(const std::string &problem_json) {
    auto problem = problem_of(problem_json);
    json out = json::object();
    for (const auto &alt : problem.alternatives) out[alt.id] = abi_engine::to_json(abi_engine::expected_value(alt));
    return out.dump();
}

std::string decision_weight(const std::string &probability_pct) {
    return abi_engine::decision_weight_for_loss(abi_engine::Probability::parse(probability_pct)).to_string();
}

std::string alert(const std::string &problem_json, const std::string &alternative_id, const std::string &mode,
                  const std::string &locale) {
    auto problem = problem_of(problem_json);
    auto choice = choice_of(problem, alternative_id);
    auto assessment = abi_engine::assess(problem, choice, abi_engine::rule_mode_from_string(mode));
    return abi_engine::render_alert_text(abi_engine::build_alert(problem, choice, assessment), locale).json.dump();
}

py::dict result_dict(const abi_engine::TestResult &r) {
    py::dict d;
    d["method"] = r.method;
    d["statistic"] = r.statistic;
    d["p_value"] = r.p_value;
    d["alternative"] = std::string(abi_engine::to_string(r.alternative));
    d["n_effective"] = r.n_effective;
    d["exact"] = r.exact;
    d["degrees_of_freedom"] = r.degrees_of_freedom ? py::cast(*r.degrees_of_freedom) : py::none();
    return d;
}

py::dict wilcoxon(const std::vector<std::pair<double, double>> &pairs, const std::string &tail) {
    return result_dict(abi_engine::wilcoxon_signed_rank(pairs, abi_engine::tail_from_string(tail)));
}

py::dict mann_whitney(const std::vector<double> &a, const std::vector<double> &b, const std::string &tail) {
    return result_dict(abi_engine::mann_whitney_u(a, b, abi_engine::tail_from_string(tail)));
}

py::dict chi_square(const std::vector<std::vector<double>> &table) {
    return result_dict(abi_engine::chi_square_independence(table));
}

std::string summarize(const std::string &jsonl) {
    return abi_engine::to_json(abi_engine::summarize_history(abi_engine::import_jsonl(jsonl)->events())).dump();
}

std::string project(const std::string &jsonl) {
    return abi_engine::to_json(abi_engine::project_relational(abi_engine::import_jsonl(jsonl)->events())).dump();
}

/// In-process service over a memory or file-backed event log.
class Service {
public:
    Service(const std::string &store, const std::string &flow, const std::string &mode, const std::string &locale)
        : log_(store.empty() ? std::make_unique<abi_engine::EventLog>()
                             : std::make_unique<abi_engine::EventLog>(std::filesystem::path(store))),
          service_(*log_, {abi_engine::flow_from_string(flow), abi_engine::rule_mode_from_string(mode), locale}) {}

    py::tuple call(const std::string &operation, const std::string &target, const std::string &body_json) {
        const json body = body_json.empty() ? json::object() : json::parse(body_json);
        abi_engine::Response r;
        if (operation == "create_problem") r = service_.create_problem(body);
        else if (operation == "get_problem") r = service_.get_problem(target);
        else if (operation == "create_session") r = service_.create_session(body);
        else if (operation == "get_session") r = service_.get_session(target);
        else if (operation == "choice") r = service_.make_choice(target, body);
        else if (operation == "ratings") r = service_.record_ratings(target, body);
        else if (operation == "acknowledge") r = service_.acknowledge(target);
        else if (operation == "agreement") r = service_.record_agreement(target, body);
        else if (operation == "revision") r = service_.revise(target, body);
        else if (operation == "report") r = service_.report();
        else throw py::value_error("unknown operation: " + operation);
        return py::make_tuple(r.status, r.body.dump());
    }

    std::string export_history() const { return service_.export_history(); }

private:
    std::unique_ptr<abi_engine::EventLog> log_;
    abi_engine::AbiService service_;
};

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Risk-seeking-for-losses detection, alerts and awareness analytics";

    static py::exception<abi_engine::Error> abi_error(m, "AbiError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const abi_engine::Error &e) {
            py::set_error(abi_error, (e.code() + ": " + e.what()).c_str());
        } catch (const abi_engine::ValidationError &e) {
            py::set_error(abi_error, (std::string("ValidationError: ") + e.what()).c_str());
        } catch (const json::exception &e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    m.def("classify", &classify, py::arg("problem_json"), py::arg("alternative_id"), py::arg("mode") = "canonical");
    m.def("assess", &assess, py::arg("problem_json"), py::arg("alternative_id"), py::arg("mode") = "canonical");
    m.def("expected_values", &expected_values, py::arg("problem_json"));
    m.def("decision_weight", &decision_weight, py::arg("probability_pct"));
    m.def("alert", &alert, py::arg("problem_json"), py::arg("alternative_id"), py::arg("mode") = "canonical",
          py::arg("locale") = "en");
    m.def("wilcoxon", &wilcoxon, py::arg("pairs"), py::arg("tail") = "two_sided");
    m.def("mann_whitney", &mann_whitney, py::arg("a"), py::arg("b"), py::arg("tail") = "two_sided");
    m.def("chi_square", &chi_square, py::arg("table"));
    m.def("summarize", &summarize, py::arg("jsonl"));
    m.def("project", &project, py::arg("jsonl"));

    py::class_<Service>(m, "Service")
        .def(py::init<const std::string &, const std::string &, const std::string &, const std::string &>(),
             py::arg("store") = "", py::arg("flow") = "experiment", py::arg("mode") = "canonical",
             py::arg("locale") = "en")
        .def("call", &Service::call, py::arg("operation"), py::arg("target") = "", py::arg("body_json") = "")
        .def("export_history", &Service::export_history);
}
