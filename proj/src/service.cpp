#include "abi/service.hpp"

#include <stdexcept>

#include "abi/errors.hpp"
#include "abi/explainer.hpp"

namespace abi_engine {

using nlohmann::json;

namespace {

Response error(int status, std::string_view code, const std::string &message, json issues = nullptr) {
    json body{{"error", code}, {"message", message}};
    if (!issues.is_null()) {
        body["issues"] = std::move(issues);
    }
    return {status, std::move(body)};
}

Response wrong_state(const Session &s, std::string_view action) {
    return error(409, "InvalidState",
                 "cannot " + std::string(action) + " while session \"" + s.id + "\" is " +
                     std::string(to_string(s.state)));
}

Response not_found(std::string_view what, const std::string &id) {
    return error(404, "NotFound", std::string(what) + " \"" + id + "\" does not exist");
}

// Maps an exception escaping a handler to an HTTP response.
Response from_exception() {
    try {
        throw;
    } catch (const ValidationError &e) {
        return error(400, "ValidationError", e.what(), issues_to_json(e.issues()));
    } catch (const DuplicateError &e) {
        return error(409, e.code(), e.what());
    } catch (const StorageError &e) {
        return error(500, e.code(), e.what());
    } catch (const UnknownAlternative &e) {
        return error(404, e.code(), e.what());
    } catch (const Error &e) {
        return error(400, e.code(), e.what());
    } catch (const json::exception &e) {
        return error(400, "MalformedRequest", e.what());
    } catch (const std::invalid_argument &e) {
        return error(400, "MalformedRequest", e.what());
    } catch (const std::out_of_range &e) {
        return error(400, "RangeError", e.what());
    }
}

// Applies one logged event to the session it belongs to. This is the only
// place where state transitions happen, for live requests and for replay.
void apply_event(Session &s, const Event &e) {
    const json &p = e.payload;
    switch (e.kind) {
    case EventKind::choice_made:
        s.initial_choice = choice_from_json(p.at("choice"));
        s.state = SessionState::awaiting_pre_ratings;
        break;
    case EventKind::assessment_issued:
        s.assessment = risk_assessment_from_json(p.at("assessment"));
        if (s.flow == Flow::production) {
            s.state = s.assessment->risk_seeking_for_losses ? SessionState::alerted : SessionState::completed;
        }
        break;
    case EventKind::ratings_recorded: {
        AwarenessRating rating = awareness_rating_from_json(p.at("rating"));
        int level = p.at("awareness_level").get<int>();
        if (rating.phase == RatingPhase::before_alert) {
            s.before_level = level;
            s.state = s.assessment && s.assessment->risk_seeking_for_losses ? SessionState::alerted
                                                                             : SessionState::completed;
        } else {
            s.after_level = level;
            s.state = SessionState::awaiting_revision;
        }
        break;
    }
    case EventKind::alert_acknowledged:
        s.state = s.flow == Flow::production ? SessionState::awaiting_revision : SessionState::awaiting_agreement;
        break;
    case EventKind::agreement_recorded:
        s.agreement = agreement_from_json(p.at("agreement"));
        s.state = SessionState::awaiting_post_ratings;
        break;
    case EventKind::choice_revised:
        s.revised_choice = choice_from_json(p.at("choice"));
        s.state = SessionState::completed;
        break;
    case EventKind::problem_created:
        break;
    }
}

std::optional<std::uint64_t> session_number(std::string_view id) {
    constexpr std::string_view prefix = "session-";
    if (id.substr(0, prefix.size()) != prefix) {
        return std::nullopt;
    }
    try {
        return std::stoull(std::string(id.substr(prefix.size())));
    } catch (const std::exception &) {
        return std::nullopt;
    }
}

const json &body_field(const json &body, std::string_view key) {
    if (!body.is_object()) {
        throw std::invalid_argument("request body must be a JSON object");
    }
    auto it = body.find(key);
    if (it == body.end()) {
        throw std::invalid_argument("missing field \"" + std::string(key) + "\"");
    }
    return *it;
}

std::string body_string(const json &body, std::string_view key) {
    const json &v = body_field(body, key);
    if (!v.is_string() || v.get<std::string>().empty()) {
        throw std::invalid_argument("\"" + std::string(key) + "\" must be a non-empty string");
    }
    return v.get<std::string>();
}

} // namespace

std::string_view to_string(SessionState state) {
    switch (state) {
    case SessionState::awaiting_choice: return "awaiting_choice";
    case SessionState::awaiting_pre_ratings: return "awaiting_pre_ratings";
    case SessionState::alerted: return "alerted";
    case SessionState::awaiting_agreement: return "awaiting_agreement";
    case SessionState::awaiting_post_ratings: return "awaiting_post_ratings";
    case SessionState::awaiting_revision: return "awaiting_revision";
    case SessionState::completed: return "completed";
    }
    return "?";
}

std::string_view to_string(Flow flow) { return flow == Flow::experiment ? "experiment" : "production"; }

Flow flow_from_string(std::string_view text) {
    if (text == "experiment") return Flow::experiment;
    if (text == "production") return Flow::production;
    throw std::invalid_argument("unknown flow \"" + std::string(text) + "\"");
}

AbiService::AbiService(EventLog &log, ServiceOptions options) : log_(log), options_(std::move(options)) {
    rebuild_sessions();
}

void AbiService::rebuild_sessions() {
    for (const auto &e : log_.events()) {
        if (e.kind == EventKind::problem_created) {
            continue;
        }
        const std::string session_id = e.payload.at("session_id").get<std::string>();
        if (e.kind == EventKind::choice_made) {
            Session s;
            s.id = session_id;
            s.agent = agent_from_json(e.payload.at("agent"));
            s.problem_id = e.payload.at("problem_id").get<std::string>();
            s.flow = flow_from_string(e.payload.value("flow", "experiment"));
            session_by_pair_[{s.agent.id, s.problem_id}] = s.id;
            if (auto n = session_number(s.id)) {
                next_session_number_ = std::max(next_session_number_, *n + 1);
            }
            sessions_[session_id] = std::move(s);
        }
        auto it = sessions_.find(session_id);
        if (it != sessions_.end()) {
            apply_event(it->second, e);
        }
    }
}

json AbiService::session_refs(const Session &s) const {
    return {{"session_id", s.id}, {"agent_id", s.agent.id}, {"problem_id", s.problem_id}};
}

json AbiService::session_json(const Session &s) const {
    json out{{"session_id", s.id},
             {"agent_id", s.agent.id},
             {"problem_id", s.problem_id},
             {"flow", to_string(s.flow)},
             {"state", to_string(s.state)}};
    out["initial_choice"] = s.initial_choice ? choice_to_json(*s.initial_choice) : json(nullptr);
    out["revised_choice"] = s.revised_choice ? choice_to_json(*s.revised_choice) : json(nullptr);
    out["awareness_before"] = s.before_level ? json(*s.before_level) : json(nullptr);
    out["awareness_after"] = s.after_level ? json(*s.after_level) : json(nullptr);
    if (auto alert = alert_json(s, options_.locale)) {
        out["alert"] = *alert;
    }
    return out;
}

// The alert becomes visible once the session has reached `alerted`; before
// that (in the experiment flow) the assessment stays withheld.
std::optional<json> AbiService::alert_json(const Session &s, std::string_view locale) const {
    if (!s.assessment || !s.assessment->risk_seeking_for_losses || !s.initial_choice) {
        return std::nullopt;
    }
    if (s.state == SessionState::awaiting_choice || s.state == SessionState::awaiting_pre_ratings) {
        return std::nullopt;
    }
    const DecisionProblem *problem = log_.with_index([&](const LogIndex &index) { return index.problem(s.problem_id); });
    AlertContent content = build_alert(*problem, *s.initial_choice, *s.assessment);
    return render_alert_text(content, locale).json;
}

Response AbiService::create_problem(const json &body) {
    std::lock_guard lock(mutex_);
    try {
        DecisionProblem problem = problem_from_json(body);
        log_.append(EventKind::problem_created, {{"problem", problem_to_json(problem)}});
        return {201, {{"problem_id", problem.id}}};
    } catch (...) {
        return from_exception();
    }
}

Response AbiService::get_problem(const std::string &problem_id) const {
    std::lock_guard lock(mutex_);
    auto problem = log_.with_index([&](const LogIndex &index) -> std::optional<DecisionProblem> {
        if (const DecisionProblem *p = index.problem(problem_id)) {
            return *p;
        }
        return std::nullopt;
    });
    if (!problem) {
        return not_found("problem", problem_id);
    }
    return {200, problem_to_json(*problem)};
}

Response AbiService::create_session(const json &body) {
    std::lock_guard lock(mutex_);
    try {
        Agent agent;
        agent.id = body_string(body, "agent_id");
        agent.display_name = body.value("display_name", "");
        if (auto it = body.find("profile"); it != body.end()) {
            agent = agent_from_json({{"id", agent.id}, {"display_name", agent.display_name}, {"profile", *it}});
        }
        std::string problem_id = body_string(body, "problem_id");
        bool known = log_.with_index([&](const LogIndex &index) { return index.problem(problem_id) != nullptr; });
        if (!known) {
            return not_found("problem", problem_id);
        }
        if (session_by_pair_.count({agent.id, problem_id})) {
            return error(409, "DuplicateSession",
                         "agent \"" + agent.id + "\" already has a session for problem \"" + problem_id + "\"");
        }
        Session s;
        s.id = "session-" + std::to_string(next_session_number_++);
        s.agent = agent;
        s.problem_id = problem_id;
        s.flow = body.contains("flow") ? flow_from_string(body_string(body, "flow")) : options_.flow;
        session_by_pair_[{agent.id, problem_id}] = s.id;
        auto [it, inserted] = sessions_.emplace(s.id, std::move(s));
        return {201, {{"session_id", it->first}, {"state", to_string(it->second.state)}}};
    } catch (...) {
        return from_exception();
    }
}

Response AbiService::get_session(const std::string &session_id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        return not_found("session", session_id);
    }
    try {
        return {200, session_json(it->second)};
    } catch (...) {
        return from_exception();
    }
}

Response AbiService::make_choice(const std::string &session_id, const json &body) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        return not_found("session", session_id);
    }
    Session &s = it->second;
    try {
        if (s.state == SessionState::awaiting_revision) {
            return revise_locked(s, body);
        }
        if (s.state != SessionState::awaiting_choice) {
            return wrong_state(s, "choose");
        }
        const std::string alternative_id = body_string(body, "alternative_id");
        const DecisionProblem problem =
            log_.with_index([&](const LogIndex &index) { return *index.problem(s.problem_id); });
        if (!problem.find_alternative(alternative_id)) {
            return not_found("alternative", alternative_id);
        }

        Choice choice;
        choice.id = "choice-" + std::to_string(log_.size() + 1);
        choice.problem_id = s.problem_id;
        choice.agent_id = s.agent.id;
        choice.chosen_alternative_id = alternative_id;
        choice.phase = ChoicePhase::initial;

        json payload = session_refs(s);
        payload["agent"] = agent_to_json(s.agent);
        payload["choice"] = choice_to_json(choice);
        payload["flow"] = to_string(s.flow);
        std::uint64_t seq = log_.append(EventKind::choice_made, payload);
        Event choice_event = log_.events({EventKind::choice_made, s.agent.id, s.problem_id}).back();
        apply_event(s, choice_event);

        RiskAssessment assessment = assess(problem, *s.initial_choice, options_.mode);
        json assessment_payload = session_refs(s);
        assessment_payload["assessment"] = to_json(assessment);
        log_.append(EventKind::assessment_issued, assessment_payload);
        apply_event(s, Event{kEventFormatVersion, seq + 1, {}, EventKind::assessment_issued, assessment_payload});

        json out{{"choice_id", choice.id}, {"state", to_string(s.state)}};
        if (s.flow == Flow::production) {
            if (auto alert = alert_json(s, body.value("locale", options_.locale))) {
                out["alert"] = *alert;
            }
        }
        return {200, out};
    } catch (...) {
        return from_exception();
    }
}

Response AbiService::record_ratings(const std::string &session_id, const json &body) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        return not_found("session", session_id);
    }
    Session &s = it->second;
    if (s.state != SessionState::awaiting_pre_ratings && s.state != SessionState::awaiting_post_ratings) {
        return wrong_state(s, "record ratings");
    }
    try {
        AwarenessRating rating;
        rating.choice_id = s.initial_choice->id;
        rating.phase = s.state == SessionState::awaiting_pre_ratings ? RatingPhase::before_alert
                                                                     : RatingPhase::after_alert;
        const json &scores = body_field(body, "ratings");
        if (!scores.is_object()) {
            throw std::invalid_argument("\"ratings\" must map alternative ids to scores");
        }
        for (const auto &[id, score] : scores.items()) {
            if (!score.is_number_integer()) {
                throw std::invalid_argument("rating for \"" + id + "\" must be an integer");
            }
            rating.ratings[id] = score.get<int>();
        }
        std::vector<std::string> ids;
        for (const auto &[id, ev] : s.assessment->ev_per_alternative) {
            ids.push_back(id);
        }
        try {
            check_rating(rating, ids);
        } catch (const MissingRating &e) {
            return error(400, e.code(), e.what());
        }
        int level = static_cast<int>(awareness_level(rating, *s.assessment));

        json payload = session_refs(s);
        payload["rating"] = to_json(rating);
        payload["awareness_level"] = level;
        std::uint64_t seq = log_.append(EventKind::ratings_recorded, payload);
        apply_event(s, Event{kEventFormatVersion, seq, {}, EventKind::ratings_recorded, payload});

        json out{{"awareness_level", level}, {"state", to_string(s.state)}};
        if (s.state == SessionState::alerted) {
            if (auto alert = alert_json(s, body.value("locale", options_.locale))) {
                out["alert"] = *alert;
            }
        }
        return {200, out};
    } catch (...) {
        return from_exception();
    }
}

Response AbiService::acknowledge(const std::string &session_id) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        return not_found("session", session_id);
    }
    Session &s = it->second;
    if (s.state != SessionState::alerted) {
        return wrong_state(s, "acknowledge the alert");
    }
    try {
        json payload = session_refs(s);
        payload["choice_id"] = s.initial_choice->id;
        std::uint64_t seq = log_.append(EventKind::alert_acknowledged, payload);
        apply_event(s, Event{kEventFormatVersion, seq, {}, EventKind::alert_acknowledged, payload});
        return {200, {{"state", to_string(s.state)}}};
    } catch (...) {
        return from_exception();
    }
}

Response AbiService::record_agreement(const std::string &session_id, const json &body) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        return not_found("session", session_id);
    }
    Session &s = it->second;
    if (s.state != SessionState::awaiting_agreement) {
        return wrong_state(s, "record agreement");
    }
    try {
        AgreementResponse response;
        response.choice_id = s.initial_choice->id;
        const json &q1 = body_field(body, "q1");
        const json &q2 = body_field(body, "q2");
        if (!q1.is_number_integer() || !q2.is_number_integer()) {
            throw std::invalid_argument("q1 and q2 must be integers in [1, 5]");
        }
        response.q1_bias_agreement = q1.get<int>();
        response.q2_insight_agreement = q2.get<int>();
        check_agreement(response);

        json payload = session_refs(s);
        payload["agreement"] = to_json(response);
        std::uint64_t seq = log_.append(EventKind::agreement_recorded, payload);
        apply_event(s, Event{kEventFormatVersion, seq, {}, EventKind::agreement_recorded, payload});
        return {200, {{"state", to_string(s.state)}}};
    } catch (...) {
        return from_exception();
    }
}

Response AbiService::revise(const std::string &session_id, const json &body) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        return not_found("session", session_id);
    }
    try {
        return revise_locked(it->second, body);
    } catch (...) {
        return from_exception();
    }
}

Response AbiService::revise_locked(Session &s, const json &body) {
    if (s.state != SessionState::awaiting_revision) {
        return wrong_state(s, "revise");
    }
    if (!body.is_object()) {
        throw std::invalid_argument("request body must be a JSON object");
    }
    const bool confirm = body.value("confirm", false);
    std::string alternative_id;
    if (body.contains("alternative_id")) {
        alternative_id = body_string(body, "alternative_id");
    } else if (confirm) {
        alternative_id = s.initial_choice->chosen_alternative_id;
    } else {
        throw std::invalid_argument("revision needs \"alternative_id\" or \"confirm\": true");
    }
    const bool known = log_.with_index([&](const LogIndex &index) {
        return index.problem(s.problem_id)->find_alternative(alternative_id) != nullptr;
    });
    if (!known) {
        return not_found("alternative", alternative_id);
    }

    Choice revised;
    revised.id = "choice-" + std::to_string(log_.size() + 1);
    revised.problem_id = s.problem_id;
    revised.agent_id = s.agent.id;
    revised.chosen_alternative_id = alternative_id;
    revised.phase = ChoicePhase::revised;

    json payload = session_refs(s);
    payload["choice"] = choice_to_json(revised);
    payload["initial_choice_id"] = s.initial_choice->id;
    payload["confirmed"] = alternative_id == s.initial_choice->chosen_alternative_id;
    log_.append(EventKind::choice_revised, payload);
    apply_event(s, log_.events({EventKind::choice_revised, s.agent.id, s.problem_id}).back());
    return {200,
            {{"state", to_string(s.state)},
             {"choice_id", revised.id},
             {"final_alternative_id", alternative_id}}};
}

Response AbiService::report() const {
    std::lock_guard lock(mutex_);
    try {
        return {200, to_json(summarize_history(log_.events()))};
    } catch (...) {
        return from_exception();
    }
}

std::string AbiService::export_history() const {
    std::lock_guard lock(mutex_);
    return export_jsonl(log_);
}

} // namespace abi_engine
