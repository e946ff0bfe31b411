#include "abi/history.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

#include "abi/analytics.hpp"
#include "abi/bias_engine.hpp"
#include "abi/errors.hpp"

namespace abi_engine {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 7> kKindNames{{
    {EventKind::problem_created, "ProblemCreated"},
    {EventKind::choice_made, "ChoiceMade"},
    {EventKind::assessment_issued, "AssessmentIssued"},
    {EventKind::alert_acknowledged, "AlertAcknowledged"},
    {EventKind::ratings_recorded, "RatingsRecorded"},
    {EventKind::agreement_recorded, "AgreementRecorded"},
    {EventKind::choice_revised, "ChoiceRevised"},
}};

const json &require(const json &payload, std::string_view key) {
    auto it = payload.find(key);
    if (it == payload.end()) {
        throw SchemaError("payload is missing \"" + std::string(key) + "\"");
    }
    return *it;
}

std::string require_string(const json &payload, std::string_view key) {
    const json &v = require(payload, key);
    if (!v.is_string() || v.get<std::string>().empty()) {
        throw SchemaError("\"" + std::string(key) + "\" must be a non-empty string");
    }
    return v.get<std::string>();
}

// Normalizes payload-level ids (session, agent, problem) of session events.
struct SessionRefs {
    std::string session_id;
    std::string agent_id;
    std::string problem_id;
};

SessionRefs session_refs(const json &payload) {
    return {require_string(payload, "session_id"), require_string(payload, "agent_id"),
            require_string(payload, "problem_id")};
}

Event event_from_json(const json &j, std::size_t line_no) {
    auto where = [&](const std::string &msg) { return "line " + std::to_string(line_no) + ": " + msg; };
    if (!j.is_object()) {
        throw CorruptLog(where("event must be a JSON object"));
    }
    Event e;
    auto v = j.find("v");
    if (v == j.end() || !v->is_number_integer()) {
        throw SchemaError(where("missing format version \"v\""));
    }
    e.v = v->get<int>();
    if (e.v != kEventFormatVersion) {
        throw SchemaError(where("unsupported format version " + std::to_string(e.v)));
    }
    auto kind = j.find("kind");
    if (kind == j.end() || !kind->is_string()) {
        throw SchemaError(where("missing \"kind\""));
    }
    auto parsed_kind = event_kind_from_string(kind->get<std::string>());
    if (!parsed_kind) {
        throw SchemaError(where("unknown event kind \"" + kind->get<std::string>() + "\""));
    }
    e.kind = *parsed_kind;
    auto seq = j.find("seq");
    auto ts = j.find("ts");
    auto payload = j.find("payload");
    if (seq == j.end() || !seq->is_number_unsigned() || ts == j.end() || !ts->is_string() ||
        payload == j.end() || !payload->is_object()) {
        throw SchemaError(where("event needs integer \"seq\", string \"ts\" and object \"payload\""));
    }
    e.seq = seq->get<std::uint64_t>();
    e.ts = ts->get<std::string>();
    e.payload = *payload;
    return e;
}

} // namespace

std::string_view to_string(EventKind kind) {
    for (const auto &[k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "Unknown";
}

std::optional<EventKind> event_kind_from_string(std::string_view text) {
    for (const auto &[k, name] : kKindNames) {
        if (name == text) return k;
    }
    return std::nullopt;
}

std::string Event::problem_id() const {
    if (kind == EventKind::problem_created) {
        return payload.at("problem").value("id", "");
    }
    return payload.value("problem_id", "");
}

std::string Event::agent_id() const {
    if (kind == EventKind::problem_created) {
        return {};
    }
    return payload.value("agent_id", "");
}

json to_json(const Event &event) {
    return {{"v", event.v},
            {"seq", event.seq},
            {"ts", event.ts},
            {"kind", to_string(event.kind)},
            {"payload", event.payload}};
}

std::string to_line(const Event &event) { return to_json(event).dump(); }

bool EventFilter::matches(const Event &event) const {
    if (kind && event.kind != *kind) return false;
    if (agent_id && event.agent_id() != *agent_id) return false;
    if (problem_id && event.problem_id() != *problem_id) return false;
    return true;
}

std::string system_clock_iso8601() {
    using namespace std::chrono;
    auto now = system_clock::now();
    auto millis = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    std::time_t t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(millis));
    return out;
}

// ---------------------------------------------------------------------------
// LogIndex

const DecisionProblem *LogIndex::problem(std::string_view id) const {
    auto it = problems_.find(id);
    return it == problems_.end() ? nullptr : &it->second;
}

const Choice *LogIndex::choice(std::string_view id) const {
    auto it = choices_.find(id);
    return it == choices_.end() ? nullptr : &it->second;
}

void LogIndex::check(EventKind kind, const json &payload) const {
    if (!payload.is_object()) {
        throw SchemaError(std::string(to_string(kind)) + " payload must be an object");
    }
    try {
        // Every session event names a choice that must already exist and
        // agree with the payload's agent/problem.
        auto existing_choice = [&](const std::string &choice_id, const SessionRefs &refs) -> const Choice & {
            const Choice *c = choice(choice_id);
            if (!c) {
                throw ReferentialError("unknown choice \"" + choice_id + "\"");
            }
            if (c->agent_id != refs.agent_id || c->problem_id != refs.problem_id) {
                throw ReferentialError("choice \"" + choice_id + "\" belongs to another agent/problem");
            }
            return *c;
        };

        switch (kind) {
        case EventKind::problem_created: {
            DecisionProblem p = problem_from_json(require(payload, "problem"));
            if (problem(p.id)) {
                throw DuplicateError("problem \"" + p.id + "\" already exists");
            }
            break;
        }
        case EventKind::choice_made:
        case EventKind::choice_revised: {
            auto refs = session_refs(payload);
            Choice c = choice_from_json(require(payload, "choice"));
            bool revised = kind == EventKind::choice_revised;
            if (c.phase != (revised ? ChoicePhase::revised : ChoicePhase::initial)) {
                throw SchemaError("choice phase does not match the event kind");
            }
            if (c.agent_id != refs.agent_id || c.problem_id != refs.problem_id) {
                throw SchemaError("choice agent/problem disagree with the payload");
            }
            const DecisionProblem *p = problem(c.problem_id);
            if (!p) {
                throw ReferentialError("unknown problem \"" + c.problem_id + "\"");
            }
            if (!p->find_alternative(c.chosen_alternative_id)) {
                throw ReferentialError("alternative \"" + c.chosen_alternative_id + "\" is not part of problem \"" +
                                       p->id + "\"");
            }
            if (choice(c.id)) {
                throw DuplicateError("choice \"" + c.id + "\" already exists");
            }
            auto key = std::make_pair(c.agent_id, c.problem_id);
            if (!revised) {
                agent_from_json(require(payload, "agent"));
                if (require(payload, "agent").at("id") != c.agent_id) {
                    throw SchemaError("agent id disagrees with the choice");
                }
                if (initial_by_pair_.count(key)) {
                    throw DuplicateError("agent \"" + c.agent_id + "\" already chose in problem \"" + c.problem_id +
                                         "\"");
                }
            } else {
                const Choice &initial = existing_choice(require_string(payload, "initial_choice_id"), refs);
                if (initial.phase != ChoicePhase::initial) {
                    throw ReferentialError("initial_choice_id must name an initial choice");
                }
                if (revised_by_pair_.count(key)) {
                    throw DuplicateError("agent \"" + c.agent_id + "\" already revised in problem \"" +
                                         c.problem_id + "\"");
                }
                if (!require(payload, "confirmed").is_boolean()) {
                    throw SchemaError("\"confirmed\" must be a boolean");
                }
            }
            break;
        }
        case EventKind::assessment_issued: {
            auto refs = session_refs(payload);
            RiskAssessment a = risk_assessment_from_json(require(payload, "assessment"));
            const Choice &c = existing_choice(a.choice_id, refs);
            if (a.problem_id != c.problem_id || a.chosen_alternative_id != c.chosen_alternative_id) {
                throw ReferentialError("assessment does not match choice \"" + c.id + "\"");
            }
            if (a.trace.entries.size() != kRulePredicateCount) {
                throw SchemaError("assessment trace must hold exactly 8 predicates");
            }
            break;
        }
        case EventKind::alert_acknowledged: {
            auto refs = session_refs(payload);
            existing_choice(require_string(payload, "choice_id"), refs);
            break;
        }
        case EventKind::ratings_recorded: {
            auto refs = session_refs(payload);
            AwarenessRating r = awareness_rating_from_json(require(payload, "rating"));
            const Choice &c = existing_choice(r.choice_id, refs);
            std::vector<std::string> ids;
            for (const auto &alt : problem(c.problem_id)->alternatives) {
                ids.push_back(alt.id);
            }
            check_rating(r, ids);
            const json &level = require(payload, "awareness_level");
            if (!level.is_number_integer() || (level.get<int>() != 0 && level.get<int>() != 1)) {
                throw SchemaError("awareness_level must be 0 or 1");
            }
            break;
        }
        case EventKind::agreement_recorded: {
            auto refs = session_refs(payload);
            AgreementResponse r = agreement_from_json(require(payload, "agreement"));
            existing_choice(r.choice_id, refs);
            check_agreement(r);
            break;
        }
        }
    } catch (const json::exception &e) {
        throw SchemaError(std::string(to_string(kind)) + " payload: " + e.what());
    } catch (const ValidationError &e) {
        throw SchemaError(std::string(to_string(kind)) + " payload: " + e.what());
    } catch (const MissingRating &e) {
        throw SchemaError(e.what());
    } catch (const std::invalid_argument &e) {
        throw SchemaError(std::string(to_string(kind)) + " payload: " + e.what());
    } catch (const std::out_of_range &e) {
        throw SchemaError(std::string(to_string(kind)) + " payload: " + e.what());
    }
}

void LogIndex::apply(const Event &event) {
    switch (event.kind) {
    case EventKind::problem_created: {
        DecisionProblem p = problem_from_json(event.payload.at("problem"));
        std::string id = p.id;
        problems_.emplace(std::move(id), std::move(p));
        break;
    }
    case EventKind::choice_made:
    case EventKind::choice_revised: {
        Choice c = choice_from_json(event.payload.at("choice"));
        auto key = std::make_pair(c.agent_id, c.problem_id);
        (c.phase == ChoicePhase::initial ? initial_by_pair_ : revised_by_pair_).insert(key);
        std::string id = c.id;
        choices_.emplace(std::move(id), std::move(c));
        break;
    }
    default:
        break;
    }
}

// ---------------------------------------------------------------------------
// EventLog

EventLog::EventLog(Clock clock) : clock_(std::move(clock)) {}

EventLog::EventLog(const std::filesystem::path &path, Clock clock) : clock_(std::move(clock)), path_(path) {
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) {
        LoadResult loaded = load_events(path);
        replay(loaded.events);
        warnings_ = loaded.warnings;
        auto size = std::filesystem::file_size(path, ec);
        if (!ec && size != loaded.valid_bytes) {
            std::filesystem::resize_file(path, loaded.valid_bytes, ec);
            if (ec) {
                throw StorageError("cannot truncate torn tail of " + path.string() + ": " + ec.message());
            }
        }
    }
    bool needs_newline = false;
    if (std::filesystem::exists(path, ec) && std::filesystem::file_size(path, ec) > 0) {
        std::ifstream in(path, std::ios::binary);
        in.seekg(-1, std::ios::end);
        needs_newline = in.get() != '\n';
    }
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) {
        throw StorageError("cannot open history file " + path.string() + " for appending");
    }
    if (needs_newline) {
        // Last event was complete but unterminated; close its line.
        out_ << '\n';
        out_.flush();
    }
}

std::unique_ptr<EventLog> EventLog::from_events(const std::vector<Event> &events, Clock clock) {
    auto log = std::make_unique<EventLog>(std::move(clock));
    log->replay(events);
    return log;
}

void EventLog::replay(const std::vector<Event> &events) {
    for (const auto &e : events) {
        if (e.seq != events_.size() + 1) {
            throw CorruptLog("event seq " + std::to_string(e.seq) + " breaks the sequence (expected " +
                             std::to_string(events_.size() + 1) + ")");
        }
        index_.check(e.kind, e.payload);
        index_.apply(e);
        events_.push_back(e);
    }
}

std::uint64_t EventLog::append(EventKind kind, json payload) {
    std::unique_lock lock(mutex_);
    Event e;
    e.seq = events_.size() + 1;
    e.ts = clock_();
    if (!events_.empty() && e.ts < events_.back().ts) {
        e.ts = events_.back().ts; // keep time monotone with seq
    }
    e.kind = kind;
    if ((kind == EventKind::choice_made || kind == EventKind::choice_revised) && payload.is_object()) {
        auto c = payload.find("choice");
        if (c != payload.end() && c->is_object() && c->value("timestamp", "").empty()) {
            (*c)["timestamp"] = e.ts;
        }
    }
    e.payload = std::move(payload);
    index_.check(kind, e.payload);

    if (path_) {
        out_ << to_line(e) << '\n';
        out_.flush();
        if (!out_) {
            throw StorageError("failed to append to " + path_->string());
        }
    }
    index_.apply(e);
    events_.push_back(std::move(e));
    return events_.back().seq;
}

std::vector<Event> EventLog::events(const EventFilter &filter) const {
    std::shared_lock lock(mutex_);
    std::vector<Event> out;
    for (const auto &e : events_) {
        if (filter.matches(e)) {
            out.push_back(e);
        }
    }
    return out;
}

std::size_t EventLog::size() const {
    std::shared_lock lock(mutex_);
    return events_.size();
}

std::uint64_t append_event(EventLog &log, EventKind kind, json payload) {
    return log.append(kind, std::move(payload));
}

// ---------------------------------------------------------------------------
// JSON Lines

LoadResult parse_jsonl(std::string_view bytes, bool tolerate_torn_tail) {
    LoadResult result;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < bytes.size()) {
        ++line_no;
        std::size_t nl = bytes.find('\n', pos);
        bool terminated = nl != std::string_view::npos;
        std::string_view line = bytes.substr(pos, terminated ? nl - pos : std::string_view::npos);
        std::size_t next = terminated ? nl + 1 : bytes.size();
        if (line.empty()) {
            if (terminated) {
                throw CorruptLog("line " + std::to_string(line_no) + ": empty line");
            }
            break;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error &e) {
            if (!terminated && tolerate_torn_tail) {
                result.warnings.push_back("line " + std::to_string(line_no) +
                                          ": torn trailing line dropped (" + std::to_string(line.size()) +
                                          " bytes)");
                break;
            }
            throw CorruptLog("line " + std::to_string(line_no) + ": " + e.what());
        }
        result.events.push_back(event_from_json(j, line_no));
        if (result.events.back().seq != result.events.size()) {
            throw CorruptLog("line " + std::to_string(line_no) + ": seq " +
                             std::to_string(result.events.back().seq) + " out of order");
        }
        pos = next;
        result.valid_bytes = next;
    }
    return result;
}

LoadResult load_events(const std::filesystem::path &path, const EventFilter &filter) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        return {};
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StorageError("cannot read history file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string bytes = buffer.str();
    LoadResult result = parse_jsonl(bytes, true);
    if (filter.kind || filter.agent_id || filter.problem_id) {
        std::vector<Event> kept;
        for (auto &e : result.events) {
            if (filter.matches(e)) {
                kept.push_back(std::move(e));
            }
        }
        result.events = std::move(kept);
    }
    return result;
}

std::string export_jsonl(const std::vector<Event> &events) {
    std::string out;
    for (const auto &e : events) {
        out += to_line(e);
        out.push_back('\n');
    }
    return out;
}

std::string export_jsonl(const EventLog &log) { return export_jsonl(log.events()); }

std::unique_ptr<EventLog> import_jsonl(std::string_view bytes, Clock clock) {
    LoadResult parsed = parse_jsonl(bytes, false);
    return EventLog::from_events(parsed.events, std::move(clock));
}

// ---------------------------------------------------------------------------
// Relational projection

RelationalSnapshot project_relational(const std::vector<Event> &events) {
    RelationalSnapshot s;
    std::map<std::string, std::size_t> agent_rows;
    std::map<std::string, std::size_t> session_rows;

    for (const auto &e : events) {
        const json &p = e.payload;
        switch (e.kind) {
        case EventKind::problem_created: {
            DecisionProblem problem = problem_from_json(p.at("problem"));
            s.decision_problem.push_back({problem.id, problem.statement, problem.currency});
            for (std::size_t i = 0; i < problem.alternatives.size(); ++i) {
                const auto &alt = problem.alternatives[i];
                s.alternative.push_back({problem.id, alt.id, alt.label, static_cast<int>(i)});
                for (std::size_t k = 0; k < alt.outcomes.size(); ++k) {
                    const auto &o = alt.outcomes[k];
                    s.outcome.push_back({problem.id, alt.id, static_cast<int>(k), o.value.amount_minor,
                                         o.probability.to_string()});
                }
            }
            break;
        }
        case EventKind::choice_made: {
            Agent agent = agent_from_json(p.at("agent"));
            if (!agent_rows.count(agent.id)) {
                agent_rows[agent.id] = s.agent.size();
                s.agent.push_back({agent.id, agent.display_name, agent.profile});
            }
            Choice c = choice_from_json(p.at("choice"));
            std::string session_id = p.at("session_id").get<std::string>();
            s.choice.push_back({c.id, session_id, c.problem_id, c.agent_id, c.chosen_alternative_id,
                                std::string(to_string(c.phase)), c.timestamp});
            session_rows[session_id] = s.decision_session.size();
            s.decision_session.push_back({session_id, c.agent_id, c.problem_id, c.id, c.id});
            break;
        }
        case EventKind::choice_revised: {
            Choice c = choice_from_json(p.at("choice"));
            std::string session_id = p.at("session_id").get<std::string>();
            s.choice.push_back({c.id, session_id, c.problem_id, c.agent_id, c.chosen_alternative_id,
                                std::string(to_string(c.phase)), c.timestamp});
            if (auto it = session_rows.find(session_id); it != session_rows.end()) {
                s.decision_session[it->second].final_choice_id = c.id;
            }
            break;
        }
        case EventKind::assessment_issued: {
            RiskAssessment a = risk_assessment_from_json(p.at("assessment"));
            for (const auto &[alt_id, ev] : a.ev_per_alternative) {
                s.rational_value_ascription.push_back({a.choice_id, alt_id, ev.amount.to_string()});
            }
            RelationalSnapshot::AssessmentRow row;
            row.choice_id = a.choice_id;
            row.problem_id = a.problem_id;
            row.risk_seeking_for_losses = a.risk_seeking_for_losses;
            if (a.fourfold_cell) {
                row.fourfold_domain = to_string(a.fourfold_cell->domain);
                row.fourfold_band = to_string(a.fourfold_cell->band);
                row.predicted_preference = to_string(a.fourfold_cell->predicted_preference);
            }
            row.mode = to_string(a.mode);
            row.unbiased_best_alternative_id = a.unbiased_best_alternative_id;
            s.risk_assessment.push_back(std::move(row));
            break;
        }
        case EventKind::ratings_recorded: {
            AwarenessRating r = awareness_rating_from_json(p.at("rating"));
            s.awareness_measurement.push_back({r.choice_id, p.at("session_id").get<std::string>(),
                                               std::string(to_string(r.phase)), r.ratings,
                                               p.at("awareness_level").get<int>()});
            break;
        }
        case EventKind::agreement_recorded: {
            AgreementResponse r = agreement_from_json(p.at("agreement"));
            s.agreement_response.push_back(
                {r.choice_id, p.at("session_id").get<std::string>(), r.q1_bias_agreement, r.q2_insight_agreement});
            break;
        }
        case EventKind::alert_acknowledged:
            break;
        }
    }
    return s;
}

json to_json(const RelationalSnapshot &s) {
    json out;
    auto &agents = out["agent"] = json::array();
    for (const auto &r : s.agent) {
        agents.push_back({{"id", r.id}, {"display_name", r.display_name}, {"profile", r.profile}});
    }
    auto &problems = out["decision_problem"] = json::array();
    for (const auto &r : s.decision_problem) {
        problems.push_back({{"id", r.id}, {"statement", r.statement}, {"currency", r.currency}});
    }
    auto &alternatives = out["alternative"] = json::array();
    for (const auto &r : s.alternative) {
        alternatives.push_back({{"problem_id", r.problem_id},
                                {"alternative_id", r.alternative_id},
                                {"label", r.label},
                                {"position", r.position}});
    }
    auto &outcomes = out["outcome"] = json::array();
    for (const auto &r : s.outcome) {
        outcomes.push_back({{"problem_id", r.problem_id},
                            {"alternative_id", r.alternative_id},
                            {"position", r.position},
                            {"amount_minor", r.amount_minor},
                            {"probability_pct", r.probability_pct}});
    }
    auto &choices = out["choice"] = json::array();
    for (const auto &r : s.choice) {
        choices.push_back({{"id", r.id},
                           {"session_id", r.session_id},
                           {"problem_id", r.problem_id},
                           {"agent_id", r.agent_id},
                           {"chosen_alternative_id", r.chosen_alternative_id},
                           {"phase", r.phase},
                           {"timestamp", r.timestamp}});
    }
    auto &sessions = out["decision_session"] = json::array();
    for (const auto &r : s.decision_session) {
        sessions.push_back({{"session_id", r.session_id},
                            {"agent_id", r.agent_id},
                            {"problem_id", r.problem_id},
                            {"initial_choice_id", r.initial_choice_id},
                            {"final_choice_id", r.final_choice_id}});
    }
    auto &rva = out["rational_value_ascription"] = json::array();
    for (const auto &r : s.rational_value_ascription) {
        rva.push_back({{"assessment_choice_id", r.assessment_choice_id},
                       {"alternative_id", r.alternative_id},
                       {"expected_value_minor", r.expected_value_minor}});
    }
    auto &assessments = out["risk_assessment"] = json::array();
    for (const auto &r : s.risk_assessment) {
        assessments.push_back({{"choice_id", r.choice_id},
                               {"problem_id", r.problem_id},
                               {"risk_seeking_for_losses", r.risk_seeking_for_losses},
                               {"fourfold_domain", r.fourfold_domain},
                               {"fourfold_band", r.fourfold_band},
                               {"predicted_preference", r.predicted_preference},
                               {"mode", r.mode},
                               {"unbiased_best_alternative_id", r.unbiased_best_alternative_id}});
    }
    auto &awareness = out["awareness_measurement"] = json::array();
    for (const auto &r : s.awareness_measurement) {
        awareness.push_back({{"choice_id", r.choice_id},
                             {"session_id", r.session_id},
                             {"phase", r.phase},
                             {"ratings", r.ratings},
                             {"awareness_level", r.awareness_level}});
    }
    auto &agreements = out["agreement_response"] = json::array();
    for (const auto &r : s.agreement_response) {
        agreements.push_back({{"choice_id", r.choice_id},
                              {"session_id", r.session_id},
                              {"q1_bias_agreement", r.q1_bias_agreement},
                              {"q2_insight_agreement", r.q2_insight_agreement}});
    }
    return out;
}

} // namespace abi_engine
