#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "abi/analytics.hpp"
#include "abi/bias_engine.hpp"
#include "abi/history.hpp"

namespace httplib {
class Server;
}

namespace abi_engine {

enum class SessionState {
    awaiting_choice,
    awaiting_pre_ratings,
    alerted,
    awaiting_agreement,
    awaiting_post_ratings,
    awaiting_revision,
    completed,
};

std::string_view to_string(SessionState state);

/// experiment: decide -> rate -> alert -> agree -> rate -> revise.
/// production: decide -> alert -> revise (no measurements).
enum class Flow { experiment, production };
std::string_view to_string(Flow flow);
Flow flow_from_string(std::string_view text);

struct Session {
    std::string id;
    Agent agent;
    std::string problem_id;
    Flow flow = Flow::experiment;
    SessionState state = SessionState::awaiting_choice;
    std::optional<Choice> initial_choice;
    std::optional<Choice> revised_choice;
    std::optional<RiskAssessment> assessment;
    std::optional<int> before_level;
    std::optional<int> after_level;
    std::optional<AgreementResponse> agreement;
};

struct Response {
    int status = 200;
    nlohmann::json body;
};

struct ServiceOptions {
    Flow flow = Flow::experiment;
    RuleMode mode = RuleMode::canonical;
    std::string locale = "en";
};

/// HTTP-independent implementation of the API. Calls are serialized; the
/// event log is the only persistent state and sessions are rebuilt from it.
class AbiService {
public:
    explicit AbiService(EventLog &log, ServiceOptions options = {});

    Response create_problem(const nlohmann::json &body);
    Response get_problem(const std::string &problem_id) const;
    Response create_session(const nlohmann::json &body);
    Response get_session(const std::string &session_id) const;
    Response make_choice(const std::string &session_id, const nlohmann::json &body);
    Response record_ratings(const std::string &session_id, const nlohmann::json &body);
    Response acknowledge(const std::string &session_id);
    Response record_agreement(const std::string &session_id, const nlohmann::json &body);
    Response revise(const std::string &session_id, const nlohmann::json &body);
    Response report() const;
    std::string export_history() const;

    const ServiceOptions &options() const noexcept { return options_; }

private:
    void rebuild_sessions();
    nlohmann::json session_json(const Session &s) const;
    std::optional<nlohmann::json> alert_json(const Session &s, std::string_view locale) const;
    Response revise_locked(Session &s, const nlohmann::json &body);
    nlohmann::json session_refs(const Session &s) const;

    EventLog &log_;
    ServiceOptions options_;
    mutable std::mutex mutex_;
    std::map<std::string, Session> sessions_;
    std::map<std::pair<std::string, std::string>, std::string> session_by_pair_;
    std::uint64_t next_session_number_ = 1;
};

/// Registers every /api route on `server`.
void mount_routes(httplib::Server &server, AbiService &service);

} // namespace abi_engine
