#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "abi/model.hpp"

namespace abi_engine {

enum class EventKind {
    problem_created,
    choice_made,
    assessment_issued,
    alert_acknowledged,
    ratings_recorded,
    agreement_recorded,
    choice_revised,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(std::string_view text);

inline constexpr int kEventFormatVersion = 1;

/// One line of the history file:
/// { "v": 1, "seq": int, "ts": iso8601, "kind": string, "payload": object }
struct Event {
    int v = kEventFormatVersion;
    std::uint64_t seq = 0;
    std::string ts;
    EventKind kind = EventKind::problem_created;
    nlohmann::json payload;

    /// Problem and agent the event concerns, read from the payload.
    std::string problem_id() const;
    std::string agent_id() const;

    friend bool operator==(const Event &, const Event &) = default;
};

nlohmann::json to_json(const Event &event);
/// Single serialized line without the trailing newline.
std::string to_line(const Event &event);

struct EventFilter {
    std::optional<EventKind> kind;
    std::optional<std::string> agent_id;
    std::optional<std::string> problem_id;

    bool matches(const Event &event) const;
};

/// ISO-8601 UTC timestamp source, e.g. "2024-05-01T12:00:00.000Z".
using Clock = std::function<std::string()>;
std::string system_clock_iso8601();

/// Referential state needed to check new events against the log so far.
class LogIndex {
public:
    /// Throws SchemaError, ReferentialError or DuplicateError.
    void check(EventKind kind, const nlohmann::json &payload) const;
    void apply(const Event &event);

    const DecisionProblem *problem(std::string_view id) const;
    const Choice *choice(std::string_view id) const;

private:
    std::map<std::string, DecisionProblem, std::less<>> problems_;
    std::map<std::string, Choice, std::less<>> choices_;
    std::set<std::pair<std::string, std::string>> initial_by_pair_; // (agent, problem)
    std::set<std::pair<std::string, std::string>> revised_by_pair_;
};

/// Append-only, single-writer event log. Optionally backed by a JSON Lines
/// file; every append is written and flushed before it becomes visible.
class EventLog {
public:
    explicit EventLog(Clock clock = system_clock_iso8601);

    /// Opens (or creates) a file-backed log, replaying existing events. A
    /// torn trailing line is truncated away and reported in `warnings()`.
    /// Throws CorruptLog or StorageError.
    explicit EventLog(const std::filesystem::path &path, Clock clock = system_clock_iso8601);

    /// In-memory log holding `events`, validated by replay.
    static std::unique_ptr<EventLog> from_events(const std::vector<Event> &events,
                                                 Clock clock = system_clock_iso8601);

    EventLog(const EventLog &) = delete;
    EventLog &operator=(const EventLog &) = delete;

    /// Validates, stamps and appends; returns the new seq.
    std::uint64_t append(EventKind kind, nlohmann::json payload);

    std::vector<Event> events(const EventFilter &filter = {}) const;
    std::size_t size() const;
    const std::vector<std::string> &warnings() const noexcept { return warnings_; }
    std::optional<std::filesystem::path> path() const { return path_; }

    /// Runs `fn` with read access to the referential index.
    template <typename Fn> auto with_index(Fn &&fn) const {
        std::shared_lock lock(mutex_);
        return fn(index_);
    }

private:
    void replay(const std::vector<Event> &events);

    mutable std::shared_mutex mutex_;
    Clock clock_;
    std::vector<Event> events_;
    LogIndex index_;
    std::optional<std::filesystem::path> path_;
    std::ofstream out_;
    std::vector<std::string> warnings_;
};

/// Free-function spelling of EventLog::append.
std::uint64_t append_event(EventLog &log, EventKind kind, nlohmann::json payload);

struct LoadResult {
    std::vector<Event> events;
    std::vector<std::string> warnings;
    std::size_t valid_bytes = 0; // prefix length holding complete events
};

/// Parses JSON Lines history. With `tolerate_torn_tail` a final line lacking
/// its newline that does not parse is dropped with a warning; any other bad
/// line throws CorruptLog (or SchemaError for unknown kinds/versions),
/// naming the line number.
LoadResult parse_jsonl(std::string_view bytes, bool tolerate_torn_tail);

/// Reads a history file, filtered. A missing file reads as empty.
LoadResult load_events(const std::filesystem::path &path, const EventFilter &filter = {});

std::string export_jsonl(const std::vector<Event> &events);
std::string export_jsonl(const EventLog &log);
/// Strict import; throws SchemaError/CorruptLog naming the line.
std::unique_ptr<EventLog> import_jsonl(std::string_view bytes, Clock clock = system_clock_iso8601);

/// Relational projection of the event log (ontology tables).
struct RelationalSnapshot {
    struct AgentRow {
        std::string id;
        std::string display_name;
        std::map<std::string, std::string> profile;
        friend bool operator==(const AgentRow &, const AgentRow &) = default;
    };
    struct ProblemRow {
        std::string id;
        std::string statement;
        std::string currency;
        friend bool operator==(const ProblemRow &, const ProblemRow &) = default;
    };
    struct AlternativeRow {
        std::string problem_id;
        std::string alternative_id;
        std::string label;
        int position = 0;
        friend bool operator==(const AlternativeRow &, const AlternativeRow &) = default;
    };
    struct OutcomeRow {
        std::string problem_id;
        std::string alternative_id;
        int position = 0;
        std::int64_t amount_minor = 0;
        std::string probability_pct;
        friend bool operator==(const OutcomeRow &, const OutcomeRow &) = default;
    };
    struct ChoiceRow {
        std::string id;
        std::string session_id;
        std::string problem_id;
        std::string agent_id;
        std::string chosen_alternative_id;
        std::string phase;
        std::string timestamp;
        friend bool operator==(const ChoiceRow &, const ChoiceRow &) = default;
    };
    struct SessionRow {
        std::string session_id;
        std::string agent_id;
        std::string problem_id;
        std::string initial_choice_id;
        std::string final_choice_id; // mutable projection: follows ChoiceRevised
        friend bool operator==(const SessionRow &, const SessionRow &) = default;
    };
    struct ValueAscriptionRow {
        std::string assessment_choice_id;
        std::string alternative_id;
        std::string expected_value_minor;
        friend bool operator==(const ValueAscriptionRow &, const ValueAscriptionRow &) = default;
    };
    struct AssessmentRow {
        std::string choice_id;
        std::string problem_id;
        bool risk_seeking_for_losses = false;
        std::string fourfold_domain; // empty when no cell
        std::string fourfold_band;
        std::string predicted_preference;
        std::string mode;
        std::string unbiased_best_alternative_id;
        friend bool operator==(const AssessmentRow &, const AssessmentRow &) = default;
    };
    struct AwarenessRow {
        std::string choice_id;
        std::string session_id;
        std::string phase;
        std::map<std::string, int> ratings;
        int awareness_level = 0;
        friend bool operator==(const AwarenessRow &, const AwarenessRow &) = default;
    };
    struct AgreementRow {
        std::string choice_id;
        std::string session_id;
        int q1_bias_agreement = 0;
        int q2_insight_agreement = 0;
        friend bool operator==(const AgreementRow &, const AgreementRow &) = default;
    };

    std::vector<AgentRow> agent;
    std::vector<ProblemRow> decision_problem;
    std::vector<AlternativeRow> alternative;
    std::vector<OutcomeRow> outcome;
    std::vector<ChoiceRow> choice;
    std::vector<SessionRow> decision_session;
    std::vector<ValueAscriptionRow> rational_value_ascription;
    std::vector<AssessmentRow> risk_assessment;
    std::vector<AwarenessRow> awareness_measurement;
    std::vector<AgreementRow> agreement_response;

    friend bool operator==(const RelationalSnapshot &, const RelationalSnapshot &) = default;
};

RelationalSnapshot project_relational(const std::vector<Event> &events);
nlohmann::json to_json(const RelationalSnapshot &snapshot);

} // namespace abi_engine
