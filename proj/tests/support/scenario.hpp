#pragma once

// Drives the service through random but legal session histories.

#include <random>
#include <string>

#include "abi/service.hpp"
#include "oracles.hpp"

namespace scenario {

/// Deterministic clock: one millisecond per call from a fixed epoch.
inline abi_engine::Clock counting_clock() {
    auto tick = std::make_shared<long>(0);
    return [tick]() {
        long t = (*tick)++;
        char buf[32];
        std::snprintf(buf, sizeof buf, "2024-05-01T%02ld:%02ld:%02ld.%03ldZ", (t / 3600000) % 24, (t / 60000) % 60,
                      (t / 1000) % 60, t % 1000);
        return std::string(buf);
    };
}

inline nlohmann::json ratings_body(std::mt19937_64 &rng, const abi_engine::DecisionProblem &p) {
    std::uniform_int_distribution<int> score(0, 10);
    nlohmann::json r;
    for (const auto &alt : p.alternatives) r[alt.id] = score(rng);
    return {{"ratings", r}};
}

/// Appends `sessions` random sessions over `problems` fresh random problems.
/// Every session stops at a random state; all calls are legal.
inline void random_history(std::mt19937_64 &rng, abi_engine::AbiService &service, int problems, int sessions,
                           const std::string &prefix = "") {
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> likert(1, 5);
    std::uniform_int_distribution<int> stop(0, 6);
    std::vector<abi_engine::DecisionProblem> created;
    for (int i = 0; i < problems; ++i) {
        abi_engine::DecisionProblem p;
        do {
            p = oracle::random_problem(rng, prefix + "p" + std::to_string(i));
        } while (!abi_engine::check_problem(p).empty());
        service.create_problem(abi_engine::problem_to_json(p));
        created.push_back(p);
    }
    for (int s = 0; s < sessions; ++s) {
        const auto &p = created[std::uniform_int_distribution<std::size_t>(0, created.size() - 1)(rng)];
        auto opened = service.create_session(
            {{"agent_id", prefix + "agent-" + std::to_string(s)}, {"problem_id", p.id}, {"display_name", "A"}});
        const std::string id = opened.body.at("session_id");
        int steps = stop(rng);
        if (steps-- == 0) continue;
        service.make_choice(id, {{"alternative_id", p.alternatives[coin(rng)].id}});
        if (steps-- == 0) continue;
        auto rated = service.record_ratings(id, ratings_body(rng, p));
        if (rated.body.at("state") == "completed" || steps-- == 0) continue;
        service.acknowledge(id);
        if (steps-- == 0) continue;
        service.record_agreement(id, {{"q1", likert(rng)}, {"q2", likert(rng)}});
        if (steps-- == 0) continue;
        service.record_ratings(id, ratings_body(rng, p));
        if (steps-- == 0) continue;
        if (coin(rng)) {
            service.revise(id, {{"confirm", true}});
        } else {
            service.revise(id, {{"alternative_id", p.alternatives[coin(rng)].id}});
        }
    }
}

} // namespace scenario
