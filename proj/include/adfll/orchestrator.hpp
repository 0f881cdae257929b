#pragma once

// Discrete-event simulation of a hub-and-agent deployment.
//
// ASYNC_EVENT: every agent runs rounds back to back at its own speed; at the
// end of a round it uploads the round's ERB to its hub and pulls whatever it
// has not seen yet. Hubs reconcile on a fixed period.
//
// SYNC_LOCKSTEP: all active agents train, then all upload, then hubs sync,
// then all download; agents may join or leave between rounds.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "adfll/envsim.hpp"
#include "adfll/hubnet.hpp"
#include "adfll/learner.hpp"

namespace adfll {

struct AgentSpec {
    std::string agent_id;
    std::string hub_id;
    double speed = 1.0;
    // Lockstep: first active round (1-based) and first round no longer
    // active. Async: the agent joins at (join_round - 1) * base_round_time.
    std::optional<int> join_round;
    std::optional<int> leave_round;
    // Task for the agent's k-th round is task_schedule[k % size].
    std::vector<std::string> task_schedule;
};

struct HubEdge {
    std::string a;
    std::string b;
};

enum class SyncPolicyKind : std::uint8_t { EveryRound, Period };

struct SyncPolicy {
    SyncPolicyKind kind = SyncPolicyKind::EveryRound;
    int period = 1;
};

enum class SimMode : std::uint8_t { AsyncEvent, SyncLockstep };

std::string to_string(SimMode m);

struct EnvironmentTemplate {
    Dims dims{16, 16, 16};
    // Axial landmark shared by every environment; each orientation moves it.
    Voxel landmark{6, 9, 8};
    std::uint64_t seed = 11;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::vector<AgentSpec> agents;
    std::vector<std::string> hubs;
    std::vector<HubEdge> hub_edges;
    double dropout_p = 0.0;
    int rounds_to_complete = 3;
    SyncPolicy sync_policy;
    SimMode mode = SimMode::AsyncEvent;
    std::uint64_t seed = 1;
    double base_round_time = 1.0;
    // Transfer attempts per ERB within one agent or sync session.
    int max_transfer_attempts = 1;
    // Async only: agents past their quota keep training while unseen ERBs
    // keep arriving and some other agent is still below its quota.
    bool continue_on_new_erbs = true;
    bool eval_every_round = false;
    TrainConfig train;
    EnvironmentTemplate environment;
    std::vector<std::string> eval_tasks;
    EvalConfig eval;

    // Throws ConfigError.
    void validate() const;
};

// All 24 environments of the template, keyed by task id.
std::map<std::string, EnvSpec> environment_catalog(const EnvironmentTemplate& tmpl);
std::vector<std::string> all_task_ids();

enum class EventKind : std::uint8_t { RoundStart = 0, RoundEnd = 1, HubSync = 2, AgentJoin = 3, AgentLeave = 4, Eval = 5 };

std::string to_string(EventKind k);

struct SimEvent {
    double time = 0.0;
    EventKind kind = EventKind::RoundStart;
    std::string subject;
    // Rendered key=value details, including the payload digest.
    std::string detail;
};

struct RoundRecord {
    std::string agent_id;
    int round = 0;  // 0-based per agent
    int lockstep_round = 0;  // 1-based, lockstep only
    std::string task_id;
    double start_time = 0.0;
    double end_time = 0.0;
    ErbId erb = 0;
    std::set<ErbId> consumed;
    std::size_t incoming_count = 0;
    std::size_t personal_count = 0;
    // ERBs received by the download that followed this round.
    std::size_t downloaded = 0;
    // Tasks of every ERB the agent holds once that download is done.
    std::set<std::string> known_tasks;
};

struct EvalRecord {
    std::string agent_id;
    int round = 0;  // rounds the agent had completed
    int lockstep_round = 0;
    bool final = false;
    Evaluation evaluation;
};

struct LockstepRoundStats {
    int round = 0;
    std::size_t active_agents = 0;
    std::size_t agent_sessions = 0;
    std::size_t join_sessions = 0;
    std::size_t hub_sync_sessions = 0;
    std::size_t union_digest_size = 0;
    double mean_error = 0.0;
};

struct AgentSummary {
    std::string agent_id;
    std::string hub_id;
    int rounds_done = 0;
    // Ids of every ERB the agent trained on or produced, with their task.
    std::map<ErbId, std::string> known_erbs;
    std::set<ErbId> consumed;
    bool active = false;
};

struct SimulationResult {
    std::vector<SimEvent> events;
    std::vector<RoundRecord> rounds;
    std::vector<EvalRecord> evaluations;
    std::vector<LockstepRoundStats> lockstep;
    std::vector<HubDatabase> hubs;
    std::map<std::string, AgentSummary> agents;
    // Size of the union of all hub digests after every event.
    std::vector<std::size_t> union_digest_trace;
    std::map<std::string, QFunction> q_functions;

    [[nodiscard]] std::string event_log() const;
    [[nodiscard]] std::string metrics_csv() const;
    [[nodiscard]] const HubDatabase& hub(const std::string& id) const;
    [[nodiscard]] std::vector<const EvalRecord*> final_evaluations() const;
};

SimulationResult run_simulation(const ExperimentConfig& cfg);

// JSON experiment config. Unknown keys are rejected; absent keys keep their
// defaults. Throws ConfigError.
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(std::string_view text);

// Writes events.log, metrics.csv and hub_<id>.manifest into `dir`.
void write_outputs(const SimulationResult& result, const std::string& dir);

ExperimentConfig preset_deployment();
ExperimentConfig preset_addition();
ExperimentConfig preset_deletion();

// Lockstep population with `n` agents present in every round; used to check
// per-round session counts.
ExperimentConfig preset_population(int n, int rounds);

// Number of agents active in lockstep round `round` (1-based).
std::size_t active_agent_count(const ExperimentConfig& cfg, int round);

} // namespace adfll
