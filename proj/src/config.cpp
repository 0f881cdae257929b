// JSON form of ExperimentConfig.

#include <initializer_list>

#include <json.hpp>

#include "adfll/errors.hpp"
#include "adfll/orchestrator.hpp"

namespace adfll {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(std::string("unknown key '") + key + "' in " + where);
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (auto it = obj.find(key); it != obj.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
        }
    }
}

json voxel_json(Voxel v) { return json::array({v.x, v.y, v.z}); }

Voxel voxel_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be a 3-element array");
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

json train_json(const TrainConfig& t) {
    return {{"backend", to_string(t.backend)},
            {"alpha", t.alpha},
            {"gamma", t.gamma},
            {"epsilon_start", t.epsilon_start},
            {"epsilon_end", t.epsilon_end},
            {"episodes_per_round", t.episodes_per_round},
            {"max_steps_per_episode", t.max_steps_per_episode},
            {"batch_size", t.batch_size},
            {"updates_per_step", t.updates_per_step},
            {"mix", json::array({t.mix.current, t.mix.personal, t.mix.incoming})},
            {"erb_capacity", t.erb_capacity},
            {"history", t.history},
            {"half_extent", t.half_extent}};
}

TrainConfig train_from(const json& j) {
    reject_unknown(j, "train",
                   {"backend", "alpha", "gamma", "epsilon_start", "epsilon_end", "episodes_per_round",
                    "max_steps_per_episode", "batch_size", "updates_per_step", "mix", "erb_capacity", "history",
                    "half_extent"});
    TrainConfig t;
    if (j.contains("backend")) t.backend = parse_backend(j["backend"].get<std::string>());
    read(j, "alpha", t.alpha);
    read(j, "gamma", t.gamma);
    read(j, "epsilon_start", t.epsilon_start);
    read(j, "epsilon_end", t.epsilon_end);
    read(j, "episodes_per_round", t.episodes_per_round);
    read(j, "max_steps_per_episode", t.max_steps_per_episode);
    read(j, "batch_size", t.batch_size);
    read(j, "updates_per_step", t.updates_per_step);
    read(j, "erb_capacity", t.erb_capacity);
    read(j, "history", t.history);
    read(j, "half_extent", t.half_extent);
    if (j.contains("mix")) {
        const auto& m = j["mix"];
        if (!m.is_array() || m.size() != 3) throw ConfigError("train.mix must be [current, personal, incoming]");
        t.mix = {m[0].get<double>(), m[1].get<double>(), m[2].get<double>()};
    }
    return t;
}

} // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
    json agents = json::array();
    for (const auto& a : cfg.agents) {
        json j = {{"agent_id", a.agent_id}, {"hub_id", a.hub_id}, {"speed", a.speed}, {"task_schedule", a.task_schedule}};
        if (a.join_round) j["join_round"] = *a.join_round;
        if (a.leave_round) j["leave_round"] = *a.leave_round;
        agents.push_back(std::move(j));
    }
    json edges = json::array();
    for (const auto& e : cfg.hub_edges) edges.push_back(json::array({e.a, e.b}));
    json sync = cfg.sync_policy.kind == SyncPolicyKind::EveryRound
                    ? json{{"kind", "EVERY_ROUND"}}
                    : json{{"kind", "PERIOD"}, {"period", cfg.sync_policy.period}};
    json j = {
        {"name", cfg.name},
        {"mode", to_string(cfg.mode)},
        {"seed", cfg.seed},
        {"agents", agents},
        {"hubs", cfg.hubs},
        {"hub_edges", edges},
        {"dropout_p", cfg.dropout_p},
        {"rounds_to_complete", cfg.rounds_to_complete},
        {"sync_policy", sync},
        {"base_round_time", cfg.base_round_time},
        {"max_transfer_attempts", cfg.max_transfer_attempts},
        {"continue_on_new_erbs", cfg.continue_on_new_erbs},
        {"eval_every_round", cfg.eval_every_round},
        {"train", train_json(cfg.train)},
        {"environment",
         {{"dims", json::array({cfg.environment.dims.x, cfg.environment.dims.y, cfg.environment.dims.z})},
          {"landmark", voxel_json(cfg.environment.landmark)},
          {"seed", cfg.environment.seed}}},
        {"evaluation",
         {{"tasks", cfg.eval_tasks},
          {"episodes_per_env", cfg.eval.episodes_per_env},
          {"max_steps", cfg.eval.max_steps},
          {"seed", cfg.eval.seed}}},
    };
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, "config",
                   {"name", "mode", "seed", "agents", "hubs", "hub_edges", "dropout_p", "rounds_to_complete",
                    "sync_policy", "base_round_time", "max_transfer_attempts", "continue_on_new_erbs",
                    "eval_every_round", "train", "environment", "evaluation"});
    ExperimentConfig cfg;
    try {
        read(j, "name", cfg.name);
        if (j.contains("mode")) {
            auto m = j["mode"].get<std::string>();
            if (m == "ASYNC_EVENT")
                cfg.mode = SimMode::AsyncEvent;
            else if (m == "SYNC_LOCKSTEP")
                cfg.mode = SimMode::SyncLockstep;
            else
                throw ConfigError("unknown mode " + m);
        }
        read(j, "seed", cfg.seed);
        read(j, "hubs", cfg.hubs);
        read(j, "dropout_p", cfg.dropout_p);
        read(j, "rounds_to_complete", cfg.rounds_to_complete);
        read(j, "base_round_time", cfg.base_round_time);
        read(j, "max_transfer_attempts", cfg.max_transfer_attempts);
        read(j, "continue_on_new_erbs", cfg.continue_on_new_erbs);
        read(j, "eval_every_round", cfg.eval_every_round);
        if (j.contains("hub_edges")) {
            for (const auto& e : j["hub_edges"]) {
                if (!e.is_array() || e.size() != 2) throw ConfigError("hub edge must be a pair of hub ids");
                cfg.hub_edges.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
            }
        }
        if (j.contains("sync_policy")) {
            const auto& s = j["sync_policy"];
            reject_unknown(s, "sync_policy", {"kind", "period"});
            auto kind = s.value("kind", std::string("EVERY_ROUND"));
            if (kind == "EVERY_ROUND")
                cfg.sync_policy = {SyncPolicyKind::EveryRound, 1};
            else if (kind == "PERIOD")
                cfg.sync_policy = {SyncPolicyKind::Period, s.value("period", 1)};
            else
                throw ConfigError("unknown sync policy " + kind);
        }
        if (j.contains("agents")) {
            for (const auto& a : j["agents"]) {
                reject_unknown(a, "agent", {"agent_id", "hub_id", "speed", "join_round", "leave_round", "task_schedule"});
                AgentSpec spec;
                read(a, "agent_id", spec.agent_id);
                read(a, "hub_id", spec.hub_id);
                read(a, "speed", spec.speed);
                read(a, "task_schedule", spec.task_schedule);
                if (a.contains("join_round")) spec.join_round = a["join_round"].get<int>();
                if (a.contains("leave_round")) spec.leave_round = a["leave_round"].get<int>();
                cfg.agents.push_back(std::move(spec));
            }
        }
        if (j.contains("train")) cfg.train = train_from(j["train"]);
        if (j.contains("environment")) {
            const auto& e = j["environment"];
            reject_unknown(e, "environment", {"dims", "landmark", "seed"});
            if (e.contains("dims")) {
                Voxel d = voxel_from(e["dims"], "environment.dims");
                cfg.environment.dims = {d.x, d.y, d.z};
            }
            if (e.contains("landmark")) cfg.environment.landmark = voxel_from(e["landmark"], "environment.landmark");
            read(e, "seed", cfg.environment.seed);
        }
        if (j.contains("evaluation")) {
            const auto& e = j["evaluation"];
            reject_unknown(e, "evaluation", {"tasks", "episodes_per_env", "max_steps", "seed"});
            read(e, "tasks", cfg.eval_tasks);
            read(e, "episodes_per_env", cfg.eval.episodes_per_env);
            read(e, "max_steps", cfg.eval.max_steps);
            read(e, "seed", cfg.eval.seed);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

} // namespace adfll
