#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adfll/errors.hpp"
#include "adfll/orchestrator.hpp"

using namespace adfll;

namespace {

// Small training budget: these tests look at scheduling, not accuracy.
void shrink(ExperimentConfig& cfg) {
    cfg.train.episodes_per_round = 6;
    cfg.train.max_steps_per_episode = 30;
    cfg.eval.episodes_per_env = 2;
    cfg.eval.max_steps = 30;
}

ExperimentConfig single_agent() {
    ExperimentConfig cfg;
    cfg.name = "single";
    cfg.hubs = {"H1"};
    cfg.rounds_to_complete = 1;
    cfg.agents.push_back({"A1", "H1", 1.0, std::nullopt, std::nullopt, {"P0-S0-AXIAL"}});
    cfg.eval_tasks = {"P0-S0-AXIAL"};
    shrink(cfg);
    return cfg;
}

std::size_t count_kind(const SimulationResult& r, EventKind k, const std::string& subject = "") {
    return static_cast<std::size_t>(std::count_if(r.events.begin(), r.events.end(), [&](const SimEvent& e) {
        return e.kind == k && (subject.empty() || e.subject == subject);
    }));
}

const RoundRecord& round_of(const SimulationResult& r, const std::string& agent, int round) {
    for (const auto& rec : r.rounds)
        if (rec.agent_id == agent && rec.round == round) return rec;
    FAIL("missing round record");
    return r.rounds.front();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("minimal run: one round, one upload") {
    auto r = run_simulation(single_agent());
    CHECK(count_kind(r, EventKind::RoundStart) == 1);
    CHECK(count_kind(r, EventKind::RoundEnd) == 1);
    REQUIRE(r.rounds.size() == 1);
    CHECK(r.hub("H1").size() == 1);
    CHECK(r.hub("H1").contains(r.rounds[0].erb));
    CHECK(r.event_log().find("uploaded=1") != std::string::npos);
    REQUIRE(r.final_evaluations().size() == 1);
    CHECK(r.final_evaluations()[0]->round == 1);
}

TEST_CASE("events are processed in nondecreasing time") {
    auto cfg = preset_deployment();
    shrink(cfg);
    auto r = run_simulation(cfg);
    for (std::size_t i = 1; i < r.events.size(); ++i) CHECK(r.events[i - 1].time <= r.events[i].time);
}

TEST_CASE("heterogeneous speeds in the deployment topology") {
    auto cfg = preset_deployment();
    shrink(cfg);
    auto r = run_simulation(cfg);
    // A1, A2 run at speed 1; A3, A4 at speed 4.
    for (const char* fast : {"A3", "A4"})
        for (const char* slow : {"A1", "A2"}) {
            CHECK(round_of(r, fast, 2).end_time < round_of(r, slow, 2).end_time);
            CHECK(round_of(r, slow, 2).downloaded > round_of(r, fast, 2).downloaded);
        }
    for (const auto& [id, a] : r.agents) CHECK(a.rounds_done >= cfg.rounds_to_complete);
}

TEST_CASE("round trigger soundness") {
    auto cfg = preset_deployment();
    shrink(cfg);
    auto r = run_simulation(cfg);
    // Past the quota a new round needs at least one ERB it had not seen.
    for (const auto& rec : r.rounds) {
        if (rec.round < cfg.rounds_to_complete) continue;
        CHECK(rec.incoming_count > round_of(r, rec.agent_id, rec.round - 1).incoming_count);
    }

    SUBCASE("without continuation every agent stops at the quota") {
        cfg.continue_on_new_erbs = false;
        auto q = run_simulation(cfg);
        for (const auto& [id, a] : q.agents) CHECK(a.rounds_done == cfg.rounds_to_complete);
    }
}

TEST_CASE("deterministic replay") {
    auto cfg = preset_deployment();
    shrink(cfg);
    auto a = run_simulation(cfg);
    auto b = run_simulation(cfg);
    CHECK(a.event_log() == b.event_log());
    CHECK(a.metrics_csv() == b.metrics_csv());
    for (const auto& h : a.hubs) CHECK(render_manifest(h) == render_manifest(b.hub(h.hub_id())));

    namespace fs = std::filesystem;
    const auto base = fs::temp_directory_path() / "adfll_orch_det";
    fs::remove_all(base);
    write_outputs(a, (base / "a").string());
    write_outputs(b, (base / "b").string());
    for (const char* name : {"events.log", "metrics.csv", "hub_H1.manifest", "hub_H2.manifest", "hub_H3.manifest"})
        CHECK(slurp(base / "a" / name) == slurp(base / "b" / name));
    fs::remove_all(base);

    cfg.seed = 2;
    CHECK(run_simulation(cfg).metrics_csv() != a.metrics_csv());
}

TEST_CASE("union of hub digests never shrinks") {
    auto cfg = preset_deletion();
    shrink(cfg);
    cfg.eval_every_round = false;
    cfg.eval_tasks = {"P0-S0-AXIAL"};
    auto r = run_simulation(cfg);
    REQUIRE(!r.union_digest_trace.empty());
    CHECK(std::is_sorted(r.union_digest_trace.begin(), r.union_digest_trace.end()));
    // Departed agents' ERBs stay in the hubs.
    for (const auto& rec : r.rounds) {
        bool present = false;
        for (const auto& h : r.hubs) present = present || h.contains(rec.erb);
        CHECK(present);
    }
}

TEST_CASE("deployment preset") {
    auto cfg = preset_deployment();
    CHECK(cfg.hubs.size() == 3);
    CHECK(cfg.agents.size() == 4);
    CHECK(cfg.rounds_to_complete == 3);
    CHECK(cfg.dropout_p == 0.0);
    std::set<std::string> tasks;
    for (const auto& a : cfg.agents) tasks.insert(a.task_schedule.begin(), a.task_schedule.end());
    CHECK(tasks.size() == 8);
    CHECK(cfg.agents[0].hub_id == "H1");
    CHECK(cfg.agents[1].hub_id == "H2");
    CHECK(cfg.agents[2].hub_id == "H3");
    CHECK(cfg.agents[3].hub_id == "H3");
    // Within the first three rounds no two agents share a task.
    std::set<std::string> early;
    for (const auto& a : cfg.agents)
        for (int k = 0; k < 3; ++k) early.insert(a.task_schedule[static_cast<std::size_t>(k)]);
    CHECK(early.size() == 8);
    cfg.validate();
}

TEST_CASE("addition preset") {
    auto cfg = preset_addition();
    CHECK(cfg.dropout_p == 0.75);
    CHECK(cfg.eval_tasks.size() == 24);
    CHECK(cfg.mode == SimMode::SyncLockstep);
    const std::size_t expected[] = {4, 8, 12, 16};
    for (int r = 1; r <= 4; ++r) CHECK(active_agent_count(cfg, r) == expected[r - 1]);
    cfg.validate();
}

TEST_CASE("deletion preset") {
    auto cfg = preset_deletion();
    CHECK(cfg.dropout_p == 0.75);
    CHECK(cfg.eval_tasks.size() == 24);
    const std::size_t expected[] = {24, 12, 6, 3, 1};
    for (int r = 1; r <= 5; ++r) CHECK(active_agent_count(cfg, r) == expected[r - 1]);
    // The first round covers every environment once.
    std::set<std::string> first;
    for (const auto& a : cfg.agents) first.insert(a.task_schedule.front());
    CHECK(first.size() == 24);
    cfg.validate();
}

TEST_CASE("lockstep session counts") {
    auto cfg = preset_population(5, 2);
    shrink(cfg);
    auto r = run_simulation(cfg);
    REQUIRE(r.lockstep.size() == 2);
    for (const auto& s : r.lockstep) {
        CHECK(s.active_agents == 5);
        CHECK(s.agent_sessions == 5);
        CHECK(s.hub_sync_sessions == cfg.hub_edges.size());
        CHECK(s.join_sessions == 0);
    }
}

TEST_CASE("lockstep joiners download the backlog") {
    auto cfg = preset_addition();
    shrink(cfg);
    cfg.eval_tasks = {"P0-S0-AXIAL"};
    cfg.rounds_to_complete = 2;
    auto r = run_simulation(cfg);
    REQUIRE(r.lockstep.size() == 2);
    CHECK(r.lockstep[1].join_sessions == 4);
    CHECK(r.lockstep[1].active_agents == 8);
    for (int i = 5; i <= 8; ++i) {
        const auto& rec = round_of(r, "A" + std::to_string(i), 0);
        CHECK(rec.lockstep_round == 2);
        CHECK(rec.incoming_count > 0);
    }
}

TEST_CASE("json config round-trip") {
    for (auto cfg : {preset_deployment(), preset_addition(), preset_deletion()}) {
        const std::string text = config_to_json(cfg);
        auto back = config_from_json(text);
        CHECK(config_to_json(back) == text);
    }
}

TEST_CASE("config validation") {
    auto bad = single_agent();
    SUBCASE("unknown hub") {
        bad.agents[0].hub_id = "H9";
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
    SUBCASE("unresolvable task") {
        bad.agents[0].task_schedule = {"P7-S0-AXIAL"};
        CHECK_THROWS_AS(run_simulation(bad), ConfigError);
    }
    SUBCASE("join after leave") {
        bad.agents[0].join_round = 3;
        bad.agents[0].leave_round = 2;
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
    SUBCASE("non-positive speed") {
        bad.agents[0].speed = 0.0;
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
    SUBCASE("dropout out of range") {
        bad.dropout_p = 1.5;
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
    SUBCASE("unknown json key") {
        CHECK_THROWS_AS(config_from_json(R"({"name": "x", "bogus": 1})"), ConfigError);
    }
    SUBCASE("malformed json") {
        CHECK_THROWS_AS(config_from_json("{"), ConfigError);
    }
}
