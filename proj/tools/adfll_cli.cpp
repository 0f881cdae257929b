// Command-line front end: simulate, presets, networked roles, reports.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "adfll/bench.hpp"
#include "adfll/errors.hpp"
#include "adfll/net.hpp"
#include "adfll/orchestrator.hpp"

using namespace adfll;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

ExperimentConfig load_config(const std::string& path) { return config_from_json(slurp(path)); }

ExperimentConfig preset_by_name(const std::string& name) {
    if (name == "deployment") return preset_deployment();
    if (name == "addition") return preset_addition();
    if (name == "deletion") return preset_deletion();
    throw ConfigError("unknown preset " + name);
}

std::vector<Endpoint> parse_peers(const std::vector<std::string>& items) {
    std::vector<Endpoint> out;
    for (const auto& item : items) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ','))
            if (!part.empty()) out.push_back(parse_endpoint(part));
    }
    return out;
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out,
                 bool baselines) {
    ExperimentConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    SimulationResult result = run_simulation(cfg);
    write_outputs(result, out);
    if (baselines) {
        if (cfg.eval_tasks.empty()) throw ConfigError("baselines need an evaluation suite");
        std::ofstream f(std::filesystem::path(out) / "metrics.csv", std::ios::binary | std::ios::app);
        for (auto kind : {BaselineKind::AllKnowing, BaselineKind::Partial, BaselineKind::SequentialLL}) {
            Pcg32 rng = derive_rng(cfg.seed, "baseline/" + to_string(kind));
            std::vector<std::string> tasks = cfg.eval_tasks;
            if (kind == BaselineKind::Partial) tasks.resize(1);
            f << baseline_metrics_rows(run_baseline(kind, tasks, cfg.train, rng, cfg));
        }
    }
    std::cout << "events: " << result.events.size() << ", rounds: " << result.rounds.size() << ", outputs in " << out
              << "\n";
    for (const auto* ev : result.final_evaluations())
        std::cout << ev->agent_id << " mean error " << ev->evaluation.overall_mean() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated lifelong landmark-localization simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    bool baselines = false;
    auto* sim = app.add_subcommand("simulate", "Run a discrete-event experiment");
    sim->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sim->add_option("--seed", seed, "Override the config seed");
    sim->add_option("--out", out_dir, "Output directory")->required();
    sim->add_flag("--baselines", baselines, "Also train X/Y/M reference agents into metrics.csv");

    std::string preset_name, preset_out;
    auto* preset = app.add_subcommand("preset", "Write a preset experiment config");
    preset->add_option("name", preset_name, "deployment | addition | deletion")
        ->required()
        ->check(CLI::IsMember({"deployment", "addition", "deletion"}));
    preset->add_option("--out", preset_out, "Destination file (stdout when omitted)");

    std::string listen = "127.0.0.1:7000", hub_id = "H1", manifest_path, hub_config;
    std::vector<std::string> peers;
    int sync_ms = 0;
    double dropout = 0.0;
    auto* hub = app.add_subcommand("serve-hub", "Serve a hub over TCP until SIGINT/SIGTERM");
    hub->add_option("--listen", listen, "host:port to bind");
    hub->add_option("--peers", peers, "Peer hubs, host:port (comma separated or repeated)");
    hub->add_option("--id", hub_id, "Hub id");
    hub->add_option("--sync-interval-ms", sync_ms, "Peer sync period; 0 syncs only at shutdown");
    hub->add_option("--dropout", dropout, "Per-transfer drop probability")->check(CLI::Range(0.0, 1.0));
    hub->add_option("--manifest", manifest_path, "Write the database manifest here on shutdown");
    hub->add_option("--config", hub_config, "Experiment config (sets seed and observation length)");

    std::string agent_hub, agent_config, agent_id, agent_out;
    int connect_attempts = 8;
    auto* agent = app.add_subcommand("agent", "Run one agent's schedule against a hub");
    agent->add_option("--hub", agent_hub, "Hub host:port")->required();
    agent->add_option("--config", agent_config, "JSON experiment config")->required()->check(CLI::ExistingFile);
    agent->add_option("--agent-id", agent_id, "Agent to run (first in the config when omitted)");
    agent->add_option("--out", agent_out, "Directory for metrics.csv");
    agent->add_option("--connect-attempts", connect_attempts, "Connection attempts before giving up");

    std::string report_in, report_csv;
    auto* report = app.add_subcommand("report", "Build comparison tables from a simulate output directory");
    report->add_option("--in", report_in, "Directory holding metrics.csv")->required()->check(CLI::ExistingDirectory);
    report->add_option("--csv", report_csv, "Path of the agent-by-task table")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return cmd_simulate(config_path, seed, out_dir, baselines);
        if (*preset) {
            const std::string json = config_to_json(preset_by_name(preset_name));
            if (preset_out.empty()) {
                std::cout << json;
            } else {
                std::ofstream f(preset_out, std::ios::binary);
                if (!f) throw ConfigError("cannot write " + preset_out);
                f << json;
            }
            return 0;
        }
        if (*hub) {
            NetworkedOptions opt;
            opt.hub.hub_id = hub_id;
            opt.hub.listen = parse_endpoint(listen);
            opt.hub.peers = parse_peers(peers);
            opt.hub.dropout_p = dropout;
            opt.hub.sync_interval = std::chrono::milliseconds(sync_ms);
            opt.manifest_path = manifest_path;
            opt.stop_flag = &g_stop;
            ExperimentConfig cfg;
            if (!hub_config.empty()) {
                cfg = load_config(hub_config);
                opt.hub.seed = cfg.seed;
                opt.hub.patch_length = cfg.train.observation_length();
            }
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            return run_networked(NetRole::Hub, opt, cfg);
        }
        if (*agent) {
            ExperimentConfig cfg = load_config(agent_config);
            NetworkedOptions opt;
            opt.agent.agent_id = agent_id.empty() ? cfg.agents.front().agent_id : agent_id;
            opt.agent.hub = parse_endpoint(agent_hub);
            opt.agent.out_dir = agent_out;
            opt.agent.connect_attempts = connect_attempts;
            return run_networked(NetRole::Agent, opt, cfg);
        }
        if (*report) {
            auto rep = report_from_metrics(slurp((std::filesystem::path(report_in) / "metrics.csv").string()));
            write_report(rep, report_csv);
            std::cout << rep.table_csv();
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
