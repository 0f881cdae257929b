#include "adfll/orchestrator.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>
#include <tuple>

#include "adfll/errors.hpp"
#include "adfll/hash.hpp"

namespace adfll {

std::string to_string(SimMode m) {
    return m == SimMode::AsyncEvent ? "ASYNC_EVENT" : "SYNC_LOCKSTEP";
}

std::string to_string(EventKind k) {
    switch (k) {
    case EventKind::RoundStart: return "ROUND_START";
    case EventKind::RoundEnd: return "ROUND_END";
    case EventKind::HubSync: return "HUB_SYNC";
    case EventKind::AgentJoin: return "AGENT_JOIN";
    case EventKind::AgentLeave: return "AGENT_LEAVE";
    case EventKind::Eval: return "EVAL";
    }
    return "UNKNOWN";
}

std::vector<std::string> all_task_ids() {
    std::vector<std::string> ids;
    for (auto p : {Pathology::P0, Pathology::P1})
        for (auto s : {Sequence::S0, Sequence::S1, Sequence::S2, Sequence::S3})
            for (auto o : {Orientation::Axial, Orientation::Sagittal, Orientation::Coronal})
                ids.push_back(task_id(p, s, o));
    return ids;
}

std::map<std::string, EnvSpec> environment_catalog(const EnvironmentTemplate& tmpl) {
    std::map<std::string, EnvSpec> out;
    for (const auto& id : all_task_ids()) {
        TaskKey key = parse_task_id(id);
        EnvSpec spec;
        spec.dims = tmpl.dims;
        spec.pathology = key.pathology;
        spec.sequence = key.sequence;
        spec.orientation = key.orientation;
        spec.landmark = tmpl.landmark;
        spec.seed = tmpl.seed;
        out.emplace(id, spec);
    }
    return out;
}

void ExperimentConfig::validate() const {
    if (agents.empty()) throw ConfigError("experiment has no agents");
    if (hubs.empty()) throw ConfigError("experiment has no hubs");
    std::set<std::string> hub_set(hubs.begin(), hubs.end());
    if (hub_set.size() != hubs.size()) throw ConfigError("duplicate hub id");
    for (const auto& e : hub_edges) {
        if (!hub_set.contains(e.a) || !hub_set.contains(e.b))
            throw ConfigError("hub edge references unknown hub " + e.a + "-" + e.b);
        if (e.a == e.b) throw ConfigError("hub edge is a self-loop: " + e.a);
    }
    if (!(dropout_p >= 0.0 && dropout_p <= 1.0)) throw ConfigError("dropout_p must lie in [0, 1]");
    if (rounds_to_complete < 1) throw ConfigError("rounds_to_complete must be positive");
    if (sync_policy.period < 1) throw ConfigError("sync period must be positive");
    if (!(base_round_time > 0.0)) throw ConfigError("base_round_time must be positive");
    if (max_transfer_attempts < 1) throw ConfigError("max_transfer_attempts must be positive");
    train.validate();
    if (eval.episodes_per_env < 1 || eval.max_steps < 1) throw ConfigError("evaluation budget must be positive");

    auto catalog = all_task_ids();
    std::set<std::string> known(catalog.begin(), catalog.end());
    auto check_task = [&](const std::string& id) {
        if (!known.contains(id)) throw ConfigError("unresolvable task_id: " + id);
    };
    for (const auto& id : eval_tasks) check_task(id);

    std::set<std::string> agent_ids;
    for (const auto& a : agents) {
        if (a.agent_id.empty()) throw ConfigError("empty agent id");
        if (!agent_ids.insert(a.agent_id).second) throw ConfigError("duplicate agent id " + a.agent_id);
        if (!hub_set.contains(a.hub_id)) throw ConfigError("agent " + a.agent_id + " references unknown hub " + a.hub_id);
        if (!(a.speed > 0.0)) throw ConfigError("agent " + a.agent_id + " speed must be positive");
        if (a.join_round && *a.join_round < 1) throw ConfigError("join_round is 1-based");
        if (a.join_round && a.leave_round && *a.join_round >= *a.leave_round)
            throw ConfigError("agent " + a.agent_id + " leaves before it joins");
        if (a.task_schedule.empty()) throw ConfigError("agent " + a.agent_id + " has an empty task schedule");
        for (const auto& id : a.task_schedule) check_task(id);
    }
    // The environment template must be valid for every task it serves.
    for (const auto& [id, spec] : environment_catalog(environment)) make_environment(spec);
}

std::size_t active_agent_count(const ExperimentConfig& cfg, int round) {
    std::size_t n = 0;
    for (const auto& a : cfg.agents) {
        int join = a.join_round.value_or(1);
        if (round >= join && (!a.leave_round || round < *a.leave_round)) ++n;
    }
    return n;
}

namespace {

struct Agent {
    AgentSpec spec;
    QFunction qf;
    Pcg32 train_rng;
    Pcg32 net_rng;
    std::vector<PublishedErb> personal;
    std::vector<PublishedErb> incoming;
    std::map<ErbId, std::string> known;
    std::set<ErbId> consumed;
    int rounds_done = 0;
    bool active = false;
    bool busy = false;
    bool left = false;
    std::optional<RoundResult> pending;
    std::size_t pending_record = 0;
};

struct QueuedEvent {
    double time;
    EventKind kind;
    std::string subject;
    std::uint64_t seq;

    bool operator>(const QueuedEvent& o) const {
        return std::tie(time, kind, subject, seq) > std::tie(o.time, o.kind, o.subject, o.seq);
    }
};

std::string fmt_time(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", t);
    return buf;
}

std::string fmt_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

class Simulator {
public:
    explicit Simulator(const ExperimentConfig& cfg) : cfg_(cfg), sync_rng_(derive_rng(cfg.seed, "hub-sync")) {
        cfg_.validate();
        catalog_ = environment_catalog(cfg_.environment);
        for (const auto& h : cfg_.hubs) {
            hub_index_[h] = result_.hubs.size();
            result_.hubs.emplace_back(h);
        }
        for (const auto& spec : cfg_.agents) {
            Agent a{spec,
                    QFunction::make(cfg_.train.backend, cfg_.train.observation_length()),
                    derive_rng(cfg_.seed, "train/" + spec.agent_id),
                    derive_rng(cfg_.seed, "net/" + spec.agent_id),
                    {}, {}, {}, {}, 0, false, false, false, {}, 0};
            agents_.emplace(spec.agent_id, std::move(a));
            order_.push_back(spec.agent_id);
        }
        for (const auto& id : cfg_.eval_tasks) eval_envs_.push_back(&env(id));
    }

    SimulationResult run() {
        if (cfg_.mode == SimMode::AsyncEvent)
            run_async();
        else
            run_lockstep();
        final_evaluation();
        for (auto& [id, a] : agents_) {
            AgentSummary s;
            s.agent_id = id;
            s.hub_id = a.spec.hub_id;
            s.rounds_done = a.rounds_done;
            s.known_erbs = a.known;
            s.consumed = a.consumed;
            s.active = a.active;
            result_.agents.emplace(id, std::move(s));
            result_.q_functions.emplace(id, a.qf);
        }
        return std::move(result_);
    }

private:
    const TaskEnvironment& env(const std::string& id) {
        auto it = envs_.find(id);
        if (it == envs_.end()) {
            auto spec = catalog_.find(id);
            if (spec == catalog_.end()) throw ConfigError("unresolvable task_id: " + id);
            it = envs_.emplace(id, make_environment(spec->second)).first;
        }
        return it->second;
    }

    HubDatabase& hub_of(const Agent& a) { return result_.hubs[hub_index_.at(a.spec.hub_id)]; }

    void log(double t, EventKind kind, const std::string& subject, const std::string& detail) {
        result_.events.push_back({t, kind, subject, detail});
        trace_union();
    }

    void trace_union() {
        std::set<ErbId> all;
        for (const auto& h : result_.hubs)
            for (const auto& [id, rec] : h.records()) all.insert(id);
        result_.union_digest_trace.push_back(all.size());
    }

    // Retries the upload until it lands or the attempt budget runs out.
    bool upload_session(Agent& a, const PublishedErb& erb) {
        HubDatabase& hub = hub_of(a);
        for (int attempt = 0; attempt < cfg_.max_transfer_attempts; ++attempt) {
            if (!upload(hub, erb, cfg_.dropout_p, a.net_rng).delivered.empty()) return true;
        }
        return false;
    }

    // Pulls unseen ERBs, retrying dropped ones within the attempt budget.
    std::size_t download_session(Agent& a) {
        HubDatabase& hub = hub_of(a);
        std::size_t received = 0;
        for (int attempt = 0; attempt < cfg_.max_transfer_attempts; ++attempt) {
            auto res = download_new(hub, a.spec.agent_id, true, cfg_.dropout_p, a.net_rng);
            for (auto& erb : res.erbs) {
                a.known.emplace(erb.id, erb.meta().task_id);
                a.incoming.push_back(std::move(erb));
                ++received;
            }
            if (res.outcome.dropped.empty()) break;
        }
        return received;
    }

    std::size_t sync_session(HubDatabase& x, HubDatabase& y) {
        std::size_t moved = 0;
        for (int attempt = 0; attempt < cfg_.max_transfer_attempts; ++attempt) {
            auto [into_x, into_y] = hub_sync(x, y, cfg_.dropout_p, sync_rng_);
            moved += into_x.delivered.size() + into_y.delivered.size();
            if (into_x.dropped.empty() && into_y.dropped.empty()) break;
        }
        return moved;
    }

    std::size_t sync_all(double t) {
        std::size_t sessions = 0;
        for (const auto& e : cfg_.hub_edges) {
            auto& x = result_.hubs[hub_index_.at(e.a)];
            auto& y = result_.hubs[hub_index_.at(e.b)];
            std::size_t moved = sync_session(x, y);
            ++sessions;
            log(t, EventKind::HubSync, e.a + "|" + e.b,
                "moved=" + std::to_string(moved) + " digest_a=" + erb_id_hex(digest_hash(db_digest(x))) +
                    " digest_b=" + erb_id_hex(digest_hash(db_digest(y))));
        }
        return sessions;
    }

    const std::string& task_for(const Agent& a) const {
        return a.spec.task_schedule[static_cast<std::size_t>(a.rounds_done) % a.spec.task_schedule.size()];
    }

    void start_round(Agent& a, double t, int lockstep_round) {
        const std::string& task = task_for(a);
        ErbMeta meta{a.spec.agent_id, task, static_cast<std::uint32_t>(a.rounds_done), 0};
        RoundResult rr = train_round(a.qf, env(task), a.personal, a.incoming, cfg_.train, a.train_rng, meta);
        a.consumed.insert(rr.consumed_erb_ids.begin(), rr.consumed_erb_ids.end());

        RoundRecord rec;
        rec.agent_id = a.spec.agent_id;
        rec.round = a.rounds_done;
        rec.lockstep_round = lockstep_round;
        rec.task_id = task;
        rec.start_time = t;
        rec.consumed = rr.consumed_erb_ids;
        rec.incoming_count = a.incoming.size();
        rec.personal_count = a.personal.size();
        a.pending_record = result_.rounds.size();
        result_.rounds.push_back(rec);

        a.pending = std::move(rr);
        a.busy = true;
        log(t, EventKind::RoundStart, a.spec.agent_id,
            "round=" + std::to_string(a.rounds_done) + " task=" + task + " incoming=" +
                std::to_string(a.incoming.size()) + " personal=" + std::to_string(a.personal.size()));
    }

    // Finishes training bookkeeping and uploads; returns the log detail.
    std::string end_round(Agent& a, double t) {
        PublishedErb erb = PublishedErb::publish(std::move(a.pending->published_erb));
        a.pending.reset();
        a.busy = false;
        a.personal.push_back(erb);
        a.known.emplace(erb.id, erb.meta().task_id);
        RoundRecord& rec = result_.rounds[a.pending_record];
        rec.end_time = t;
        rec.erb = erb.id;
        ++a.rounds_done;
        bool stored = upload_session(a, erb);
        return "round=" + std::to_string(rec.round) + " erb=" + erb_id_hex(erb.id) +
               " uploaded=" + (stored ? "1" : "0");
    }

    void finish_download(Agent& a, double t, const std::string& detail) {
        std::size_t got = download_session(a);
        RoundRecord& rec = result_.rounds[a.pending_record];
        rec.downloaded = got;
        for (const auto& [id, task] : a.known) rec.known_tasks.insert(task);
        log(t, EventKind::RoundEnd, a.spec.agent_id,
            detail + " download=" + std::to_string(got) + " incoming=" + std::to_string(a.incoming.size()));
    }

    void evaluate_agent(Agent& a, double t, int lockstep_round, bool final) {
        if (eval_envs_.empty()) return;
        Evaluation ev = evaluate(a.qf, eval_envs_, cfg_.eval, cfg_.train);
        log(t, EventKind::Eval, a.spec.agent_id,
            std::string(final ? "final" : "round") + " rounds=" + std::to_string(a.rounds_done) +
                " mean=" + fmt_real(ev.overall_mean()) + " starts=" + erb_id_hex(ev.start_digest));
        result_.evaluations.push_back({a.spec.agent_id, a.rounds_done, lockstep_round, final, std::move(ev)});
    }

    void final_evaluation() {
        double t = result_.events.empty() ? 0.0 : result_.events.back().time;
        for (const auto& id : order_) {
            Agent& a = agents_.at(id);
            if (a.rounds_done == 0 || a.left) continue;
            const EvalRecord* latest = nullptr;
            for (const auto& rec : result_.evaluations)
                if (rec.agent_id == id) latest = &rec;
            if (latest && latest->round == a.rounds_done) {
                EvalRecord copy = *latest;
                copy.final = true;
                log(t, EventKind::Eval, id,
                    "final rounds=" + std::to_string(a.rounds_done) + " mean=" +
                        fmt_real(copy.evaluation.overall_mean()) + " starts=" + erb_id_hex(copy.evaluation.start_digest));
                result_.evaluations.push_back(std::move(copy));
            } else {
                evaluate_agent(a, t, last_lockstep_round_, true);
            }
        }
    }

    // ---- asynchronous mode ----

    void push(double t, EventKind k, const std::string& subject) { queue_.push({t, k, subject, seq_++}); }

    bool others_unfinished(const Agent& self) const {
        for (const auto& [id, a] : agents_) {
            if (id == self.spec.agent_id || a.left) continue;
            if (a.rounds_done < cfg_.rounds_to_complete) return true;
        }
        return false;
    }

    bool work_remaining() const {
        for (const auto& [id, a] : agents_) {
            if (a.left) continue;
            if (a.busy || a.rounds_done < cfg_.rounds_to_complete) return true;
        }
        return false;
    }

    // Decides whether an agent that just received `fresh` ERBs trains again.
    void maybe_continue(Agent& a, double t, std::size_t fresh) {
        if (!a.active || a.busy) return;
        if (a.rounds_done < cfg_.rounds_to_complete) {
            push(t, EventKind::RoundStart, a.spec.agent_id);
            a.busy = true;  // reserved until the queued start fires
            return;
        }
        if (cfg_.continue_on_new_erbs && fresh > 0 && others_unfinished(a)) {
            push(t, EventKind::RoundStart, a.spec.agent_id);
            a.busy = true;
        }
    }

    void run_async() {
        const double base = cfg_.base_round_time;
        for (const auto& id : order_) {
            const auto& spec = agents_.at(id).spec;
            push((spec.join_round.value_or(1) - 1) * base, EventKind::AgentJoin, id);
            if (spec.leave_round) push((*spec.leave_round - 1) * base, EventKind::AgentLeave, id);
        }
        const double period = base * (cfg_.sync_policy.kind == SyncPolicyKind::Period ? cfg_.sync_policy.period : 1);
        push(period, EventKind::HubSync, "*");

        while (!queue_.empty()) {
            QueuedEvent ev = queue_.top();
            queue_.pop();
            Agent* a = ev.subject == "*" ? nullptr : &agents_.at(ev.subject);
            switch (ev.kind) {
            case EventKind::AgentJoin: {
                a->active = true;
                std::size_t got = download_session(*a);
                log(ev.time, EventKind::AgentJoin, ev.subject, "backlog=" + std::to_string(got));
                maybe_continue(*a, ev.time, got);
                break;
            }
            case EventKind::AgentLeave: {
                a->active = false;
                a->left = true;
                log(ev.time, EventKind::AgentLeave, ev.subject, "rounds=" + std::to_string(a->rounds_done));
                break;
            }
            case EventKind::RoundStart: {
                if (!a->active) {
                    a->busy = false;
                    break;
                }
                start_round(*a, ev.time, 0);
                push(ev.time + base / a->spec.speed, EventKind::RoundEnd, ev.subject);
                break;
            }
            case EventKind::RoundEnd: {
                finish_download(*a, ev.time, end_round(*a, ev.time));
                std::size_t got = result_.rounds[a->pending_record].downloaded;
                if (cfg_.eval_every_round) evaluate_agent(*a, ev.time, 0, false);
                if (a->left) break;
                maybe_continue(*a, ev.time, got);
                break;
            }
            case EventKind::HubSync: {
                sync_all(ev.time);
                // Idle agents poll their hub for what the sync brought in.
                for (const auto& id : order_) {
                    Agent& idle = agents_.at(id);
                    if (!idle.active || idle.busy) continue;
                    std::size_t got = download_session(idle);
                    if (got > 0)
                        log(ev.time, EventKind::HubSync, id, "poll=" + std::to_string(got));
                    maybe_continue(idle, ev.time, got);
                }
                if (work_remaining()) push(ev.time + period, EventKind::HubSync, "*");
                break;
            }
            case EventKind::Eval: break;
            }
        }
    }

    // ---- lockstep mode ----

    void run_lockstep() {
        const double base = cfg_.base_round_time;
        int last_round = cfg_.rounds_to_complete;
        for (int r = 1; r <= last_round; ++r) {
            last_lockstep_round_ = r;
            const double t0 = (r - 1) * base;
            const double t1 = r * base;
            LockstepRoundStats stats;
            stats.round = r;

            for (const auto& id : order_) {
                Agent& a = agents_.at(id);
                if (a.active && a.spec.leave_round && *a.spec.leave_round == r) {
                    a.active = false;
                    a.left = true;
                    log(t0, EventKind::AgentLeave, id, "rounds=" + std::to_string(a.rounds_done));
                }
            }
            for (const auto& id : order_) {
                Agent& a = agents_.at(id);
                if (a.active || a.left || a.spec.join_round.value_or(1) != r) continue;
                a.active = true;
                std::size_t got = 0;
                if (r > 1) {
                    got = download_session(a);
                    ++stats.join_sessions;
                }
                log(t0, EventKind::AgentJoin, id, "backlog=" + std::to_string(got));
            }

            std::vector<Agent*> active;
            for (const auto& id : order_) {
                Agent& a = agents_.at(id);
                if (a.active) active.push_back(&a);
            }
            stats.active_agents = active.size();

            for (Agent* a : active) start_round(*a, t0, r);
            // One session per agent: its upload now, its download after sync.
            std::set<std::string> session_agents;
            std::map<std::string, std::string> details;
            for (Agent* a : active) {
                details[a->spec.agent_id] = end_round(*a, t1);
                session_agents.insert(a->spec.agent_id);
            }
            stats.hub_sync_sessions = sync_all(t1);
            for (Agent* a : active) {
                finish_download(*a, t1, details[a->spec.agent_id]);
                session_agents.insert(a->spec.agent_id);
            }
            stats.agent_sessions = session_agents.size();

            std::set<ErbId> all;
            for (const auto& h : result_.hubs)
                for (const auto& [id, rec] : h.records()) all.insert(id);
            stats.union_digest_size = all.size();

            double sum = 0.0;
            std::size_t n = 0;
            for (Agent* a : active) {
                if (eval_envs_.empty() || (!cfg_.eval_every_round && r != last_round)) continue;
                evaluate_agent(*a, t1, r, false);
                sum += result_.evaluations.back().evaluation.overall_mean();
                ++n;
            }
            stats.mean_error = n ? sum / static_cast<double>(n) : 0.0;
            result_.lockstep.push_back(stats);
        }
    }

    ExperimentConfig cfg_;
    Pcg32 sync_rng_;
    std::map<std::string, EnvSpec> catalog_;
    std::map<std::string, TaskEnvironment> envs_;
    std::vector<const TaskEnvironment*> eval_envs_;
    std::map<std::string, std::size_t> hub_index_;
    std::map<std::string, Agent> agents_;
    std::vector<std::string> order_;
    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> queue_;
    std::uint64_t seq_ = 0;
    int last_lockstep_round_ = 0;
    SimulationResult result_;
};

} // namespace

SimulationResult run_simulation(const ExperimentConfig& cfg) {
    return Simulator(cfg).run();
}

std::string SimulationResult::event_log() const {
    std::string out;
    for (const auto& e : events) {
        out += fmt_time(e.time);
        out += ' ';
        out += to_string(e.kind);
        out += ' ';
        out += e.subject;
        if (!e.detail.empty()) {
            out += ' ';
            out += e.detail;
        }
        out += '\n';
    }
    return out;
}

std::string SimulationResult::metrics_csv() const {
    std::string out = "phase,round,agent_id,task_id,mean_error\n";
    for (const auto& rec : evaluations) {
        const std::string phase = rec.final ? "final" : "round";
        const int round = rec.lockstep_round > 0 ? rec.lockstep_round : rec.round;
        for (const auto& [task, err] : rec.evaluation.mean_error)
            out += phase + "," + std::to_string(round) + "," + rec.agent_id + "," + task + "," + fmt_real(err) + "\n";
    }
    return out;
}

const HubDatabase& SimulationResult::hub(const std::string& id) const {
    for (const auto& h : hubs)
        if (h.hub_id() == id) return h;
    throw ConfigError("unknown hub " + id);
}

std::vector<const EvalRecord*> SimulationResult::final_evaluations() const {
    std::vector<const EvalRecord*> out;
    for (const auto& e : evaluations)
        if (e.final) out.push_back(&e);
    return out;
}

void write_outputs(const SimulationResult& result, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f) throw ConfigError("cannot write " + (fs::path(dir) / name).string());
        f << text;
    };
    write("events.log", result.event_log());
    write("metrics.csv", result.metrics_csv());
    for (const auto& h : result.hubs) write("hub_" + h.hub_id() + ".manifest", render_manifest(h));
}

// ---- presets ----

namespace {

std::vector<HubEdge> complete_graph(const std::vector<std::string>& hubs) {
    std::vector<HubEdge> edges;
    for (std::size_t i = 0; i < hubs.size(); ++i)
        for (std::size_t j = i + 1; j < hubs.size(); ++j) edges.push_back({hubs[i], hubs[j]});
    return edges;
}

ExperimentConfig lockstep_base() {
    ExperimentConfig cfg;
    cfg.mode = SimMode::SyncLockstep;
    cfg.dropout_p = 0.75;
    cfg.max_transfer_attempts = 64;
    cfg.eval_every_round = true;
    cfg.eval_tasks = all_task_ids();
    cfg.hubs = {"H1", "H2", "H3"};
    cfg.hub_edges = complete_graph(cfg.hubs);
    return cfg;
}

// Round-robin task assignment over the catalog in lockstep order.
void assign_round_robin(ExperimentConfig& cfg) {
    const auto tasks = all_task_ids();
    std::size_t counter = 0;
    for (auto& a : cfg.agents) a.task_schedule.clear();
    for (int r = 1; r <= cfg.rounds_to_complete; ++r) {
        for (auto& a : cfg.agents) {
            int join = a.join_round.value_or(1);
            if (r < join || (a.leave_round && r >= *a.leave_round)) continue;
            a.task_schedule.push_back(tasks[counter++ % tasks.size()]);
        }
    }
}

std::string agent_name(int i) { return "A" + std::to_string(i); }

} // namespace

ExperimentConfig preset_deployment() {
    ExperimentConfig cfg;
    cfg.name = "deployment";
    cfg.mode = SimMode::AsyncEvent;
    cfg.hubs = {"H1", "H2", "H3"};
    cfg.hub_edges = complete_graph(cfg.hubs);
    cfg.rounds_to_complete = 3;
    cfg.dropout_p = 0.0;
    // The eight sampled tasks: four from the first pathology, four from the
    // second, mixing sequences and orientations.
    const std::vector<std::string> tasks{"P1-S1-AXIAL",   "P1-S1-SAGITTAL", "P1-S1-CORONAL", "P1-S3-AXIAL",
                                         "P0-S3-SAGITTAL", "P0-S3-CORONAL", "P0-S2-CORONAL", "P0-S0-SAGITTAL"};
    const std::vector<std::string> homes{"H1", "H2", "H3", "H3"};
    const std::vector<double> speeds{1.0, 1.0, 4.0, 4.0};
    for (int k = 0; k < 4; ++k) {
        AgentSpec a;
        a.agent_id = agent_name(k + 1);
        a.hub_id = homes[static_cast<std::size_t>(k)];
        a.speed = speeds[static_cast<std::size_t>(k)];
        for (std::size_t r = 0; r < tasks.size(); ++r) a.task_schedule.push_back(tasks[(k + 3 * r) % tasks.size()]);
        cfg.agents.push_back(a);
    }
    cfg.eval_tasks = tasks;
    return cfg;
}

ExperimentConfig preset_addition() {
    ExperimentConfig cfg = lockstep_base();
    cfg.name = "addition";
    cfg.rounds_to_complete = 4;
    for (int i = 1; i <= 16; ++i) {
        AgentSpec a;
        a.agent_id = agent_name(i);
        a.hub_id = cfg.hubs[static_cast<std::size_t>(i - 1) % cfg.hubs.size()];
        a.join_round = (i - 1) / 4 + 1;
        cfg.agents.push_back(a);
    }
    assign_round_robin(cfg);
    return cfg;
}

ExperimentConfig preset_deletion() {
    ExperimentConfig cfg = lockstep_base();
    cfg.name = "deletion";
    cfg.rounds_to_complete = 5;
    for (int i = 1; i <= 24; ++i) {
        AgentSpec a;
        a.agent_id = agent_name(i);
        a.hub_id = cfg.hubs[static_cast<std::size_t>(i - 1) % cfg.hubs.size()];
        if (i > 12)
            a.leave_round = 2;
        else if (i > 6)
            a.leave_round = 3;
        else if (i > 3)
            a.leave_round = 4;
        else if (i > 1)
            a.leave_round = 5;
        cfg.agents.push_back(a);
    }
    assign_round_robin(cfg);
    return cfg;
}

ExperimentConfig preset_population(int n, int rounds) {
    ExperimentConfig cfg = lockstep_base();
    cfg.name = "population-" + std::to_string(n);
    cfg.rounds_to_complete = rounds;
    cfg.eval_every_round = false;
    cfg.eval_tasks.clear();
    for (int i = 1; i <= n; ++i) {
        AgentSpec a;
        a.agent_id = agent_name(i);
        a.hub_id = cfg.hubs[static_cast<std::size_t>(i - 1) % cfg.hubs.size()];
        cfg.agents.push_back(a);
    }
    assign_round_robin(cfg);
    return cfg;
}

} // namespace adfll
