#include "adfll/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>

#include "adfll/errors.hpp"
#include "adfll/hash.hpp"

namespace adfll {

namespace {

constexpr std::uint8_t kCheckpointMagic[4] = {'A', 'D', 'Q', 'F'};
constexpr std::uint16_t kCheckpointVersion = 1;

} // namespace

std::string to_string(Backend b) { return b == Backend::Tabular ? "TABULAR" : "LINEAR"; }

Backend parse_backend(std::string_view text) {
    if (text == "TABULAR") return Backend::Tabular;
    if (text == "LINEAR") return Backend::Linear;
    throw ConfigError("unknown backend '" + std::string(text) + "'");
}

std::uint64_t observation_key(std::span<const std::uint8_t> obs) { return fnv1a64(obs); }

QFunction::QFunction(Backend backend, std::size_t obs_len) : backend_(backend), obs_len_(obs_len) {
    if (obs_len == 0) throw ConfigError("observation length must be positive");
    if (backend == Backend::Linear) weights_.assign(kActionCount * feature_dim(), 0.0);
}

QFunction QFunction::tabular(std::size_t observation_length) { return {Backend::Tabular, observation_length}; }
QFunction QFunction::linear(std::size_t observation_length) { return {Backend::Linear, observation_length}; }
QFunction QFunction::make(Backend backend, std::size_t observation_length) { return {backend, observation_length}; }

void QFunction::check_length(std::span<const std::uint8_t> obs) const {
    if (obs.size() != obs_len_) {
        throw ConfigError("observation length " + std::to_string(obs.size()) + " != configured " +
                          std::to_string(obs_len_));
    }
}

ActionValues QFunction::values(std::span<const std::uint8_t> obs) const {
    check_length(obs);
    ActionValues q{};
    if (backend_ == Backend::Tabular) {
        if (auto it = table_.find(observation_key(obs)); it != table_.end()) q = it->second;
        return q;
    }
    const std::size_t fd = feature_dim();
    for (std::size_t a = 0; a < kActionCount; ++a) {
        const double* row = weights_.data() + a * fd;
        double sum = 0.0;
        for (std::size_t cell = 0; cell < obs.size(); ++cell) sum += row[cell * kLevels + obs[cell]];
        q[a] = sum;
    }
    return q;
}

void QFunction::adjust(std::span<const std::uint8_t> obs, Action a, double amount) {
    check_length(obs);
    const auto ai = static_cast<std::size_t>(a);
    if (backend_ == Backend::Tabular) {
        table_[observation_key(obs)][ai] += amount;
        return;
    }
    double* row = weights_.data() + ai * feature_dim();
    for (std::size_t cell = 0; cell < obs.size(); ++cell) row[cell * kLevels + obs[cell]] += amount;
}

bool QFunction::all_finite() const {
    if (backend_ == Backend::Linear) {
        return std::all_of(weights_.begin(), weights_.end(), [](double w) { return std::isfinite(w); });
    }
    return std::all_of(table_.begin(), table_.end(), [](const auto& kv) {
        return std::all_of(kv.second.begin(), kv.second.end(), [](double w) { return std::isfinite(w); });
    });
}

Bytes QFunction::checkpoint() const {
    ByteWriter w;
    w.raw(kCheckpointMagic);
    w.u16(kCheckpointVersion);
    w.u8(static_cast<std::uint8_t>(backend_));
    w.u32(static_cast<std::uint32_t>(obs_len_));
    w.u32(kLevels);
    if (backend_ == Backend::Linear) {
        for (double v : weights_) w.f64(v);
        return std::move(w).take();
    }
    std::vector<std::uint64_t> keys;
    keys.reserve(table_.size());
    for (const auto& kv : table_) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    w.u64(keys.size());
    for (std::uint64_t k : keys) {
        w.u64(k);
        for (double v : table_.at(k)) w.f64(v);
    }
    return std::move(w).take();
}

QFunction QFunction::from_checkpoint(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const auto magic = r.raw(4);
    if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) {
        throw WireError(WireErrorKind::BadMagic, "bad checkpoint magic");
    }
    if (r.u16() != kCheckpointVersion) throw WireError(WireErrorKind::VersionMismatch, "checkpoint version");
    const std::uint8_t backend = r.u8();
    if (backend > 1) throw WireError(WireErrorKind::InvalidField, "checkpoint backend tag");
    const std::uint32_t obs_len = r.u32();
    if (r.u32() != kLevels || obs_len == 0) throw WireError(WireErrorKind::InvalidField, "checkpoint dims");
    QFunction qf(static_cast<Backend>(backend), obs_len);
    if (qf.backend_ == Backend::Linear) {
        if (r.remaining() != qf.weights_.size() * 8) {
            throw WireError(WireErrorKind::CountLengthMismatch, "checkpoint weight count");
        }
        for (double& v : qf.weights_) v = r.f64();
        return qf;
    }
    const std::uint64_t count = r.u64();
    if (count * (8 + 8 * kActionCount) != r.remaining()) {
        throw WireError(WireErrorKind::CountLengthMismatch, "checkpoint table count");
    }
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t key = r.u64();
        ActionValues q{};
        for (double& v : q) v = r.f64();
        qf.table_[key] = q;
    }
    return qf;
}

bool QFunction::operator==(const QFunction& other) const {
    return backend_ == other.backend_ && obs_len_ == other.obs_len_ && table_ == other.table_ &&
           weights_ == other.weights_;
}

double TrainConfig::epsilon_for_episode(int episode) const {
    if (episodes_per_round <= 1) return epsilon_start;
    const double frac = static_cast<double>(episode) / static_cast<double>(episodes_per_round - 1);
    return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

void TrainConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in [0, 1)");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
        throw ConfigError("epsilon must be in [0, 1]");
    }
    if (episodes_per_round < 0 || max_steps_per_episode <= 0 || batch_size == 0 || updates_per_step < 0) {
        throw ConfigError("episode/step/batch counts out of range");
    }
    if (history < 1 || half_extent < 0) throw ConfigError("history must be >= 1 and half_extent >= 0");
    if (erb_capacity == 0) throw ConfigError("erb capacity must be positive");
    if (mix.current < 0.0 || mix.personal < 0.0 || mix.incoming < 0.0 ||
        std::fabs(mix.current + mix.personal + mix.incoming - 1.0) > 1e-9) {
        throw ConfigError("mix weights must be nonnegative and sum to 1");
    }
}

StateTracker::StateTracker(const TaskEnvironment& env, const AgentBox& start, int history)
    : env_(&env), history_(history) {
    const Observation first = observe(env, start);
    state_.reserve(first.size() * static_cast<std::size_t>(history));
    for (int i = 0; i < history; ++i) state_.insert(state_.end(), first.begin(), first.end());
}

void StateTracker::advance(const AgentBox& box) {
    const Observation patch = observe(*env_, box);
    if (history_ > 1) state_.erase(state_.begin(), state_.begin() + static_cast<std::ptrdiff_t>(patch.size()));
    else state_.clear();
    state_.insert(state_.end(), patch.begin(), patch.end());
}

ActionValues q_values(const QFunction& qf, std::span<const std::uint8_t> obs) { return qf.values(obs); }

Action greedy_action(const ActionValues& q) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.size(); ++a) {
        if (q[a] > q[best]) best = a;
    }
    return static_cast<Action>(best);
}

Action select_action(const QFunction& qf, std::span<const std::uint8_t> obs, double epsilon, Pcg32& rng) {
    if (rng.uniform() < epsilon) return static_cast<Action>(rng.bounded(kActionCount));
    return greedy_action(qf.values(obs));
}

void td_update(QFunction& qf, std::span<const Transition* const> batch, const TrainConfig& cfg) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = *batch[i];
        double target = t.reward;
        if (!t.terminal) {
            const ActionValues next = qf.values(t.next_state);
            target += cfg.gamma * *std::max_element(next.begin(), next.end());
        }
        if (!std::isfinite(target)) throw NumericalError("non-finite TD target", i);
        const double current = qf.values(t.state)[static_cast<std::size_t>(t.action)];
        const double step = cfg.alpha * (target - current);
        if (!std::isfinite(step)) throw NumericalError("non-finite TD step", i);
        qf.adjust(t.state, t.action, step);
    }
}

void td_update(QFunction& qf, std::span<const Transition> batch, const TrainConfig& cfg) {
    std::vector<const Transition*> ptrs;
    ptrs.reserve(batch.size());
    for (const auto& t : batch) ptrs.push_back(&t);
    td_update(qf, ptrs, cfg);
}

namespace {

std::vector<const ExperienceReplayBuffer*> raw_buffers(std::span<const PublishedErb> erbs) {
    std::vector<const ExperienceReplayBuffer*> out;
    out.reserve(erbs.size());
    for (const auto& e : erbs) out.push_back(e.erb.get());
    return out;
}

} // namespace

std::vector<ExperienceReplayBuffer> train_round_multi(QFunction& qf, std::span<const TaskEnvironment* const> envs,
                                                      std::span<const PublishedErb> personal,
                                                      std::span<const PublishedErb> incoming,
                                                      const TrainConfig& cfg, Pcg32& rng, const ErbMeta& meta) {
    cfg.validate();
    if (envs.empty()) throw ConfigError("training round needs at least one environment");
    if (qf.observation_length() != cfg.observation_length()) {
        throw ConfigError("Q-function observation length does not match training config");
    }

    std::vector<ExperienceReplayBuffer> current(envs.size());
    for (std::size_t i = 0; i < envs.size(); ++i) {
        current[i].meta = meta;
        current[i].meta.task_id = envs[i]->task_id();
        current[i].capacity = cfg.erb_capacity;
    }
    std::vector<const ExperienceReplayBuffer*> current_ptrs;
    for (const auto& c : current) current_ptrs.push_back(&c);
    const auto personal_ptrs = raw_buffers(personal);
    const auto incoming_ptrs = raw_buffers(incoming);

    std::vector<const Transition*> batch;
    for (int episode = 0; episode < cfg.episodes_per_round; ++episode) {
        const std::size_t which = static_cast<std::size_t>(episode) % envs.size();
        const TaskEnvironment& env = *envs[which];
        const double epsilon = cfg.epsilon_for_episode(episode);
        AgentBox box = sample_start(env, rng, cfg.half_extent);
        StateTracker tracker(env, box, cfg.history);
        for (int s = 0; s < cfg.max_steps_per_episode; ++s) {
            const Action action = select_action(qf, tracker.state(), epsilon, rng);
            const StepResult result = step(env, box, action);
            Transition t;
            t.state = tracker.state();
            t.action = action;
            t.reward = result.reward;
            tracker.advance(result.box);
            t.next_state = tracker.state();
            t.terminal = result.terminal;
            box = result.box;
            offer(current[which], std::move(t), rng);

            for (int u = 0; u < cfg.updates_per_step; ++u) {
                const auto tagged =
                    sample_mixed_tagged(current_ptrs, personal_ptrs, incoming_ptrs, cfg.batch_size, cfg.mix, rng);
                batch.clear();
                for (const auto& st : tagged) batch.push_back(st.transition);
                td_update(qf, batch, cfg);
            }
            if (result.terminal) break;
        }
    }
    return current;
}

RoundResult train_round(QFunction& qf, const TaskEnvironment& env, std::span<const PublishedErb> personal,
                        std::span<const PublishedErb> incoming, const TrainConfig& cfg, Pcg32& rng,
                        const ErbMeta& meta) {
    const auto started = std::chrono::steady_clock::now();
    RoundResult result;
    for (const auto& e : personal) {
        if (!e.erb->empty()) result.consumed_erb_ids.insert(e.id);
    }
    for (const auto& e : incoming) {
        if (!e.erb->empty()) result.consumed_erb_ids.insert(e.id);
    }
    const TaskEnvironment* envs[] = {&env};
    auto buffers = train_round_multi(qf, envs, personal, incoming, cfg, rng, meta);
    result.published_erb = std::move(buffers.front());
    result.env_steps = result.published_erb.seen_count;
    result.episodes = static_cast<std::uint64_t>(cfg.episodes_per_round);
    result.updates = result.env_steps * static_cast<std::uint64_t>(cfg.updates_per_step);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

double Evaluation::overall_mean() const {
    if (mean_error.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& kv : mean_error) sum += kv.second;
    return sum / static_cast<double>(mean_error.size());
}

std::vector<AgentBox> evaluation_starts(const TaskEnvironment& env, const EvalConfig& eval, int half_extent) {
    Pcg32 rng = derive_rng(eval.seed, "eval/" + env.task_id());
    std::vector<AgentBox> starts;
    starts.reserve(static_cast<std::size_t>(eval.episodes_per_env));
    for (int i = 0; i < eval.episodes_per_env; ++i) starts.push_back(sample_start(env, rng, half_extent));
    return starts;
}

Evaluation evaluate(const QFunction& qf, std::span<const TaskEnvironment* const> envs, const EvalConfig& eval,
                    const TrainConfig& cfg) {
    if (eval.episodes_per_env < 1) throw ConfigError("episodes_per_env must be >= 1");
    Evaluation out;
    Fnv1a64 digest;
    for (const TaskEnvironment* env : envs) {
        const auto starts = evaluation_starts(*env, eval, cfg.half_extent);
        auto& errors = out.episode_errors[env->task_id()];
        digest.update(env->task_id());
        for (const AgentBox& start : starts) {
            digest.update_le(static_cast<std::uint32_t>(start.center.x), 4)
                .update_le(static_cast<std::uint32_t>(start.center.y), 4)
                .update_le(static_cast<std::uint32_t>(start.center.z), 4);
            AgentBox box = start;
            StateTracker tracker(*env, box, cfg.history);
            for (int s = 0; s < eval.max_steps; ++s) {
                const StepResult r = step(*env, box, greedy_action(qf.values(tracker.state())));
                box = r.box;
                tracker.advance(box);
                if (r.terminal) break;
            }
            errors.push_back(distance_error(box.center, env->landmark()));
        }
        out.mean_error[env->task_id()] =
            std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
    }
    out.start_digest = digest.digest();
    return out;
}

} // namespace adfll
