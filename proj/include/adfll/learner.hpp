#pragma once

// Action-value learning for the landmark agents: tabular and linear
// Q-functions, epsilon-greedy control, one-step Q-learning over mixed replay
// batches, and greedy evaluation by terminal distance error.

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "adfll/envsim.hpp"
#include "adfll/random.hpp"
#include "adfll/replay.hpp"
#include "adfll/wire.hpp"

namespace adfll {

enum class Backend : std::uint8_t { Tabular = 0, Linear = 1 };

std::string to_string(Backend b);
Backend parse_backend(std::string_view text);

inline constexpr int kLevels = 8;

using ActionValues = std::array<double, kActionCount>;

class QFunction {
public:
    static QFunction tabular(std::size_t observation_length);
    static QFunction linear(std::size_t observation_length);
    static QFunction make(Backend backend, std::size_t observation_length);

    [[nodiscard]] Backend backend() const { return backend_; }
    [[nodiscard]] std::size_t observation_length() const { return obs_len_; }
    [[nodiscard]] std::size_t feature_dim() const { return obs_len_ * kLevels; }

    [[nodiscard]] ActionValues values(std::span<const std::uint8_t> obs) const;

    // Adds `amount` to Q(obs, a) for TABULAR; adds `amount` * features(obs)
    // to the action's weight row for LINEAR.
    void adjust(std::span<const std::uint8_t> obs, Action a, double amount);

    // LINEAR only: row-major [action][feature].
    [[nodiscard]] std::span<double> weights() { return weights_; }
    [[nodiscard]] std::span<const double> weights() const { return weights_; }
    [[nodiscard]] std::size_t table_size() const { return table_.size(); }

    [[nodiscard]] bool all_finite() const;

    // Canonical little-endian dump: "ADQF" | version u16 | backend u8 |
    // observation length u32 | levels u32 | body. TABULAR body is a u64 count
    // then (key u64, 6 x f64) rows in ascending key order; LINEAR body is the
    // 6 x feature_dim weight matrix.
    [[nodiscard]] Bytes checkpoint() const;
    static QFunction from_checkpoint(std::span<const std::uint8_t> bytes);

    bool operator==(const QFunction& other) const;

private:
    QFunction(Backend backend, std::size_t obs_len);
    void check_length(std::span<const std::uint8_t> obs) const;

    Backend backend_;
    std::size_t obs_len_;
    std::unordered_map<std::uint64_t, ActionValues> table_;
    std::vector<double> weights_;
};

std::uint64_t observation_key(std::span<const std::uint8_t> obs);

struct TrainConfig {
    Backend backend = Backend::Tabular;
    double alpha = 0.05;
    double gamma = 0.9;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    int episodes_per_round = 200;
    int max_steps_per_episode = 200;
    std::size_t batch_size = 32;
    int updates_per_step = 1;
    MixWeights mix;
    std::uint32_t erb_capacity = kDefaultErbCapacity;
    // Number of consecutive patches concatenated into the state.
    int history = 1;
    int half_extent = 1;

    [[nodiscard]] std::size_t observation_length() const {
        return static_cast<std::size_t>(history) * patch_size(half_extent);
    }
    // Linear schedule over the round's episodes.
    [[nodiscard]] double epsilon_for_episode(int episode) const;
    // Throws ConfigError.
    void validate() const;
};

// Builds states from the last `history` patches, oldest first.
class StateTracker {
public:
    StateTracker(const TaskEnvironment& env, const AgentBox& start, int history);
    void advance(const AgentBox& box);
    [[nodiscard]] const Observation& state() const { return state_; }

private:
    const TaskEnvironment* env_;
    int history_;
    Observation state_;
};

ActionValues q_values(const QFunction& qf, std::span<const std::uint8_t> obs);

// Always consumes one uniform draw, plus one bounded draw when exploring.
Action select_action(const QFunction& qf, std::span<const std::uint8_t> obs, double epsilon, Pcg32& rng);

Action greedy_action(const ActionValues& q);

// One-step Q-learning applied sample by sample. Throws NumericalError with the
// batch index of the first transition whose target or update is non-finite.
void td_update(QFunction& qf, std::span<const Transition* const> batch, const TrainConfig& cfg);
void td_update(QFunction& qf, std::span<const Transition> batch, const TrainConfig& cfg);

struct RoundResult {
    ExperienceReplayBuffer published_erb;
    std::set<ErbId> consumed_erb_ids;
    std::map<std::string, double> evaluation;
    std::uint64_t episodes = 0;
    std::uint64_t env_steps = 0;
    std::uint64_t updates = 0;
    double wall_seconds = 0.0;
};

// One training round on `env`. `meta` labels the round's fresh buffer.
RoundResult train_round(QFunction& qf, const TaskEnvironment& env, std::span<const PublishedErb> personal,
                        std::span<const PublishedErb> incoming, const TrainConfig& cfg, Pcg32& rng,
                        const ErbMeta& meta);

// Round over several environments at once: episodes cycle through `envs`, each
// with its own fresh buffer, and the "current" category spans all of them.
// Returns one buffer per environment.
std::vector<ExperienceReplayBuffer> train_round_multi(QFunction& qf, std::span<const TaskEnvironment* const> envs,
                                                      std::span<const PublishedErb> personal,
                                                      std::span<const PublishedErb> incoming,
                                                      const TrainConfig& cfg, Pcg32& rng, const ErbMeta& meta);

struct EvalConfig {
    int episodes_per_env = 20;
    int max_steps = 200;
    std::uint64_t seed = 2024;
};

struct Evaluation {
    std::map<std::string, double> mean_error;
    std::map<std::string, std::vector<double>> episode_errors;
    // FNV-1a over every start point used; equal digests mean equal starts.
    std::uint64_t start_digest = 0;

    [[nodiscard]] double overall_mean() const;
};

// Start points for `env`, identical for every caller with the same seed.
std::vector<AgentBox> evaluation_starts(const TaskEnvironment& env, const EvalConfig& eval, int half_extent);

Evaluation evaluate(const QFunction& qf, std::span<const TaskEnvironment* const> envs, const EvalConfig& eval,
                    const TrainConfig& cfg);

} // namespace adfll
