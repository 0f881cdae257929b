#pragma once

// Experience replay buffers: reservoir-bounded transition stores that are
// published as immutable, content-addressed units, plus the mixed sampler
// that draws training batches from the current, personal-past and incoming
// buffers.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "adfll/envsim.hpp"
#include "adfll/random.hpp"

namespace adfll {

struct Transition {
    Observation state;
    Action action = Action::PosX;
    double reward = 0.0;
    Observation next_state;
    bool terminal = false;
    bool operator==(const Transition&) const = default;
};

struct ErbMeta {
    std::string agent_id;
    std::string task_id;
    std::uint32_t round = 0;
    // Local to the producing agent; not part of the canonical bytes.
    std::uint64_t created_seq = 0;
};

inline constexpr std::uint32_t kDefaultErbCapacity = 4096;

struct ExperienceReplayBuffer {
    ErbMeta meta;
    std::uint32_t capacity = kDefaultErbCapacity;
    std::vector<Transition> entries;
    std::uint64_t seen_count = 0;

    [[nodiscard]] bool empty() const { return entries.empty(); }
    [[nodiscard]] std::size_t size() const { return entries.size(); }
};

// Equality over the canonical content (created_seq excluded).
bool same_content(const ExperienceReplayBuffer& a, const ExperienceReplayBuffer& b);

// Reservoir offer (Algorithm R). Returns true when the transition was stored.
bool offer(ExperienceReplayBuffer& erb, Transition t, Pcg32& rng);

using ErbId = std::uint64_t;

// FNV-1a over the canonical serialization.
ErbId erb_id(const ExperienceReplayBuffer& erb);
std::string erb_id_hex(ErbId id);
ErbId parse_erb_id_hex(const std::string& hex);

// A buffer that has left its producer: immutable and shareable.
struct PublishedErb {
    ErbId id = 0;
    std::shared_ptr<const ExperienceReplayBuffer> erb;

    static PublishedErb publish(ExperienceReplayBuffer erb);
    [[nodiscard]] const ErbMeta& meta() const { return erb->meta; }
};

struct MixWeights {
    double current = 0.5;
    double personal = 0.25;
    double incoming = 0.25;
};

enum class SourceCategory : std::uint8_t { Current = 0, Personal = 1, Incoming = 2 };

struct SampledTransition {
    const Transition* transition;
    SourceCategory category;
};

// Per-slot draw: category by (renormalized) weight, buffer uniformly among
// the category's nonempty buffers, transition uniformly within the buffer.
// Throws EmptySourceError when nothing with positive weight is nonempty and
// ConfigError when the weights are negative or do not sum to 1.
std::vector<SampledTransition> sample_mixed_tagged(std::span<const ExperienceReplayBuffer* const> current,
                                                   std::span<const ExperienceReplayBuffer* const> personal,
                                                   std::span<const ExperienceReplayBuffer* const> incoming,
                                                   std::size_t batch_size, const MixWeights& mix, Pcg32& rng);

std::vector<Transition> sample_mixed(const ExperienceReplayBuffer& current,
                                     std::span<const ExperienceReplayBuffer* const> personal,
                                     std::span<const ExperienceReplayBuffer* const> incoming,
                                     std::size_t batch_size, const MixWeights& mix, Pcg32& rng);

} // namespace adfll
