#include "adfll/replay.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "adfll/errors.hpp"
#include "adfll/hash.hpp"
#include "adfll/wire.hpp"

namespace adfll {

bool same_content(const ExperienceReplayBuffer& a, const ExperienceReplayBuffer& b) {
    return a.meta.agent_id == b.meta.agent_id && a.meta.task_id == b.meta.task_id && a.meta.round == b.meta.round &&
           a.capacity == b.capacity && a.seen_count == b.seen_count && a.entries == b.entries;
}

bool offer(ExperienceReplayBuffer& erb, Transition t, Pcg32& rng) {
    ++erb.seen_count;
    if (erb.entries.size() < erb.capacity) {
        erb.entries.push_back(std::move(t));
        return true;
    }
    const std::uint64_t slot = rng.bounded64(erb.seen_count);
    if (slot < erb.capacity) {
        erb.entries[slot] = std::move(t);
        return true;
    }
    return false;
}

ErbId erb_id(const ExperienceReplayBuffer& erb) { return fnv1a64(serialize_erb(erb)); }

std::string erb_id_hex(ErbId id) {
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(id));
    return {buf.data(), 16};
}

ErbId parse_erb_id_hex(const std::string& hex) {
    if (hex.size() != 16) throw ConfigError("erb id must be 16 hex digits: '" + hex + "'");
    std::size_t used = 0;
    const unsigned long long v = std::stoull(hex, &used, 16);
    if (used != hex.size()) throw ConfigError("bad erb id '" + hex + "'");
    return v;
}

PublishedErb PublishedErb::publish(ExperienceReplayBuffer erb) {
    PublishedErb out;
    out.id = erb_id(erb);
    out.erb = std::make_shared<const ExperienceReplayBuffer>(std::move(erb));
    return out;
}

namespace {

struct Category {
    std::vector<const ExperienceReplayBuffer*> nonempty;
    double weight = 0.0;
};

Category collect(std::span<const ExperienceReplayBuffer* const> buffers, double weight) {
    Category c;
    c.weight = weight;
    for (const auto* b : buffers) {
        if (b != nullptr && !b->empty()) c.nonempty.push_back(b);
    }
    return c;
}

} // namespace

std::vector<SampledTransition> sample_mixed_tagged(std::span<const ExperienceReplayBuffer* const> current,
                                                   std::span<const ExperienceReplayBuffer* const> personal,
                                                   std::span<const ExperienceReplayBuffer* const> incoming,
                                                   std::size_t batch_size, const MixWeights& mix, Pcg32& rng) {
    if (mix.current < 0.0 || mix.personal < 0.0 || mix.incoming < 0.0 ||
        std::fabs(mix.current + mix.personal + mix.incoming - 1.0) > 1e-9) {
        throw ConfigError("mix weights must be nonnegative and sum to 1");
    }
    if (batch_size == 0) throw ConfigError("batch_size must be positive");

    std::array<Category, 3> cats{collect(current, mix.current), collect(personal, mix.personal),
                                 collect(incoming, mix.incoming)};
    double total = 0.0;
    for (auto& c : cats) {
        if (c.nonempty.empty()) c.weight = 0.0;
        total += c.weight;
    }
    if (total <= 0.0) throw EmptySourceError("no nonempty replay source with positive weight");

    std::vector<SampledTransition> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        double u = rng.uniform() * total;
        std::size_t k = 0;
        std::size_t last_positive = 0;
        for (k = 0; k < cats.size(); ++k) {
            if (cats[k].weight <= 0.0) continue;
            last_positive = k;
            if (u < cats[k].weight) break;
            u -= cats[k].weight;
        }
        if (k == cats.size()) k = last_positive;
        const auto& pool = cats[k].nonempty;
        const auto* buffer = pool[rng.bounded(static_cast<std::uint32_t>(pool.size()))];
        const auto& t = buffer->entries[rng.bounded(static_cast<std::uint32_t>(buffer->entries.size()))];
        batch.push_back({&t, static_cast<SourceCategory>(k)});
    }
    return batch;
}

std::vector<Transition> sample_mixed(const ExperienceReplayBuffer& current,
                                     std::span<const ExperienceReplayBuffer* const> personal,
                                     std::span<const ExperienceReplayBuffer* const> incoming,
                                     std::size_t batch_size, const MixWeights& mix, Pcg32& rng) {
    const ExperienceReplayBuffer* cur[] = {&current};
    const auto tagged = sample_mixed_tagged(cur, personal, incoming, batch_size, mix, rng);
    std::vector<Transition> out;
    out.reserve(tagged.size());
    for (const auto& s : tagged) out.push_back(*s.transition);
    return out;
}

} // namespace adfll
