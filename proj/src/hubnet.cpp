#include "adfll/hubnet.hpp"

#include <sstream>

#include "adfll/errors.hpp"
#include "adfll/hash.hpp"

namespace adfll {

const std::set<ErbId>& HubDatabase::delivered_to(const std::string& agent_id) const {
    static const std::set<ErbId> kNone;
    auto it = cursors_.find(agent_id);
    return it == cursors_.end() ? kNone : it->second;
}

bool HubDatabase::insert(const PublishedErb& erb) {
    if (!erb.erb) throw IntegrityError("hub " + hub_id_ + ": null payload");
    const ErbId actual = erb_id(*erb.erb);
    if (actual != erb.id) {
        throw IntegrityError("hub " + hub_id_ + ": payload hashes to " + erb_id_hex(actual) + ", claimed " +
                             erb_id_hex(erb.id));
    }
    return records_.try_emplace(erb.id, HubRecord{erb.meta(), erb}).second;
}

void HubDatabase::mark_delivered(const std::string& agent_id, ErbId id) {
    if (!records_.contains(id)) throw IntegrityError("cursor for " + agent_id + " references absent record");
    cursors_[agent_id].insert(id);
}

void HubDatabase::verify_integrity() const {
    for (const auto& [id, rec] : records_) {
        if (erb_id(*rec.payload.erb) != id) throw IntegrityError("hub " + hub_id_ + ": record " + erb_id_hex(id));
    }
}

TransferOutcome upload(HubDatabase& hub, const PublishedErb& erb, double dropout_p, Pcg32& rng) {
    if (!(dropout_p >= 0.0 && dropout_p <= 1.0)) throw ConfigError("dropout_p must be in [0, 1]");
    TransferOutcome out;
    out.attempted.push_back(erb.id);
    ++hub.counters().transfers_attempted;
    if (rng.bernoulli(dropout_p)) {
        out.dropped.push_back(erb.id);
        ++hub.counters().transfers_dropped;
        return out;
    }
    hub.insert(erb);
    hub.mark_delivered(erb.meta().agent_id, erb.id);
    out.delivered.push_back(erb.id);
    return out;
}

DownloadResult download_new(HubDatabase& hub, const std::string& agent_id, bool exclude_self, double dropout_p,
                            Pcg32& rng) {
    if (!(dropout_p >= 0.0 && dropout_p <= 1.0)) throw ConfigError("dropout_p must be in [0, 1]");
    DownloadResult result;
    const auto& seen = hub.delivered_to(agent_id);
    std::vector<const HubRecord*> candidates;
    for (const auto& [id, rec] : hub.records()) {
        if (seen.contains(id)) continue;
        if (exclude_self && rec.meta.agent_id == agent_id) continue;
        candidates.push_back(&rec);
    }
    for (const HubRecord* rec : candidates) {
        const ErbId id = rec->payload.id;
        result.outcome.attempted.push_back(id);
        ++hub.counters().transfers_attempted;
        if (rng.bernoulli(dropout_p)) {
            result.outcome.dropped.push_back(id);
            ++hub.counters().transfers_dropped;
            continue;
        }
        result.outcome.delivered.push_back(id);
        result.erbs.push_back(rec->payload);
    }
    for (ErbId id : result.outcome.delivered) hub.mark_delivered(agent_id, id);
    return result;
}

namespace {

TransferOutcome pull(HubDatabase& into, const HubDatabase& from, const std::vector<ErbId>& wanted, double dropout_p,
                     Pcg32& rng) {
    TransferOutcome out;
    for (ErbId id : wanted) {
        out.attempted.push_back(id);
        ++into.counters().transfers_attempted;
        if (rng.bernoulli(dropout_p)) {
            out.dropped.push_back(id);
            ++into.counters().transfers_dropped;
            continue;
        }
        into.insert(from.records().at(id).payload);
        out.delivered.push_back(id);
    }
    return out;
}

std::vector<ErbId> missing_from(const HubDatabase& hub, const std::vector<ErbId>& digest) {
    std::vector<ErbId> out;
    for (ErbId id : digest) {
        if (!hub.contains(id)) out.push_back(id);
    }
    return out;
}

} // namespace

std::pair<TransferOutcome, TransferOutcome> hub_sync(HubDatabase& a, HubDatabase& b, double dropout_p,
                                                     Pcg32& rng) {
    if (&a == &b || a.hub_id() == b.hub_id()) throw ConfigError("hub_sync needs two distinct hubs");
    if (!(dropout_p >= 0.0 && dropout_p <= 1.0)) throw ConfigError("dropout_p must be in [0, 1]");
    const auto digest_a = db_digest(a);
    const auto digest_b = db_digest(b);
    const auto a_wants = missing_from(a, digest_b);
    const auto b_wants = missing_from(b, digest_a);
    auto into_a = pull(a, b, a_wants, dropout_p, rng);
    auto into_b = pull(b, a, b_wants, dropout_p, rng);
    return {std::move(into_a), std::move(into_b)};
}

std::vector<ErbId> db_digest(const HubDatabase& hub) {
    std::vector<ErbId> out;
    out.reserve(hub.size());
    for (const auto& kv : hub.records()) out.push_back(kv.first);
    return out;
}

std::uint64_t digest_hash(const std::vector<ErbId>& digest) {
    Fnv1a64 h;
    for (ErbId id : digest) h.update_le(id, 8);
    return h.digest();
}

std::string render_manifest(const HubDatabase& hub) {
    std::ostringstream os;
    os << "erb_id,agent_id,task_id,round\n";
    for (const auto& [id, rec] : hub.records()) {
        os << erb_id_hex(id) << ',' << rec.meta.agent_id << ',' << rec.meta.task_id << ',' << rec.meta.round << '\n';
    }
    return os.str();
}

std::vector<ManifestRow> parse_manifest(const std::string& text) {
    std::vector<ManifestRow> rows;
    std::istringstream is(text);
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string id, agent, task, round;
        if (!std::getline(ls, id, ',') || !std::getline(ls, agent, ',') || !std::getline(ls, task, ',') ||
            !std::getline(ls, round)) {
            throw ConfigError("malformed manifest line: " + line);
        }
        rows.push_back({parse_erb_id_hex(id), agent, task, static_cast<std::uint32_t>(std::stoul(round))});
    }
    return rows;
}

} // namespace adfll
