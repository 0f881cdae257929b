#pragma once

// Hub nodes: each keeps a content-addressed database of published ERBs and a
// per-agent record of what it has already handed out. Agents exchange ERBs
// only with their own hub; hubs reconcile with each other by exchanging
// digests and pulling what they lack. Every individual ERB transfer can be
// lost with probability `dropout_p`; lost transfers are simply retried on a
// later exchange.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "adfll/random.hpp"
#include "adfll/replay.hpp"

namespace adfll {

struct TransferOutcome {
    std::vector<ErbId> attempted;
    std::vector<ErbId> delivered;
    std::vector<ErbId> dropped;
};

struct HubRecord {
    ErbMeta meta;
    PublishedErb payload;
};

struct HubCounters {
    std::uint64_t transfers_attempted = 0;
    std::uint64_t transfers_dropped = 0;
};

class HubDatabase {
public:
    explicit HubDatabase(std::string hub_id) : hub_id_(std::move(hub_id)) {}

    [[nodiscard]] const std::string& hub_id() const { return hub_id_; }
    [[nodiscard]] const std::map<ErbId, HubRecord>& records() const { return records_; }
    [[nodiscard]] bool contains(ErbId id) const { return records_.contains(id); }
    [[nodiscard]] std::size_t size() const { return records_.size(); }
    [[nodiscard]] const std::set<ErbId>& delivered_to(const std::string& agent_id) const;

    // Verifies the payload hashes to `erb.id`; throws IntegrityError otherwise.
    // Returns false when the record was already present.
    bool insert(const PublishedErb& erb);
    void mark_delivered(const std::string& agent_id, ErbId id);

    HubCounters& counters() { return counters_; }
    [[nodiscard]] const HubCounters& counters() const { return counters_; }

    // Re-hashes every payload. Throws IntegrityError on the first mismatch.
    void verify_integrity() const;

private:
    std::string hub_id_;
    std::map<ErbId, HubRecord> records_;
    std::map<std::string, std::set<ErbId>> cursors_;
    HubCounters counters_;
};

// Agent -> hub. With probability 1 - dropout_p the ERB is stored (keyed by its
// content id) and recorded as delivered to its producer.
TransferOutcome upload(HubDatabase& hub, const PublishedErb& erb, double dropout_p, Pcg32& rng);

struct DownloadResult {
    std::vector<PublishedErb> erbs;
    TransferOutcome outcome;
};

// Hub -> agent. Candidates are records not yet delivered to `agent_id`
// (excluding its own when `exclude_self`), in ascending id order; each one
// independently survives dropout. Dropped candidates stay eligible.
DownloadResult download_new(HubDatabase& hub, const std::string& agent_id, bool exclude_self, double dropout_p,
                            Pcg32& rng);

// Digest exchange, then each side pulls what it lacks from the other's
// pre-sync digest. Returns (transfers into a, transfers into b).
std::pair<TransferOutcome, TransferOutcome> hub_sync(HubDatabase& a, HubDatabase& b, double dropout_p,
                                                     Pcg32& rng);

// Sorted key set.
std::vector<ErbId> db_digest(const HubDatabase& hub);
std::uint64_t digest_hash(const std::vector<ErbId>& digest);

struct ManifestRow {
    ErbId id = 0;
    std::string agent_id;
    std::string task_id;
    std::uint32_t round = 0;
    bool operator==(const ManifestRow&) const = default;
};

// One line per record: "<id hex>,<agent_id>,<task_id>,<round>", ascending id,
// under a "erb_id,agent_id,task_id,round" header.
std::string render_manifest(const HubDatabase& hub);
std::vector<ManifestRow> parse_manifest(const std::string& text);

} // namespace adfll
