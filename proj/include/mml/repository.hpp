#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mml/metadata_ops.hpp"

namespace mml {

enum class PutStatus {
    stored,
    duplicate,          // byte-identical re-put; original receipt returned
    duplicate_conflict, // same identifier, different bytes
    tampered,
    malformed,
    rights_rejected,
    payload_too_large,
};
const char* to_string(PutStatus s);

struct PutReceipt {
    PutStatus status = PutStatus::stored;
    Identifier identifier;
    crypto::Digest stored_unit_hash{};
    std::string detail;  // offending denylist key, parse error, ...

    bool ok() const { return status == PutStatus::stored || status == PutStatus::duplicate; }
};

struct StoredUnit {
    CreationMetadata unit;
    std::int64_t stored_at = 0;
    crypto::Digest stored_unit_hash{};
    std::optional<Identifier> superseded_by;
};

struct InventoryEntry {
    Identifier identifier;
    crypto::Digest stored_unit_hash{};
    std::int64_t stored_at = 0;
};

struct SyncReport {
    std::size_t fetched = 0;
    std::size_t skipped = 0;
};

// Read access a repository needs from a replication peer. Backed either by
// another in-process Repository or by the REST client in service.hpp.
class RepositoryPeer {
public:
    virtual ~RepositoryPeer() = default;
    virtual std::vector<InventoryEntry> inventory() = 0;
    virtual std::optional<std::string> export_unit(const Identifier& id) = 0;
};

inline const std::set<std::string> kDefaultRightsDenylist = {
    "owner", "rights_holder", "royalty_split", "contract", "license"};

// Append-only creation-metadata store. Units are validated on write and
// never mutated or erased afterwards; revisions mark their ancestor as
// superseded but leave it retrievable.
class Repository {
public:
    Repository() : denylist_(kDefaultRightsDenylist) {}
    explicit Repository(std::set<std::string> denylist) : denylist_(std::move(denylist)) {}

    // When set, units persist as `.cmeta` files plus an index.json; existing
    // contents are loaded immediately.
    void attach_data_dir(const std::filesystem::path& dir);

    PutReceipt put(const CreationMetadata& unit, std::int64_t now);
    std::optional<StoredUnit> get(const Identifier& id) const;
    std::optional<std::string> export_unit(const Identifier& id) const;
    PutReceipt import_unit(const std::string& file_bytes, std::int64_t now, std::string* parse_error);

    std::vector<InventoryEntry> list_inventory() const;  // identifier lexical order
    SyncReport sync_pull(RepositoryPeer& peer, std::int64_t now);

    const std::set<std::string>& denylist() const { return denylist_; }
    std::size_t size() const;

private:
    PutReceipt put_locked(const CreationMetadata& unit, std::int64_t now);
    void persist(const StoredUnit& stored);
    void load_data_dir();

    mutable std::mutex mutex_;
    std::map<Identifier, StoredUnit> units_;
    std::set<std::string> denylist_;
    std::filesystem::path data_dir_;
};

// In-process peer adapter for tests and the simulator.
class LocalPeer : public RepositoryPeer {
public:
    explicit LocalPeer(const Repository& repo) : repo_(repo) {}
    std::vector<InventoryEntry> inventory() override { return repo_.list_inventory(); }
    std::optional<std::string> export_unit(const Identifier& id) override {
        return repo_.export_unit(id);
    }

private:
    const Repository& repo_;
};

}  // namespace mml
