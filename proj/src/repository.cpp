#include "mml/repository.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "mml/hex.hpp"

namespace mml {

namespace fs = std::filesystem;

const char* to_string(PutStatus s) {
    switch (s) {
        case PutStatus::stored: return "stored";
        case PutStatus::duplicate: return "duplicate";
        case PutStatus::duplicate_conflict: return "duplicate-identifier";
        case PutStatus::tampered: return "tampered-unit";
        case PutStatus::malformed: return "malformed-unit";
        case PutStatus::rights_rejected: return "rights-content-rejected";
        case PutStatus::payload_too_large: return "payload-too-large";
    }
    return "unknown";
}

namespace {
std::string unit_file_name(const Identifier& id) {
    // File name derived from the identifier hash; the index maps it back.
    return hex_encode(crypto::sha256(id.canonical())) + ".cmeta";
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}
}  // namespace

void Repository::attach_data_dir(const fs::path& dir) {
    std::lock_guard lock(mutex_);
    fs::create_directories(dir);
    data_dir_ = dir;
    load_data_dir();
}

void Repository::load_data_dir() {
    const fs::path index_path = data_dir_ / "index.json";
    if (!fs::exists(index_path)) return;
    auto index = nlohmann::json::parse(read_file(index_path), nullptr, false);
    if (index.is_discarded()) return;
    for (const auto& entry : index) {
        const std::string bytes = read_file(data_dir_ / entry.at("file").get<std::string>());
        std::string err;
        auto unit = parse_creation(bytes, &err);
        if (!unit || verify_creation(*unit) != VerifyResult::ok) continue;
        StoredUnit stored;
        stored.unit = std::move(*unit);
        stored.stored_at = entry.value("stored_at", 0);
        stored.stored_unit_hash = unit_hash(stored.unit);
        if (entry.contains("superseded_by")) {
            if (auto id = Identifier::parse(entry["superseded_by"].get<std::string>())) {
                stored.superseded_by = *id;
            }
        }
        units_.emplace(stored.unit.identifier, std::move(stored));
    }
}

void Repository::persist(const StoredUnit& stored) {
    if (data_dir_.empty()) return;
    write_file(data_dir_ / unit_file_name(stored.unit.identifier),
               canonical_signed_bytes(stored.unit));
    nlohmann::json index = nlohmann::json::array();
    for (const auto& [id, su] : units_) {
        nlohmann::json e;
        e["identifier"] = id.canonical();
        e["file"] = unit_file_name(id);
        e["stored_at"] = su.stored_at;
        if (su.superseded_by) e["superseded_by"] = su.superseded_by->canonical();
        index.push_back(std::move(e));
    }
    write_file(data_dir_ / "index.json", index.dump(2));
}

PutReceipt Repository::put(const CreationMetadata& unit, std::int64_t now) {
    std::lock_guard lock(mutex_);
    return put_locked(unit, now);
}

PutReceipt Repository::put_locked(const CreationMetadata& unit, std::int64_t now) {
    PutReceipt receipt;
    receipt.identifier = unit.identifier;

    const VerifyResult vr = verify_creation(unit);
    if (vr == VerifyResult::malformed) {
        receipt.status = PutStatus::malformed;
        return receipt;
    }
    if (vr == VerifyResult::tampered) {
        receipt.status = PutStatus::tampered;
        return receipt;
    }
    for (const auto& [k, v] : unit.payload.entries) {
        (void)v;
        if (denylist_.contains(k)) {
            receipt.status = PutStatus::rights_rejected;
            receipt.detail = k;
            return receipt;
        }
    }
    if (payload_serialized_size(unit.payload) > kMaxPayloadBytes) {
        receipt.status = PutStatus::payload_too_large;
        return receipt;
    }

    const crypto::Digest h = unit_hash(unit);
    if (auto it = units_.find(unit.identifier); it != units_.end()) {
        receipt.stored_unit_hash = it->second.stored_unit_hash;
        receipt.status = (it->second.stored_unit_hash == h) ? PutStatus::duplicate
                                                            : PutStatus::duplicate_conflict;
        return receipt;
    }

    StoredUnit stored;
    stored.unit = unit;
    stored.stored_at = now;
    stored.stored_unit_hash = h;
    auto [it, ok] = units_.emplace(unit.identifier, std::move(stored));
    (void)ok;

    // Supersession markers are derived locally, in both arrival orders.
    if (unit.prev_revision) {
        if (auto prior = units_.find(unit.prev_revision->identifier); prior != units_.end()) {
            prior->second.superseded_by = unit.identifier;
        }
    }
    for (auto& [id, su] : units_) {
        if (su.unit.prev_revision && su.unit.prev_revision->identifier == unit.identifier) {
            it->second.superseded_by = id;
        }
    }

    persist(it->second);
    receipt.status = PutStatus::stored;
    receipt.stored_unit_hash = h;
    return receipt;
}

std::optional<StoredUnit> Repository::get(const Identifier& id) const {
    std::lock_guard lock(mutex_);
    auto it = units_.find(id);
    if (it == units_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> Repository::export_unit(const Identifier& id) const {
    std::lock_guard lock(mutex_);
    auto it = units_.find(id);
    if (it == units_.end()) return std::nullopt;
    return canonical_signed_bytes(it->second.unit);
}

PutReceipt Repository::import_unit(const std::string& file_bytes, std::int64_t now,
                                   std::string* parse_error) {
    std::string err;
    auto unit = parse_creation(file_bytes, &err);
    if (!unit) {
        if (parse_error) *parse_error = err;
        PutReceipt receipt;
        receipt.status = PutStatus::malformed;
        receipt.detail = err;
        return receipt;
    }
    return put(*unit, now);
}

std::vector<InventoryEntry> Repository::list_inventory() const {
    std::lock_guard lock(mutex_);
    std::vector<InventoryEntry> out;
    out.reserve(units_.size());
    for (const auto& [id, su] : units_) {
        out.push_back({id, su.stored_unit_hash, su.stored_at});
    }
    return out;  // map order = identifier lexical order
}

SyncReport Repository::sync_pull(RepositoryPeer& peer, std::int64_t now) {
    SyncReport report;
    const auto remote = peer.inventory();
    for (const auto& entry : remote) {
        {
            std::lock_guard lock(mutex_);
            if (units_.contains(entry.identifier)) continue;
        }
        auto bytes = peer.export_unit(entry.identifier);
        if (!bytes) {
            ++report.skipped;
            continue;
        }
        auto receipt = import_unit(*bytes, now, nullptr);
        if (receipt.status == PutStatus::stored) {
            ++report.fetched;
        } else {
            ++report.skipped;
        }
    }
    return report;
}

std::size_t Repository::size() const {
    std::lock_guard lock(mutex_);
    return units_.size();
}

}  // namespace mml
