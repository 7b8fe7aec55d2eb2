#include "mml/canonical.hpp"

#include <nlohmann/json.hpp>

#include "mml/hex.hpp"

namespace mml {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kCreationTag = "creation-metadata/v1";
constexpr const char* kRegistryTag = "registry-metadata/v1";

std::string hex32(std::span<const std::uint8_t> v) { return hex_encode(v); }

ordered_json signature_header_json(const Signature& sig) {
    ordered_json j;
    j["algorithm"] = sig.algorithm;
    j["signer_id"] = sig.signer_id;
    j["signer_public_key"] = hex32(sig.signer_public_key);
    j["timestamp"] = sig.timestamp;
    return j;
}

ordered_json signature_json(const Signature& sig) {
    ordered_json j = signature_header_json(sig);
    j["value"] = hex32(sig.value);
    return j;
}

ordered_json creation_content_json(const CreationMetadata& unit) {
    if (unit.identifier.empty()) throw CanonicalizationError("identifier");
    if (unit.payload.descriptor.format.empty()) throw CanonicalizationError("payload.format");
    if (unit.payload.descriptor.encoding.empty()) throw CanonicalizationError("payload.encoding");
    if (unit.work_hash.algorithm.empty()) throw CanonicalizationError("work_hash.algorithm");

    ordered_json j;
    j["mml"] = kCreationTag;
    j["identifier"] = unit.identifier.canonical();
    ordered_json payload;
    payload["format"] = unit.payload.descriptor.format;
    payload["encoding"] = unit.payload.descriptor.encoding;
    ordered_json entries = ordered_json::object();
    // std::map iterates in key-byte order, which is the canonical order.
    for (const auto& [k, v] : unit.payload.entries) {
        if (k.empty()) throw CanonicalizationError("payload.entries.key");
        entries[k] = v;
    }
    payload["entries"] = std::move(entries);
    j["payload"] = std::move(payload);
    ordered_json wh;
    wh["algorithm"] = unit.work_hash.algorithm;
    wh["value"] = hex_encode(unit.work_hash.value);
    j["work_hash"] = std::move(wh);
    if (unit.prev_revision) {
        if (unit.prev_revision->identifier.empty()) {
            throw CanonicalizationError("prev_revision.identifier");
        }
        ordered_json pr;
        pr["identifier"] = unit.prev_revision->identifier.canonical();
        pr["hash"] = hex32(unit.prev_revision->prev_hash);
        j["prev_revision"] = std::move(pr);
    }
    return j;
}

ordered_json registry_content_json(const RegistryMetadata& rm) {
    if (rm.identifier.empty()) throw CanonicalizationError("identifier");
    ordered_json j;
    j["mml"] = kRegistryTag;
    j["identifier"] = rm.identifier.canonical();
    if (rm.works_id) j["works_id"] = *rm.works_id;
    j["full_metadata_hash"] = hex32(rm.full_metadata_hash);
    if (rm.prev_txid) j["prev_txid"] = hex32(*rm.prev_txid);
    return j;
}

bool get_string(const ordered_json& j, const char* key, std::string& out) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return false;
    out = it->get<std::string>();
    return true;
}

bool parse_signature(const ordered_json& j, Signature& sig, std::string* error) {
    std::string pk_hex, value_hex;
    if (!get_string(j, "algorithm", sig.algorithm) || !get_string(j, "signer_id", sig.signer_id) ||
        !get_string(j, "signer_public_key", pk_hex) || !get_string(j, "value", value_hex) ||
        !j.contains("timestamp") || !j["timestamp"].is_number_integer()) {
        if (error) *error = "signature: missing or mistyped field";
        return false;
    }
    sig.timestamp = j["timestamp"].get<std::int64_t>();
    auto pk = hex_decode(pk_hex);
    auto value = hex_decode(value_hex);
    if (!pk || pk->size() != sig.signer_public_key.size() || !value ||
        value->size() != sig.value.size()) {
        if (error) *error = "signature: bad hex field length";
        return false;
    }
    std::copy(pk->begin(), pk->end(), sig.signer_public_key.begin());
    std::copy(value->begin(), value->end(), sig.value.begin());
    return true;
}

bool parse_digest32(const std::string& hex, crypto::Digest& out, std::string* error,
                    const char* what) {
    auto bytes = hex_decode(hex);
    if (!bytes || bytes->size() != out.size()) {
        if (error) *error = std::string(what) + ": expected 32 hex-encoded bytes";
        return false;
    }
    std::copy(bytes->begin(), bytes->end(), out.begin());
    return true;
}

}  // namespace

std::string canonical_content_bytes(const CreationMetadata& unit) {
    return creation_content_json(unit).dump();
}

std::string canonical_content_bytes(const RegistryMetadata& rm) {
    return registry_content_json(rm).dump();
}

std::string signing_message(const std::string& content_bytes, const Signature& sig) {
    return content_bytes + "\n" + signature_header_json(sig).dump();
}

std::string canonical_signed_bytes(const CreationMetadata& unit) {
    ordered_json j = creation_content_json(unit);
    j["signature"] = signature_json(unit.signature);
    return j.dump();
}

std::string canonical_signed_bytes(const RegistryMetadata& rm) {
    ordered_json j = registry_content_json(rm);
    j["signature"] = signature_json(rm.signature);
    return j.dump();
}

crypto::Digest unit_hash(const CreationMetadata& unit) {
    return crypto::sha256(canonical_signed_bytes(unit));
}

crypto::Digest unit_hash(const RegistryMetadata& rm) {
    return crypto::sha256(canonical_signed_bytes(rm));
}

std::optional<CreationMetadata> parse_creation(const std::string& bytes, std::string* error) {
    ordered_json j = ordered_json::parse(bytes, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        if (error) *error = "not a JSON object";
        return std::nullopt;
    }
    std::string tag;
    if (!get_string(j, "mml", tag) || tag != kCreationTag) {
        if (error) *error = "missing or wrong format tag";
        return std::nullopt;
    }
    CreationMetadata unit;
    std::string id_text;
    if (!get_string(j, "identifier", id_text)) {
        if (error) *error = "identifier: missing";
        return std::nullopt;
    }
    auto id = Identifier::parse(id_text);
    if (!id) {
        if (error) *error = "identifier: malformed";
        return std::nullopt;
    }
    unit.identifier = *id;

    if (!j.contains("payload") || !j["payload"].is_object()) {
        if (error) *error = "payload: missing";
        return std::nullopt;
    }
    const auto& p = j["payload"];
    if (!get_string(p, "format", unit.payload.descriptor.format) ||
        !get_string(p, "encoding", unit.payload.descriptor.encoding) || !p.contains("entries") ||
        !p["entries"].is_object()) {
        if (error) *error = "payload: missing or mistyped field";
        return std::nullopt;
    }
    for (const auto& [k, v] : p["entries"].items()) {
        if (!v.is_string()) {
            if (error) *error = "payload.entries: non-string value";
            return std::nullopt;
        }
        unit.payload.entries[k] = v.get<std::string>();
    }

    if (!j.contains("work_hash") || !j["work_hash"].is_object()) {
        if (error) *error = "work_hash: missing";
        return std::nullopt;
    }
    std::string wh_hex;
    if (!get_string(j["work_hash"], "algorithm", unit.work_hash.algorithm) ||
        !get_string(j["work_hash"], "value", wh_hex)) {
        if (error) *error = "work_hash: missing field";
        return std::nullopt;
    }
    auto wh = hex_decode(wh_hex);
    if (!wh) {
        if (error) *error = "work_hash.value: bad hex";
        return std::nullopt;
    }
    unit.work_hash.value = *wh;

    if (j.contains("prev_revision")) {
        const auto& pr = j["prev_revision"];
        std::string pr_id_text, pr_hash_hex;
        if (!pr.is_object() || !get_string(pr, "identifier", pr_id_text) ||
            !get_string(pr, "hash", pr_hash_hex)) {
            if (error) *error = "prev_revision: missing field";
            return std::nullopt;
        }
        auto pr_id = Identifier::parse(pr_id_text);
        if (!pr_id) {
            if (error) *error = "prev_revision.identifier: malformed";
            return std::nullopt;
        }
        RevisionLink link;
        link.identifier = *pr_id;
        if (!parse_digest32(pr_hash_hex, link.prev_hash, error, "prev_revision.hash")) {
            return std::nullopt;
        }
        unit.prev_revision = link;
    }

    if (!j.contains("signature") || !j["signature"].is_object() ||
        !parse_signature(j["signature"], unit.signature, error)) {
        if (error && error->empty()) *error = "signature: missing";
        return std::nullopt;
    }
    return unit;
}

std::optional<RegistryMetadata> parse_registry(const std::string& bytes, std::string* error) {
    ordered_json j = ordered_json::parse(bytes, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        if (error) *error = "not a JSON object";
        return std::nullopt;
    }
    std::string tag;
    if (!get_string(j, "mml", tag) || tag != kRegistryTag) {
        if (error) *error = "missing or wrong format tag";
        return std::nullopt;
    }
    RegistryMetadata rm;
    std::string id_text;
    if (!get_string(j, "identifier", id_text)) {
        if (error) *error = "identifier: missing";
        return std::nullopt;
    }
    auto id = Identifier::parse(id_text);
    if (!id) {
        if (error) *error = "identifier: malformed";
        return std::nullopt;
    }
    rm.identifier = *id;
    if (j.contains("works_id")) {
        std::string wid;
        if (!get_string(j, "works_id", wid)) {
            if (error) *error = "works_id: mistyped";
            return std::nullopt;
        }
        rm.works_id = wid;
    }
    std::string fmh_hex;
    if (!get_string(j, "full_metadata_hash", fmh_hex) ||
        !parse_digest32(fmh_hex, rm.full_metadata_hash, error, "full_metadata_hash")) {
        if (error && error->empty()) *error = "full_metadata_hash: missing";
        return std::nullopt;
    }
    if (j.contains("prev_txid")) {
        std::string ptx_hex;
        TxId ptx{};
        if (!get_string(j, "prev_txid", ptx_hex) ||
            !parse_digest32(ptx_hex, ptx, error, "prev_txid")) {
            return std::nullopt;
        }
        rm.prev_txid = ptx;
    }
    if (!j.contains("signature") || !j["signature"].is_object() ||
        !parse_signature(j["signature"], rm.signature, error)) {
        if (error && error->empty()) *error = "signature: missing";
        return std::nullopt;
    }
    return rm;
}

}  // namespace mml
