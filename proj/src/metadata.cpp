#include "mml/metadata.hpp"

#include "mml/canonical.hpp"

namespace mml {

const char* to_string(VerifyResult r) {
    switch (r) {
        case VerifyResult::ok: return "ok";
        case VerifyResult::tampered: return "tampered";
        case VerifyResult::malformed: return "malformed";
    }
    return "unknown";
}

std::size_t payload_serialized_size(const WorksPayload& payload) {
    std::size_t total = payload.descriptor.format.size() + payload.descriptor.encoding.size();
    for (const auto& [k, v] : payload.entries) {
        total += k.size() + v.size() + 2;
    }
    return total;
}

std::optional<std::string> payload_error(const WorksPayload& payload) {
    if (payload.descriptor.format.empty()) return "payload.descriptor.format";
    if (payload.descriptor.encoding.empty()) return "payload.descriptor.encoding";
    for (const auto& [k, v] : payload.entries) {
        if (k.empty()) return "payload.entries.key";
        (void)v;
    }
    if (payload_serialized_size(payload) > kMaxPayloadBytes) return "payload.size";
    return std::nullopt;
}

namespace {
std::optional<std::string> signature_field_error(const Signature& sig, const char* prefix) {
    if (sig.algorithm != "ed25519") return std::string(prefix) + ".algorithm";
    if (sig.signer_id.empty()) return std::string(prefix) + ".signer_id";
    return std::nullopt;
}
}  // namespace

std::optional<std::string> structural_error(const CreationMetadata& unit) {
    if (unit.identifier.empty()) return "identifier";
    if (auto e = payload_error(unit.payload)) return e;
    if (unit.work_hash.algorithm != "sha-256") return "work_hash.algorithm";
    if (unit.work_hash.value.size() != 32) return "work_hash.value";
    if (unit.prev_revision) {
        if (unit.prev_revision->identifier.empty()) return "prev_revision.identifier";
        if (unit.prev_revision->identifier == unit.identifier) return "prev_revision.identifier";
    }
    return signature_field_error(unit.signature, "signature");
}

std::optional<std::string> structural_error(const RegistryMetadata& rm) {
    if (rm.identifier.empty()) return "identifier";
    if (rm.works_id && rm.works_id->size() > 64) return "works_id";
    if (auto e = signature_field_error(rm.signature, "signature")) return e;
    if (canonical_signed_bytes(rm).size() > kMaxRegistryPayloadBytes) return "size";
    return std::nullopt;
}

}  // namespace mml
