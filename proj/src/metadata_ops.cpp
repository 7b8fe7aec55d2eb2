#include "mml/metadata_ops.hpp"

#include <set>

namespace mml {

namespace {
std::span<const std::uint8_t> as_bytes(const std::string& s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

Signature make_signature(const std::string& content_bytes, const crypto::SecretKey& key,
                         const crypto::PublicKey& public_key, const std::string& signer_id,
                         std::int64_t timestamp) {
    Signature sig;
    sig.signer_id = signer_id;
    sig.signer_public_key = public_key;
    sig.timestamp = timestamp;
    const std::string message = signing_message(content_bytes, sig);
    sig.value = crypto::ed25519_sign(as_bytes(message), key);
    return sig;
}

bool signature_ok(const std::string& content_bytes, const Signature& sig) {
    const std::string message = signing_message(content_bytes, sig);
    return crypto::ed25519_verify(as_bytes(message), sig.value, sig.signer_public_key);
}
}  // namespace

const char* to_string(RegistryVerifyResult r) {
    switch (r) {
        case RegistryVerifyResult::ok: return "ok";
        case RegistryVerifyResult::identifier_mismatch: return "identifier-mismatch";
        case RegistryVerifyResult::hash_mismatch: return "hash-mismatch";
        case RegistryVerifyResult::bad_signature: return "bad-signature";
    }
    return "unknown";
}

WorkDigest hash_work(std::span<const std::uint8_t> work_bytes) {
    WorkDigest d;
    auto h = crypto::sha256(work_bytes);
    d.value.assign(h.begin(), h.end());
    return d;
}

CreationMetadata sign_creation(CreationMetadata unit, const crypto::SecretKey& key,
                               const crypto::PublicKey& public_key, const std::string& signer_id,
                               std::int64_t timestamp) {
    unit.signature = Signature{};
    unit.signature.signer_id = signer_id;
    if (auto err = structural_error(unit)) {
        throw ValidationError("cannot sign invalid unit: " + *err);
    }
    unit.signature =
        make_signature(canonical_content_bytes(unit), key, public_key, signer_id, timestamp);
    return unit;
}

VerifyResult verify_creation(const CreationMetadata& unit) {
    if (structural_error(unit)) return VerifyResult::malformed;
    std::string content;
    try {
        content = canonical_content_bytes(unit);
    } catch (const CanonicalizationError&) {
        return VerifyResult::malformed;
    }
    return signature_ok(content, unit.signature) ? VerifyResult::ok : VerifyResult::tampered;
}

RegistryMetadata sign_registry(RegistryMetadata rm, const crypto::SecretKey& key,
                               const crypto::PublicKey& public_key, const std::string& signer_id,
                               std::int64_t timestamp) {
    rm.signature =
        make_signature(canonical_content_bytes(rm), key, public_key, signer_id, timestamp);
    return rm;
}

RegistryMetadata derive_registry(const CreationMetadata& unit,
                                 const std::optional<std::string>& works_id,
                                 const std::optional<TxId>& prev_txid,
                                 const crypto::SecretKey& key, const crypto::PublicKey& public_key,
                                 const std::string& signer_id, std::int64_t timestamp) {
    if (verify_creation(unit) != VerifyResult::ok) {
        throw ProvenanceError("refusing to derive registry metadata from an unverifiable unit");
    }
    RegistryMetadata rm;
    rm.identifier = unit.identifier;
    rm.works_id = works_id;
    rm.full_metadata_hash = unit_hash(unit);
    rm.prev_txid = prev_txid;
    return sign_registry(std::move(rm), key, public_key, signer_id, timestamp);
}

bool verify_registry_signature(const RegistryMetadata& rm) {
    try {
        return signature_ok(canonical_content_bytes(rm), rm.signature);
    } catch (const CanonicalizationError&) {
        return false;
    }
}

RegistryVerifyResult verify_registry_pair(const RegistryMetadata& rm,
                                          const CreationMetadata& unit) {
    if (rm.identifier != unit.identifier) return RegistryVerifyResult::identifier_mismatch;
    if (verify_creation(unit) != VerifyResult::ok || !verify_registry_signature(rm)) {
        return RegistryVerifyResult::bad_signature;
    }
    if (rm.full_metadata_hash != unit_hash(unit)) return RegistryVerifyResult::hash_mismatch;
    return RegistryVerifyResult::ok;
}

CreationMetadata new_revision(const CreationMetadata& old_unit, WorksPayload new_payload,
                              WorkDigest new_work_hash, const Identifier& new_identifier,
                              const crypto::SecretKey& key, const crypto::PublicKey& public_key,
                              const std::string& signer_id, std::int64_t timestamp) {
    if (new_identifier == old_unit.identifier) {
        throw RevisionError("a revision must carry a fresh identifier");
    }
    if (verify_creation(old_unit) != VerifyResult::ok) {
        throw ProvenanceError("refusing to revise an unverifiable unit");
    }
    CreationMetadata unit;
    unit.identifier = new_identifier;
    unit.payload = std::move(new_payload);
    unit.work_hash = std::move(new_work_hash);
    unit.prev_revision = RevisionLink{old_unit.identifier, unit_hash(old_unit)};
    return sign_creation(std::move(unit), key, public_key, signer_id, timestamp);
}

RevisionChain walk_revision_chain(const CreationMetadata& head, const UnitFetcher& fetch) {
    RevisionChain chain;
    chain.units.push_back(head);
    std::set<Identifier> seen{head.identifier};
    const CreationMetadata* current = &chain.units.back();
    while (current->prev_revision) {
        const RevisionLink link = *current->prev_revision;
        if (seen.contains(link.identifier)) {
            throw CycleError("revision chain revisits " + link.identifier.canonical());
        }
        auto prev = fetch(link.identifier);
        if (!prev) {
            chain.broken = true;
            chain.break_depth = chain.units.size();
            chain.break_reason = "missing ancestor " + link.identifier.canonical();
            return chain;
        }
        if (unit_hash(*prev) != link.prev_hash) {
            chain.broken = true;
            chain.break_depth = chain.units.size();
            chain.break_reason = "hash mismatch at " + link.identifier.canonical();
            return chain;
        }
        seen.insert(link.identifier);
        chain.units.push_back(std::move(*prev));
        current = &chain.units.back();
    }
    return chain;
}

}  // namespace mml
