#pragma once

#include <functional>
#include <vector>

#include "mml/canonical.hpp"
#include "mml/metadata.hpp"

namespace mml {

class ValidationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class ProvenanceError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class RevisionError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class CycleError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

WorkDigest hash_work(std::span<const std::uint8_t> work_bytes);

CreationMetadata sign_creation(CreationMetadata unsigned_unit, const crypto::SecretKey& key,
                               const crypto::PublicKey& public_key, const std::string& signer_id,
                               std::int64_t timestamp);

VerifyResult verify_creation(const CreationMetadata& unit);

RegistryMetadata sign_registry(RegistryMetadata unsigned_rm, const crypto::SecretKey& key,
                               const crypto::PublicKey& public_key, const std::string& signer_id,
                               std::int64_t timestamp);

enum class RegistryVerifyResult { ok, identifier_mismatch, hash_mismatch, bad_signature };
const char* to_string(RegistryVerifyResult r);

// Part 5 copied from the unit, Part 7 recomputed over its signed bytes.
// Refuses units that do not verify.
RegistryMetadata derive_registry(const CreationMetadata& unit,
                                 const std::optional<std::string>& works_id,
                                 const std::optional<TxId>& prev_txid,
                                 const crypto::SecretKey& key, const crypto::PublicKey& public_key,
                                 const std::string& signer_id, std::int64_t timestamp);

RegistryVerifyResult verify_registry_pair(const RegistryMetadata& rm, const CreationMetadata& unit);

bool verify_registry_signature(const RegistryMetadata& rm);

CreationMetadata new_revision(const CreationMetadata& old_unit, WorksPayload new_payload,
                              WorkDigest new_work_hash, const Identifier& new_identifier,
                              const crypto::SecretKey& key, const crypto::PublicKey& public_key,
                              const std::string& signer_id, std::int64_t timestamp);

using UnitFetcher = std::function<std::optional<CreationMetadata>(const Identifier&)>;

struct RevisionChain {
    std::vector<CreationMetadata> units;  // newest first
    // Set when an ancestor is missing or its recomputed hash disagrees with
    // the stored link; depth is the index where the chain broke.
    bool broken = false;
    std::size_t break_depth = 0;
    std::string break_reason;
};

RevisionChain walk_revision_chain(const CreationMetadata& head, const UnitFetcher& fetch);

}  // namespace mml
