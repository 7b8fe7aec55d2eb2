#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mml/crypto.hpp"
#include "mml/identifier.hpp"

namespace mml {

constexpr std::size_t kMaxPayloadBytes = 64 * 1024;
constexpr std::size_t kMaxRegistryPayloadBytes = 1024;

struct WorkDigest {
    std::string algorithm = "sha-256";
    // Kept as a vector so a wrong-length digest is representable and can be
    // classified as malformed rather than rejected at construction.
    std::vector<std::uint8_t> value;

    bool operator==(const WorkDigest&) const = default;
};

struct PayloadDescriptor {
    std::string format = "kv-v1";
    std::string encoding = "utf-8";

    bool operator==(const PayloadDescriptor&) const = default;
};

// Factual fields about a work's creation. The map keeps keys sorted by byte
// value, which is also the canonical serialization order.
struct WorksPayload {
    PayloadDescriptor descriptor;
    std::map<std::string, std::string> entries;

    bool operator==(const WorksPayload&) const = default;
};

struct Signature {
    std::string algorithm = "ed25519";
    std::string signer_id;
    crypto::PublicKey signer_public_key{};
    std::int64_t timestamp = 0;
    crypto::SignatureBytes value{};

    bool operator==(const Signature&) const = default;
};

struct RevisionLink {
    Identifier identifier;
    crypto::Digest prev_hash{};  // hash of the prior unit's canonical signed bytes

    bool operator==(const RevisionLink&) const = default;
};

// The four-part signed creation-metadata unit.
struct CreationMetadata {
    Identifier identifier;                      // Part 1
    WorksPayload payload;                       // Part 2
    WorkDigest work_hash;                       // Part 3
    std::optional<RevisionLink> prev_revision;  // revision chain link
    Signature signature;                        // Part 4

    bool operator==(const CreationMetadata&) const = default;
};

using TxId = crypto::Digest;

// The short ledger record summarizing a creation-metadata unit.
struct RegistryMetadata {
    Identifier identifier;                // Part 5, equals the creation unit's
    std::optional<std::string> works_id;  // Part 6, ISRC/ISWC when assigned
    crypto::Digest full_metadata_hash{};  // Part 7
    std::optional<TxId> prev_txid;        // prior confirmed registration
    Signature signature;                  // Part 8

    bool operator==(const RegistryMetadata&) const = default;
};

enum class VerifyResult { ok, tampered, malformed };

const char* to_string(VerifyResult r);

// Structural checks only (no signature verification). Returns the first
// violated field name, or nullopt when all field invariants hold.
std::optional<std::string> structural_error(const CreationMetadata& unit);
std::optional<std::string> structural_error(const RegistryMetadata& rm);
std::optional<std::string> payload_error(const WorksPayload& payload);

std::size_t payload_serialized_size(const WorksPayload& payload);

}  // namespace mml
