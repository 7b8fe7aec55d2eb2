#pragma once

#include <stdexcept>
#include <string>

#include "mml/metadata.hpp"

namespace mml {

// A unit that fails its field invariants cannot be canonicalized; the message
// names the offending field.
class CanonicalizationError : public std::runtime_error {
public:
    explicit CanonicalizationError(const std::string& field)
        : std::runtime_error("canonicalization error: invalid field '" + field + "'"),
          field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// Canonical byte form: compact JSON, fields in a fixed documented order,
// payload entries sorted by key bytes, binary values lowercase hex, UTF-8.
// The `.cmeta` / `.rmeta` file formats are exactly these bytes.
std::string canonical_content_bytes(const CreationMetadata& unit);  // Parts 1-3 + prev_revision
std::string canonical_content_bytes(const RegistryMetadata& rm);    // Parts 5-7 + prev_txid
std::string canonical_signed_bytes(const CreationMetadata& unit);
std::string canonical_signed_bytes(const RegistryMetadata& rm);

// Message actually signed: content bytes followed by the signature header
// (algorithm, signer, timestamp) so those fields are tamper-evident too.
std::string signing_message(const std::string& content_bytes, const Signature& sig);

crypto::Digest unit_hash(const CreationMetadata& unit);  // sha-256 over canonical signed bytes
crypto::Digest unit_hash(const RegistryMetadata& rm);

// Strict parsers for the canonical file/interchange form. On failure the
// error string explains what was rejected.
std::optional<CreationMetadata> parse_creation(const std::string& bytes, std::string* error);
std::optional<RegistryMetadata> parse_registry(const std::string& bytes, std::string* error);

}  // namespace mml
