#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "mml/identifier.hpp"

namespace mml {

class NamespaceError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LocationEntry {
    std::string endpoint;
    std::int64_t added_at = 0;
    bool tombstoned = false;
};

struct IdentifierRecord {
    Identifier identifier;
    std::vector<LocationEntry> locations;  // insertion order, append-only
    std::int64_t created_at = 0;
};

// Handle/DOI-style resolution: identifier -> repository endpoints.
// Open registration, append-only records, tombstones instead of deletes.
class Resolver {
public:
    Identifier mint(const std::string& prefix, std::span<const std::uint8_t> entropy,
                    std::int64_t now);
    Identifier mint_random(const std::string& prefix, std::int64_t now);

    IdentifierRecord bind(const Identifier& id, const std::string& endpoint, std::int64_t now);
    void unbind(const Identifier& id, const std::string& endpoint);

    // Active endpoints in insertion order; empty when unknown.
    std::vector<std::string> resolve(const Identifier& id) const;

    std::size_t record_count() const;

private:
    mutable std::mutex mutex_;
    std::map<Identifier, IdentifierRecord> records_;
};

}  // namespace mml
