#include "mml/resolver.hpp"

#include <algorithm>

#include "mml/crypto.hpp"
#include "mml/hex.hpp"

namespace mml {

Identifier Resolver::mint(const std::string& prefix, std::span<const std::uint8_t> entropy,
                          std::int64_t now) {
    if (!valid_doi_prefix(prefix)) {
        throw NamespaceError("malformed registrant prefix: " + prefix);
    }
    const std::string suffix = base32_encode_lower(entropy);
    auto id = Identifier::make(prefix, suffix);
    if (!id) throw NamespaceError("entropy produced an invalid suffix");

    std::lock_guard lock(mutex_);
    if (records_.contains(*id)) throw NamespaceError("identifier collision on mint");
    IdentifierRecord rec;
    rec.identifier = *id;
    rec.created_at = now;
    records_.emplace(*id, std::move(rec));
    return *id;
}

Identifier Resolver::mint_random(const std::string& prefix, std::int64_t now) {
    const auto entropy = crypto::random_bytes(16);
    return mint(prefix, entropy, now);
}

IdentifierRecord Resolver::bind(const Identifier& id, const std::string& endpoint,
                                std::int64_t now) {
    if (endpoint.empty()) throw std::invalid_argument("empty endpoint");

    std::lock_guard lock(mutex_);
    auto [it, inserted] = records_.try_emplace(id);
    if (inserted) {
        it->second.identifier = id;
        it->second.created_at = now;
    }
    auto& locations = it->second.locations;
    auto existing = std::find_if(locations.begin(), locations.end(),
                                 [&](const LocationEntry& l) { return l.endpoint == endpoint; });
    if (existing != locations.end()) {
        existing->tombstoned = false;
    } else {
        locations.push_back({endpoint, now, false});
    }
    return it->second;
}

void Resolver::unbind(const Identifier& id, const std::string& endpoint) {
    std::lock_guard lock(mutex_);
    auto it = records_.find(id);
    if (it == records_.end()) return;
    for (auto& loc : it->second.locations) {
        if (loc.endpoint == endpoint) loc.tombstoned = true;
    }
}

std::vector<std::string> Resolver::resolve(const Identifier& id) const {
    std::lock_guard lock(mutex_);
    auto it = records_.find(id);
    if (it == records_.end()) return {};
    std::vector<std::string> out;
    for (const auto& loc : it->second.locations) {
        if (!loc.tombstoned) out.push_back(loc.endpoint);
    }
    return out;
}

std::size_t Resolver::record_count() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

}  // namespace mml
