#pragma once
// Shared test fixtures: deterministic keys and signed units.

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "mml/metadata_ops.hpp"

namespace fixtures {

inline mml::crypto::KeyPair keys(const std::string& label) {
    const auto seed = mml::crypto::sha256("test-key/" + label);
    return mml::crypto::keypair_from_seed(seed);
}

inline mml::Identifier id(const std::string& suffix, const std::string& prefix = "10.5555") {
    return *mml::Identifier::make(prefix, suffix);
}

inline mml::CreationMetadata unsigned_unit(
    const std::string& suffix,
    std::map<std::string, std::string> entries = {{"title", "Test Song"},
                                                  {"composer", "A. Author"}}) {
    mml::CreationMetadata unit;
    unit.identifier = id(suffix);
    unit.payload.entries = std::move(entries);
    unit.work_hash = mml::hash_work(mml::crypto::sha256("work/" + suffix));
    return unit;
}

inline mml::CreationMetadata signed_unit(
    const std::string& suffix, const std::string& key_label = "alice",
    std::map<std::string, std::string> entries = {{"title", "Test Song"},
                                                  {"composer", "A. Author"}}) {
    const auto kp = keys(key_label);
    return mml::sign_creation(unsigned_unit(suffix, std::move(entries)), kp.secret_key,
                              kp.public_key, key_label, 1700000000);
}

// Randomized unit for property/fuzz tests; structure varies with the rng.
inline mml::CreationMetadata random_signed_unit(std::mt19937_64& rng,
                                                const std::string& key_label = "fuzz") {
    const auto kp = keys(key_label);
    mml::CreationMetadata unit;
    unit.identifier = id("rnd-" + std::to_string(rng()));
    const int n_entries = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n_entries; ++i) {
        unit.payload.entries["field" + std::to_string(rng() % 100)] =
            "value-" + std::to_string(rng());
    }
    const std::string work = "work-bytes-" + std::to_string(rng());
    unit.work_hash = mml::hash_work(
        std::span(reinterpret_cast<const std::uint8_t*>(work.data()), work.size()));
    if (rng() % 4 == 0) {
        mml::RevisionLink link;
        link.identifier = id("prev-" + std::to_string(rng()));
        auto h = mml::crypto::sha256("fake-ancestor-" + std::to_string(rng()));
        link.prev_hash = h;
        unit.prev_revision = link;
    }
    return mml::sign_creation(std::move(unit), kp.secret_key, kp.public_key, key_label,
                              1700000000 + static_cast<std::int64_t>(rng() % 1000));
}

}  // namespace fixtures
