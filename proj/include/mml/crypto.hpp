#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mml::crypto {

using Digest = std::array<std::uint8_t, 32>;
using PublicKey = std::array<std::uint8_t, 32>;
using SecretKey = std::array<std::uint8_t, 64>;  // libsodium ed25519 layout
using SignatureBytes = std::array<std::uint8_t, 64>;

struct KeyPair {
    PublicKey public_key;
    SecretKey secret_key;
};

// Called lazily by every entry point; safe to call repeatedly.
void init();

Digest sha256(std::span<const std::uint8_t> bytes);
Digest sha256(const std::string& text);

KeyPair generate_keypair();
KeyPair keypair_from_seed(std::span<const std::uint8_t, 32> seed);

SignatureBytes ed25519_sign(std::span<const std::uint8_t> message, const SecretKey& key);
bool ed25519_verify(std::span<const std::uint8_t> message, const SignatureBytes& sig,
                    const PublicKey& key);

std::vector<std::uint8_t> random_bytes(std::size_t n);

}  // namespace mml::crypto
