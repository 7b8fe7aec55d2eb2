#include "mml/crypto.hpp"

#include <sodium.h>

#include <stdexcept>

namespace mml::crypto {

void init() {
    static const int rc = sodium_init();
    if (rc < 0) throw std::runtime_error("libsodium initialization failed");
}

Digest sha256(std::span<const std::uint8_t> bytes) {
    init();
    Digest out;
    crypto_hash_sha256(out.data(), bytes.data(), bytes.size());
    return out;
}

Digest sha256(const std::string& text) {
    return sha256(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

KeyPair generate_keypair() {
    init();
    KeyPair kp;
    crypto_sign_ed25519_keypair(kp.public_key.data(), kp.secret_key.data());
    return kp;
}

KeyPair keypair_from_seed(std::span<const std::uint8_t, 32> seed) {
    init();
    KeyPair kp;
    crypto_sign_ed25519_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

SignatureBytes ed25519_sign(std::span<const std::uint8_t> message, const SecretKey& key) {
    init();
    SignatureBytes sig;
    crypto_sign_ed25519_detached(sig.data(), nullptr, message.data(), message.size(), key.data());
    return sig;
}

bool ed25519_verify(std::span<const std::uint8_t> message, const SignatureBytes& sig,
                    const PublicKey& key) {
    init();
    return crypto_sign_ed25519_verify_detached(sig.data(), message.data(), message.size(),
                                               key.data()) == 0;
}

std::vector<std::uint8_t> random_bytes(std::size_t n) {
    init();
    std::vector<std::uint8_t> out(n);
    randombytes_buf(out.data(), out.size());
    return out;
}

}  // namespace mml::crypto
