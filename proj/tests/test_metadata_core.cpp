#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "mml/canonical.hpp"
#include "mml/hex.hpp"
#include "mml/metadata_ops.hpp"
#include "sha256_ref.hpp"

using namespace mml;

TEST_CASE("canonical bytes are order independent") {
    CreationMetadata a = fixtures::unsigned_unit("order-test", {});
    a.payload.entries.insert({"zeta", "1"});
    a.payload.entries.insert({"alpha", "2"});
    a.payload.entries.insert({"mid", "3"});

    CreationMetadata b = fixtures::unsigned_unit("order-test", {});
    b.payload.entries.insert({"mid", "3"});
    b.payload.entries.insert({"alpha", "2"});
    b.payload.entries.insert({"zeta", "1"});

    CHECK(canonical_content_bytes(a) == canonical_content_bytes(b));
}

TEST_CASE("canonicalization is deterministic across calls") {
    CreationMetadata unit = fixtures::unsigned_unit("determinism", {});
    CHECK(canonical_content_bytes(unit) == canonical_content_bytes(unit));
}

TEST_CASE("canonical bytes match an independently assembled reference") {
    // Built by hand: sorted keys, fixed field order, lowercase hex.
    CreationMetadata unit = fixtures::unsigned_unit("ref.fixture-1",
                                                    {{"title", "Ref Song"}, {"b_key", "two"},
                                                     {"a_key", "one"}});
    const std::string wh_hex = hex_encode(unit.work_hash.value);
    const std::string expected =
        R"({"mml":"creation-metadata/v1","identifier":"doi:10.5555/ref.fixture-1",)"
        R"("payload":{"format":"kv-v1","encoding":"utf-8",)"
        R"("entries":{"a_key":"one","b_key":"two","title":"Ref Song"}},)"
        R"("work_hash":{"algorithm":"sha-256","value":")" + wh_hex + R"("}})";
    CHECK(canonical_content_bytes(unit) == expected);
}

TEST_CASE("canonicalization rejects invalid fields by name") {
    CreationMetadata unit = fixtures::unsigned_unit("bad");
    unit.payload.descriptor.format.clear();
    CHECK_THROWS_AS(canonical_content_bytes(unit), CanonicalizationError);
    try {
        canonical_content_bytes(unit);
    } catch (const CanonicalizationError& e) {
        CHECK(e.field() == "payload.format");
    }
}

TEST_CASE("hash_work matches published SHA-256 vectors") {
    CHECK(hex_encode(hash_work({}).value) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const std::string abc = "abc";
    auto digest = hash_work(std::span(reinterpret_cast<const std::uint8_t*>(abc.data()), 3));
    CHECK(hex_encode(digest.value) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("hash_work agrees with the independent reference implementation") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 50; ++i) {
        std::vector<std::uint8_t> data(rng() % 300);
        for (auto& b : data) b = static_cast<std::uint8_t>(rng());
        const auto ours = hash_work(data);
        const auto ref = testref::sha256(data.data(), data.size());
        CHECK(std::equal(ours.value.begin(), ours.value.end(), ref.begin(), ref.end()));
    }
}

TEST_CASE("different single-byte inputs hash differently") {
    const std::uint8_t a = 0x00, b = 0x01;
    CHECK(hash_work({&a, 1}).value != hash_work({&b, 1}).value);
}

TEST_CASE("sign and verify round trip") {
    auto unit = fixtures::signed_unit("roundtrip");
    CHECK(verify_creation(unit) == VerifyResult::ok);
}

TEST_CASE("payload edit after signing is detected as tampered") {
    auto unit = fixtures::signed_unit("tamper");
    unit.payload.entries["title"] = "Altered Title";
    CHECK(verify_creation(unit) == VerifyResult::tampered);
}

TEST_CASE("two keys produce distinct, individually valid signatures") {
    auto a = fixtures::signed_unit("twokeys", "alice");
    auto b = fixtures::signed_unit("twokeys", "bob");
    CHECK(a.signature.value != b.signature.value);
    CHECK(verify_creation(a) == VerifyResult::ok);
    CHECK(verify_creation(b) == VerifyResult::ok);
}

TEST_CASE("signing an invalid unit is refused") {
    CreationMetadata unit = fixtures::unsigned_unit("invalid");
    unit.work_hash.value.resize(31);
    const auto kp = fixtures::keys("alice");
    CHECK_THROWS_AS(sign_creation(unit, kp.secret_key, kp.public_key, "alice", 0),
                    ValidationError);
}

TEST_CASE("short work hash is malformed, not tampered") {
    auto unit = fixtures::signed_unit("shorthash");
    unit.work_hash.value.resize(31);
    CHECK(verify_creation(unit) == VerifyResult::malformed);
}

TEST_CASE("tampering with signature metadata fields is detected") {
    auto unit = fixtures::signed_unit("sigfields");
    SUBCASE("timestamp") { unit.signature.timestamp += 1; }
    SUBCASE("signer_id") { unit.signature.signer_id = "mallory"; }
    SUBCASE("signature byte") { unit.signature.value[0] ^= 0x01; }
    CHECK(verify_creation(unit) == VerifyResult::tampered);
}

TEST_CASE("derive_registry copies the identifier") {
    auto unit = fixtures::signed_unit("derive");
    const auto kp = fixtures::keys("alice");
    auto rm = derive_registry(unit, "ISRC-US-ABC-24-00001", std::nullopt, kp.secret_key,
                              kp.public_key, "alice", 1700000001);
    CHECK(rm.identifier == unit.identifier);
    CHECK(rm.works_id == "ISRC-US-ABC-24-00001");
}

TEST_CASE("derive_registry hash matches an independent recomputation") {
    auto unit = fixtures::signed_unit("derivehash");
    const auto kp = fixtures::keys("alice");
    auto rm = derive_registry(unit, std::nullopt, std::nullopt, kp.secret_key, kp.public_key,
                              "alice", 1700000001);
    const auto ref = testref::sha256(canonical_signed_bytes(unit));
    CHECK(std::equal(rm.full_metadata_hash.begin(), rm.full_metadata_hash.end(), ref.begin(),
                     ref.end()));
}

TEST_CASE("derive_registry refuses tampered units") {
    auto unit = fixtures::signed_unit("derivebad");
    unit.payload.entries["title"] = "changed";
    const auto kp = fixtures::keys("alice");
    CHECK_THROWS_AS(derive_registry(unit, std::nullopt, std::nullopt, kp.secret_key,
                                    kp.public_key, "alice", 0),
                    ProvenanceError);
}

TEST_CASE("verify_registry_pair outcomes") {
    auto unit = fixtures::signed_unit("pair");
    const auto kp = fixtures::keys("alice");
    auto rm = derive_registry(unit, std::nullopt, std::nullopt, kp.secret_key, kp.public_key,
                              "alice", 1);
    CHECK(verify_registry_pair(rm, unit) == RegistryVerifyResult::ok);

    auto other = fixtures::signed_unit("pair-other");
    auto rm_other = rm;
    rm_other.identifier = other.identifier;
    CHECK(verify_registry_pair(rm_other, other) != RegistryVerifyResult::ok);

    // Same logical pair but the rm identifier was parsed from an uppercased
    // suffix: canonical lowercase equality still holds.
    auto upper = Identifier::parse("doi:10.5555/PAIR");
    REQUIRE(upper);
    auto rm_upper = rm;
    rm_upper.identifier = *upper;
    CHECK(verify_registry_pair(rm_upper, unit) == RegistryVerifyResult::ok);
}

TEST_CASE("verify_registry_pair flags a mismatched unit as hash mismatch") {
    auto unit = fixtures::signed_unit("pair-a");
    auto other = fixtures::signed_unit("pair-a", "alice", {{"title", "Different"}});
    const auto kp = fixtures::keys("alice");
    auto rm = derive_registry(unit, std::nullopt, std::nullopt, kp.secret_key, kp.public_key,
                              "alice", 1);
    CHECK(verify_registry_pair(rm, other) == RegistryVerifyResult::hash_mismatch);
}

TEST_CASE("new_revision links back to the old unit") {
    auto old_unit = fixtures::signed_unit("rev-base");
    const auto kp = fixtures::keys("alice");
    auto revised = new_revision(old_unit, old_unit.payload, old_unit.work_hash,
                                fixtures::id("rev-v2"), kp.secret_key, kp.public_key, "alice", 2);
    REQUIRE(revised.prev_revision.has_value());
    CHECK(revised.prev_revision->identifier == old_unit.identifier);
    CHECK(revised.prev_revision->prev_hash == unit_hash(old_unit));
    CHECK(verify_creation(revised) == VerifyResult::ok);
}

TEST_CASE("revision with a reused identifier is refused") {
    auto old_unit = fixtures::signed_unit("rev-reuse");
    const auto kp = fixtures::keys("alice");
    CHECK_THROWS_AS(new_revision(old_unit, old_unit.payload, old_unit.work_hash,
                                 old_unit.identifier, kp.secret_key, kp.public_key, "alice", 2),
                    RevisionError);
}

TEST_CASE("revision of an unverifiable unit is refused") {
    auto old_unit = fixtures::signed_unit("rev-tampered");
    old_unit.payload.entries["title"] = "edited";
    const auto kp = fixtures::keys("alice");
    CHECK_THROWS_AS(new_revision(old_unit, old_unit.payload, old_unit.work_hash,
                                 fixtures::id("rev-tampered-v2"), kp.secret_key, kp.public_key,
                                 "alice", 2),
                    ProvenanceError);
}

namespace {
std::vector<CreationMetadata> build_chain(int length) {
    const auto kp = fixtures::keys("alice");
    std::vector<CreationMetadata> chain;
    chain.push_back(fixtures::signed_unit("chain-v1"));
    for (int i = 2; i <= length; ++i) {
        WorksPayload payload = chain.back().payload;
        payload.entries["version"] = "v" + std::to_string(i);
        chain.push_back(new_revision(chain.back(), payload, chain.back().work_hash,
                                     fixtures::id("chain-v" + std::to_string(i)), kp.secret_key,
                                     kp.public_key, "alice", 1700000000 + i));
    }
    return chain;
}

UnitFetcher fetcher_for(const std::vector<CreationMetadata>& units) {
    return [&units](const Identifier& id) -> std::optional<CreationMetadata> {
        for (const auto& u : units) {
            if (u.identifier == id) return u;
        }
        return std::nullopt;
    };
}
}  // namespace

TEST_CASE("walking a 3-revision chain recovers construction order, newest first") {
    auto chain = build_chain(3);
    auto walked = walk_revision_chain(chain.back(), fetcher_for(chain));
    CHECK_FALSE(walked.broken);
    REQUIRE(walked.units.size() == 3);
    CHECK(walked.units[0].identifier == chain[2].identifier);
    CHECK(walked.units[1].identifier == chain[1].identifier);
    CHECK(walked.units[2].identifier == chain[0].identifier);
}

TEST_CASE("head without prev_revision walks to a single unit") {
    auto unit = fixtures::signed_unit("solo");
    auto walked = walk_revision_chain(unit, [](const Identifier&) { return std::nullopt; });
    CHECK(walked.units.size() == 1);
    CHECK_FALSE(walked.broken);
}

TEST_CASE("missing ancestor surfaces as a break marker, never silently") {
    auto chain = build_chain(3);
    std::vector<CreationMetadata> partial = {chain[2]};  // middle and root deleted
    auto walked = walk_revision_chain(chain.back(), fetcher_for(partial));
    CHECK(walked.broken);
    CHECK(walked.units.size() == 1);
    CHECK(walked.break_depth == 1);
}

TEST_CASE("hash-mismatched ancestor breaks the chain") {
    auto chain = build_chain(2);
    auto forged = chain;
    forged[0].payload.entries["title"] = "not the original";
    auto walked = walk_revision_chain(chain.back(), fetcher_for(forged));
    CHECK(walked.broken);
    CHECK(walked.break_reason.find("hash mismatch") != std::string::npos);
}

TEST_CASE("a revisited identifier raises a cycle error") {
    const auto kp = fixtures::keys("alice");
    // Y points forward at X's identifier; X links back to Y with Y's true
    // hash, so the walk reaches Y and then sees X's identifier again.
    CreationMetadata y = fixtures::unsigned_unit("cycle-y");
    y.prev_revision = RevisionLink{fixtures::id("cycle-x"), crypto::Digest{}};
    y = sign_creation(std::move(y), kp.secret_key, kp.public_key, "alice", 1);

    CreationMetadata x = fixtures::unsigned_unit("cycle-x");
    x.prev_revision = RevisionLink{y.identifier, unit_hash(y)};
    x = sign_creation(std::move(x), kp.secret_key, kp.public_key, "alice", 2);

    std::vector<CreationMetadata> units = {x, y};
    CHECK_THROWS_AS(walk_revision_chain(x, fetcher_for(units)), CycleError);
}

TEST_CASE("file round trip preserves canonical bytes and signature") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 25; ++i) {
        auto unit = fixtures::random_signed_unit(rng);
        const std::string bytes = canonical_signed_bytes(unit);
        std::string err;
        auto parsed = parse_creation(bytes, &err);
        REQUIRE_MESSAGE(parsed.has_value(), err);
        CHECK(canonical_signed_bytes(*parsed) == bytes);
        CHECK(verify_creation(*parsed) == VerifyResult::ok);
    }
}

TEST_CASE("registry metadata file round trip") {
    auto unit = fixtures::signed_unit("rm-roundtrip");
    const auto kp = fixtures::keys("alice");
    auto rm = derive_registry(unit, "T-123456789-0", std::nullopt, kp.secret_key, kp.public_key,
                              "alice", 3);
    std::string err;
    auto parsed = parse_registry(canonical_signed_bytes(rm), &err);
    REQUIRE_MESSAGE(parsed.has_value(), err);
    CHECK(canonical_signed_bytes(*parsed) == canonical_signed_bytes(rm));
    CHECK(verify_registry_pair(*parsed, unit) == RegistryVerifyResult::ok);
}

TEST_CASE("truncated files are parse errors") {
    auto unit = fixtures::signed_unit("truncate");
    std::string bytes = canonical_signed_bytes(unit);
    bytes.resize(bytes.size() / 2);
    std::string err;
    CHECK_FALSE(parse_creation(bytes, &err).has_value());
    CHECK_FALSE(err.empty());
}

TEST_CASE("work bytes map 1-to-1 onto digests over a corpus") {
    std::set<std::vector<std::uint8_t>> digests;
    for (int i = 0; i < 200; ++i) {
        const std::string work = "corpus-" + std::to_string(i);
        digests.insert(
            hash_work(std::span(reinterpret_cast<const std::uint8_t*>(work.data()), work.size()))
                .value);
    }
    CHECK(digests.size() == 200);
}
