#include <doctest.h>

#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "mml/hex.hpp"
#include "mml/repository.hpp"

using namespace mml;

TEST_CASE("put returns a receipt with the unit hash") {
    Repository repo;
    auto unit = fixtures::signed_unit("put-basic");
    auto receipt = repo.put(unit, 100);
    CHECK(receipt.status == PutStatus::stored);
    CHECK(receipt.stored_unit_hash == unit_hash(unit));
}

TEST_CASE("byte-identical re-put returns the original receipt as duplicate") {
    Repository repo;
    auto unit = fixtures::signed_unit("put-dup");
    auto first = repo.put(unit, 100);
    auto second = repo.put(unit, 200);
    CHECK(second.status == PutStatus::duplicate);
    CHECK(second.stored_unit_hash == first.stored_unit_hash);
}

TEST_CASE("same identifier with different bytes is a duplicate-identifier conflict") {
    Repository repo;
    repo.put(fixtures::signed_unit("put-conflict"), 100);
    auto other = fixtures::signed_unit("put-conflict", "alice", {{"title", "Other"}});
    CHECK(repo.put(other, 200).status == PutStatus::duplicate_conflict);
}

TEST_CASE("rights keys are rejected with the offending key named") {
    Repository repo;
    auto unit = fixtures::signed_unit("rights", "alice",
                                      {{"title", "Song"}, {"rights_holder", "Label Corp"}});
    auto receipt = repo.put(unit, 100);
    CHECK(receipt.status == PutStatus::rights_rejected);
    CHECK(receipt.detail == "rights_holder");
    CHECK(repo.size() == 0);
}

TEST_CASE("tampered units never enter the store") {
    Repository repo;
    auto unit = fixtures::signed_unit("tampered");
    unit.payload.entries["title"] = "edited";
    CHECK(repo.put(unit, 100).status == PutStatus::tampered);
    CHECK(repo.size() == 0);
}

TEST_CASE("get returns a verifying unit") {
    Repository repo;
    auto unit = fixtures::signed_unit("get-verify");
    repo.put(unit, 100);
    auto stored = repo.get(unit.identifier);
    REQUIRE(stored);
    CHECK(verify_creation(stored->unit) == VerifyResult::ok);
    CHECK_FALSE(stored->superseded_by.has_value());
}

TEST_CASE("get of unknown identifier is not-found") {
    Repository repo;
    CHECK_FALSE(repo.get(fixtures::id("missing")).has_value());
}

TEST_CASE("superseded units stay retrievable with a supersession notice") {
    Repository repo;
    const auto kp = fixtures::keys("alice");
    auto v1 = fixtures::signed_unit("arch-v1");
    auto v2 = new_revision(v1, v1.payload, v1.work_hash, fixtures::id("arch-v2"), kp.secret_key,
                           kp.public_key, "alice", 2);
    repo.put(v1, 100);
    repo.put(v2, 200);
    auto stored = repo.get(v1.identifier);
    REQUIRE(stored);
    CHECK(stored->superseded_by == v2.identifier);
    CHECK(canonical_signed_bytes(stored->unit) == canonical_signed_bytes(v1));
}

TEST_CASE("supersession is derived in either arrival order") {
    const auto kp = fixtures::keys("alice");
    auto v1 = fixtures::signed_unit("order-v1");
    auto v2 = new_revision(v1, v1.payload, v1.work_hash, fixtures::id("order-v2"), kp.secret_key,
                           kp.public_key, "alice", 2);
    Repository repo;
    repo.put(v2, 100);  // revision arrives first (e.g. via sync)
    repo.put(v1, 200);
    CHECK(repo.get(v1.identifier)->superseded_by == v2.identifier);
}

TEST_CASE("export/import round trip across two repositories") {
    Repository a, b;
    auto unit = fixtures::signed_unit("exp-imp");
    a.put(unit, 100);
    auto bytes = a.export_unit(unit.identifier);
    REQUIRE(bytes);
    auto receipt = b.import_unit(*bytes, 200, nullptr);
    CHECK(receipt.status == PutStatus::stored);
    CHECK(b.get(unit.identifier)->stored_unit_hash == a.get(unit.identifier)->stored_unit_hash);
}

TEST_CASE("import with a flipped signature hex character is rejected as tampered") {
    Repository a, b;
    auto unit = fixtures::signed_unit("flip");
    a.put(unit, 100);
    std::string bytes = *a.export_unit(unit.identifier);
    const auto pos = bytes.rfind("\"value\":\"");
    REQUIRE(pos != std::string::npos);
    char& c = bytes[pos + 10];
    c = (c == 'a') ? 'b' : 'a';
    auto receipt = b.import_unit(bytes, 200, nullptr);
    CHECK(receipt.status == PutStatus::tampered);
}

TEST_CASE("import of a truncated file is a parse error") {
    Repository a, b;
    auto unit = fixtures::signed_unit("trunc");
    a.put(unit, 100);
    std::string bytes = *a.export_unit(unit.identifier);
    bytes.resize(bytes.size() / 3);
    std::string parse_error;
    auto receipt = b.import_unit(bytes, 200, &parse_error);
    CHECK(receipt.status == PutStatus::malformed);
    CHECK_FALSE(parse_error.empty());
}

TEST_CASE("inventory is sorted by identifier and complete") {
    Repository repo;
    repo.put(fixtures::signed_unit("inv-c"), 1);
    repo.put(fixtures::signed_unit("inv-a"), 2);
    repo.put(fixtures::signed_unit("inv-b"), 3);
    auto inv = repo.list_inventory();
    REQUIRE(inv.size() == 3);
    CHECK(inv[0].identifier == fixtures::id("inv-a"));
    CHECK(inv[1].identifier == fixtures::id("inv-b"));
    CHECK(inv[2].identifier == fixtures::id("inv-c"));
    CHECK(Repository().list_inventory().empty());
}

TEST_CASE("sync_pull fetches everything missing and nothing present") {
    Repository source, sink;
    for (int i = 0; i < 5; ++i) {
        source.put(fixtures::signed_unit("sync-" + std::to_string(i)), i);
    }
    LocalPeer peer(source);
    auto report = sink.sync_pull(peer, 100);
    CHECK(report.fetched == 5);
    CHECK(report.skipped == 0);
    auto again = sink.sync_pull(peer, 200);
    CHECK(again.fetched == 0);
}

namespace {
// Peer that substitutes a tampered body for one identifier.
class PoisonPeer : public RepositoryPeer {
public:
    PoisonPeer(const Repository& repo, Identifier poisoned)
        : repo_(repo), poisoned_(std::move(poisoned)) {}
    std::vector<InventoryEntry> inventory() override { return repo_.list_inventory(); }
    std::optional<std::string> export_unit(const Identifier& id) override {
        auto bytes = repo_.export_unit(id);
        if (bytes && id == poisoned_) {
            const auto pos = bytes->find("\"entries\":{\"");
            if (pos != std::string::npos) (*bytes)[pos + 12] ^= 0x01;
        }
        return bytes;
    }

private:
    const Repository& repo_;
    Identifier poisoned_;
};
}  // namespace

TEST_CASE("a tampered unit among five is skipped without polluting local state") {
    Repository source, sink;
    for (int i = 0; i < 5; ++i) {
        source.put(fixtures::signed_unit("poison-" + std::to_string(i)), i);
    }
    PoisonPeer peer(source, fixtures::id("poison-2"));
    auto report = sink.sync_pull(peer, 100);
    CHECK(report.fetched == 4);
    CHECK(report.skipped == 1);
    CHECK(sink.size() == 4);
    CHECK_FALSE(sink.get(fixtures::id("poison-2")).has_value());
    for (const auto& e : sink.list_inventory()) {
        CHECK(verify_creation(sink.get(e.identifier)->unit) == VerifyResult::ok);
    }
}

TEST_CASE("ring anti-entropy converges within N-1 rounds for N in {2,3,5}") {
    for (int n : {2, 3, 5}) {
        std::vector<Repository> repos(static_cast<std::size_t>(n));
        std::mt19937_64 rng(static_cast<std::uint64_t>(n));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 4; ++j) {
                repos[static_cast<std::size_t>(i)].put(
                    fixtures::signed_unit("conv-" + std::to_string(n) + "-" + std::to_string(i) +
                                          "-" + std::to_string(j)),
                    1);
            }
        }
        for (int round = 0; round < n - 1; ++round) {
            for (int i = 0; i < n; ++i) {
                LocalPeer peer(repos[static_cast<std::size_t>((i + 1) % n)]);
                repos[static_cast<std::size_t>(i)].sync_pull(peer, 100 + round);
            }
        }
        const auto reference = repos[0].list_inventory();
        for (int i = 1; i < n; ++i) {
            const auto inv = repos[static_cast<std::size_t>(i)].list_inventory();
            REQUIRE(inv.size() == reference.size());
            for (std::size_t k = 0; k < inv.size(); ++k) {
                CHECK(inv[k].identifier == reference[k].identifier);
                CHECK(inv[k].stored_unit_hash == reference[k].stored_unit_hash);
            }
        }
    }
}

TEST_CASE("data directory persistence survives a restart") {
    const auto dir = std::filesystem::temp_directory_path() / "mml-repo-test";
    std::filesystem::remove_all(dir);
    auto unit = fixtures::signed_unit("persist");
    {
        Repository repo;
        repo.attach_data_dir(dir);
        repo.put(unit, 100);
    }
    Repository reloaded;
    reloaded.attach_data_dir(dir);
    auto stored = reloaded.get(unit.identifier);
    REQUIRE(stored);
    CHECK(canonical_signed_bytes(stored->unit) == canonical_signed_bytes(unit));
    std::filesystem::remove_all(dir);
}

TEST_CASE("round-trip signature preservation over randomized payloads") {
    Repository repo;
    std::mt19937_64 rng(4242);
    for (int i = 0; i < 50; ++i) {
        auto unit = fixtures::random_signed_unit(rng);
        if (repo.put(unit, i).status != PutStatus::stored) continue;
        auto stored = repo.get(unit.identifier);
        REQUIRE(stored);
        CHECK(verify_creation(stored->unit) == VerifyResult::ok);
    }
}
