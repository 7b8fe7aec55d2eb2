#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mml/metadata_ops.hpp"

namespace mml {

using BlockHash = crypto::Digest;

enum class TxRecipient { self_addressed, null_recipient };
const char* to_string(TxRecipient r);

// A notarization transaction enveloping one RegistryMetadata record.
struct LedgerTransaction {
    TxId txid{};  // hash of canonical transaction bytes
    crypto::PublicKey sender_public_key{};
    TxRecipient recipient = TxRecipient::self_addressed;
    RegistryMetadata payload;
    Signature tx_signature;  // by sender over (sender, recipient, payload)
};

struct Block {
    std::uint64_t height = 0;
    BlockHash prev_block_hash{};  // all zero at height 0
    BlockHash tx_root{};          // hash over concatenated txids in order
    std::vector<LedgerTransaction> transactions;
    int proposer = 0;
    std::uint64_t block_time = 0;  // simulation tick
};

std::string canonical_tx_content(const LedgerTransaction& tx);  // sender+recipient+payload
std::string canonical_tx_bytes(const LedgerTransaction& tx);    // incl. tx_signature
std::string canonical_block_bytes(const Block& block);
TxId compute_txid(const LedgerTransaction& tx);
BlockHash compute_block_hash(const Block& block);
BlockHash compute_tx_root(const std::vector<LedgerTransaction>& txs);

class RejectedPayload : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class RecipientRuleViolation : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::optional<LedgerTransaction> parse_transaction(const std::string& bytes, std::string* error);
std::optional<Block> parse_block(const std::string& bytes, std::string* error);

LedgerTransaction build_transaction(const RegistryMetadata& rm, const crypto::SecretKey& key,
                                    const crypto::PublicKey& public_key, TxRecipient recipient,
                                    const std::string& signer_id, std::int64_t timestamp);

// Full structural + signature validation of one transaction.
bool validate_transaction(const LedgerTransaction& tx, std::string* why = nullptr);

struct RegistrationRef {
    TxId txid{};
    std::uint64_t height = 0;
    std::size_t index = 0;  // position in block
    RegistryMetadata rm;
};

struct LatestRegistration {
    enum class Status { found, none, broken_chain };
    Status status = Status::none;
    std::optional<RegistrationRef> reg;
    std::string detail;
};

// One ledger node: mempool, fork-aware block store, longest-valid-chain
// selection, and a per-identifier index rebuilt from the best chain.
class LedgerNode {
public:
    explicit LedgerNode(int node_id = 0) : node_id_(node_id) {}

    int node_id() const { return node_id_; }

    // Validates and mempools; returns txid. Already-known txids dedupe.
    TxId accept_transaction(const LedgerTransaction& tx);

    // Packages pending transactions (canonical txid order, up to capacity)
    // into a block extending the best chain. Returns nullopt when nothing
    // is pending.
    std::optional<Block> produce_block(std::uint64_t tick, std::size_t capacity);

    // Validates and adopts the blocks it can connect; updates fork choice.
    void receive_blocks(const std::vector<Block>& blocks);

    std::vector<Block> best_chain() const;
    std::uint64_t chain_height() const;  // number of blocks in the best chain
    BlockHash tip_hash() const;

    std::vector<RegistrationRef> lookup_by_identifier(const Identifier& id) const;
    LatestRegistration latest_registration(const Identifier& id) const;
    std::optional<RegistrationRef> find_transaction(const TxId& txid) const;

    std::size_t mempool_size() const { return mempool_.size(); }

private:
    void rebuild_index();
    bool validate_block(const Block& block, std::string* why) const;

    int node_id_ = 0;
    std::map<TxId, LedgerTransaction> mempool_;
    std::map<TxId, LedgerTransaction> seen_txs_;  // everything ever accepted
    std::map<BlockHash, Block> blocks_;
    std::optional<BlockHash> best_tip_;

    // Derived from the best chain only.
    std::map<Identifier, std::vector<RegistrationRef>> doi_index_;
    std::map<TxId, RegistrationRef> confirmed_;
    std::map<TxId, std::vector<TxId>> back_refs_;  // prev_txid -> successors
};

// Recomputes every hash, root, txid, and payload signature along a chain.
// Returns the first height that fails, or nullopt when the chain is intact.
std::optional<std::uint64_t> verify_chain(const std::vector<Block>& chain);

struct SimConfig {
    int node_count = 3;
    std::size_t block_capacity = 100;
    std::uint64_t finality_depth = 2;
    std::uint64_t max_extra_latency = 0;  // per-link extra ticks drawn from the seed
    std::uint64_t seed = 0;
};

// Deterministic tick-based network of ledger nodes: round-robin proposer,
// per-link latency, optional partitions, chain broadcast on production.
class SimNetwork {
public:
    explicit SimNetwork(SimConfig config);

    TxId submit(const RegistryMetadata& rm, const crypto::SecretKey& key,
                const crypto::PublicKey& public_key, TxRecipient recipient,
                const std::string& signer_id, int node_id);

    void partition(const std::set<int>& group_a, const std::set<int>& group_b);
    void heal();

    void tick();
    void run_ticks(std::uint64_t n);

    std::uint64_t now() const { return tick_; }
    const LedgerNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    LedgerNode& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
    int node_count() const { return static_cast<int>(nodes_.size()); }
    const SimConfig& config() const { return config_; }

    bool converged() const;  // all tips equal

private:
    struct PendingDelivery {
        std::uint64_t due_tick;
        int dest;
        std::uint64_t seq;  // global send order, for deterministic processing
        std::optional<LedgerTransaction> tx;
        std::vector<Block> blocks;
    };

    bool link_up(int from, int to) const;
    std::uint64_t latency(int from, int to) const;
    void broadcast_tx(int from, const LedgerTransaction& tx);
    void broadcast_chain(int from);

    SimConfig config_;
    std::vector<LedgerNode> nodes_;
    std::vector<std::vector<std::uint64_t>> link_latency_;
    std::vector<PendingDelivery> queue_;
    std::optional<std::pair<std::set<int>, std::set<int>>> partition_;
    std::uint64_t tick_ = 0;
    std::uint64_t next_seq_ = 0;
};

}  // namespace mml
