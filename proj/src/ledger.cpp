#include "mml/ledger.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <random>

#include "mml/hex.hpp"

namespace mml {

using ordered_json = nlohmann::ordered_json;

const char* to_string(TxRecipient r) {
    return r == TxRecipient::self_addressed ? "self" : "null";
}

namespace {
std::span<const std::uint8_t> as_bytes(const std::string& s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

ordered_json tx_content_json(const LedgerTransaction& tx) {
    ordered_json j;
    j["sender_public_key"] = hex_encode(tx.sender_public_key);
    j["recipient"] = to_string(tx.recipient);
    j["payload"] = ordered_json::parse(canonical_signed_bytes(tx.payload));
    return j;
}

ordered_json signature_json(const Signature& sig) {
    ordered_json j;
    j["algorithm"] = sig.algorithm;
    j["signer_id"] = sig.signer_id;
    j["signer_public_key"] = hex_encode(sig.signer_public_key);
    j["timestamp"] = sig.timestamp;
    j["value"] = hex_encode(sig.value);
    return j;
}
}  // namespace

std::string canonical_tx_content(const LedgerTransaction& tx) {
    return tx_content_json(tx).dump();
}

std::string canonical_tx_bytes(const LedgerTransaction& tx) {
    ordered_json j = tx_content_json(tx);
    j["tx_signature"] = signature_json(tx.tx_signature);
    return j.dump();
}

std::string canonical_block_bytes(const Block& block) {
    ordered_json j;
    j["height"] = block.height;
    j["prev_block_hash"] = hex_encode(block.prev_block_hash);
    j["tx_root"] = hex_encode(block.tx_root);
    ordered_json txs = ordered_json::array();
    for (const auto& tx : block.transactions) {
        txs.push_back(ordered_json::parse(canonical_tx_bytes(tx)));
    }
    j["transactions"] = std::move(txs);
    j["proposer"] = block.proposer;
    j["block_time"] = block.block_time;
    return j.dump();
}

TxId compute_txid(const LedgerTransaction& tx) { return crypto::sha256(canonical_tx_bytes(tx)); }

BlockHash compute_block_hash(const Block& block) {
    return crypto::sha256(canonical_block_bytes(block));
}

BlockHash compute_tx_root(const std::vector<LedgerTransaction>& txs) {
    std::vector<std::uint8_t> concat;
    concat.reserve(txs.size() * 32);
    for (const auto& tx : txs) {
        concat.insert(concat.end(), tx.txid.begin(), tx.txid.end());
    }
    return crypto::sha256(concat);
}

namespace {
bool parse_hex_array(const ordered_json& j, const char* key, std::span<std::uint8_t> out) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return false;
    auto bytes = hex_decode(it->get<std::string>());
    if (!bytes || bytes->size() != out.size()) return false;
    std::copy(bytes->begin(), bytes->end(), out.begin());
    return true;
}

bool parse_signature_json(const ordered_json& j, Signature& sig) {
    if (!j.is_object() || !j.contains("algorithm") || !j.contains("signer_id") ||
        !j.contains("timestamp") || !j["timestamp"].is_number_integer()) {
        return false;
    }
    sig.algorithm = j["algorithm"].get<std::string>();
    sig.signer_id = j["signer_id"].get<std::string>();
    sig.timestamp = j["timestamp"].get<std::int64_t>();
    return parse_hex_array(j, "signer_public_key", sig.signer_public_key) &&
           parse_hex_array(j, "value", sig.value);
}

std::optional<LedgerTransaction> parse_transaction_json(const ordered_json& j,
                                                        std::string* error) {
    if (!j.is_object()) {
        if (error) *error = "transaction: not an object";
        return std::nullopt;
    }
    LedgerTransaction tx;
    if (!parse_hex_array(j, "sender_public_key", tx.sender_public_key)) {
        if (error) *error = "transaction: bad sender_public_key";
        return std::nullopt;
    }
    const std::string recipient = j.value("recipient", "");
    if (recipient == "self") {
        tx.recipient = TxRecipient::self_addressed;
    } else if (recipient == "null") {
        tx.recipient = TxRecipient::null_recipient;
    } else {
        if (error) *error = "transaction: recipient must be `self` or `null`";
        return std::nullopt;
    }
    if (!j.contains("payload")) {
        if (error) *error = "transaction: missing payload";
        return std::nullopt;
    }
    auto rm = parse_registry(j["payload"].dump(), error);
    if (!rm) return std::nullopt;
    tx.payload = std::move(*rm);
    if (!j.contains("tx_signature") || !parse_signature_json(j["tx_signature"], tx.tx_signature)) {
        if (error) *error = "transaction: bad tx_signature";
        return std::nullopt;
    }
    tx.txid = compute_txid(tx);
    return tx;
}
}  // namespace

std::optional<LedgerTransaction> parse_transaction(const std::string& bytes, std::string* error) {
    ordered_json j = ordered_json::parse(bytes, nullptr, false);
    if (j.is_discarded()) {
        if (error) *error = "transaction: invalid JSON";
        return std::nullopt;
    }
    return parse_transaction_json(j, error);
}

std::optional<Block> parse_block(const std::string& bytes, std::string* error) {
    ordered_json j = ordered_json::parse(bytes, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        if (error) *error = "block: invalid JSON";
        return std::nullopt;
    }
    Block block;
    if (!j.contains("height") || !j["height"].is_number_unsigned() ||
        !j.contains("transactions") || !j["transactions"].is_array() ||
        !j.contains("proposer") || !j.contains("block_time")) {
        if (error) *error = "block: missing field";
        return std::nullopt;
    }
    block.height = j["height"].get<std::uint64_t>();
    block.proposer = j["proposer"].get<int>();
    block.block_time = j["block_time"].get<std::uint64_t>();
    if (!parse_hex_array(j, "prev_block_hash", block.prev_block_hash) ||
        !parse_hex_array(j, "tx_root", block.tx_root)) {
        if (error) *error = "block: bad hash field";
        return std::nullopt;
    }
    for (const auto& tj : j["transactions"]) {
        auto tx = parse_transaction_json(tj, error);
        if (!tx) return std::nullopt;
        block.transactions.push_back(std::move(*tx));
    }
    return block;
}

LedgerTransaction build_transaction(const RegistryMetadata& rm, const crypto::SecretKey& key,
                                    const crypto::PublicKey& public_key, TxRecipient recipient,
                                    const std::string& signer_id, std::int64_t timestamp) {
    if (!verify_registry_signature(rm)) {
        throw RejectedPayload("registry metadata signature does not verify");
    }
    if (recipient == TxRecipient::self_addressed &&
        public_key != rm.signature.signer_public_key) {
        throw RecipientRuleViolation(
            "self-addressed notarization requires sender key = registry signer key");
    }
    LedgerTransaction tx;
    tx.sender_public_key = public_key;
    tx.recipient = recipient;
    tx.payload = rm;
    Signature sig;
    sig.signer_id = signer_id;
    sig.signer_public_key = public_key;
    sig.timestamp = timestamp;
    const std::string message = signing_message(canonical_tx_content(tx), sig);
    sig.value = crypto::ed25519_sign(as_bytes(message), key);
    tx.tx_signature = sig;
    tx.txid = compute_txid(tx);
    return tx;
}

bool validate_transaction(const LedgerTransaction& tx, std::string* why) {
    if (tx.txid != compute_txid(tx)) {
        if (why) *why = "txid mismatch";
        return false;
    }
    if (tx.recipient == TxRecipient::self_addressed &&
        tx.sender_public_key != tx.payload.signature.signer_public_key) {
        if (why) *why = "self-addressed recipient with mismatched keys";
        return false;
    }
    const std::string message = signing_message(canonical_tx_content(tx), tx.tx_signature);
    if (tx.tx_signature.signer_public_key != tx.sender_public_key ||
        !crypto::ed25519_verify(as_bytes(message), tx.tx_signature.value,
                                tx.tx_signature.signer_public_key)) {
        if (why) *why = "bad transaction signature";
        return false;
    }
    if (!verify_registry_signature(tx.payload)) {
        if (why) *why = "bad registry-metadata signature";
        return false;
    }
    if (canonical_signed_bytes(tx.payload).size() > kMaxRegistryPayloadBytes) {
        if (why) *why = "registry payload over size cap";
        return false;
    }
    return true;
}

TxId LedgerNode::accept_transaction(const LedgerTransaction& tx) {
    std::string why;
    if (!validate_transaction(tx, &why)) throw RejectedPayload(why);
    seen_txs_.emplace(tx.txid, tx);
    if (!confirmed_.contains(tx.txid)) mempool_.emplace(tx.txid, tx);
    return tx.txid;
}

std::optional<Block> LedgerNode::produce_block(std::uint64_t tick, std::size_t capacity) {
    std::vector<LedgerTransaction> pending;
    for (const auto& [txid, tx] : mempool_) {  // map order = canonical txid order
        if (confirmed_.contains(txid)) continue;
        pending.push_back(tx);
        if (pending.size() >= capacity) break;
    }
    if (pending.empty()) return std::nullopt;

    Block block;
    block.transactions = std::move(pending);
    block.proposer = node_id_;
    block.block_time = tick;
    if (best_tip_) {
        const Block& tip = blocks_.at(*best_tip_);
        block.height = tip.height + 1;
        block.prev_block_hash = compute_block_hash(tip);
    }
    block.tx_root = compute_tx_root(block.transactions);
    receive_blocks({block});
    return block;
}

bool LedgerNode::validate_block(const Block& block, std::string* why) const {
    if (block.height == 0) {
        if (block.prev_block_hash != BlockHash{}) {
            if (why) *why = "genesis with nonzero prev hash";
            return false;
        }
    } else {
        auto parent = blocks_.find(block.prev_block_hash);
        if (parent == blocks_.end()) {
            if (why) *why = "unknown parent";
            return false;
        }
        if (parent->second.height + 1 != block.height) {
            if (why) *why = "height does not extend parent";
            return false;
        }
        if (block.block_time <= parent->second.block_time) {
            if (why) *why = "non-increasing block time";
            return false;
        }
    }
    if (block.transactions.empty()) {
        if (why) *why = "empty block";
        return false;
    }
    if (block.tx_root != compute_tx_root(block.transactions)) {
        if (why) *why = "tx_root mismatch";
        return false;
    }
    for (const auto& tx : block.transactions) {
        if (!validate_transaction(tx, why)) return false;
    }
    return true;
}

void LedgerNode::receive_blocks(const std::vector<Block>& blocks) {
    bool added = false;
    // Blocks arrive parent-first within a chain broadcast; retry once for
    // out-of-order singles.
    std::vector<Block> todo = blocks;
    for (int pass = 0; pass < 2 && !todo.empty(); ++pass) {
        std::vector<Block> deferred;
        for (const auto& block : todo) {
            const BlockHash h = compute_block_hash(block);
            if (blocks_.contains(h)) continue;
            std::string why;
            if (!validate_block(block, &why)) {
                if (why == "unknown parent") deferred.push_back(block);
                continue;
            }
            blocks_.emplace(h, block);
            for (const auto& tx : block.transactions) seen_txs_.emplace(tx.txid, tx);
            added = true;
        }
        todo = std::move(deferred);
    }
    if (!added) return;

    // Longest valid chain; ties broken by smaller tip hash.
    std::optional<BlockHash> best;
    for (const auto& [h, b] : blocks_) {
        if (!best) {
            best = h;
            continue;
        }
        const Block& cur = blocks_.at(*best);
        if (b.height > cur.height || (b.height == cur.height && h < *best)) best = h;
    }
    if (best != best_tip_) {
        best_tip_ = best;
        rebuild_index();
    }
}

std::vector<Block> LedgerNode::best_chain() const {
    std::vector<Block> chain;
    if (!best_tip_) return chain;
    BlockHash cursor = *best_tip_;
    while (true) {
        const Block& b = blocks_.at(cursor);
        chain.push_back(b);
        if (b.height == 0) break;
        cursor = b.prev_block_hash;
    }
    std::reverse(chain.begin(), chain.end());
    return chain;
}

std::uint64_t LedgerNode::chain_height() const {
    if (!best_tip_) return 0;
    return blocks_.at(*best_tip_).height + 1;
}

BlockHash LedgerNode::tip_hash() const { return best_tip_ ? *best_tip_ : BlockHash{}; }

void LedgerNode::rebuild_index() {
    doi_index_.clear();
    confirmed_.clear();
    back_refs_.clear();
    for (const Block& block : best_chain()) {
        for (std::size_t i = 0; i < block.transactions.size(); ++i) {
            const auto& tx = block.transactions[i];
            RegistrationRef ref{tx.txid, block.height, i, tx.payload};
            doi_index_[tx.payload.identifier].push_back(ref);
            confirmed_[tx.txid] = ref;
            if (tx.payload.prev_txid) back_refs_[*tx.payload.prev_txid].push_back(tx.txid);
        }
    }
    // Orphaned transactions go back to the mempool.
    for (const auto& [txid, tx] : seen_txs_) {
        if (!confirmed_.contains(txid)) {
            mempool_.emplace(txid, tx);
        } else {
            mempool_.erase(txid);
        }
    }
}

std::vector<RegistrationRef> LedgerNode::lookup_by_identifier(const Identifier& id) const {
    auto it = doi_index_.find(id);
    if (it == doi_index_.end()) return {};
    return it->second;
}

std::optional<RegistrationRef> LedgerNode::find_transaction(const TxId& txid) const {
    auto it = confirmed_.find(txid);
    if (it == confirmed_.end()) return std::nullopt;
    return it->second;
}

LatestRegistration LedgerNode::latest_registration(const Identifier& id) const {
    LatestRegistration out;
    auto it = doi_index_.find(id);
    if (it == doi_index_.end()) return out;

    // Walk forward from this identifier's registrations through prev_txid
    // back-references until nothing newer points at the frontier.
    std::set<std::array<std::uint8_t, 32>> visited;
    std::vector<TxId> frontier;
    for (const auto& ref : it->second) frontier.push_back(ref.txid);
    std::vector<RegistrationRef> heads;
    while (!frontier.empty()) {
        TxId cur = frontier.back();
        frontier.pop_back();
        if (!visited.insert(cur).second) continue;
        auto succ = back_refs_.find(cur);
        if (succ == back_refs_.end()) {
            heads.push_back(confirmed_.at(cur));
        } else {
            for (const auto& next : succ->second) frontier.push_back(next);
        }
    }
    if (heads.empty()) {
        out.status = LatestRegistration::Status::broken_chain;
        out.detail = "registration pointer graph has no head";
        return out;
    }
    // Newest head by (height, position in block).
    std::sort(heads.begin(), heads.end(), [](const RegistrationRef& a, const RegistrationRef& b) {
        return std::tie(a.height, a.index) < std::tie(b.height, b.index);
    });
    const RegistrationRef head = heads.back();

    // The chain from the head back to this identifier must be confirmed
    // end to end; a dangling prev_txid is surfaced, never skipped.
    TxId cursor = head.txid;
    while (true) {
        const RegistrationRef& ref = confirmed_.at(cursor);
        if (!ref.rm.prev_txid) break;
        auto prev = confirmed_.find(*ref.rm.prev_txid);
        if (prev == confirmed_.end()) {
            out.status = LatestRegistration::Status::broken_chain;
            out.detail = "prev_txid " + hex_encode(*ref.rm.prev_txid) + " is not confirmed";
            out.reg = head;
            return out;
        }
        if (prev->second.rm.identifier == id) break;
        cursor = prev->first;
    }
    out.status = LatestRegistration::Status::found;
    out.reg = head;
    return out;
}

std::optional<std::uint64_t> verify_chain(const std::vector<Block>& chain) {
    BlockHash prev{};
    std::uint64_t last_time = 0;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const Block& b = chain[i];
        if (b.height != i) return i;
        if (b.prev_block_hash != prev) return i;
        if (i > 0 && b.block_time <= last_time) return i;
        if (b.tx_root != compute_tx_root(b.transactions)) return i;
        for (const auto& tx : b.transactions) {
            if (!validate_transaction(tx, nullptr)) return i;
        }
        prev = compute_block_hash(b);
        last_time = b.block_time;
    }
    return std::nullopt;
}

SimNetwork::SimNetwork(SimConfig config) : config_(config) {
    nodes_.reserve(static_cast<std::size_t>(config_.node_count));
    for (int i = 0; i < config_.node_count; ++i) nodes_.emplace_back(i);
    std::mt19937_64 rng(config_.seed);
    link_latency_.assign(static_cast<std::size_t>(config_.node_count),
                         std::vector<std::uint64_t>(static_cast<std::size_t>(config_.node_count), 1));
    for (auto& row : link_latency_) {
        for (auto& l : row) {
            l = 1 + (config_.max_extra_latency ? rng() % (config_.max_extra_latency + 1) : 0);
        }
    }
}

bool SimNetwork::link_up(int from, int to) const {
    if (!partition_) return true;
    const auto& [a, b] = *partition_;
    const bool from_a = a.contains(from);
    const bool to_a = a.contains(to);
    const bool from_b = b.contains(from);
    const bool to_b = b.contains(to);
    return !((from_a && to_b) || (from_b && to_a));
}

std::uint64_t SimNetwork::latency(int from, int to) const {
    return link_latency_[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
}

void SimNetwork::broadcast_tx(int from, const LedgerTransaction& tx) {
    for (int dest = 0; dest < node_count(); ++dest) {
        if (dest == from || !link_up(from, dest)) continue;
        PendingDelivery d;
        d.due_tick = tick_ + latency(from, dest);
        d.dest = dest;
        d.seq = next_seq_++;
        d.tx = tx;
        queue_.push_back(std::move(d));
    }
}

void SimNetwork::broadcast_chain(int from) {
    const auto chain = nodes_[static_cast<std::size_t>(from)].best_chain();
    for (int dest = 0; dest < node_count(); ++dest) {
        if (dest == from || !link_up(from, dest)) continue;
        PendingDelivery d;
        d.due_tick = tick_ + latency(from, dest);
        d.dest = dest;
        d.seq = next_seq_++;
        d.blocks = chain;
        queue_.push_back(std::move(d));
    }
}

TxId SimNetwork::submit(const RegistryMetadata& rm, const crypto::SecretKey& key,
                        const crypto::PublicKey& public_key, TxRecipient recipient,
                        const std::string& signer_id, int node_id) {
    LedgerTransaction tx =
        build_transaction(rm, key, public_key, recipient, signer_id,
                          static_cast<std::int64_t>(tick_));
    const TxId txid = nodes_.at(static_cast<std::size_t>(node_id)).accept_transaction(tx);
    broadcast_tx(node_id, tx);
    return txid;
}

void SimNetwork::partition(const std::set<int>& group_a, const std::set<int>& group_b) {
    partition_ = std::make_pair(group_a, group_b);
}

void SimNetwork::heal() { partition_ = std::nullopt; }

void SimNetwork::tick() {
    // Deliver everything due this tick in global send order.
    std::vector<PendingDelivery> due;
    std::erase_if(queue_, [&](PendingDelivery& d) {
        if (d.due_tick > tick_) return false;
        due.push_back(std::move(d));
        return true;
    });
    std::sort(due.begin(), due.end(),
              [](const PendingDelivery& a, const PendingDelivery& b) { return a.seq < b.seq; });
    for (const auto& d : due) {
        auto& node = nodes_[static_cast<std::size_t>(d.dest)];
        if (d.tx) {
            try {
                node.accept_transaction(*d.tx);
            } catch (const std::runtime_error&) {
                // Invalid gossip is dropped.
            }
        }
        if (!d.blocks.empty()) node.receive_blocks(d.blocks);
    }

    // Round-robin proposer. The proposer re-broadcasts its chain even when
    // it has nothing to package, so healed partitions reconcile forks.
    const int proposer = static_cast<int>(tick_ % static_cast<std::uint64_t>(node_count()));
    nodes_[static_cast<std::size_t>(proposer)].produce_block(tick_, config_.block_capacity);
    if (nodes_[static_cast<std::size_t>(proposer)].chain_height() > 0) broadcast_chain(proposer);

    ++tick_;
}

void SimNetwork::run_ticks(std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) tick();
}

bool SimNetwork::converged() const {
    for (const auto& node : nodes_) {
        if (node.tip_hash() != nodes_.front().tip_hash()) return false;
    }
    return true;
}

}  // namespace mml
