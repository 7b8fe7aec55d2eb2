#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "mml/ledger.hpp"
#include "mml/repository.hpp"
#include "mml/resolver.hpp"
#include "mml/search.hpp"

namespace mml {

// One REST service instance (any role), run on a background thread.
// Routes follow the module interfaces; bodies are the JSON interchange form.
class HttpService {
public:
    HttpService();
    ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    // Bind + serve. Throws on bind failure. port 0 picks a free port.
    void serve_repository(Repository& repo, const std::string& host, int port);
    void serve_resolver(Resolver& resolver, const std::string& host, int port);
    // Single-node deployment ledger: commits a block as soon as transactions
    // are pending (the deterministic multi-node path lives in SimNetwork).
    void serve_ledger(LedgerNode& node, const std::string& host, int port);
    void serve_search(KeywordDB& db, const std::string& host, int port);

    int port() const { return port_; }
    void stop();

private:
    struct Impl;
    void start(const std::string& host, int port);

    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    int port_ = 0;
};

// Thin typed wrappers over HTTP calls to the services above. Methods return
// nullopt / false on transport errors; `last_error` explains the failure.
class ServiceClient {
public:
    explicit ServiceClient(std::string base_url) : base_url_(std::move(base_url)) {}

    const std::string& base_url() const { return base_url_; }
    const std::string& last_error() const { return last_error_; }

    // resolver
    std::optional<Identifier> mint(const std::string& prefix);
    bool bind(const Identifier& id, const std::string& endpoint);
    std::optional<std::vector<std::string>> resolve(const Identifier& id);

    // repository
    std::optional<PutReceipt> put_unit(const CreationMetadata& unit);
    std::optional<std::string> get_unit_bytes(const Identifier& id);
    std::optional<std::vector<InventoryEntry>> inventory();
    std::optional<std::string> export_unit(const Identifier& id);
    std::optional<SyncReport> sync(const std::string& peer_url);

    // ledger node
    std::optional<TxId> submit_tx(const LedgerTransaction& tx);
    std::optional<RegistrationRef> get_tx(const TxId& txid);
    std::optional<std::vector<RegistrationRef>> registrations(const Identifier& id);
    std::optional<LatestRegistration> latest(const Identifier& id);
    std::optional<std::vector<Block>> chain(std::uint64_t from_height = 0);

    // search
    bool associate(const Identifier& id, const std::vector<std::string>& terms,
                   const std::string& origin, const std::string& author);
    std::optional<std::vector<SearchResult>> search_query(const std::string& query);

private:
    std::optional<std::string> http_get(const std::string& path);
    std::optional<std::string> http_post(const std::string& path, const std::string& body,
                                         int* status = nullptr);
    std::optional<std::string> http_put(const std::string& path, const std::string& body,
                                        int* status = nullptr);

    std::string base_url_;
    std::string last_error_;
};

// RepositoryPeer over REST, used by sync_pull against a remote repository.
class HttpRepositoryPeer : public RepositoryPeer {
public:
    explicit HttpRepositoryPeer(const std::string& base_url) : client_(base_url) {}
    std::vector<InventoryEntry> inventory() override;
    std::optional<std::string> export_unit(const Identifier& id) override;

private:
    ServiceClient client_;
};

}  // namespace mml
