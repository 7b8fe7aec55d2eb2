#include "mml/service.hpp"

#include <ctime>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mml/hex.hpp"

namespace mml {

using ordered_json = nlohmann::ordered_json;

namespace {
std::int64_t wall_clock() { return static_cast<std::int64_t>(std::time(nullptr)); }

std::optional<Identifier> path_identifier(const httplib::Request& req) {
    return Identifier::make(req.matches[1].str(), req.matches[2].str());
}

ordered_json receipt_json(const PutReceipt& receipt) {
    ordered_json j;
    j["status"] = to_string(receipt.status);
    j["identifier"] = receipt.identifier.empty() ? "" : receipt.identifier.canonical();
    j["unit_hash"] = hex_encode(receipt.stored_unit_hash);
    if (!receipt.detail.empty()) j["detail"] = receipt.detail;
    return j;
}

int receipt_status_code(const PutReceipt& receipt) {
    switch (receipt.status) {
        case PutStatus::stored: return 201;
        case PutStatus::duplicate: return 200;
        case PutStatus::duplicate_conflict: return 409;
        default: return 422;
    }
}

ordered_json registration_json(const RegistrationRef& ref) {
    ordered_json j;
    j["txid"] = hex_encode(ref.txid);
    j["height"] = ref.height;
    j["index"] = ref.index;
    j["registry_metadata"] = ordered_json::parse(canonical_signed_bytes(ref.rm));
    return j;
}

std::optional<RegistrationRef> parse_registration_json(const ordered_json& j) {
    if (!j.is_object() || !j.contains("txid") || !j.contains("registry_metadata")) {
        return std::nullopt;
    }
    RegistrationRef ref;
    auto txid = hex_decode(j["txid"].get<std::string>());
    if (!txid || txid->size() != ref.txid.size()) return std::nullopt;
    std::copy(txid->begin(), txid->end(), ref.txid.begin());
    ref.height = j.value("height", 0ull);
    ref.index = j.value("index", std::size_t{0});
    auto rm = parse_registry(j["registry_metadata"].dump(), nullptr);
    if (!rm) return std::nullopt;
    ref.rm = std::move(*rm);
    return ref;
}

ordered_json search_result_json(const SearchResult& r) {
    ordered_json j;
    j["identifier"] = r.identifier.canonical();
    j["score"] = r.score;
    j["matched_terms"] = r.matched_terms;
    j["source_db"] = r.source_db;
    return j;
}

void log_request(const httplib::Request& req, const httplib::Response& res) {
    std::fprintf(stderr, "[mml-serve] %s %s -> %d\n", req.method.c_str(), req.path.c_str(),
                 res.status);
}
}  // namespace

struct HttpService::Impl {
    httplib::Server server;
    std::mutex ledger_mutex;
    std::mutex search_mutex;
    std::uint64_t ledger_tick = 0;
};

HttpService::HttpService() = default;
HttpService::~HttpService() { stop(); }

void HttpService::stop() {
    if (impl_) impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

void HttpService::start(const std::string& host, int port) {
    impl_->server.set_logger(log_request);
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
        if (port_ < 0) throw std::runtime_error("failed to bind " + host);
    } else {
        if (!impl_->server.bind_to_port(host, port)) {
            throw std::runtime_error("failed to bind " + host + ":" + std::to_string(port));
        }
        port_ = port;
    }
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpService::serve_repository(Repository& repo, const std::string& host, int port) {
    impl_ = std::make_unique<Impl>();
    auto& server = impl_->server;

    server.Get(R"(/metadata/([^/]+)/([^/]+))",
               [&repo](const httplib::Request& req, httplib::Response& res) {
                   auto id = path_identifier(req);
                   auto stored = id ? repo.get(*id) : std::nullopt;
                   if (!stored) {
                       res.status = 404;
                       return;
                   }
                   ordered_json j = ordered_json::parse(canonical_signed_bytes(stored->unit));
                   ordered_json wrapper;
                   wrapper["unit"] = std::move(j);
                   wrapper["stored_at"] = stored->stored_at;
                   wrapper["unit_hash"] = hex_encode(stored->stored_unit_hash);
                   if (stored->superseded_by) {
                       wrapper["superseded_by"] = stored->superseded_by->canonical();
                   }
                   res.set_content(wrapper.dump(), "application/json");
               });

    server.Put("/metadata", [&repo](const httplib::Request& req, httplib::Response& res) {
        std::string parse_error;
        const PutReceipt receipt = repo.import_unit(req.body, wall_clock(), &parse_error);
        res.status = receipt_status_code(receipt);
        res.set_content(receipt_json(receipt).dump(), "application/json");
    });

    server.Get("/inventory", [&repo](const httplib::Request&, httplib::Response& res) {
        ordered_json j = ordered_json::array();
        for (const auto& e : repo.list_inventory()) {
            ordered_json entry;
            entry["identifier"] = e.identifier.canonical();
            entry["unit_hash"] = hex_encode(e.stored_unit_hash);
            entry["stored_at"] = e.stored_at;
            j.push_back(std::move(entry));
        }
        res.set_content(j.dump(), "application/json");
    });

    server.Get(R"(/export/([^/]+)/([^/]+))",
               [&repo](const httplib::Request& req, httplib::Response& res) {
                   auto id = path_identifier(req);
                   auto bytes = id ? repo.export_unit(*id) : std::nullopt;
                   if (!bytes) {
                       res.status = 404;
                       return;
                   }
                   res.set_content(*bytes, "application/octet-stream");
               });

    server.Post("/sync", [&repo](const httplib::Request& req, httplib::Response& res) {
        auto j = ordered_json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.contains("peer")) {
            res.status = 400;
            return;
        }
        HttpRepositoryPeer peer(j["peer"].get<std::string>());
        const SyncReport report = repo.sync_pull(peer, wall_clock());
        ordered_json out;
        out["fetched"] = report.fetched;
        out["skipped"] = report.skipped;
        res.set_content(out.dump(), "application/json");
    });

    start(host, port);
}

void HttpService::serve_resolver(Resolver& resolver, const std::string& host, int port) {
    impl_ = std::make_unique<Impl>();
    auto& server = impl_->server;

    server.Get(R"(/resolve/([^/]+)/([^/]+))",
               [&resolver](const httplib::Request& req, httplib::Response& res) {
                   auto id = path_identifier(req);
                   ordered_json j = ordered_json::array();
                   if (id) {
                       for (const auto& e : resolver.resolve(*id)) j.push_back(e);
                   }
                   res.set_content(j.dump(), "application/json");
               });

    server.Post("/bind", [&resolver](const httplib::Request& req, httplib::Response& res) {
        auto j = ordered_json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.contains("identifier") || !j.contains("endpoint")) {
            res.status = 400;
            return;
        }
        auto id = Identifier::parse(j["identifier"].get<std::string>());
        if (!id) {
            res.status = 400;
            return;
        }
        resolver.bind(*id, j["endpoint"].get<std::string>(), wall_clock());
        res.status = 201;
    });

    server.Post("/mint", [&resolver](const httplib::Request& req, httplib::Response& res) {
        auto j = ordered_json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.contains("prefix")) {
            res.status = 400;
            return;
        }
        try {
            const Identifier id = resolver.mint_random(j["prefix"].get<std::string>(), wall_clock());
            ordered_json out;
            out["identifier"] = id.canonical();
            res.set_content(out.dump(), "application/json");
        } catch (const NamespaceError& e) {
            res.status = 422;
            res.set_content(e.what(), "text/plain");
        }
    });

    start(host, port);
}

void HttpService::serve_ledger(LedgerNode& node, const std::string& host, int port) {
    impl_ = std::make_unique<Impl>();
    auto& server = impl_->server;
    Impl* impl = impl_.get();

    server.Post("/ledger/tx", [&node, impl](const httplib::Request& req, httplib::Response& res) {
        std::string error;
        auto tx = parse_transaction(req.body, &error);
        if (!tx) {
            res.status = 400;
            res.set_content(error, "text/plain");
            return;
        }
        std::lock_guard lock(impl->ledger_mutex);
        try {
            const TxId txid = node.accept_transaction(*tx);
            // Deployment mode commits immediately; consensus properties are
            // exercised by the simulator.
            node.produce_block(impl->ledger_tick++, 100);
            ordered_json out;
            out["txid"] = hex_encode(txid);
            res.set_content(out.dump(), "application/json");
        } catch (const std::runtime_error& e) {
            res.status = 422;
            res.set_content(e.what(), "text/plain");
        }
    });

    server.Get(R"(/ledger/tx/([0-9a-f]{64}))",
               [&node, impl](const httplib::Request& req, httplib::Response& res) {
                   TxId txid{};
                   auto bytes = hex_decode(req.matches[1].str());
                   std::copy(bytes->begin(), bytes->end(), txid.begin());
                   std::lock_guard lock(impl->ledger_mutex);
                   auto ref = node.find_transaction(txid);
                   if (!ref) {
                       res.status = 404;
                       return;
                   }
                   res.set_content(registration_json(*ref).dump(), "application/json");
               });

    server.Get(R"(/ledger/doi/([^/]+)/([^/]+)/latest)",
               [&node, impl](const httplib::Request& req, httplib::Response& res) {
                   auto id = path_identifier(req);
                   if (!id) {
                       res.status = 400;
                       return;
                   }
                   std::lock_guard lock(impl->ledger_mutex);
                   const LatestRegistration latest = node.latest_registration(*id);
                   ordered_json out;
                   switch (latest.status) {
                       case LatestRegistration::Status::none: out["status"] = "none"; break;
                       case LatestRegistration::Status::found: out["status"] = "found"; break;
                       case LatestRegistration::Status::broken_chain:
                           out["status"] = "broken-chain";
                           out["detail"] = latest.detail;
                           break;
                   }
                   if (latest.reg) out["registration"] = registration_json(*latest.reg);
                   res.set_content(out.dump(), "application/json");
               });

    server.Get(R"(/ledger/doi/([^/]+)/([^/]+))",
               [&node, impl](const httplib::Request& req, httplib::Response& res) {
                   auto id = path_identifier(req);
                   if (!id) {
                       res.status = 400;
                       return;
                   }
                   std::lock_guard lock(impl->ledger_mutex);
                   ordered_json j = ordered_json::array();
                   for (const auto& ref : node.lookup_by_identifier(*id)) {
                       j.push_back(registration_json(ref));
                   }
                   res.set_content(j.dump(), "application/json");
               });

    server.Get("/ledger/chain", [&node, impl](const httplib::Request& req, httplib::Response& res) {
        std::uint64_t from = 0;
        if (req.has_param("from")) from = std::stoull(req.get_param_value("from"));
        std::lock_guard lock(impl->ledger_mutex);
        ordered_json j = ordered_json::array();
        for (const auto& block : node.best_chain()) {
            if (block.height < from) continue;
            j.push_back(ordered_json::parse(canonical_block_bytes(block)));
        }
        res.set_content(j.dump(), "application/json");
    });

    start(host, port);
}

void HttpService::serve_search(KeywordDB& db, const std::string& host, int port) {
    impl_ = std::make_unique<Impl>();
    auto& server = impl_->server;
    Impl* impl = impl_.get();

    server.Post("/search", [&db, impl](const httplib::Request& req, httplib::Response& res) {
        auto j = ordered_json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.contains("query")) {
            res.status = 400;
            return;
        }
        std::lock_guard lock(impl->search_mutex);
        const auto results = search(j["query"].get<std::string>(), {&db});
        ordered_json out = ordered_json::array();
        for (const auto& r : results) out.push_back(search_result_json(r));
        res.set_content(out.dump(), "application/json");
    });

    server.Post("/associate", [&db, impl](const httplib::Request& req, httplib::Response& res) {
        auto j = ordered_json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.contains("identifier") || !j.contains("terms") ||
            !j["terms"].is_array()) {
            res.status = 400;
            return;
        }
        auto id = Identifier::parse(j["identifier"].get<std::string>());
        if (!id) {
            res.status = 400;
            return;
        }
        std::vector<std::string> terms;
        for (const auto& t : j["terms"]) terms.push_back(t.get<std::string>());
        const auto origin = parse_origin(j.value("origin", "user"));
        std::lock_guard lock(impl->search_mutex);
        try {
            db.associate(*id, terms, origin.value_or(MaterialOrigin::user), j.value("author", ""),
                         wall_clock());
            res.status = 201;
        } catch (const EmptyAfterNormalization& e) {
            res.status = 422;
            res.set_content(e.what(), "text/plain");
        }
    });

    start(host, port);
}

// ---------------------------------------------------------------- client --

std::optional<std::string> ServiceClient::http_get(const std::string& path) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(2, 0);
    client.set_read_timeout(10, 0);
    auto res = client.Get(path);
    if (!res) {
        last_error_ = "transport error contacting " + base_url_ + path;
        return std::nullopt;
    }
    if (res->status >= 400) {
        last_error_ = base_url_ + path + " -> HTTP " + std::to_string(res->status);
        return std::nullopt;
    }
    return res->body;
}

std::optional<std::string> ServiceClient::http_post(const std::string& path,
                                                    const std::string& body, int* status) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(2, 0);
    client.set_read_timeout(10, 0);
    auto res = client.Post(path, body, "application/json");
    if (!res) {
        last_error_ = "transport error contacting " + base_url_ + path;
        return std::nullopt;
    }
    if (status) *status = res->status;
    if (res->status >= 400) {
        last_error_ = base_url_ + path + " -> HTTP " + std::to_string(res->status) +
                      (res->body.empty() ? "" : (": " + res->body));
        return std::nullopt;
    }
    return res->body;
}

std::optional<std::string> ServiceClient::http_put(const std::string& path,
                                                   const std::string& body, int* status) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(2, 0);
    client.set_read_timeout(10, 0);
    auto res = client.Put(path, body, "application/json");
    if (!res) {
        last_error_ = "transport error contacting " + base_url_ + path;
        return std::nullopt;
    }
    if (status) *status = res->status;
    return res->body;
}

std::optional<Identifier> ServiceClient::mint(const std::string& prefix) {
    ordered_json body;
    body["prefix"] = prefix;
    auto res = http_post("/mint", body.dump());
    if (!res) return std::nullopt;
    auto j = ordered_json::parse(*res, nullptr, false);
    if (j.is_discarded() || !j.contains("identifier")) {
        last_error_ = "malformed mint response";
        return std::nullopt;
    }
    return Identifier::parse(j["identifier"].get<std::string>());
}

bool ServiceClient::bind(const Identifier& id, const std::string& endpoint) {
    ordered_json body;
    body["identifier"] = id.canonical();
    body["endpoint"] = endpoint;
    return http_post("/bind", body.dump()).has_value();
}

std::optional<std::vector<std::string>> ServiceClient::resolve(const Identifier& id) {
    auto res = http_get("/resolve/" + id.prefix() + "/" + id.suffix());
    if (!res) return std::nullopt;
    auto j = ordered_json::parse(*res, nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
        last_error_ = "malformed resolve response";
        return std::nullopt;
    }
    std::vector<std::string> out;
    for (const auto& e : j) out.push_back(e.get<std::string>());
    return out;
}

std::optional<PutReceipt> ServiceClient::put_unit(const CreationMetadata& unit) {
    int status = 0;
    auto res = http_put("/metadata", canonical_signed_bytes(unit), &status);
    if (!res) return std::nullopt;
    auto j = ordered_json::parse(*res, nullptr, false);
    if (j.is_discarded() || !j.contains("status")) {
        last_error_ = "malformed put response (HTTP " + std::to_string(status) + ")";
        return std::nullopt;
    }
    PutReceipt receipt;
    const std::string s = j["status"].get<std::string>();
    if (s == "stored") receipt.status = PutStatus::stored;
    else if (s == "duplicate") receipt.status = PutStatus::duplicate;
    else if (s == "duplicate-identifier") receipt.status = PutStatus::duplicate_conflict;
    else if (s == "tampered-unit") receipt.status = PutStatus::tampered;
    else if (s == "rights-content-rejected") receipt.status = PutStatus::rights_rejected;
    else if (s == "payload-too-large") receipt.status = PutStatus::payload_too_large;
    else receipt.status = PutStatus::malformed;
    if (auto id = Identifier::parse(j.value("identifier", ""))) receipt.identifier = *id;
    if (auto h = hex_decode(j.value("unit_hash", ""))) {
        if (h->size() == receipt.stored_unit_hash.size()) {
            std::copy(h->begin(), h->end(), receipt.stored_unit_hash.begin());
        }
    }
    receipt.detail = j.value("detail", "");
    return receipt;
}

std::optional<std::string> ServiceClient::get_unit_bytes(const Identifier& id) {
    auto res = http_get("/metadata/" + id.prefix() + "/" + id.suffix());
    if (!res) return std::nullopt;
    auto j = ordered_json::parse(*res, nullptr, false);
    if (j.is_discarded() || !j.contains("unit")) {
        last_error_ = "malformed metadata response";
        return std::nullopt;
    }
    return j["unit"].dump();
}

std::optional<std::vector<InventoryEntry>> ServiceClient::inventory() {
    auto res = http_get("/inventory");
    if (!res) return std::nullopt;
    auto j = ordered_json::parse(*res, nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
        last_error_ = "malformed inventory response";
        return std::nullopt;
    }
    std::vector<InventoryEntry> out;
    for (const auto& e : j) {
        InventoryEntry entry;
        auto id = Identifier::parse(e.value("identifier", ""));
        auto h = hex_decode(e.value("unit_hash", ""));
        if (!id || !h || h->size() != entry.stored_unit_hash.size()) continue;
        entry.identifier = *id;
        std::copy(h->begin(), h->end(), entry.stored_unit_hash.begin());
        entry.stored_at = e.value("stored_at", 0);
        out.push_back(std::move(entry));
    }
    return out;
}

std::optional<std::string> ServiceClient::export_unit(const Identifier& id) {
    return http_get("/export/" + id.prefix() + "/" + id.suffix());
}

std::optional<SyncReport> ServiceClient::sync(const std::string& peer_url) {
    ordered_json body;
    body["peer"] = peer_url;
    auto res = http_post("/sync", body.dump());
    if (!res) return std::nullopt;
    auto j = ordered_json::parse(*res, nullptr, false);
    if (j.is_discarded()) {
        last_error_ = "malformed sync response";
        return std::nullopt;
    }
    SyncReport report;
    report.fetched = j.value("fetched", std::size_t{0});
    report.skipped = j.value("skipped", std::size_t{0});
    return report;
}

std::optional<TxId> ServiceClient::submit_tx(const LedgerTransaction& tx) {
    auto res = http_post("/ledger/tx", canonical_tx_bytes(tx));
    if (!res) return std::nullopt;
    auto j = ordered_json::parse(*res, nullptr, false);
    if (j.is_discarded() || !j.contains("txid")) {
        last_error_ = "malformed tx response";
        return std::nullopt;
    }
    TxId txid{};
    auto bytes = hex_decode(j["txid"].get<std::string>());
    if (!bytes || bytes->size() != txid.size()) {
        last_error_ = "malformed txid";
        return std::nullopt;
    }
    std::copy(bytes->begin(), bytes->end(), txid.begin());
    return txid;
}

std::optional<RegistrationRef> ServiceClient::get_tx(const TxId& txid) {
    auto res = http_get("/ledger/tx/" + hex_encode(txid));
    if (!res) return std::nullopt;
    auto j = ordered_json::parse(*res, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return parse_registration_json(j);
}

std::optional<std::vector<RegistrationRef>> ServiceClient::registrations(const Identifier& id) {
    auto res = http_get("/ledger/doi/" + id.prefix() + "/" + id.suffix());
    if (!res) return std::nullopt;
    auto j = ordered_json::parse(*res, nullptr, false);
    if (j.is_discarded() || !j.is_array()) return std::nullopt;
    std::vector<RegistrationRef> out;
    for (const auto& e : j) {
        auto ref = parse_registration_json(e);
        if (ref) out.push_back(std::move(*ref));
    }
    return out;
}

std::optional<LatestRegistration> ServiceClient::latest(const Identifier& id) {
    auto res = http_get("/ledger/doi/" + id.prefix() + "/" + id.suffix() + "/latest");
    if (!res) return std::nullopt;
    auto j = ordered_json::parse(*res, nullptr, false);
    if (j.is_discarded() || !j.contains("status")) return std::nullopt;
    LatestRegistration out;
    const std::string s = j["status"].get<std::string>();
    if (s == "found") out.status = LatestRegistration::Status::found;
    else if (s == "broken-chain") out.status = LatestRegistration::Status::broken_chain;
    else out.status = LatestRegistration::Status::none;
    out.detail = j.value("detail", "");
    if (j.contains("registration")) out.reg = parse_registration_json(j["registration"]);
    return out;
}

std::optional<std::vector<Block>> ServiceClient::chain(std::uint64_t from_height) {
    auto res = http_get("/ledger/chain?from=" + std::to_string(from_height));
    if (!res) return std::nullopt;
    auto j = ordered_json::parse(*res, nullptr, false);
    if (j.is_discarded() || !j.is_array()) return std::nullopt;
    std::vector<Block> out;
    for (const auto& e : j) {
        auto block = parse_block(e.dump(), nullptr);
        if (!block) {
            last_error_ = "malformed block in chain response";
            return std::nullopt;
        }
        out.push_back(std::move(*block));
    }
    return out;
}

bool ServiceClient::associate(const Identifier& id, const std::vector<std::string>& terms,
                              const std::string& origin, const std::string& author) {
    ordered_json body;
    body["identifier"] = id.canonical();
    body["terms"] = terms;
    body["origin"] = origin;
    body["author"] = author;
    return http_post("/associate", body.dump()).has_value();
}

std::optional<std::vector<SearchResult>> ServiceClient::search_query(const std::string& query) {
    ordered_json body;
    body["query"] = query;
    auto res = http_post("/search", body.dump());
    if (!res) return std::nullopt;
    auto j = ordered_json::parse(*res, nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
        last_error_ = "malformed search response";
        return std::nullopt;
    }
    std::vector<SearchResult> out;
    for (const auto& e : j) {
        SearchResult r;
        auto id = Identifier::parse(e.value("identifier", ""));
        if (!id) continue;
        r.identifier = *id;
        r.score = e.value("score", 0.0);
        if (e.contains("matched_terms")) {
            for (const auto& t : e["matched_terms"]) r.matched_terms.insert(t.get<std::string>());
        }
        r.source_db = e.value("source_db", "");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<InventoryEntry> HttpRepositoryPeer::inventory() {
    return client_.inventory().value_or(std::vector<InventoryEntry>{});
}

std::optional<std::string> HttpRepositoryPeer::export_unit(const Identifier& id) {
    return client_.export_unit(id);
}

}  // namespace mml
