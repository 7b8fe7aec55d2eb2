// mml: command-line entry point for the music metadata layer.
// One binary, one subcommand per role; config file + MML_* env + flags,
// precedence flags > env > file.

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sys/stat.h>
#include <thread>

#include "mml/hex.hpp"
#include "mml/scenario.hpp"
#include "mml/search.hpp"
#include "mml/service.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace mml;

namespace {

// Exit codes, documented in the README.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitTransport = 2;
constexpr int kExitNotFound = 3;
constexpr int kExitIntegrity = 4;

struct CliError : std::runtime_error {
    CliError(int code, const std::string& msg) : std::runtime_error(msg), exit_code(code) {}
    int exit_code;
};

std::int64_t wall_clock() { return static_cast<std::int64_t>(std::time(nullptr)); }

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError(kExitValidation, "cannot read file: " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError(kExitValidation, "cannot write file: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::optional<std::string> env_value(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

struct Workspace {
    std::string resolver_url;
    std::vector<std::string> repository_urls;
    std::string ledger_url;
    std::vector<std::string> keyword_db_urls;
    std::string default_prefix = "10.5555";
    fs::path key_dir = "keys";

    static Workspace load(const std::string& config_flag) {
        Workspace ws;
        std::string config_path = config_flag;
        if (config_path.empty()) config_path = env_value("MML_CONFIG").value_or("mml.json");
        if (fs::exists(config_path)) {
            auto j = ordered_json::parse(read_file(config_path), nullptr, false);
            if (j.is_discarded()) {
                throw CliError(kExitValidation, "malformed config file: " + config_path);
            }
            ws.resolver_url = j.value("resolver", "");
            ws.ledger_url = j.value("ledger", "");
            if (j.contains("repositories")) {
                for (const auto& e : j["repositories"]) ws.repository_urls.push_back(e);
            }
            if (j.contains("keyword_dbs")) {
                for (const auto& e : j["keyword_dbs"]) ws.keyword_db_urls.push_back(e);
            }
            ws.default_prefix = j.value("default_prefix", ws.default_prefix);
            ws.key_dir = fs::path(j.value("key_dir", ws.key_dir.string()));
        }
        auto split = [](const std::string& s) {
            std::vector<std::string> out;
            std::stringstream ss(s);
            std::string piece;
            while (std::getline(ss, piece, ',')) {
                if (!piece.empty()) out.push_back(piece);
            }
            return out;
        };
        if (auto v = env_value("MML_RESOLVER")) ws.resolver_url = *v;
        if (auto v = env_value("MML_REPOSITORY")) ws.repository_urls = split(*v);
        if (auto v = env_value("MML_LEDGER")) ws.ledger_url = *v;
        if (auto v = env_value("MML_KEYWORD_DB")) ws.keyword_db_urls = split(*v);
        if (auto v = env_value("MML_PREFIX")) ws.default_prefix = *v;
        if (auto v = env_value("MML_KEY_DIR")) ws.key_dir = *v;
        return ws;
    }
};

struct StoredKey {
    std::string name;
    crypto::KeyPair pair;
};

StoredKey load_key(const Workspace& ws, const std::string& name) {
    if (name.empty()) throw CliError(kExitValidation, "no key named; use --key");
    const fs::path path = ws.key_dir / (name + ".key");
    if (!fs::exists(path)) {
        throw CliError(kExitValidation, "key not found: " + path.string() + " (run `mml keygen`)");
    }
    auto j = ordered_json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw CliError(kExitValidation, "malformed key file: " + path.string());
    StoredKey key;
    key.name = j.value("signer_id", name);
    auto pk = hex_decode(j.value("public_key", ""));
    auto sk = hex_decode(j.value("secret_key", ""));
    if (!pk || pk->size() != key.pair.public_key.size() || !sk ||
        sk->size() != key.pair.secret_key.size()) {
        throw CliError(kExitValidation, "corrupt key file: " + path.string());
    }
    std::copy(pk->begin(), pk->end(), key.pair.public_key.begin());
    std::copy(sk->begin(), sk->end(), key.pair.secret_key.begin());
    return key;
}

// Payload files are kv-v1: one `key=value` per line, `#` comments.
WorksPayload parse_payload_file(const fs::path& path) {
    WorksPayload payload;
    std::stringstream stream(read_file(path));
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw CliError(kExitValidation, path.string() + ":" + std::to_string(line_no) +
                                                ": expected key=value");
        }
        payload.entries[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return payload;
}

// Fail-fast rights/size screen, applied before anything leaves the machine.
void screen_payload(const WorksPayload& payload) {
    for (const auto& [k, v] : payload.entries) {
        (void)v;
        if (kDefaultRightsDenylist.contains(k)) {
            throw CliError(kExitValidation,
                           "payload carries rights key `" + k +
                               "`; ownership data does not belong in creation metadata");
        }
    }
    if (payload_serialized_size(payload) > kMaxPayloadBytes) {
        throw CliError(kExitValidation, "payload exceeds the 64 KiB cap");
    }
}

struct Output {
    bool json = false;
    ordered_json doc = ordered_json::object();

    void set(const std::string& key, ordered_json value) { doc[key] = std::move(value); }
    void line(const std::string& text) const {
        if (!json) std::cout << text << "\n";
    }
    void finish(const std::string& command, int exit_code = kExitOk) {
        if (json) {
            ordered_json envelope;
            envelope["command"] = command;
            envelope["exit_code"] = exit_code;
            envelope["data"] = doc;
            std::cout << envelope.dump(2) << "\n";
        }
    }
};

ServiceClient resolver_client(const Workspace& ws) {
    if (ws.resolver_url.empty()) throw CliError(kExitTransport, "no resolver endpoint configured");
    return ServiceClient(ws.resolver_url);
}

ServiceClient repository_client(const Workspace& ws) {
    if (ws.repository_urls.empty()) {
        throw CliError(kExitTransport, "no repository endpoint configured");
    }
    return ServiceClient(ws.repository_urls.front());
}

ServiceClient ledger_client(const Workspace& ws) {
    if (ws.ledger_url.empty()) throw CliError(kExitTransport, "no ledger endpoint configured");
    return ServiceClient(ws.ledger_url);
}

Identifier parse_doi_arg(const std::string& text) {
    auto id = Identifier::parse(text);
    if (!id) throw CliError(kExitValidation, "malformed identifier: " + text);
    return *id;
}

CreationMetadata load_cmeta(const fs::path& path) {
    std::string err;
    auto unit = parse_creation(read_file(path), &err);
    if (!unit) throw CliError(kExitValidation, path.string() + ": " + err);
    return *unit;
}

LookupServices remote_services(const Workspace& ws) {
    LookupServices services;
    services.resolve = [ws](const Identifier& id) -> std::vector<std::string> {
        ServiceClient client(ws.resolver_url);
        return client.resolve(id).value_or(std::vector<std::string>{});
    };
    services.fetch = [](const std::string& endpoint,
                        const Identifier& id) -> std::optional<std::string> {
        ServiceClient client(endpoint);
        return client.get_unit_bytes(id);
    };
    services.latest = [ws](const Identifier& id) -> LatestRegistration {
        ServiceClient client(ws.ledger_url);
        auto latest = client.latest(id);
        if (!latest) {
            LatestRegistration out;
            out.status = LatestRegistration::Status::none;
            out.detail = client.last_error();
            return out;
        }
        return *latest;
    };
    return services;
}

ordered_json lookup_entry_json(const LookupEntry& entry) {
    ordered_json j;
    j["identifier"] = entry.identifier.canonical();
    if (entry.score > 0) j["score"] = entry.score;
    if (entry.unit) j["unit"] = ordered_json::parse(canonical_signed_bytes(*entry.unit));
    j["freshness"] = to_string(entry.freshness);
    if (entry.superseded_by) j["superseded_by"] = entry.superseded_by->canonical();
    if (!entry.error.empty()) j["error"] = entry.error;
    return j;
}

// ------------------------------------------------------------- commands --

int cmd_keygen(const Workspace& ws, const std::string& name, Output& out) {
    fs::create_directories(ws.key_dir);
    const fs::path path = ws.key_dir / (name + ".key");
    if (fs::exists(path)) throw CliError(kExitValidation, "key already exists: " + path.string());
    const auto pair = crypto::generate_keypair();
    ordered_json j;
    j["signer_id"] = name;
    j["public_key"] = hex_encode(pair.public_key);
    j["secret_key"] = hex_encode(pair.secret_key);
    write_file(path, j.dump(2));
    ::chmod(path.c_str(), 0600);
    out.set("key", name);
    out.set("public_key", hex_encode(pair.public_key));
    out.line("generated key `" + name + "` (" + path.string() + ")");
    return kExitOk;
}

int cmd_author(const Workspace& ws, const fs::path& payload_file, const fs::path& work_file,
               const std::string& key_name, const std::string& prefix, const fs::path& out_file,
               Output& out) {
    WorksPayload payload = parse_payload_file(payload_file);
    screen_payload(payload);  // before any network traffic or minting
    const StoredKey key = load_key(ws, key_name);

    // The work file is hashed locally and never transmitted.
    const std::string work_bytes = read_file(work_file);
    const WorkDigest digest = hash_work(
        std::span(reinterpret_cast<const std::uint8_t*>(work_bytes.data()), work_bytes.size()));

    auto resolver = resolver_client(ws);
    auto id = resolver.mint(prefix.empty() ? ws.default_prefix : prefix);
    if (!id) throw CliError(kExitTransport, "mint failed: " + resolver.last_error());

    CreationMetadata unit;
    unit.identifier = *id;
    unit.payload = std::move(payload);
    unit.work_hash = digest;
    unit = sign_creation(std::move(unit), key.pair.secret_key, key.pair.public_key, key.name,
                         wall_clock());

    const fs::path target =
        out_file.empty() ? fs::path(id->suffix() + ".cmeta") : out_file;
    write_file(target, canonical_signed_bytes(unit));
    out.set("identifier", id->canonical());
    out.set("file", target.string());
    out.set("work_hash", hex_encode(unit.work_hash.value));
    out.line(id->canonical());
    out.line("wrote " + target.string());
    return kExitOk;
}

int cmd_publish(const Workspace& ws, const fs::path& cmeta_file,
                const std::string& works_id, const std::string& key_name, Output& out) {
    const CreationMetadata unit = load_cmeta(cmeta_file);
    if (verify_creation(unit) != VerifyResult::ok) {
        throw CliError(kExitIntegrity, "refusing to publish: unit does not verify");
    }
    const StoredKey key = load_key(ws, key_name);

    // Stage 1: repository put (duplicate tolerated for re-runs).
    auto repo = repository_client(ws);
    auto receipt = repo.put_unit(unit);
    if (!receipt) {
        throw CliError(kExitTransport, "stage repository-put failed: " + repo.last_error());
    }
    if (!receipt->ok()) {
        throw CliError(kExitValidation,
                       "stage repository-put rejected: " + std::string(to_string(receipt->status)) +
                           (receipt->detail.empty() ? "" : " (" + receipt->detail + ")"));
    }
    out.set("unit_hash", hex_encode(receipt->stored_unit_hash));
    out.line("stored: " + unit.identifier.canonical() +
             (receipt->status == PutStatus::duplicate ? " (already present)" : ""));

    // Stage 2: resolver bind.
    auto resolver = resolver_client(ws);
    if (!resolver.bind(unit.identifier, repo.base_url())) {
        throw CliError(kExitTransport, "stage resolver-bind failed (stored-but-unbound): " +
                                           resolver.last_error());
    }
    out.line("bound: " + repo.base_url());

    // Stage 3: notarize. Revisions point at the prior confirmed registration.
    auto ledger = ledger_client(ws);
    std::optional<TxId> prev_txid;
    if (unit.prev_revision) {
        auto latest = ledger.latest(unit.prev_revision->identifier);
        if (latest && latest->status == LatestRegistration::Status::found) {
            prev_txid = latest->reg->txid;
        }
    }
    const RegistryMetadata rm = derive_registry(
        unit, works_id.empty() ? std::nullopt : std::optional(works_id), prev_txid,
        key.pair.secret_key, key.pair.public_key, key.name, wall_clock());
    const LedgerTransaction tx =
        build_transaction(rm, key.pair.secret_key, key.pair.public_key,
                          TxRecipient::self_addressed, key.name, wall_clock());
    auto txid = ledger.submit_tx(tx);
    if (!txid) {
        throw CliError(kExitTransport,
                       "stage ledger-submit failed (stored-but-not-notarized, re-run publish): " +
                           ledger.last_error());
    }
    out.set("identifier", unit.identifier.canonical());
    out.set("txid", hex_encode(*txid));
    if (prev_txid) out.set("prev_txid", hex_encode(*prev_txid));
    out.line("notarized: txid " + hex_encode(*txid));
    return kExitOk;
}

int cmd_revise(const Workspace& ws, const fs::path& old_file, const fs::path& payload_file,
               const fs::path& work_file, const std::string& key_name, const std::string& prefix,
               const fs::path& out_file, Output& out) {
    const CreationMetadata old_unit = load_cmeta(old_file);
    WorksPayload payload = parse_payload_file(payload_file);
    screen_payload(payload);
    const StoredKey key = load_key(ws, key_name);
    const std::string work_bytes = read_file(work_file);
    const WorkDigest digest = hash_work(
        std::span(reinterpret_cast<const std::uint8_t*>(work_bytes.data()), work_bytes.size()));

    auto resolver = resolver_client(ws);
    auto id = resolver.mint(prefix.empty() ? ws.default_prefix : prefix);
    if (!id) throw CliError(kExitTransport, "mint failed: " + resolver.last_error());

    const CreationMetadata revised =
        new_revision(old_unit, std::move(payload), digest, *id, key.pair.secret_key,
                     key.pair.public_key, key.name, wall_clock());
    const fs::path target = out_file.empty() ? fs::path(id->suffix() + ".cmeta") : out_file;
    write_file(target, canonical_signed_bytes(revised));
    out.set("identifier", id->canonical());
    out.set("supersedes", old_unit.identifier.canonical());
    out.set("file", target.string());
    out.line(id->canonical());
    out.line("wrote " + target.string() + " (supersedes " + old_unit.identifier.canonical() + ")");
    return kExitOk;
}

int cmd_verify(const Workspace& ws, const fs::path& cmeta_file, bool check_chain, Output& out) {
    const CreationMetadata unit = load_cmeta(cmeta_file);
    const VerifyResult result = verify_creation(unit);
    out.set("identifier", unit.identifier.canonical());
    out.set("verification", to_string(result));
    out.line(std::string("unit: ") + to_string(result));
    int code = kExitOk;
    if (result != VerifyResult::ok) code = kExitIntegrity;

    if (check_chain && !ws.ledger_url.empty()) {
        auto ledger = ledger_client(ws);
        auto chain = ledger.chain();
        if (!chain) throw CliError(kExitTransport, "ledger unreachable: " + ledger.last_error());
        auto bad = verify_chain(*chain);
        out.set("ledger_chain", bad ? "first-bad-height=" + std::to_string(*bad) : "ok");
        out.line(bad ? "ledger chain: first-bad-height=" + std::to_string(*bad)
                     : "ledger chain: ok");
        if (bad) code = kExitIntegrity;
    }
    return code;
}

int cmd_resolve(const Workspace& ws, const std::string& doi, Output& out) {
    const Identifier id = parse_doi_arg(doi);
    auto resolver = resolver_client(ws);
    auto endpoints = resolver.resolve(id);
    if (!endpoints) throw CliError(kExitTransport, resolver.last_error());
    ordered_json arr = ordered_json::array();
    for (const auto& e : *endpoints) {
        arr.push_back(e);
        out.line(e);
    }
    out.set("identifier", id.canonical());
    out.set("endpoints", arr);
    return endpoints->empty() ? kExitNotFound : kExitOk;
}

int cmd_fetch(const Workspace& ws, const std::string& doi, const fs::path& out_file,
              Output& out) {
    const Identifier id = parse_doi_arg(doi);
    const LookupEntry entry = lookup_one(id, remote_services(ws));
    if (entry.error == "fetch-failed") {
        throw CliError(kExitNotFound, "no repository holds " + id.canonical());
    }
    if (entry.error == "verify-failed") {
        throw CliError(kExitIntegrity, "fetched unit failed signature verification");
    }
    out.set("result", lookup_entry_json(entry));
    out.line(id.canonical() + ": " + to_string(entry.freshness) +
             (entry.superseded_by ? " (superseded-by " + entry.superseded_by->canonical() + ")"
                                  : ""));
    if (entry.unit) {
        const std::string bytes = canonical_signed_bytes(*entry.unit);
        if (!out_file.empty()) {
            write_file(out_file, bytes);
            out.line("wrote " + out_file.string());
        } else {
            out.line(bytes);
        }
    }
    return kExitOk;
}

int cmd_search(const Workspace& ws, const std::string& query, bool fetch_units, Output& out) {
    if (ws.keyword_db_urls.empty()) {
        throw CliError(kExitTransport, "no keyword db endpoints configured");
    }
    // Step 1-2: federated query across all configured keyword databases.
    std::vector<std::vector<SearchResult>> per_db;
    for (const auto& url : ws.keyword_db_urls) {
        ServiceClient client(url);
        auto results = client.search_query(query);
        if (!results) {
            out.line("warning: keyword db unreachable: " + url);
            continue;
        }
        per_db.push_back(std::move(*results));
    }
    const auto ranked = merge_results(per_db);

    ordered_json arr = ordered_json::array();
    if (fetch_units) {
        // Steps 3-4: fetch each unit and check freshness on the ledger.
        const LookupServices services = remote_services(ws);
        for (const auto& r : ranked) {
            LookupEntry entry = lookup_one(r.identifier, services);
            entry.score = r.score;
            arr.push_back(lookup_entry_json(entry));
            out.line(entry.identifier.canonical() + "  score=" + std::to_string(r.score) +
                     "  " + to_string(entry.freshness) +
                     (entry.error.empty() ? "" : "  [" + entry.error + "]"));
        }
    } else {
        for (const auto& r : ranked) {
            ordered_json j;
            j["identifier"] = r.identifier.canonical();
            j["score"] = r.score;
            arr.push_back(std::move(j));
            out.line(r.identifier.canonical() + "  score=" + std::to_string(r.score));
        }
    }
    out.set("results", arr);
    return kExitOk;
}

int cmd_tag(const Workspace& ws, const std::string& doi, const std::vector<std::string>& terms,
            const std::string& origin, const std::string& author, Output& out) {
    const Identifier id = parse_doi_arg(doi);
    if (ws.keyword_db_urls.empty()) {
        throw CliError(kExitTransport, "no keyword db endpoints configured");
    }
    ServiceClient client(ws.keyword_db_urls.front());
    if (!client.associate(id, terms, origin, author)) {
        throw CliError(kExitTransport, "associate failed: " + client.last_error());
    }
    out.set("identifier", id.canonical());
    out.set("terms", terms);
    out.line("tagged " + id.canonical());
    return kExitOk;
}

int cmd_history(const Workspace& ws, const std::string& doi_or_file, Output& out) {
    CreationMetadata head;
    if (fs::exists(doi_or_file)) {
        head = load_cmeta(doi_or_file);
    } else {
        const Identifier id = parse_doi_arg(doi_or_file);
        const LookupEntry entry = lookup_one(id, remote_services(ws));
        if (!entry.unit) throw CliError(kExitNotFound, "cannot fetch " + id.canonical());
        head = *entry.unit;
    }
    const LookupServices services = remote_services(ws);
    const UnitFetcher fetch = [&services](const Identifier& id) -> std::optional<CreationMetadata> {
        const LookupEntry entry = lookup_one(id, services);
        return entry.unit;
    };
    const RevisionChain chain = walk_revision_chain(head, fetch);
    ordered_json arr = ordered_json::array();
    for (std::size_t i = 0; i < chain.units.size(); ++i) {
        const auto& u = chain.units[i];
        ordered_json j;
        j["identifier"] = u.identifier.canonical();
        j["signer"] = u.signature.signer_id;
        j["timestamp"] = u.signature.timestamp;
        arr.push_back(std::move(j));
        out.line(std::to_string(i) + ": " + u.identifier.canonical() + " (signed by " +
                 u.signature.signer_id + ")");
    }
    out.set("chain", arr);
    if (chain.broken) {
        out.set("broken_at", chain.break_depth);
        out.set("break_reason", chain.break_reason);
        out.line("chain broken at depth " + std::to_string(chain.break_depth) + ": " +
                 chain.break_reason);
        return kExitIntegrity;
    }
    return kExitOk;
}

std::atomic<bool> g_stop{false};
void handle_signal(int) { g_stop = true; }

int cmd_serve(const Workspace& ws, const std::string& role, const std::string& listen,
              const fs::path& data_dir, Output& out) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) {
        throw CliError(kExitValidation, "listen address must be host:port");
    }
    const std::string host = listen.substr(0, colon);
    const int port = std::stoi(listen.substr(colon + 1));

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);

    Repository repo;
    Resolver resolver;
    LedgerNode node(0);
    KeywordDB db(role);
    HttpService service;
    try {
        if (role == "repository") {
            if (!data_dir.empty()) repo.attach_data_dir(data_dir);
            service.serve_repository(repo, host, port);
        } else if (role == "resolver") {
            service.serve_resolver(resolver, host, port);
        } else if (role == "ledger-node") {
            service.serve_ledger(node, host, port);
        } else if (role == "search") {
            service.serve_search(db, host, port);
        } else {
            throw CliError(kExitValidation, "unknown role: " + role);
        }
    } catch (const std::runtime_error& e) {
        throw CliError(kExitTransport, std::string("startup failed: ") + e.what());
    }
    std::cerr << "[mml-serve] " << role << " listening on " << host << ":" << service.port()
              << "\n";
    out.line("serving " + role + " on " + host + ":" + std::to_string(service.port()));
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    service.stop();
    return kExitOk;
}

int cmd_sim(const fs::path& scenario_file, std::optional<std::uint64_t> seed, Output& out) {
    Scenario scenario;
    try {
        scenario = parse_scenario(read_file(scenario_file));
    } catch (const ScenarioParseError& e) {
        throw CliError(kExitValidation, std::string("scenario: ") + e.what());
    }
    const SimReport report = run_scenario(scenario, seed);
    out.set("report", ordered_json::parse(report.to_json()));
    out.line(report.to_json());
    return report.all_confirmed && report.convergence_tick ? kExitOk : kExitIntegrity;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"music metadata layer: author, publish, resolve, replicate, notarize, search"};
    app.require_subcommand(1);

    std::string config_flag;
    bool json_output = false;
    app.add_option("--config", config_flag, "config file (default mml.json, env MML_CONFIG)");
    app.add_flag("--json", json_output, "machine-readable JSON output");

    std::string key_name = env_value("MML_KEY").value_or("");
    std::string prefix_flag;
    std::string works_id, origin = "user", author_label, listen = "127.0.0.1:0", role, query, doi;
    std::vector<std::string> terms;
    fs::path payload_file, work_file, cmeta_file, out_file, data_dir, scenario_file;
    std::optional<std::uint64_t> seed;
    bool verify_chain_flag = false;
    bool fetch_units = true;

    auto* keygen = app.add_subcommand("keygen", "generate a named ed25519 keypair");
    keygen->add_option("--key", key_name, "key name")->required();

    auto* author = app.add_subcommand("author", "mint, hash, and sign a new creation-metadata unit");
    author->add_option("payload", payload_file, "kv-v1 payload file")->required();
    author->add_option("work", work_file, "musical work file (hashed locally, never uploaded)")
        ->required();
    author->add_option("--key", key_name, "signing key name");
    author->add_option("--prefix", prefix_flag, "registrant prefix override");
    author->add_option("--out", out_file, "output .cmeta path");

    auto* publish = app.add_subcommand("publish", "store, bind, and notarize a unit");
    publish->add_option("cmeta", cmeta_file, ".cmeta file")->required();
    publish->add_option("--works-id", works_id, "industry works id (ISRC/ISWC)");
    publish->add_option("--key", key_name, "signing key name");

    auto* revise = app.add_subcommand("revise", "create a new revision of an existing unit");
    revise->add_option("cmeta", cmeta_file, "prior .cmeta file")->required();
    revise->add_option("payload", payload_file, "new kv-v1 payload file")->required();
    revise->add_option("work", work_file, "new work file")->required();
    revise->add_option("--key", key_name, "signing key name");
    revise->add_option("--prefix", prefix_flag, "registrant prefix override");
    revise->add_option("--out", out_file, "output .cmeta path");

    auto* verify = app.add_subcommand("verify", "verify a unit and optionally the ledger chain");
    verify->add_option("cmeta", cmeta_file, ".cmeta file")->required();
    verify->add_flag("--chain", verify_chain_flag, "also verify the configured ledger chain");

    auto* resolve = app.add_subcommand("resolve", "list repository endpoints for an identifier");
    resolve->add_option("doi", doi, "identifier")->required();

    auto* fetch = app.add_subcommand("fetch", "fetch a unit and check ledger freshness");
    fetch->add_option("doi", doi, "identifier")->required();
    fetch->add_option("--out", out_file, "write the unit to a file");

    auto* search_cmd = app.add_subcommand("search", "federated keyword search with full lookup");
    search_cmd->add_option("query", query, "free-text query")->required();
    search_cmd->add_flag("!--no-fetch", fetch_units, "rank only; skip fetch and freshness");

    auto* tag = app.add_subcommand("tag", "associate search terms with an identifier");
    tag->add_option("doi", doi, "identifier")->required();
    tag->add_option("terms", terms, "terms/tags/phrases")->required();
    tag->add_option("--origin", origin, "creator|user")->check(CLI::IsMember({"creator", "user"}));
    tag->add_option("--author", author_label, "author label");

    auto* history = app.add_subcommand("history", "walk a unit's revision chain, newest first");
    history->add_option("target", doi, ".cmeta file or identifier")->required();

    auto* serve = app.add_subcommand("serve", "run a service role until terminated");
    serve->add_option("role", role, "repository|resolver|ledger-node|search")->required();
    serve->add_option("--listen", listen, "host:port (port 0 = auto)");
    serve->add_option("--data-dir", data_dir, "repository data directory");

    auto* sim = app.add_subcommand("sim", "run a deterministic ledger scenario");
    sim->add_option("scenario", scenario_file, "scenario file")->required();
    sim->add_option("--seed", seed, "override the scenario seed");

    CLI11_PARSE(app, argc, argv);

    Output out;
    out.json = json_output;
    std::string command = app.get_subcommands().front()->get_name();
    int code = kExitOk;
    try {
        const Workspace ws = Workspace::load(config_flag);
        if (keygen->parsed()) code = cmd_keygen(ws, key_name, out);
        else if (author->parsed())
            code = cmd_author(ws, payload_file, work_file, key_name, prefix_flag, out_file, out);
        else if (publish->parsed()) code = cmd_publish(ws, cmeta_file, works_id, key_name, out);
        else if (revise->parsed())
            code = cmd_revise(ws, cmeta_file, payload_file, work_file, key_name, prefix_flag,
                              out_file, out);
        else if (verify->parsed()) code = cmd_verify(ws, cmeta_file, verify_chain_flag, out);
        else if (resolve->parsed()) code = cmd_resolve(ws, doi, out);
        else if (fetch->parsed()) code = cmd_fetch(ws, doi, out_file, out);
        else if (search_cmd->parsed()) code = cmd_search(ws, query, fetch_units, out);
        else if (tag->parsed()) code = cmd_tag(ws, doi, terms, origin, author_label, out);
        else if (history->parsed()) code = cmd_history(ws, doi, out);
        else if (serve->parsed()) code = cmd_serve(ws, role, listen, data_dir, out);
        else if (sim->parsed()) code = cmd_sim(scenario_file, seed, out);
    } catch (const CliError& e) {
        out.set("error", e.what());
        std::cerr << "error: " << e.what() << "\n";
        code = e.exit_code;
    } catch (const ValidationError& e) {
        out.set("error", e.what());
        std::cerr << "error: " << e.what() << "\n";
        code = kExitValidation;
    } catch (const ProvenanceError& e) {
        out.set("error", e.what());
        std::cerr << "error: " << e.what() << "\n";
        code = kExitIntegrity;
    } catch (const RevisionError& e) {
        out.set("error", e.what());
        std::cerr << "error: " << e.what() << "\n";
        code = kExitValidation;
    } catch (const std::exception& e) {
        out.set("error", e.what());
        std::cerr << "error: " << e.what() << "\n";
        code = kExitValidation;
    }
    out.finish(command, code);
    return code;
}
