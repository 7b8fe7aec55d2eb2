#include "mml/search.hpp"

#include <algorithm>
#include <cctype>
#include <nlohmann/json.hpp>

namespace mml {

using ordered_json = nlohmann::ordered_json;

const char* to_string(MaterialOrigin o) {
    return o == MaterialOrigin::creator ? "creator" : "user";
}

std::optional<MaterialOrigin> parse_origin(const std::string& text) {
    if (text == "creator") return MaterialOrigin::creator;
    if (text == "user") return MaterialOrigin::user;
    return std::nullopt;
}

const char* to_string(Freshness f) {
    switch (f) {
        case Freshness::latest: return "latest";
        case Freshness::superseded: return "superseded";
        case Freshness::unregistered: return "unregistered";
    }
    return "unknown";
}

std::string normalize_term(const std::string& term) {
    std::string out;
    bool pending_space = false;
    for (char raw : term) {
        const auto c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    if (out.size() > 64) out.resize(64);
    return out;
}

std::vector<std::string> normalize_query(const std::string& query) {
    std::vector<std::string> terms;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            terms.push_back(normalize_term(current));
            current.clear();
        }
    };
    for (char c : query) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            current.push_back(c);
        }
    }
    flush();
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    return terms;
}

void KeywordDB::associate(const Identifier& id, const std::vector<std::string>& raw_terms,
                          MaterialOrigin origin, const std::string& author_label,
                          std::int64_t now) {
    SearchMaterial material;
    material.identifier = id;
    for (const auto& raw : raw_terms) {
        const std::string t = normalize_term(raw);
        if (!t.empty()) material.terms.insert(t);
    }
    if (material.terms.empty()) {
        throw EmptyAfterNormalization("no terms remain after normalization");
    }
    material.origin = origin;
    material.author_label = author_label;
    material.added_at = now;
    append_material(std::move(material));
}

void KeywordDB::append_material(SearchMaterial material) {
    for (const auto& t : material.terms) postings_[t].insert(material.identifier);
    materials_.push_back(std::move(material));
}

std::map<std::string, std::set<Identifier>> KeywordDB::rebuild_postings() const {
    std::map<std::string, std::set<Identifier>> fresh;
    for (const auto& m : materials_) {
        for (const auto& t : m.terms) fresh[t].insert(m.identifier);
    }
    return fresh;
}

std::vector<SearchResult> KeywordDB::search_terms(const std::vector<std::string>& terms) const {
    std::map<Identifier, SearchResult> by_id;
    for (const auto& term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double weight = 1.0 / static_cast<double>(it->second.size());
        for (const auto& id : it->second) {
            auto& result = by_id[id];
            result.identifier = id;
            result.score += weight;
            result.matched_terms.insert(term);
            result.source_db = db_id_;
        }
    }
    std::vector<SearchResult> out;
    out.reserve(by_id.size());
    for (auto& [id, r] : by_id) out.push_back(std::move(r));
    return out;
}

std::string KeywordDB::export_cache() const {
    ordered_json j;
    j["mml"] = "keyword-cache/v1";
    j["db_id"] = db_id_;
    ordered_json log = ordered_json::array();
    for (const auto& m : materials_) {
        ordered_json e;
        e["identifier"] = m.identifier.canonical();
        e["terms"] = m.terms;  // std::set keeps canonical order
        e["origin"] = to_string(m.origin);
        e["author"] = m.author_label;
        e["added_at"] = m.added_at;
        log.push_back(std::move(e));
    }
    j["materials"] = std::move(log);
    return j.dump();
}

void KeywordDB::merge_cache(const std::string& bytes) {
    ordered_json j = ordered_json::parse(bytes, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("mml", "") != "keyword-cache/v1" ||
        !j.contains("materials") || !j["materials"].is_array()) {
        throw CacheParseError("not a keyword-cache/v1 file");
    }
    for (const auto& e : j["materials"]) {
        SearchMaterial m;
        if (!e.is_object() || !e.contains("identifier") || !e.contains("terms")) {
            throw CacheParseError("malformed material entry");
        }
        auto id = Identifier::parse(e["identifier"].get<std::string>());
        if (!id) throw CacheParseError("malformed identifier in cache");
        m.identifier = *id;
        for (const auto& t : e["terms"]) {
            const std::string norm = normalize_term(t.get<std::string>());
            if (!norm.empty()) m.terms.insert(norm);
        }
        if (m.terms.empty()) throw CacheParseError("material with no terms");
        auto origin = parse_origin(e.value("origin", "creator"));
        m.origin = origin.value_or(MaterialOrigin::creator);
        m.author_label = e.value("author", "");
        m.added_at = e.value("added_at", 0);
        append_material(std::move(m));
    }
}

KeywordDB KeywordDB::import_cache(const std::string& bytes, const std::string& db_id) {
    KeywordDB db(db_id);
    db.merge_cache(bytes);
    return db;
}

std::vector<SearchResult> merge_results(const std::vector<std::vector<SearchResult>>& per_db) {
    std::map<Identifier, SearchResult> merged;
    for (const auto& results : per_db) {
        for (const auto& r : results) {
            auto& m = merged[r.identifier];
            m.identifier = r.identifier;
            m.score += r.score;
            m.matched_terms.insert(r.matched_terms.begin(), r.matched_terms.end());
            m.source_db = m.source_db.empty() ? r.source_db : m.source_db + "," + r.source_db;
        }
    }
    std::vector<SearchResult> out;
    out.reserve(merged.size());
    for (auto& [id, r] : merged) out.push_back(std::move(r));
    // Descending score; ties by canonical identifier (map order is already
    // identifier order, stable_sort preserves it).
    std::stable_sort(out.begin(), out.end(),
                     [](const SearchResult& a, const SearchResult& b) { return a.score > b.score; });
    return out;
}

std::vector<SearchResult> search(const std::string& query,
                                 const std::vector<const KeywordDB*>& dbs) {
    const auto terms = normalize_query(query);
    if (terms.empty()) return {};
    std::vector<std::vector<SearchResult>> per_db;
    per_db.reserve(dbs.size());
    for (const auto* db : dbs) per_db.push_back(db->search_terms(terms));
    return merge_results(per_db);
}

LookupEntry lookup_one(const Identifier& id, const LookupServices& services) {
    LookupEntry entry;
    entry.identifier = id;

    const auto endpoints = services.resolve ? services.resolve(id) : std::vector<std::string>{};
    std::optional<std::string> bytes;
    for (const auto& endpoint : endpoints) {
        bytes = services.fetch(endpoint, id);
        if (bytes) break;
    }
    if (!bytes) {
        entry.error = "fetch-failed";
        return entry;
    }
    std::string perr;
    auto unit = parse_creation(*bytes, &perr);
    if (!unit || verify_creation(*unit) != VerifyResult::ok) {
        entry.error = "verify-failed";
        return entry;
    }
    entry.unit = std::move(*unit);

    const LatestRegistration latest = services.latest(id);
    switch (latest.status) {
        case LatestRegistration::Status::none:
            entry.freshness = Freshness::unregistered;
            break;
        case LatestRegistration::Status::broken_chain:
            entry.freshness = Freshness::unregistered;
            entry.error = "broken-chain: " + latest.detail;
            break;
        case LatestRegistration::Status::found:
            if (latest.reg->rm.identifier == id) {
                entry.freshness = Freshness::latest;
            } else {
                entry.freshness = Freshness::superseded;
                entry.superseded_by = latest.reg->rm.identifier;
            }
            break;
    }
    return entry;
}

std::vector<LookupEntry> lookup(const std::string& query,
                                const std::vector<const KeywordDB*>& dbs,
                                const LookupServices& services) {
    const auto ranked = search(query, dbs);
    std::vector<LookupEntry> out;
    out.reserve(ranked.size());
    for (const auto& r : ranked) {
        LookupEntry entry = lookup_one(r.identifier, services);
        entry.score = r.score;
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace mml
