#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mml/ledger.hpp"
#include "mml/metadata.hpp"

namespace mml {

enum class MaterialOrigin { creator, user };
const char* to_string(MaterialOrigin o);
std::optional<MaterialOrigin> parse_origin(const std::string& text);

struct SearchMaterial {
    Identifier identifier;
    std::set<std::string> terms;  // normalized
    MaterialOrigin origin = MaterialOrigin::creator;
    std::string author_label;
    std::int64_t added_at = 0;
};

struct SearchResult {
    Identifier identifier;
    double score = 0;
    std::set<std::string> matched_terms;
    std::string source_db;
};

class EmptyAfterNormalization : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class CacheParseError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Lowercase, collapse internal whitespace; idempotent.
std::string normalize_term(const std::string& term);
std::vector<std::string> normalize_query(const std::string& query);

// Local keyword/tag/phrase database: an append-only materials log plus an
// inverted index always rebuildable from it.
class KeywordDB {
public:
    explicit KeywordDB(std::string db_id = "local") : db_id_(std::move(db_id)) {}

    const std::string& db_id() const { return db_id_; }

    void associate(const Identifier& id, const std::vector<std::string>& raw_terms,
                   MaterialOrigin origin, const std::string& author_label, std::int64_t now);
    void append_material(SearchMaterial material);  // pre-normalized (cache import)

    std::vector<SearchResult> search_terms(const std::vector<std::string>& terms) const;

    std::string export_cache() const;  // `.kwcache` bytes
    static KeywordDB import_cache(const std::string& bytes, const std::string& db_id);
    void merge_cache(const std::string& bytes);  // append semantics

    const std::vector<SearchMaterial>& materials() const { return materials_; }
    std::map<std::string, std::set<Identifier>> rebuild_postings() const;
    const std::map<std::string, std::set<Identifier>>& postings() const { return postings_; }

private:
    std::string db_id_;
    std::vector<SearchMaterial> materials_;
    std::map<std::string, std::set<Identifier>> postings_;
};

// Federated search: per-db inverse-term-frequency scores, sum-merged across
// dbs, ranked descending with canonical-identifier tie order.
std::vector<SearchResult> search(const std::string& query,
                                 const std::vector<const KeywordDB*>& dbs);

// Merge per-db result lists produced elsewhere (e.g. over REST) with the
// same scoring convention.
std::vector<SearchResult> merge_results(const std::vector<std::vector<SearchResult>>& per_db);

enum class Freshness { latest, superseded, unregistered };
const char* to_string(Freshness f);

struct LookupEntry {
    Identifier identifier;
    double score = 0;
    std::optional<CreationMetadata> unit;
    Freshness freshness = Freshness::unregistered;
    std::optional<Identifier> superseded_by;
    std::string error;  // fetch-failed / verify-failed annotation
};

// Service hooks so the pipeline runs identically in-process and over REST.
struct LookupServices {
    std::function<std::vector<std::string>(const Identifier&)> resolve;
    std::function<std::optional<std::string>(const std::string& endpoint, const Identifier&)>
        fetch;  // canonical unit bytes from one repository endpoint
    std::function<LatestRegistration(const Identifier&)> latest;
};

// Search -> resolve -> fetch+verify -> ledger freshness check.
std::vector<LookupEntry> lookup(const std::string& query,
                                const std::vector<const KeywordDB*>& dbs,
                                const LookupServices& services);

// Steps 3-4 for one identifier (shared by the CLI fetch command).
LookupEntry lookup_one(const Identifier& id, const LookupServices& services);

}  // namespace mml
