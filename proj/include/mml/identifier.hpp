#pragma once

#include <compare>
#include <optional>
#include <string>

namespace mml {

// DOI-style identifier `doi:10.<digits>/<suffix>`. Stored in canonical
// lowercase form; equality and ordering are byte comparisons on that form.
class Identifier {
public:
    Identifier() = default;

    // Accepts `doi:10.NNNN/suffix` or `10.NNNN/suffix`, any suffix case.
    static std::optional<Identifier> parse(const std::string& text);
    static std::optional<Identifier> make(const std::string& prefix, const std::string& suffix);

    const std::string& prefix() const { return prefix_; }
    const std::string& suffix() const { return suffix_; }
    std::string canonical() const { return "doi:" + prefix_ + "/" + suffix_; }
    bool empty() const { return prefix_.empty(); }

    auto operator<=>(const Identifier& other) const = default;

private:
    std::string prefix_;  // e.g. "10.5555"
    std::string suffix_;  // lowercase, [a-z0-9.-]{1,64}
};

bool valid_doi_prefix(const std::string& prefix);

}  // namespace mml
