#include "mml/identifier.hpp"

#include <cctype>

namespace mml {

namespace {
bool suffix_char_ok(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '-';
}
}  // namespace

bool valid_doi_prefix(const std::string& prefix) {
    if (prefix.size() < 3 || prefix.rfind("10.", 0) != 0) return false;
    const std::string digits = prefix.substr(3);
    if (digits.size() < 4 || digits.size() > 8) return false;
    for (char c : digits) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

std::optional<Identifier> Identifier::parse(const std::string& text) {
    std::string body = text;
    if (body.rfind("doi:", 0) == 0) body = body.substr(4);
    const auto slash = body.find('/');
    if (slash == std::string::npos) return std::nullopt;
    return make(body.substr(0, slash), body.substr(slash + 1));
}

std::optional<Identifier> Identifier::make(const std::string& prefix, const std::string& suffix) {
    if (!valid_doi_prefix(prefix)) return std::nullopt;
    if (suffix.empty() || suffix.size() > 64) return std::nullopt;
    std::string lowered;
    lowered.reserve(suffix.size());
    for (char c : suffix) {
        lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    for (char c : lowered) {
        if (!suffix_char_ok(c)) return std::nullopt;
    }
    Identifier id;
    id.prefix_ = prefix;
    id.suffix_ = lowered;
    return id;
}

}  // namespace mml
