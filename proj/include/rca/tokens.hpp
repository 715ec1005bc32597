#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace rca {

/// Token counting for prompt budgeting and chunking.
///
///   "whitespace"   maximal non-whitespace runs
///   "chars:<c>"    ceil(bytes / c)
///   "table:<path>" greedy longest match against a vocabulary file (one
///                  piece per line, "\n" written as \n); unmatched bytes
///                  count one token each
///
/// token_starts() returns the byte offset of every token; cutting a text at
/// any subset of these offsets and re-counting the pieces reproduces the
/// per-piece token counts.
class TokenCounter {
public:
    enum class Kind { Whitespace, CharsPerToken, Table };

    static TokenCounter whitespace();
    static TokenCounter chars_per_token(std::size_t chars);
    static TokenCounter table(std::vector<std::string> pieces, std::string name = "table");
    // Throws Error(InvalidArgument) for an unknown id.
    static TokenCounter from_id(std::string_view id);

    Kind kind() const { return kind_; }
    const std::string& id() const { return id_; }

    std::size_t count(std::string_view text) const;
    std::vector<std::size_t> token_starts(std::string_view text) const;

private:
    TokenCounter() = default;

    Kind kind_ = Kind::Whitespace;
    std::string id_ = "whitespace";
    std::size_t chars_ = 4;
    std::shared_ptr<const std::unordered_set<std::string>> vocab_;
    std::size_t max_piece_ = 0;
};

inline std::size_t count_tokens(const TokenCounter& counter, std::string_view text) {
    return counter.count(text);
}

}  // namespace rca
