#include "rca/tokens.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "rca/util.hpp"

namespace rca {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string unescape_piece(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            const char n = s[i + 1];
            if (n == 'n' || n == 't' || n == '\\' || n == 's') {
                out += n == 'n' ? '\n' : n == 't' ? '\t' : n == 's' ? ' ' : '\\';
                ++i;
                continue;
            }
        }
        out += s[i];
    }
    return out;
}

}  // namespace

TokenCounter TokenCounter::whitespace() { return TokenCounter{}; }

TokenCounter TokenCounter::chars_per_token(std::size_t chars) {
    if (chars == 0) fail(ErrorKind::InvalidArgument, "chars-per-token must be positive");
    TokenCounter c;
    c.kind_ = Kind::CharsPerToken;
    c.chars_ = chars;
    c.id_ = "chars:" + std::to_string(chars);
    return c;
}

TokenCounter TokenCounter::table(std::vector<std::string> pieces, std::string name) {
    auto vocab = std::make_shared<std::unordered_set<std::string>>();
    std::size_t longest = 0;
    for (auto& p : pieces) {
        if (p.empty()) continue;
        longest = std::max(longest, p.size());
        vocab->insert(std::move(p));
    }
    if (vocab->empty()) fail(ErrorKind::InvalidArgument, "token table is empty");
    TokenCounter c;
    c.kind_ = Kind::Table;
    c.vocab_ = std::move(vocab);
    c.max_piece_ = longest;
    c.id_ = "table:" + name;
    return c;
}

TokenCounter TokenCounter::from_id(std::string_view id) {
    if (id == "whitespace") return whitespace();
    if (id.starts_with("chars:")) {
        std::size_t c = 0;
        const auto digits = id.substr(6);
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), c);
        if (ec != std::errc{} || p != digits.data() + digits.size())
            fail(ErrorKind::InvalidArgument, "bad token counter id: " + std::string(id));
        return chars_per_token(c);
    }
    if (id.starts_with("table:")) {
        const std::string path(id.substr(6));
        std::vector<std::string> pieces;
        for (const auto& line : split_lines(read_file(path))) pieces.push_back(unescape_piece(line));
        return table(std::move(pieces), path);
    }
    fail(ErrorKind::InvalidArgument, "unknown token counter: " + std::string(id));
}

std::size_t TokenCounter::count(std::string_view text) const {
    switch (kind_) {
        case Kind::Whitespace: {
            std::size_t n = 0;
            bool in_token = false;
            for (char ch : text) {
                if (is_space(ch)) {
                    in_token = false;
                } else if (!in_token) {
                    in_token = true;
                    ++n;
                }
            }
            return n;
        }
        case Kind::CharsPerToken:
            return (text.size() + chars_ - 1) / chars_;
        case Kind::Table:
            return token_starts(text).size();
    }
    return 0;
}

std::vector<std::size_t> TokenCounter::token_starts(std::string_view text) const {
    std::vector<std::size_t> starts;
    switch (kind_) {
        case Kind::Whitespace:
            for (std::size_t i = 0; i < text.size(); ++i)
                if (!is_space(text[i]) && (i == 0 || is_space(text[i - 1]))) starts.push_back(i);
            break;
        case Kind::CharsPerToken:
            for (std::size_t i = 0; i < text.size(); i += chars_) starts.push_back(i);
            break;
        case Kind::Table: {
            std::size_t i = 0;
            while (i < text.size()) {
                starts.push_back(i);
                std::size_t len = std::min(max_piece_, text.size() - i);
                while (len > 1 && !vocab_->contains(std::string(text.substr(i, len)))) --len;
                i += std::max<std::size_t>(len, 1);
            }
            break;
        }
    }
    return starts;
}

}  // namespace rca
