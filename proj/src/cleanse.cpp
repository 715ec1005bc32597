#include "rca/cleanse.hpp"

#include <cctype>

#include "rca/util.hpp"

namespace rca {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_ident_start(char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalpha(u) || c == '_' || c == '$' || c == '<' || u >= 0x80;
}

bool is_ident_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || c == '$' || c == '<' || c == '>' || c == '`' ||
           u >= 0x80;
}

bool is_base64_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '+' || c == '/' || c == '=';
}

std::size_t count_words(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

// Parses `seg(.seg)+(...)` starting at pos; returns one past the closing
// parenthesis or npos.
std::size_t match_call(std::string_view s, std::size_t pos) {
    std::size_t segments = 0;
    std::size_t i = pos;
    while (true) {
        if (i >= s.size() || !is_ident_start(s[i])) return std::string_view::npos;
        while (i < s.size() && is_ident_char(s[i])) ++i;
        ++segments;
        if (i < s.size() && s[i] == '.') {
            ++i;
            continue;
        }
        break;
    }
    if (segments < 2 || i >= s.size() || s[i] != '(') return std::string_view::npos;
    int depth = 0;
    for (; i < s.size(); ++i) {
        if (s[i] == '(') {
            ++depth;
        } else if (s[i] == ')') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

std::string normalize_newlines(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') continue;
        out += text[i];
    }
    return out;
}

// Length of an <img ...> tag starting at pos (case-insensitive), honouring
// quoted attribute values; 0 when there is no terminated tag here.
std::size_t img_tag_length(std::string_view s, std::size_t pos) {
    if (pos + 4 > s.size() || s[pos] != '<') return 0;
    if (to_lower_ascii(s.substr(pos + 1, 3)) != "img") return 0;
    if (pos + 4 < s.size() && !is_space(s[pos + 4]) && s[pos + 4] != '/' && s[pos + 4] != '>')
        return 0;
    char quote = 0;
    for (std::size_t i = pos + 4; i < s.size(); ++i) {
        const char c = s[i];
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '>') {
            return i + 1 - pos;
        }
    }
    return 0;
}

}  // namespace

bool is_stack_frame_line(std::string_view line) {
    std::string_view s = trim(line);
    if (s.size() > 3 && s.substr(0, 3) == "at " ) s = trim(s.substr(3));

    for (std::size_t start = 0; start < s.size(); ++start) {
        if (start > 0 && !is_space(s[start - 1])) continue;
        if (is_space(s[start])) continue;
        const auto end = match_call(s, start);
        if (end == std::string_view::npos) continue;
        const auto extra = count_words(s.substr(0, start)) + count_words(s.substr(end));
        if (extra <= kMaxExtraFrameWords) return true;
    }
    return false;
}

StripResult strip_stack_traces(std::string_view text) {
    const auto lines = split_lines(normalize_newlines(text));
    StripResult result;
    std::vector<std::string> kept;
    kept.reserve(lines.size());
    for (const auto& line : lines) {
        if (is_stack_frame_line(line)) {
            ++result.removed;
        } else {
            kept.push_back(line);
        }
    }
    result.text = join(kept, "\n");
    return result;
}

StripResult strip_embedded_images(std::string_view text) {
    StripResult result;
    std::string without_tags;
    without_tags.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        if (const auto n = img_tag_length(text, i); n > 0) {
            ++result.removed;
            i += n;
        } else {
            without_tags += text[i++];
        }
    }

    result.text.reserve(without_tags.size());
    for (std::size_t i = 0; i < without_tags.size();) {
        if (!is_base64_char(without_tags[i])) {
            result.text += without_tags[i++];
            continue;
        }
        std::size_t j = i;
        while (j < without_tags.size() && is_base64_char(without_tags[j])) ++j;
        if (j - i >= kBase64BlobMinLength) {
            ++result.removed;
        } else {
            result.text.append(without_tags, i, j - i);
        }
        i = j;
    }
    return result;
}

std::string clean_text(std::string_view text, CleanReport& report) {
    report.chars_before += text.size();
    std::string current(text);
    while (true) {
        auto frames = strip_stack_traces(current);
        auto images = strip_embedded_images(frames.text);
        report.stack_lines_removed += frames.removed;
        report.images_removed += images.removed;
        const bool changed = frames.removed + images.removed > 0;
        current = std::move(images.text);
        if (!changed) break;
    }
    report.chars_after += current.size();
    return current;
}

Incident clean_incident(const Incident& incident, CleanReport* report) {
    CleanReport local;
    Incident out = incident;
    out.summary_clean = clean_text(incident.summary_raw, local);
    out.root_cause_clean = clean_text(incident.root_cause_raw, local);
    if (report) *report = local;
    return out;
}

}  // namespace rca
