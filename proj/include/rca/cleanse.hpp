#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "rca/corpus.hpp"

namespace rca {

struct CleanReport {
    std::size_t stack_lines_removed = 0;
    std::size_t images_removed = 0;
    std::size_t chars_before = 0;
    std::size_t chars_after = 0;
};

struct StripResult {
    std::string text;
    std::size_t removed = 0;
};

/// Runs of base64-alphabet characters at least this long are treated as
/// inline image payloads.
inline constexpr std::size_t kBase64BlobMinLength = 512;
inline constexpr std::size_t kMaxExtraFrameWords = 3;

// A stack frame line is, after trimming: an optional "at " prefix, a dotted
// identifier with two or more segments directly followed by a balanced
// parenthesised section, and at most three other whitespace-separated words.
bool is_stack_frame_line(std::string_view line);

StripResult strip_stack_traces(std::string_view text);
StripResult strip_embedded_images(std::string_view text);

// Stack frames first, then images, repeated until neither stage removes
// anything, so that clean_text(clean_text(x)) == clean_text(x).
std::string clean_text(std::string_view text, CleanReport& report);

Incident clean_incident(const Incident& incident, CleanReport* report = nullptr);

}  // namespace rca
