#pragma once

#include <cstddef>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rca/corpus.hpp"
#include "rca/provider.hpp"

namespace rca {

enum class SummaryKind { IncidentSummary, RootCause };

std::string_view summary_kind_name(SummaryKind kind);

inline constexpr std::string_view kSummaryTemplateVersion = "summarize-v1";
inline constexpr std::string_view kEndOfText = "<|endoftext|>";

std::string build_summarization_prompt(SummaryKind kind, std::string_view description);

/// Content-addressed summary cache, optionally persisted as
/// newline-delimited JSON {key, kind, value}. First value stored for a key
/// wins for the lifetime of the object.
class SummaryCache {
public:
    SummaryCache() = default;
    // Loads existing entries (if the file exists) and appends new ones to it.
    explicit SummaryCache(std::string path);

    static std::string make_key(SummaryKind kind, std::string_view provider_id,
                                std::string_view text);

    std::optional<std::string> find(const std::string& key) const;
    // Returns the value now associated with the key.
    std::string insert(const std::string& key, SummaryKind kind, std::string value);
    std::size_t size() const;

private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, std::string> entries_;
    std::string path_;
};

/// Offline provider for the two summarization prompts: extracts the
/// description from the prompt and returns its first `sentences`
/// sentences, whitespace-collapsed, followed by the end-of-text sentinel.
class ExtractiveSummaryProvider final : public TextProvider {
public:
    explicit ExtractiveSummaryProvider(std::size_t sentences = 2) : sentences_(sentences) {}

    std::string id() const override;
    std::string complete(const CompletionRequest& request) override;

private:
    std::size_t sentences_;
};

// Splits after '.', '!' or '?' followed by whitespace or end of text.
std::vector<std::string> split_sentences(std::string_view text);

std::string summarize_field(TextProvider& provider, SummaryKind kind, std::string_view text,
                            SummaryCache& cache);

Incident summarize_incident(TextProvider& provider, const Incident& incident,
                            SummaryCache& cache);

/// Summarizes every incident with up to `concurrency` provider calls in
/// flight. Output order matches input order.
std::vector<Incident> summarize_incidents(TextProvider& provider,
                                          const std::vector<Incident>& incidents,
                                          SummaryCache& cache, int concurrency = 4);

}  // namespace rca
