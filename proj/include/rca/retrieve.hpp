#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rca/corpus.hpp"
#include "rca/embed.hpp"
#include "rca/index.hpp"
#include "rca/tokens.hpp"

namespace rca {

struct InContextExample {
    std::string incident_id;
    std::string title;
    std::string summary_short;
    std::string root_cause_short;
    double relevance = 0.0;

    friend bool operator==(const InContextExample&, const InContextExample&) = default;
};

enum class SelectionMode { Relevant, Random };

InContextExample to_example(const Incident& incident, double relevance);

/// Relevant: the k nearest corpus incidents, skipping `query_id`.
/// Random: k distinct corpus incidents (never `query_id`) drawn uniformly
/// with the given seed; relevance is filled from the index distance.
std::vector<InContextExample> retrieve_examples(const AnyIndex& index,
                                                const IncidentLookup& corpus,
                                                std::string_view query_id,
                                                std::span<const float> query, std::size_t k,
                                                SelectionMode mode, std::uint64_t seed);

struct Chunk {
    std::string chunk_id;
    std::string source_incident_id;
    std::string text;
    std::size_t token_count = 0;

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

inline constexpr std::size_t kDefaultChunkTokens = 128;

// "Title: ...\nSummary: ...\nRoot Cause: ..." from the short fields, falling
// back to cleaned and then raw text when a short field is missing.
std::string combined_incident_text(const Incident& incident);

/// Cuts each incident's combined text into consecutive non-overlapping
/// windows of `chunk_tokens` tokens; the last window may be shorter.
/// Concatenating an incident's chunks reproduces its combined text.
std::vector<Chunk> chunk_corpus(const std::vector<Incident>& corpus, const TokenCounter& counter,
                                std::size_t chunk_tokens = kDefaultChunkTokens);

FlatIndex build_chunk_index(const std::vector<Chunk>& chunks, const Embedder& embedder);

using ChunkLookup = std::unordered_map<std::string, const Chunk*>;
ChunkLookup make_chunk_lookup(const std::vector<Chunk>& chunks);

std::vector<Chunk> retrieve_chunks(const AnyIndex& chunk_index, const ChunkLookup& chunks,
                                   std::span<const float> query, std::size_t m);

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    double fraction = 0.0;
};

using QueryVector = std::pair<std::string, EmbeddingVector>;

// Best relevance per query against the index (the query's own id skipped),
// binned over [0,1]. The last bin is closed on the right.
std::vector<HistogramBin> relevance_histogram(const AnyIndex& index,
                                              const std::vector<QueryVector>& queries,
                                              double bin_width = 0.2);

}  // namespace rca
