#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rca/cleanse.hpp"
#include "rca/corpus.hpp"
#include "rca/embed.hpp"
#include "rca/index.hpp"
#include "rca/summarize.hpp"

namespace rca {

// Cleans every incident; `total` (optional) accumulates the per-incident reports.
std::vector<Incident> clean_all(const std::vector<Incident>& incidents, CleanReport* total = nullptr);

struct PrepareOptions {
    FilterSpec filter;
    SplitSizes sizes;
    int concurrency = 4;
};

struct PreparedCorpus {
    CorpusSplits splits;
    std::size_t filtered_out = 0;
    CleanReport clean;
};

/// filter -> clean -> summarize -> split.
PreparedCorpus prepare_corpus(const std::vector<Incident>& incidents, const PrepareOptions& options,
                              TextProvider& summarizer, SummaryCache& cache);

/// Embeds build_query_text() of every incident into a flat index.
FlatIndex build_incident_index(const std::vector<Incident>& incidents, const Embedder& embedder,
                               int concurrency = 4);

// FNV-1a over the canonical NDJSON of all three splits, as 16 hex digits.
std::string corpus_fingerprint(const CorpusSplits& splits);

}  // namespace rca
