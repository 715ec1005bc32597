#include "rca/pipeline.hpp"

#include "rca/util.hpp"

namespace rca {

std::vector<Incident> clean_all(const std::vector<Incident>& incidents, CleanReport* total) {
    std::vector<Incident> out;
    out.reserve(incidents.size());
    for (const auto& inc : incidents) {
        CleanReport r;
        out.push_back(clean_incident(inc, &r));
        if (total) {
            total->stack_lines_removed += r.stack_lines_removed;
            total->images_removed += r.images_removed;
            total->chars_before += r.chars_before;
            total->chars_after += r.chars_after;
        }
    }
    return out;
}

PreparedCorpus prepare_corpus(const std::vector<Incident>& incidents, const PrepareOptions& options,
                              TextProvider& summarizer, SummaryCache& cache) {
    PreparedCorpus out;
    const auto kept = filter_incidents(incidents, options.filter);
    out.filtered_out = incidents.size() - kept.size();
    const auto cleaned = clean_all(kept, &out.clean);
    auto summarized = summarize_incidents(summarizer, cleaned, cache, options.concurrency);
    out.splits = split_corpus(std::move(summarized), options.sizes);
    return out;
}

FlatIndex build_incident_index(const std::vector<Incident>& incidents, const Embedder& embedder,
                               int concurrency) {
    std::vector<std::string> texts;
    texts.reserve(incidents.size());
    for (const auto& inc : incidents) texts.push_back(build_query_text(inc));
    auto vectors = embedder.embed_all(texts, concurrency);
    std::vector<std::pair<std::string, EmbeddingVector>> pairs;
    pairs.reserve(incidents.size());
    for (std::size_t i = 0; i < incidents.size(); ++i)
        pairs.emplace_back(incidents[i].id, std::move(vectors[i]));
    return build_flat_index(std::move(pairs));
}

std::string corpus_fingerprint(const CorpusSplits& splits) {
    std::uint64_t h = fnv1a64(dump_incidents(splits.retrieval));
    h = fnv1a64("\x1e", h);
    h = fnv1a64(dump_incidents(splits.validation), h);
    h = fnv1a64("\x1e", h);
    h = fnv1a64(dump_incidents(splits.test), h);
    return hex64(h);
}

}  // namespace rca
