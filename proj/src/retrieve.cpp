#include "rca/retrieve.hpp"

#include <algorithm>
#include <cmath>

#include "rca/util.hpp"

namespace rca {

namespace {

const Incident& lookup_incident(const IncidentLookup& corpus, const std::string& id) {
    auto it = corpus.find(id);
    if (it == corpus.end())
        fail(ErrorKind::NotFound, "index entry " + id + " is not in the retrieval corpus");
    return *it->second;
}

const std::vector<std::string>& ids_of(const AnyIndex& index) {
    return std::visit([](const auto& ix) -> const std::vector<std::string>& { return ix.ids(); },
                      index);
}

}  // namespace

InContextExample to_example(const Incident& incident, double relevance) {
    if (!incident.summary_short || !incident.root_cause_short)
        fail(ErrorKind::InvalidArgument,
             "corpus incident " + incident.id + " has not been summarized");
    return InContextExample{incident.id, incident.title, *incident.summary_short,
                            *incident.root_cause_short, relevance};
}

std::vector<InContextExample> retrieve_examples(const AnyIndex& index,
                                                const IncidentLookup& corpus,
                                                std::string_view query_id,
                                                std::span<const float> query, std::size_t k,
                                                SelectionMode mode, std::uint64_t seed) {
    std::vector<InContextExample> out;
    if (k == 0) return out;

    if (mode == SelectionMode::Relevant) {
        const auto hits = search(index, query, k + 1);
        for (const auto& hit : hits) {
            if (hit.id == query_id) continue;
            if (out.size() == k) break;
            out.push_back(to_example(lookup_incident(corpus, hit.id), hit.relevance));
        }
        return out;
    }

    std::vector<std::string> pool;
    for (const auto& id : ids_of(index))
        if (id != query_id) pool.push_back(id);
    if (k > pool.size())
        fail(ErrorKind::InvalidArgument, "cannot draw " + std::to_string(k) +
                                             " random examples from a corpus of " +
                                             std::to_string(pool.size()));
    Rng rng(seed);
    // Partial Fisher-Yates: the first k slots are a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    for (std::size_t i = 0; i < k; ++i) {
        const double d = distance_to(index, pool[i], query);
        out.push_back(to_example(lookup_incident(corpus, pool[i]), relevance_from_distance(d)));
    }
    return out;
}

std::string combined_incident_text(const Incident& inc) {
    const auto& summary =
        inc.summary_short ? *inc.summary_short
                          : (inc.summary_clean ? *inc.summary_clean : inc.summary_raw);
    const auto& root_cause =
        inc.root_cause_short ? *inc.root_cause_short
                             : (inc.root_cause_clean ? *inc.root_cause_clean : inc.root_cause_raw);
    return "Title: " + inc.title + "\nSummary: " + summary + "\nRoot Cause: " + root_cause;
}

std::vector<Chunk> chunk_corpus(const std::vector<Incident>& corpus, const TokenCounter& counter,
                                std::size_t chunk_tokens) {
    if (chunk_tokens == 0) fail(ErrorKind::InvalidArgument, "chunk size must be positive");
    std::vector<Chunk> chunks;
    for (const auto& inc : corpus) {
        const auto text = combined_incident_text(inc);
        const auto starts = counter.token_starts(text);
        if (starts.empty()) continue;
        std::size_t n = 0;
        for (std::size_t t = 0; t < starts.size(); t += chunk_tokens, ++n) {
            const std::size_t begin = t == 0 ? 0 : starts[t];
            const std::size_t end =
                t + chunk_tokens < starts.size() ? starts[t + chunk_tokens] : text.size();
            Chunk c;
            c.chunk_id = inc.id + "#" + std::to_string(n);
            c.source_incident_id = inc.id;
            c.text = text.substr(begin, end - begin);
            c.token_count = std::min(chunk_tokens, starts.size() - t);
            chunks.push_back(std::move(c));
        }
    }
    return chunks;
}

FlatIndex build_chunk_index(const std::vector<Chunk>& chunks, const Embedder& embedder) {
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) texts.push_back(c.text);
    auto vectors = embedder.embed_all(texts);
    std::vector<std::pair<std::string, EmbeddingVector>> pairs;
    pairs.reserve(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i)
        pairs.emplace_back(chunks[i].chunk_id, std::move(vectors[i]));
    return build_flat_index(std::move(pairs));
}

ChunkLookup make_chunk_lookup(const std::vector<Chunk>& chunks) {
    ChunkLookup lookup;
    for (const auto& c : chunks) lookup.emplace(c.chunk_id, &c);
    return lookup;
}

std::vector<Chunk> retrieve_chunks(const AnyIndex& chunk_index, const ChunkLookup& chunks,
                                   std::span<const float> query, std::size_t m) {
    std::vector<Chunk> out;
    for (const auto& hit : search(chunk_index, query, m)) {
        auto it = chunks.find(hit.id);
        if (it == chunks.end()) fail(ErrorKind::NotFound, "unknown chunk id " + hit.id);
        out.push_back(*it->second);
    }
    return out;
}

std::vector<HistogramBin> relevance_histogram(const AnyIndex& index,
                                              const std::vector<QueryVector>& queries,
                                              double bin_width) {
    if (queries.empty()) fail(ErrorKind::InvalidArgument, "relevance histogram needs queries");
    if (!(bin_width > 0.0) || bin_width > 1.0)
        fail(ErrorKind::InvalidArgument, "bin width must be in (0, 1]");
    const auto nbins = static_cast<std::size_t>(std::ceil(1.0 / bin_width - 1e-9));
    std::vector<std::size_t> counts(nbins, 0);
    for (const auto& [id, vec] : queries) {
        double best = 0.0;
        for (const auto& hit : search(index, vec.values, 2)) {
            if (hit.id == id) continue;
            best = hit.relevance;
            break;
        }
        auto bin = static_cast<std::size_t>(std::floor(best / bin_width + 1e-12));
        counts[std::min(bin, nbins - 1)]++;
    }
    std::vector<HistogramBin> bins(nbins);
    for (std::size_t b = 0; b < nbins; ++b) {
        bins[b].lo = static_cast<double>(b) * bin_width;
        bins[b].hi = std::min(1.0, static_cast<double>(b + 1) * bin_width);
        bins[b].fraction = static_cast<double>(counts[b]) / static_cast<double>(queries.size());
    }
    return bins;
}

}  // namespace rca
