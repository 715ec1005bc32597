#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rca/corpus.hpp"
#include "rca/provider.hpp"

namespace rca {

inline constexpr std::size_t kDefaultEmbeddingDim = 768;

/// Dense L2-normalized vector.
struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dimension() const { return values.size(); }
    double norm() const;
};

// Normalizes in place; throws Error(Format) on an all-zero vector.
EmbeddingVector normalized(std::vector<float> values);

enum class EmbedderMode { Remote, LocalHash };

struct EmbedderConfig {
    EmbedderMode mode = EmbedderMode::LocalHash;
    std::size_t dimension = kDefaultEmbeddingDim;
    std::optional<std::string> endpoint;
    std::uint64_t seed = 0;
    RetryPolicy retry;
    std::string api_key;

    void validate() const;
};

/// Title and short summary joined by a newline. Throws when the incident
/// has not been summarized.
std::string build_query_text(const Incident& incident);

/// Lowercased tokens split on non-alphanumeric bytes (bytes >= 0x80 are
/// kept as word characters).
std::vector<std::string> hash_tokens(std::string_view text);

/// Signed feature hashing over unigrams and bigrams. Each feature f is
/// hashed as h = splitmix64(fnv1a64(f) ^ seed); bucket h mod dim, sign from
/// the low bit of splitmix64(h). Term counts accumulate, then the vector is
/// L2-normalized.
EmbeddingVector hash_embed(std::string_view text, std::size_t dimension, std::uint64_t seed);

class Embedder {
public:
    explicit Embedder(EmbedderConfig config);

    const EmbedderConfig& config() const { return config_; }
    std::size_t dimension() const { return config_.dimension; }
    std::string id() const;

    EmbeddingVector embed(std::string_view text) const;
    std::vector<EmbeddingVector> embed_all(std::span<const std::string> texts,
                                           int concurrency = 4) const;

private:
    EmbedderConfig config_;
};

inline EmbeddingVector embed_text(const Embedder& embedder, std::string_view text) {
    return embedder.embed(text);
}

}  // namespace rca
