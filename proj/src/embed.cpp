#include "rca/embed.hpp"

#include <cctype>
#include <cmath>
#include <exception>

#include "rca/util.hpp"

namespace rca {

double EmbeddingVector::norm() const {
    double s = 0.0;
    for (float v : values) s += static_cast<double>(v) * v;
    return std::sqrt(s);
}

EmbeddingVector normalized(std::vector<float> values) {
    double s = 0.0;
    for (float v : values) s += static_cast<double>(v) * v;
    if (s == 0.0 || !std::isfinite(s)) fail(ErrorKind::Format, "cannot normalize a zero vector");
    const double inv = 1.0 / std::sqrt(s);
    for (float& v : values) v = static_cast<float>(v * inv);
    return EmbeddingVector{std::move(values)};
}

void EmbedderConfig::validate() const {
    if (dimension == 0) fail(ErrorKind::InvalidArgument, "embedding dimension must be positive");
    if (mode == EmbedderMode::Remote && (!endpoint || endpoint->empty()))
        fail(ErrorKind::InvalidArgument, "remote embedder requires an endpoint");
}

std::string build_query_text(const Incident& incident) {
    if (!incident.summary_short)
        fail(ErrorKind::InvalidArgument, "incident " + incident.id + " has no short summary");
    return incident.title + "\n" + *incident.summary_short;
}

std::vector<std::string> hash_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || u >= 0x80) {
            current += static_cast<char>(std::tolower(u));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

EmbeddingVector hash_embed(std::string_view text, std::size_t dimension, std::uint64_t seed) {
    if (dimension == 0) fail(ErrorKind::InvalidArgument, "embedding dimension must be positive");
    const auto tokens = hash_tokens(text);
    if (tokens.empty()) fail(ErrorKind::InvalidArgument, "text has no tokens to embed");

    std::vector<double> acc(dimension, 0.0);
    auto add = [&](std::string_view feature) {
        const std::uint64_t h = splitmix64(fnv1a64(feature) ^ seed);
        const double sign = (splitmix64(h) & 1U) ? -1.0 : 1.0;
        acc[h % dimension] += sign;
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        add(tokens[i]);
        if (i + 1 < tokens.size()) add(tokens[i] + " " + tokens[i + 1]);
    }

    double s = 0.0;
    for (double v : acc) s += v * v;
    if (s == 0.0) {
        // Every feature cancelled out; fall back to the first unigram.
        const std::uint64_t h = splitmix64(fnv1a64(tokens.front()) ^ seed);
        acc[h % dimension] = 1.0;
        s = 1.0;
    }
    const double inv = 1.0 / std::sqrt(s);
    EmbeddingVector out;
    out.values.resize(dimension);
    for (std::size_t i = 0; i < dimension; ++i) out.values[i] = static_cast<float>(acc[i] * inv);
    return out;
}

Embedder::Embedder(EmbedderConfig config) : config_(std::move(config)) {
    config_.validate();
    if (config_.mode == EmbedderMode::Remote) {
        parse_endpoint(*config_.endpoint);
        config_.api_key = resolve_api_key(config_.api_key);
    }
}

std::string Embedder::id() const {
    if (config_.mode == EmbedderMode::Remote) return "remote:" + *config_.endpoint;
    return "localhash:" + std::to_string(config_.dimension) + ":" + std::to_string(config_.seed);
}

EmbeddingVector Embedder::embed(std::string_view text) const {
    if (trim(text).empty()) fail(ErrorKind::InvalidArgument, "cannot embed empty text");
    if (config_.mode == EmbedderMode::LocalHash)
        return hash_embed(text, config_.dimension, config_.seed);

    const nlohmann::json body{{"input", std::string(text)}, {"dimension", config_.dimension}};
    const auto reply = post_json(*config_.endpoint, body, config_.retry, config_.api_key);
    auto it = reply.find("vector");
    if (it == reply.end() || !it->is_array())
        fail(ErrorKind::Provider, "embedding response lacks a 'vector' array");
    if (it->size() != config_.dimension)
        fail(ErrorKind::Provider, "embedding dimension mismatch: expected " +
                                      std::to_string(config_.dimension) + ", got " +
                                      std::to_string(it->size()));
    std::vector<float> values;
    values.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_number()) fail(ErrorKind::Provider, "non-numeric embedding component");
        values.push_back(v.get<float>());
    }
    return normalized(std::move(values));
}

std::vector<EmbeddingVector> Embedder::embed_all(std::span<const std::string> texts,
                                                 int concurrency) const {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::exception_ptr> errors(texts.size());
    const auto n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic) num_threads(concurrency > 0 ? concurrency : 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            out[idx] = embed(texts[idx]);
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace rca
